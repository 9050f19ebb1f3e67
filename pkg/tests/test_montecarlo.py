import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orisvlc.allocation import algorithm1, no_oris_baseline, solve_single_shot
from orisvlc.channel import ChannelCoefficients, RadioConfig, compute_channel
from orisvlc.geometry import SceneConfig, build_scene
from orisvlc.milp import SolverConfig
from orisvlc.montecarlo import (ALGORITHM1, ALGORITHMS, CSV_COLUMNS, NO_ORIS, SINGLE_SHOT,
                                OutageEstimate, _outcome, box_stats, default_plan, element_area,
                                run_campaign, run_trial, sample_trial, trial_rng, wilson_interval)

stats = pytest.importorskip("scipy.stats")

SMALL = SceneConfig(oris_grid=(15, 2))
FAST = SolverConfig(node_limit=20)


def no_oris_snr(seed, U, cfg=SMALL):
    users = sample_trial(trial_rng(seed, 0, 0), U, cfg)
    _, co = compute_channel(build_scene(cfg, users), RadioConfig())
    return no_oris_baseline(co).snr_db()


# --- sampling -------------------------------------------------------------

def test_sampling_is_reproducible():
    a = sample_trial(trial_rng(7, 0, 0), 1)
    b = sample_trial(trial_rng(7, 0, 0), 1)
    assert a == b
    assert sample_trial(trial_rng(7, 0, 1), 1) != a


def test_orientation_uniform_and_margins_respected():
    users = sample_trial(np.random.default_rng(0), 100_000)
    theta = np.array([u.device_angle for u in users])
    assert stats.kstest(theta / (2 * math.pi), "uniform").pvalue > 0.01
    xy = np.array([u.body_center_xy for u in users])
    assert np.all(xy >= 0.15) and np.all(xy <= 4 - 0.15)
    pd = np.array([tuple(u.pd_position) for u in users])
    assert np.all(pd[:, :2] >= 0) and np.all(pd[:, :2] <= 4)


def test_sample_trial_rejects_zero_users():
    with pytest.raises(ValueError):
        sample_trial(np.random.default_rng(0), 0)


# --- trial-level checks ---------------------------------------------------

@given(st.integers(0, 10_000), st.integers(1, 6), st.sampled_from([5.0, 20.0, 35.0]))
def test_pointwise_dominance_single_shot_over_no_oris(seed, U, th):
    users = sample_trial(trial_rng(seed, 1, 2), U, SMALL)
    rec = run_trial(build_scene(SMALL, users), RadioConfig(), th, solver=FAST)
    base, single = rec.outcomes[NO_ORIS], rec.outcomes[SINGLE_SHOT]
    assert np.all(single.snr_db >= base.snr_db)
    assert rec.outage_events(NO_ORIS) >= rec.outage_events(SINGLE_SHOT)


def test_outage_flags_match_threshold():
    users = sample_trial(trial_rng(4, 0, 0), 5, SMALL)
    rec = run_trial(build_scene(SMALL, users), RadioConfig(), 5.0, solver=FAST)
    for name in (NO_ORIS, SINGLE_SHOT):
        o = rec.outcomes[name]
        assert np.array_equal(o.outage, o.snr_db < 5.0)
    a1 = rec.outcomes[ALGORITHM1]
    for u in range(5):
        assert a1.outage[u] == (u not in a1.supported or a1.snr_db[u] < 5.0)


def test_minus_infinity_threshold_means_no_outage():
    users = sample_trial(trial_rng(5, 0, 0), 4, SMALL)
    rec = run_trial(build_scene(SMALL, users), RadioConfig(), -math.inf, solver=FAST)
    assert all(rec.outage_events(a) == 0 for a in ALGORITHMS)


def test_dead_channel_puts_everyone_in_outage():
    co = ChannelCoefficients.from_dense(np.zeros(3), np.zeros((4, 5, 3)))
    th = 1.0
    for alloc, pruned in ((no_oris_baseline(co), False), (solve_single_shot(co), False),
                          (algorithm1(co, th), True)):
        assert _outcome(alloc, th, pruned).outage.all()


def test_threshold_list_matches_scalar_calls():
    users = sample_trial(trial_rng(6, 0, 0), 3, SMALL)
    scene = build_scene(SMALL, users)
    many = run_trial(scene, RadioConfig(), [0.0, 20.0], solver=FAST)
    for th, rec in zip([0.0, 20.0], many):
        one = run_trial(scene, RadioConfig(), th, solver=FAST)
        for a in ALGORITHMS:
            assert np.array_equal(one.outcomes[a].outage, rec.outcomes[a].outage)


def test_single_user_algorithm1_equals_single_shot_when_supported():
    rng = np.random.default_rng(1)
    agree = 0
    for seed in range(200):
        users = sample_trial(trial_rng(seed, 9, 0), 1, SMALL)
        th = float(rng.uniform(0, 50))
        rec = run_trial(build_scene(SMALL, users), RadioConfig(), th, solver=FAST)
        a1, ss = rec.outcomes[ALGORITHM1], rec.outcomes[SINGLE_SHOT]
        if a1.supported:
            assert np.array_equal(a1.snr_db, ss.snr_db) and a1.oris_used == ss.oris_used
            agree += 1
    assert agree > 0


def test_median_no_oris_snr_does_not_grow_with_users():
    medians = []
    for U in (1, 5, 10, 15):
        snr = np.concatenate([no_oris_snr(1000 * U + s, U) for s in range(60)])
        medians.append(float(np.median(snr)))
    assert all(b <= a + 0.25 for a, b in zip(medians, medians[1:])), medians


# --- statistics -----------------------------------------------------------

def test_pooled_outage_arithmetic():
    est = OutageEstimate(NO_ORIS, 2, 5.0, trials=4, user_events=8, outage_events=2, oris_used_total=0)
    assert est.p_out == 0.25
    lo, hi = est.interval
    assert lo <= 0.25 <= hi


@given(st.integers(0, 500), st.integers(1, 500))
def test_wilson_interval_contains_estimate(k, n):
    k = min(k, n)
    lo, hi = wilson_interval(k, n)
    assert 0.0 <= lo <= k / n <= hi <= 1.0


def test_wilson_known_value():
    lo, hi = wilson_interval(5, 10)
    assert lo == pytest.approx(0.2366, abs=1e-4) and hi == pytest.approx(0.7634, abs=1e-4)


def test_interval_width_scales_as_inverse_square_root():
    snr = [no_oris_snr(s, 5) for s in range(800)]
    th = float(np.median(np.concatenate(snr[:100])))

    def width(n):
        events = int(sum((x < th).sum() for x in snr[:n]))
        lo, hi = wilson_interval(events, 5 * n)
        return hi - lo

    # doubling the trials shrinks the width by sqrt(2); four times the trials halves it
    assert width(400) / width(200) == pytest.approx(1 / math.sqrt(2), rel=0.2)
    assert width(800) / width(200) == pytest.approx(0.5, rel=0.2)


@pytest.mark.parametrize("x, q1, med, q3", [
    ([1, 2, 3, 4, 5, 6, 7], 2.0, 4.0, 6.0),
    ([1, 2, 3, 4, 5, 6, 7, 8], 2.5, 4.5, 6.5),
    ([3.0], 3.0, 3.0, 3.0),
])
def test_box_quartiles_median_of_halves(x, q1, med, q3):
    wl, a, m, b, wh = box_stats(x)
    assert (a, m, b) == (q1, med, q3)
    assert wl == min(x) and wh == max(x)


def test_box_whiskers_exclude_outliers():
    wl, q1, med, q3, wh = box_stats([1, 2, 3, 4, 5, 6, 7, 8, 100])
    assert wh == 8 and wl == 1


def test_box_stats_handle_minus_infinity():
    wl, q1, med, q3, wh = box_stats([-math.inf, 1.0, 2.0, 3.0, 4.0])
    assert math.isfinite(med)


# --- campaigns ------------------------------------------------------------

def small_plan(name, **kw):
    base = dict(users=(1, 3), trials=4, grids=((15, 2),), solver=FAST, master_seed=11)
    if name != "fig1":
        base["thresholds_db"] = (0.0, 20.0)
    base.update(kw)
    return default_plan(name, **base)


def test_campaign_is_identical_across_worker_counts():
    plan = small_plan("fig3")
    assert run_campaign(plan, workers=1) == run_campaign(plan, workers=2)


def test_fig2_row_count_and_header():
    plan = default_plan("fig2", users=(1, 2), trials=2, solver=FAST, grids=((15, 2),))
    lines = run_campaign(plan).splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert len(lines) - 1 == 3 * 2 * 3


def test_fig1_rows_per_user_count():
    plan = small_plan("fig1")
    lines = run_campaign(plan).splitlines()
    assert len(lines) - 1 == 2 * 3
    assert all(line.split(",")[3] == "" for line in lines[1:])


def test_fig4_pools_users_and_thresholds():
    plan = small_plan("fig4", grids=((15, 2), (30, 5)), trials_by_grid=())
    rows = [r.split(",") for r in run_campaign(plan).splitlines()[1:]]
    assert len(rows) == 2 * 3
    col = {c: i for i, c in enumerate(CSV_COLUMNS)}
    for r in rows:
        assert r[col["users"]] == "1-3" and r[col["gamma_th_db"]] == "0-20"
        assert int(r[col["trials"]]) == 2 * 4 * 2
        if r[col["algorithm"]] == NO_ORIS:
            assert float(r[col["mean_oris_used"]]) == 0.0


def test_default_plans_match_documented_sweeps():
    assert default_plan("fig2").thresholds_db == (5.0, 20.0, 35.0)
    assert default_plan("fig3").users == (1, 5, 9)
    assert default_plan("fig3").thresholds_db == tuple(float(x) for x in range(0, 51, 5))
    p4 = default_plan("fig4")
    assert p4.grids == ((15, 2), (30, 5), (90, 20)) and p4.trials_for((90, 20)) == 100
    with pytest.raises(ValueError):
        default_plan("fig2", users=())


@pytest.mark.parametrize("grid, area", [((15, 2), 0.1333333), ((30, 5), 0.0266667), ((90, 20), 0.0022222)])
def test_element_areas_from_geometry(grid, area):
    assert element_area(SceneConfig(), grid) == pytest.approx(area, abs=1e-6)
