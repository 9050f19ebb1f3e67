"""Acceptance criteria 1-8.

Each test records one ``CRITERION n: PASS|FAIL`` line (shown in the
terminal summary and printed with ``-s``) and then asserts, so a failing
criterion fails its test. Campaign sizes follow the desk-scale budget:
500 trials per point where the criterion states it, reduced counts for
the three-grid sweep (see the notes in each test).
"""

import math
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from orisvlc.allocation import algorithm1, build_problem, no_oris_baseline, solve_single_shot
from orisvlc.channel import ChannelCoefficients, RadioConfig, compute_channel, lambertian_order, los_gain
from orisvlc.config import RunConfig
from orisvlc.geometry import LedSpec, PdSpec, SceneConfig, Vec3, build_scene
from orisvlc.milp import brute_force
from orisvlc.montecarlo import (ALGORITHM1, NO_ORIS, SINGLE_SHOT, default_plan, estimate_outage,
                                run_campaign, run_trial, sample_trial, trial_rng)

from conftest import ACCEPTANCE

WORKERS = os.cpu_count() or 1
DEFAULTS = RunConfig()
CAMPAIGN_SOLVER = DEFAULTS.campaign_solver()


def report(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE[n] = line
    print(line)
    return ok


def tiny_instance(rng):
    L, K, U = int(rng.integers(1, 3)), int(rng.integers(1, 6)), int(rng.integers(1, 4))
    a = rng.random((L, K, U)) * rng.uniform(0.05, 2.0)
    a[rng.random(a.shape) > 0.7] = 0.0
    return ChannelCoefficients.from_dense(rng.random(U) * rng.uniform(0.1, 2.0), a)


def by_key(estimates):
    return {(g, e.users, e.gamma_th_db, e.algorithm): e for g, e in estimates}


# ---------------------------------------------------------------------------

def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(20240601)
    eps = DEFAULTS.solver.epsilon
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(500):
        co = tiny_instance(rng)
        ref = brute_force(build_problem(co, epsilon=eps).lp).objective
        got = solve_single_shot(co, config=DEFAULTS.solver)
        worst = max(worst, abs(got.objective(eps) - ref))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 60
    report(1, ok, f"500 tiny instances, max |gap| = {worst:.2e} (< 1e-9), {elapsed:.1f} s (< 60 s)")
    assert ok


def test_criterion_2_channel_golden_values():
    led = LedSpec(Vec3(1.0, 1.0, 3.0), math.radians(80.0))
    pd = PdSpec()
    nadir = los_gain(led, (1, 1, 1), pd)
    m60, m45 = lambertian_order(math.radians(60)), lambertian_order(math.radians(45))
    cut = los_gain(led, (3.4, 1, 1), pd)
    ok = abs(nadir - 5.5542e-6) <= 1e-10 and m60 == 1.0 and m45 == 2.0 and cut == 0.0
    report(2, ok, f"nadir LoS {nadir:.6e} (5.5542e-6 +- 1e-10), m(60)={m60!r}, m(45)={m45!r}, "
                  f"beyond FoV {cut!r}")
    assert ok


def test_criterion_3_pointwise_dominance():
    radio = DEFAULTS.radio
    snr_violations = outage_violations = 0
    n_trials = 1000
    for t in range(n_trials):
        rng = trial_rng(303, 0, t)
        U = int(rng.integers(1, 10))
        cfg = SceneConfig(oris_grid=((15, 2), (30, 5))[t % 2])
        scene = build_scene(cfg, sample_trial(rng, U, cfg))
        th = float(rng.uniform(0, 50))
        rec = run_trial(scene, radio, th, (NO_ORIS, SINGLE_SHOT), CAMPAIGN_SOLVER)
        base, single = rec.outcomes[NO_ORIS], rec.outcomes[SINGLE_SHOT]
        snr_violations += int(np.sum(single.snr_db < base.snr_db))
        outage_violations += int(rec.outage_events(NO_ORIS) < rec.outage_events(SINGLE_SHOT))
    ok = snr_violations == 0 and outage_violations == 0
    report(3, ok, f"{n_trials} fuzz trials, per-user SNR violations {snr_violations}, "
                  f"per-trial outage-count violations {outage_violations}")
    assert ok


def test_criterion_4_outage_reduction_at_35_db():
    users = tuple(range(1, 10))
    plan = default_plan("fig2", users=users, thresholds_db=(35.0,), grids=((30, 5),), trials=500,
                        master_seed=4, radio=DEFAULTS.radio, solver=CAMPAIGN_SOLVER)
    est = by_key(estimate_outage(plan, WORKERS))
    g = (30, 5)
    pooled = {a: [0, 0] for a in (NO_ORIS, SINGLE_SHOT, ALGORITHM1)}
    dominated = True
    per_u = []
    for U in users:
        e = {a: est[(g, U, 35.0, a)] for a in pooled}
        for a in pooled:
            pooled[a][0] += e[a].outage_events
            pooled[a][1] += e[a].user_events
        dominated &= e[ALGORITHM1].p_out <= e[SINGLE_SHOT].interval[1]
        per_u.append(f"U={U}:{e[NO_ORIS].p_out:.3f}/{e[SINGLE_SHOT].p_out:.3f}/{e[ALGORITHM1].p_out:.3f}")
    p = {a: k / n for a, (k, n) in pooled.items()}
    reduction = 1.0 - p[ALGORITHM1] / p[NO_ORIS] if p[NO_ORIS] > 0 else 0.0
    ok = reduction >= 0.5 and dominated
    print("P_out no-oris/single-shot/algorithm1 per U: " + " ".join(per_u))

    # informational only: the same sweep with noise integrated over one subcarrier
    sub = default_plan("fig2", users=users, thresholds_db=(35.0,), grids=((30, 5),), trials=100,
                       master_seed=4, radio=RadioConfig(noise_bandwidth="subcarrier"),
                       solver=CAMPAIGN_SOLVER)
    tot = {a: [0, 0] for a in pooled}
    for (_, _, _, a), e in by_key(estimate_outage(sub, WORKERS)).items():
        tot[a][0] += e.outage_events
        tot[a][1] += e.user_events
    ps = {a: k / n for a, (k, n) in tot.items()}
    info = (f"[info, not asserted: with B/N noise bandwidth and 100 trials the reduction is "
            f"{1 - ps[ALGORITHM1] / ps[NO_ORIS]:.1%}]" if ps[NO_ORIS] > 0 else "")
    report(4, ok, f"30x5, U=1..9, 500 trials, 35 dB, B=20 MHz: P_out no-ORIS {p[NO_ORIS]:.3f}, "
                  f"single-shot {p[SINGLE_SHOT]:.3f}, algorithm1 {p[ALGORITHM1]:.3f}; "
                  f"reduction {reduction:.1%} (>= 50%), algorithm1 <= single-shot at every U: "
                  f"{dominated} {info}")
    assert ok


def test_criterion_5_threshold_sweep_trends():
    plan = default_plan("fig3", grids=((30, 5),), trials=500, master_seed=5,
                        radio=DEFAULTS.radio, solver=CAMPAIGN_SOLVER)
    est = by_key(estimate_outage(plan, WORKERS))
    g = (30, 5)
    monotone = below = True
    worst = ""
    for U in plan.users:
        for a in (NO_ORIS, SINGLE_SHOT, ALGORITHM1):
            ps = [est[(g, U, th, a)].outage_events for th in plan.thresholds_db]
            if any(y < x for x, y in zip(ps, ps[1:])):
                monotone = False
                worst += f" non-monotone {a} U={U};"
        for th in plan.thresholds_db:
            a1 = est[(g, U, th, ALGORITHM1)]
            for other in (NO_ORIS, SINGLE_SHOT):
                o = est[(g, U, th, other)]
                if a1.p_out > o.interval[1]:
                    below = False
                    worst += f" algorithm1 above {other} at U={U}, {th:g} dB;"
    ok = monotone and below
    report(5, ok, f"30x5, U in (1,5,9), 0..50 dB, 500 trials: P_out monotone in threshold {monotone}, "
                  f"algorithm1 at or below both others {below}.{worst}")
    assert ok


def test_criterion_6_element_size_trends():
    # reduced trials for runtime: 60 per (grid, U) on the two coarse grids, 20 on 90x20
    plan = default_plan("fig4", trials=60, trials_by_grid=(((90, 20), 20),), master_seed=6,
                        radio=DEFAULTS.radio, solver=CAMPAIGN_SOLVER)
    t0 = time.perf_counter()
    est = estimate_outage(plan, WORKERS)
    elapsed = time.perf_counter() - t0
    pooled = {}
    for g, e in est:
        p = pooled.setdefault((g, e.algorithm), [0, 0, 0, 0])
        p[0] += e.outage_events
        p[1] += e.user_events
        p[2] += e.oris_used_total
        p[3] += e.trials
    from orisvlc.montecarlo import wilson_interval
    size_ok = True
    used_ok = True
    parts = []
    for a in (NO_ORIS, SINGLE_SHOT, ALGORITHM1):
        for big, small in zip(plan.grids, plan.grids[1:]):
            kb, nb = pooled[(big, a)][:2]
            ks, ns = pooled[(small, a)][:2]
            if ks / ns > wilson_interval(kb, nb)[1]:
                size_ok = False
    for g in plan.grids:
        mean = {a: pooled[(g, a)][2] / pooled[(g, a)][3] for a in (NO_ORIS, SINGLE_SHOT, ALGORITHM1)}
        pout = {a: pooled[(g, a)][0] / pooled[(g, a)][1] for a in mean}
        used_ok &= mean[NO_ORIS] == 0 and mean[ALGORITHM1] <= mean[SINGLE_SHOT]
        parts.append(f"{g[0]}x{g[1]}: P_out {pout[NO_ORIS]:.3f}/{pout[SINGLE_SHOT]:.3f}/"
                     f"{pout[ALGORITHM1]:.3f}, mean ORIS used {mean[SINGLE_SHOT]:.1f} (single-shot) "
                     f"vs {mean[ALGORITHM1]:.1f} (algorithm1)")
    ok = size_ok and used_ok
    report(6, ok, f"P_out non-increasing as elements shrink {size_ok}; "
                  f"algorithm1 uses no more elements than single-shot {used_ok}; "
                  + "; ".join(parts) + f"; {elapsed:.0f} s")
    assert ok


def test_criterion_7_algorithm1_invariants():
    # half tiny random instances, half real 15x2 scenes; partition-like real
    # instances can need 10^5 nodes to close the last 1e-4, so those use a
    # 5000-node budget (the invariants must hold for node-limited results too)
    rng = np.random.default_rng(707)
    scene_solver = replace(DEFAULTS.solver, node_limit=5000)
    problems = []
    limited = 0
    for i in range(100):
        co = tiny_instance(rng) if i % 2 else None
        solver = DEFAULTS.solver
        if co is None:
            solver = scene_solver
            cfg = SceneConfig(oris_grid=(15, 2))
            U = int(rng.integers(1, 4))
            _, co = compute_channel(build_scene(cfg, sample_trial(trial_rng(707, 1, i), U, cfg)),
                                    DEFAULTS.radio)
        th = float(rng.uniform(0.5, 1.5)) * float(no_oris_baseline(co).per_user_gamma_prime.max() or 1)
        alloc = algorithm1(co, th, solver)
        limited += alloc.status != "optimal"
        g = alloc.per_user_gamma_prime
        if any(b < a - 1e-12 for a, b in zip(alloc.history, alloc.history[1:])):
            problems.append(f"history decreases on instance {i}")
        if any(g[u] < th for u in alloc.supported_users):
            problems.append(f"supported user below threshold on instance {i}")
        if len(set(alloc.triples[:, 1].tolist())) != alloc.oris_used:
            problems.append(f"C1 violated on instance {i}")
        if alloc.supported_users:
            for j in range(alloc.oris_used):
                rest = np.delete(alloc.triples, j, axis=0)
                if co.gamma_prime(rest)[list(alloc.supported_users)].min() >= alloc.gamma_prime_min:
                    problems.append(f"element {j} unnecessary on instance {i}")
    ok = not problems
    report(7, ok, "100 instances: monotone history, supported users clear threshold, C1, "
                  f"epsilon-pruning ({limited} node-limited); problems: {problems[:3] or 'none'}")
    assert ok


def test_criterion_8_determinism_across_workers():
    texts = {}
    for name in ("fig1", "fig2"):
        kw = dict(users=(1, 4), trials=6, grids=((15, 2),), master_seed=8, solver=CAMPAIGN_SOLVER)
        plan = default_plan(name, **kw)
        texts[name] = [run_campaign(plan, workers=w) for w in (1, 2, 3)]
    ok = all(len(set(v)) == 1 for v in texts.values())
    report(8, ok, "fig1 and fig2 campaigns with 1, 2 and 3 workers give byte-identical CSV: "
                  f"{ok}")
    assert ok
