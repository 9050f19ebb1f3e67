import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orisvlc.allocation import (algorithm1, algorithm1_thresholds, allocation_record,
                                build_problem, greedy_allocate, max_reach, no_oris_baseline,
                                removal_path, solve_single_shot)
from orisvlc.channel import ChannelCoefficients, RadioConfig, compute_channel
from orisvlc.geometry import SceneConfig, build_scene
from orisvlc.milp import SolverConfig, brute_force
from orisvlc.montecarlo import sample_trial, trial_rng

from conftest import random_coeffs

EPS = 1e-3


def brute_single_shot(co, active):
    """Oracle: enumerate the literal problem and read gamma'_min per user."""
    prob = build_problem(co, active, EPS)
    sol = brute_force(prob.lp)
    chosen = prob.triples[sol.x[: prob.t_index] > 0.5]
    g = co.gamma_prime(chosen)
    return sol.objective, g, chosen


def brute_algorithm1(co, th):
    active = list(range(co.n_users))
    while active:
        _, g, chosen = brute_single_shot(co, active)
        gmin = min(g[active])
        if gmin >= th:
            return tuple(active), gmin
        worst = min(active, key=lambda v: (g[v], v))
        active.remove(worst)
    return (), math.nan


def c1_ok(alloc):
    ks = alloc.triples[:, 1]
    return len(ks) == len(set(ks.tolist()))


# --- oracles --------------------------------------------------------------

def test_single_shot_matches_brute_force_500_seeds():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        co = random_coeffs(rng)
        obj, _, _ = brute_single_shot(co, None)
        got = solve_single_shot(co)
        assert got.status == "optimal"
        assert got.objective(EPS) == pytest.approx(obj, rel=0, abs=1e-9)


def test_algorithm1_matches_literal_loop_with_brute_force():
    rng = np.random.default_rng(99)
    for _ in range(150):
        co = random_coeffs(rng)
        th = float(rng.uniform(0.2, 2.5))
        want_set, want_min = brute_algorithm1(co, th)
        got = algorithm1(co, th)
        assert got.supported_users == want_set
        if want_set:
            assert got.gamma_prime_min == pytest.approx(want_min, abs=1e-9)


def test_greedy_never_beats_exact():
    rng = np.random.default_rng(17)
    for _ in range(300):
        co = random_coeffs(rng)
        obj, _, _ = brute_single_shot(co, None)
        assert greedy_allocate(co).objective(EPS) <= obj + 1e-12


# --- properties -----------------------------------------------------------

@given(st.integers(0, 2**31 - 1), st.floats(0.1, 3.0))
def test_c1_and_pointwise_dominance_hold(seed, th):
    co = random_coeffs(np.random.default_rng(seed), max_elems=6)
    for alloc in (no_oris_baseline(co), greedy_allocate(co), solve_single_shot(co),
                  algorithm1(co, th)):
        assert c1_ok(alloc)
        assert np.all(alloc.per_user_gamma_prime >= co.c)


@given(st.integers(0, 2**31 - 1))
def test_epsilon_pruning_every_element_is_needed(seed):
    co = random_coeffs(np.random.default_rng(seed))
    alloc = solve_single_shot(co)
    for i in range(alloc.oris_used):
        rest = np.delete(alloc.triples, i, axis=0)
        assert co.gamma_prime(rest).min() < alloc.gamma_prime_min


@given(st.integers(0, 2**31 - 1), st.floats(0.1, 3.0))
def test_algorithm1_history_monotone_and_supported_users_clear(seed, th):
    co = random_coeffs(np.random.default_rng(seed), max_elems=6, max_users=4)
    alloc = algorithm1(co, th)
    assert all(b >= a - 1e-12 for a, b in zip(alloc.history, alloc.history[1:]))
    g = alloc.per_user_gamma_prime
    for u in alloc.supported_users:
        assert g[u] >= th
    removed = [u for u in range(co.n_users) if u not in alloc.supported_users]
    assert np.all(g[removed] == co.c[removed])
    assert np.all(np.isin(alloc.triples[:, 2], alloc.supported_users))


@given(st.integers(0, 2**31 - 1))
def test_thresholds_share_one_removal_path(seed):
    co = random_coeffs(np.random.default_rng(seed), max_users=4)
    ths = [0.3, 0.9, 1.7, 5.0]
    many = algorithm1_thresholds(co, ths)
    for th, got in zip(ths, many):
        one = algorithm1(co, th)
        assert one.supported_users == got.supported_users
        assert np.array_equal(one.triples, got.triples)


@given(st.integers(0, 2**31 - 1))
def test_max_reach_bounds_every_allocation(seed):
    co = random_coeffs(np.random.default_rng(seed))
    reach = max_reach(co)
    assert np.all(solve_single_shot(co).per_user_gamma_prime <= reach + 1e-12)


# --- frozen examples ------------------------------------------------------

def test_build_problem_structure_counts():
    co = ChannelCoefficients.from_dense([1.0], np.array([[[0.3], [0.4]]]))
    prob = build_problem(co)
    lp = prob.lp
    assert lp.n_vars == 3
    assert sum(name.startswith("c1_") for name in lp.row_names) == 2
    assert sum(name.startswith("c3_") for name in lp.row_names) == 1
    assert lp.hi[prob.t_index] == pytest.approx(1.7)


def test_zero_gain_entries_are_not_variables():
    a = np.zeros((1, 3, 2))
    a[0, 1, 0] = 0.2
    prob = build_problem(ChannelCoefficients.from_dense([1.0, 1.0], a))
    assert prob.t_index == 1


def test_shared_element_shares_one_c1_row():
    a = np.full((1, 1, 2), 0.4)
    prob = build_problem(ChannelCoefficients.from_dense([1.0, 1.0], a))
    c1 = [r for r, n in zip(prob.lp.rows, prob.lp.row_names) if n.startswith("c1_")]
    assert len(c1) == 1 and c1[0][0].tolist() == [0, 1]


def test_build_problem_rejects_empty_active_set():
    co = ChannelCoefficients.from_dense([1.0], np.zeros((1, 1, 1)))
    with pytest.raises(ValueError):
        build_problem(co, active_users=[])


def test_single_shot_one_element():
    co = ChannelCoefficients.from_dense([1.0], np.full((1, 1, 1), 0.5))
    alloc = solve_single_shot(co)
    assert alloc.oris_used == 1 and alloc.gamma_prime_min == pytest.approx(1.5)


def test_single_shot_skips_element_that_cannot_lift_the_minimum():
    a = np.zeros((1, 1, 2))
    a[0, 0, 1] = 0.5
    alloc = solve_single_shot(ChannelCoefficients.from_dense([1.0, 2.0], a))
    assert alloc.oris_used == 0 and alloc.gamma_prime_min == pytest.approx(1.0)


def test_single_shot_without_variables():
    co = ChannelCoefficients.from_dense([2.0, 0.7, 1.1], np.zeros((1, 0, 3)))
    alloc = solve_single_shot(co)
    assert alloc.oris_used == 0 and alloc.gamma_prime_min == pytest.approx(0.7)


def test_algorithm1_drops_hopeless_user():
    co = ChannelCoefficients.from_dense([1.0, 2.5], np.zeros((1, 0, 2)))
    alloc = algorithm1(co, 2.0)
    assert alloc.supported_users == (1,)
    assert alloc.gamma_prime_min == pytest.approx(2.5)
    assert alloc.iterations == 2


def test_algorithm1_single_solve_when_everyone_clears():
    co = ChannelCoefficients.from_dense([3.0, 2.5], np.full((1, 2, 2), 0.1))
    alloc = algorithm1(co, 2.0)
    assert alloc.iterations == 1 and alloc.supported_users == (0, 1)


def test_algorithm1_exhaustion():
    co = ChannelCoefficients.from_dense([0.0], np.zeros((1, 0, 1)))
    alloc = algorithm1(co, 1.0)
    assert alloc.supported_users == ()
    assert allocation_record(alloc, 1.0)["outage"] == [True]


def test_algorithm1_tie_removes_lowest_index():
    co = ChannelCoefficients.from_dense([1.0, 1.0, 3.0], np.zeros((1, 0, 3)))
    steps = removal_path(co)
    assert [s.supported_users for s in steps] == [(0, 1, 2), (1, 2), (2,)]


def test_algorithm1_rejects_nonpositive_threshold():
    co = ChannelCoefficients.from_dense([1.0], np.zeros((1, 0, 1)))
    with pytest.raises(ValueError):
        algorithm1(co, 0.0)


def test_no_oris_baseline_examples():
    co = ChannelCoefficients.from_dense([3.0, 1.0, 2.0], np.full((1, 2, 3), 0.2))
    base = no_oris_baseline(co)
    assert base.oris_used == 0 and base.gamma_prime_min == 1.0


def test_no_oris_equals_single_shot_without_elements():
    cfg = SceneConfig(oris_grid=(30, 0), wall_grid=(30, 10))
    users = sample_trial(trial_rng(3, 0, 0), 4, cfg)
    _, co = compute_channel(build_scene(cfg, users), RadioConfig())
    a, b = no_oris_baseline(co), solve_single_shot(co)
    assert np.array_equal(a.per_user_gamma_prime, b.per_user_gamma_prime)
    assert b.oris_used == 0


def test_greedy_single_user_takes_elements_in_descending_order():
    a = np.array([[[0.1], [0.4], [0.2]]])
    alloc = greedy_allocate(ChannelCoefficients.from_dense([1.0], a))
    assert alloc.oris_used == 3
    assert alloc.gamma_prime_min == pytest.approx(1.7)


def test_greedy_without_gains_is_baseline():
    co = ChannelCoefficients.from_dense([1.0, 2.0], np.zeros((2, 3, 2)))
    g = greedy_allocate(co)
    assert g.oris_used == 0 and g.gamma_prime_min == 1.0


def test_allocation_record_is_json():
    a = np.zeros((1, 1, 2))
    a[0, 0, 1] = 0.5
    rec = allocation_record(solve_single_shot(ChannelCoefficients.from_dense([1.0, 0.0], a)), 1.0)
    back = json.loads(json.dumps(rec))
    assert back["oris_used"] == 1 and back["status"] == "optimal"
    assert back["assignments"] == [[0, 0, 1]]
    assert back["per_user_snr_db"][0] == 0.0
    assert back["outage"] == [False, True]


def test_allocation_record_maps_dead_link_to_null():
    rec = allocation_record(no_oris_baseline(ChannelCoefficients.from_dense([1.0, 0.0], np.zeros((1, 0, 2)))))
    assert json.loads(json.dumps(rec))["per_user_snr_db"] == [0.0, None]


def test_default_scene_trial_reports_status_and_gap():
    cfg = SceneConfig(oris_grid=(15, 2))
    users = sample_trial(trial_rng(1, 0, 0), 5, cfg)
    _, co = compute_channel(build_scene(cfg, users), RadioConfig())
    alloc = solve_single_shot(co, config=SolverConfig(node_limit=2000))
    assert c1_ok(alloc)
    assert alloc.gamma_prime_min >= greedy_allocate(co).gamma_prime_min - EPS * alloc.oris_used
    if alloc.status == "optimal":
        assert alloc.gap <= 1e-9 * (1 + alloc.objective(EPS))
    else:
        assert alloc.status == "node-limit"
        assert 0 <= alloc.gap <= 0.01 * alloc.objective(EPS)
