"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times each hot kernel on representative inputs, plus two end-to-end jobs
(blockage of one 30x5 scene, one single-shot allocation) with each backend.
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from orisvlc import geometry, kernels
from orisvlc.allocation import _reduce, _reduced_lp
from orisvlc.channel import RadioConfig, compute_channel
from orisvlc.geometry import SceneConfig, build_scene
from orisvlc.milp import SolverConfig, solve_lp, solve_milp
from orisvlc.montecarlo import sample_trial, trial_rng


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def scene_and_coeffs(grid, users, seed=1):
    cfg = SceneConfig(oris_grid=grid)
    scene = build_scene(cfg, sample_trial(trial_rng(seed, 0, 0), users, cfg))
    _, co = compute_channel(scene, RadioConfig())
    return scene, co


def cases(k):
    rng = np.random.default_rng(0)
    n = 200_000
    p0 = rng.uniform([0, 0, 0], [4, 4, 3], (n, 3))
    p1 = rng.uniform([0, 0, 0], [4, 4, 3], (n, 3))
    cyl = np.column_stack([rng.uniform(0, 4, 10), rng.uniform(0, 4, 10),
                           np.full(10, 0.15), np.full(10, 1.75)])

    T = rng.normal(size=(300, 900))
    d = rng.normal(size=900)

    def pivots():
        A, dd = T.copy(), d.copy()
        for i in range(50):
            k.pivot(A, dd, i, 300 + i)

    scene, co = scene_and_coeffs((30, 5), 10)
    red = _reduce(co, list(range(co.n_users)), 1e-3)
    lp, _ = _reduced_lp(red)

    def blockage():
        old = geometry.kernels.segments_blocked
        geometry.kernels.segments_blocked = k.segments_blocked
        try:
            geometry.blockage_indicators(scene)
        finally:
            geometry.kernels.segments_blocked = old

    return {
        "segments_blocked (200k segments x 10 users)": lambda: k.segments_blocked(p0, p1, cyl),
        "pivot (50 pivots on 300x900)": pivots,
        "blockage map, 30x5 scene, 10 users": blockage,
        "LP relaxation, 30x5, 10 users": lambda: solve_lp(lp, kern=k),
        "branch-and-bound, 200 nodes": lambda: solve_milp(lp, SolverConfig(node_limit=200), kern=k),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    try:
        cy = kernels.backend("cython")
    except ImportError:
        print("compiled kernels are not built; only the numpy fallback is available")
        return
    py = kernels.backend("python")
    rows = []
    for (name, f_py), (_, f_cy) in zip(cases(py).items(), cases(cy).items()):
        t_py = best_of(f_py, args.repeat)
        t_cy = best_of(f_cy, args.repeat)
        rows.append((name, t_py, t_cy))
    w = max(len(r[0]) for r in rows)
    print(f"{'kernel'.ljust(w)}  {'numpy (s)':>10}  {'cython (s)':>10}  {'speedup':>8}")
    for name, t_py, t_cy in rows:
        print(f"{name.ljust(w)}  {t_py:10.4f}  {t_cy:10.4f}  {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
