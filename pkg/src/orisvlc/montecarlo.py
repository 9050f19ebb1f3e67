"""Monte Carlo outage estimation and the four experiment campaigns.

Trial ``t`` of sweep point ``p`` draws everything from
``SeedSequence([master_seed, p, t])``, so any trial can be re-run on its own
and the campaign output does not depend on how trials are spread over
worker processes.
"""

from __future__ import annotations

import csv
import io
import math
import multiprocessing as mp
import statistics
from dataclasses import dataclass, field, replace

import numpy as np

from . import allocation as alloc_mod
from .channel import RadioConfig, compute_channel, snr_db_conversions, to_db
from .geometry import SceneConfig, UserState, build_scene
from .milp import NODE_LIMIT, SolverConfig

NO_ORIS = "no-oris"
SINGLE_SHOT = "single-shot"
ALGORITHM1 = "algorithm1"
ALGORITHMS = (NO_ORIS, SINGLE_SHOT, ALGORITHM1)

EXPERIMENTS = ("fig1", "fig2", "fig3", "fig4")

CSV_COLUMNS = (
    "experiment", "algorithm", "users", "gamma_th_db", "oris_grid", "element_area_m2",
    "trials", "user_events", "outage_events", "p_out", "ci_low", "ci_high",
    "mean_oris_used", "mean_snr_db", "median_snr_db", "q1_snr_db", "q3_snr_db",
    "whisker_low_db", "whisker_high_db", "node_limit_trials",
)

_Z95 = statistics.NormalDist().inv_cdf(0.975)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def trial_rng(master_seed: int, point: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(point), int(trial)]))


def sample_trial(rng: np.random.Generator, n_users: int, config: SceneConfig = SceneConfig()):
    """Place ``n_users`` users uniformly; redraw any user whose device leaves the room."""
    if n_users < 1:
        raise ValueError("need at least one user")
    W, D = config.room.width, config.room.depth
    r = config.body_radius
    users = []
    while len(users) < n_users:
        cx = rng.uniform(r, W - r)
        cy = rng.uniform(r, D - r)
        theta = rng.uniform(0.0, 2.0 * math.pi)
        u = config.user((cx, cy), theta)
        p = u.pd_position
        if 0.0 <= p.x <= W and 0.0 <= p.y <= D:
            users.append(u)
    return users


# ---------------------------------------------------------------------------
# Single trial
# ---------------------------------------------------------------------------

@dataclass
class AlgorithmOutcome:
    snr_db: np.ndarray
    outage: np.ndarray
    gamma_prime_min: float
    oris_used: int
    supported: tuple
    status: str


@dataclass
class TrialRecord:
    seed: tuple
    users: list
    gamma_th_db: float
    outcomes: dict  # algorithm id -> AlgorithmOutcome

    def outage_events(self, algorithm: str) -> int:
        return int(self.outcomes[algorithm].outage.sum())


def _outcome(a: alloc_mod.Allocation, th_prime, pruned):
    g = a.per_user_gamma_prime
    if pruned:
        outage = np.ones(len(g), dtype=bool)
        outage[list(a.supported_users)] = False
        outage |= g < th_prime
    else:
        outage = g < th_prime
    return AlgorithmOutcome(to_db(g), outage, a.gamma_prime_min, a.oris_used,
                            a.supported_users, a.status)


def run_trial(scene, radio: RadioConfig, gamma_th_db, algorithms=ALGORITHMS,
              solver: SolverConfig = SolverConfig(), seed=()):
    """Evaluate the requested algorithms on one deployment.

    ``gamma_th_db`` may be a scalar or a sequence; one record is returned
    per threshold (a list when a sequence was given). A threshold of
    ``-inf`` dB means no outage is possible.
    """
    scalar = np.ndim(gamma_th_db) == 0
    ths_db = [float(gamma_th_db)] if scalar else [float(x) for x in gamma_th_db]
    unknown = set(algorithms) - set(ALGORITHMS)
    if unknown:
        raise ValueError(f"unknown algorithms {sorted(unknown)}")
    _, coeffs = compute_channel(scene, radio)
    ths_prime = [snr_db_conversions(t)[1] for t in ths_db]

    shared = {}
    if NO_ORIS in algorithms:
        shared[NO_ORIS] = alloc_mod.no_oris_baseline(coeffs)
    if SINGLE_SHOT in algorithms:
        shared[SINGLE_SHOT] = alloc_mod.solve_single_shot(coeffs, config=solver)
    per_th = {}
    if ALGORITHM1 in algorithms:
        pos = [i for i, t in enumerate(ths_prime) if t > 0]
        res = alloc_mod.algorithm1_thresholds(coeffs, [ths_prime[i] for i in pos], solver)
        per_th = dict(zip(pos, res))

    records = []
    for i, (t_db, t_prime) in enumerate(zip(ths_db, ths_prime)):
        out = {}
        for name in algorithms:
            if name == ALGORITHM1:
                # with no threshold nobody is pruned: identical to the single-shot solve
                a = per_th.get(i) or shared.get(SINGLE_SHOT) or alloc_mod.solve_single_shot(coeffs, config=solver)
                out[name] = _outcome(a, t_prime, pruned=True)
            else:
                out[name] = _outcome(shared[name], t_prime, pruned=False)
        records.append(TrialRecord(tuple(seed), list(scene.users), t_db, out))
    return records[0] if scalar else records


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

def wilson_interval(events: int, n: int, z: float = _Z95):
    if n <= 0:
        return (0.0, 1.0)
    p = events / n
    den = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    # the exact endpoints at p = 0 and p = 1 would otherwise be lost to rounding
    lo = 0.0 if events == 0 else max(0.0, min(p, center - half))
    hi = 1.0 if events == n else min(1.0, max(p, center + half))
    return (lo, hi)


def box_stats(samples):
    """Quartiles by the median-of-halves rule plus 1.5 IQR whiskers.

    Returns ``(whisker_low, q1, median, q3, whisker_high)``; with an odd
    sample count the median is excluded from both halves.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    if n == 0:
        return (math.nan,) * 5
    med = float(np.median(x))
    half = n // 2
    lower, upper = x[:half], x[n - half:]
    q1 = float(np.median(lower)) if half else med
    q3 = float(np.median(upper)) if half else med
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    if len(inside) == 0:  # infinite IQR
        inside = x
    return (float(inside[0]), q1, med, q3, float(inside[-1]))


@dataclass
class OutageEstimate:
    algorithm: str
    users: int
    gamma_th_db: float
    trials: int
    user_events: int
    outage_events: int
    oris_used_total: int
    snr_db: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))
    node_limit_trials: int = 0

    @property
    def p_out(self) -> float:
        return self.outage_events / self.user_events if self.user_events else math.nan

    @property
    def interval(self):
        return wilson_interval(self.outage_events, self.user_events)

    @property
    def mean_oris_used(self) -> float:
        return self.oris_used_total / self.trials if self.trials else math.nan


# ---------------------------------------------------------------------------
# Campaigns
# ---------------------------------------------------------------------------

FIG3_THRESHOLDS = tuple(float(x) for x in range(0, 51, 5))


@dataclass(frozen=True)
class ExperimentPlan:
    """One campaign: every (grid, U) pair is a sweep point with its own seeds."""

    experiment: str
    users: tuple = tuple(range(1, 16))
    thresholds_db: tuple = ()  # empty for fig1: drawn per trial
    grids: tuple = ((30, 5),)
    trials: int = 1000
    trials_by_grid: tuple = ()  # ((cols, rows), trials) overrides
    master_seed: int = 0
    scene: SceneConfig = field(default_factory=SceneConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    fig1_range_db: tuple = (0.0, 50.0)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not self.users or not self.grids:
            raise ValueError("empty sweep")
        if self.experiment != "fig1" and not self.thresholds_db:
            raise ValueError("empty threshold sweep")
        if self.trials < 1 or any(int(t) < 1 for _, t in self.trials_by_grid):
            raise ValueError("trials must be at least 1")
        if min(self.users) < 1:
            raise ValueError("user counts must be positive")

    def points(self):
        return [(tuple(g), int(u)) for g in self.grids for u in self.users]

    def trials_for(self, grid) -> int:
        for g, t in self.trials_by_grid:
            if tuple(g) == tuple(grid):
                return int(t)
        return self.trials


def default_plan(experiment: str, **overrides) -> ExperimentPlan:
    base = {
        "fig1": dict(users=tuple(range(1, 16))),
        "fig2": dict(users=tuple(range(1, 16)), thresholds_db=(5.0, 20.0, 35.0)),
        "fig3": dict(users=(1, 5, 9), thresholds_db=FIG3_THRESHOLDS),
        "fig4": dict(users=tuple(range(1, 16)), thresholds_db=FIG3_THRESHOLDS,
                     grids=((15, 2), (30, 5), (90, 20)), trials_by_grid=(((90, 20), 100),)),
    }[experiment]
    base.update(overrides)
    return ExperimentPlan(experiment, **base)


def _run_item(args):
    """Worker entry: one trial of one sweep point, reduced to integer counts and SNR samples."""
    plan, p_index, t_index = args
    grid, n_users = plan.points()[p_index]
    rng = trial_rng(plan.master_seed, p_index, t_index)
    if plan.experiment == "fig1":
        lo, hi = plan.fig1_range_db
        thresholds = (float(rng.uniform(lo, hi)),)
    else:
        thresholds = plan.thresholds_db
    config = replace(plan.scene, oris_grid=tuple(grid))
    users = sample_trial(rng, n_users, config)
    scene = build_scene(config, users)
    records = run_trial(scene, plan.radio, list(thresholds), ALGORITHMS, plan.solver,
                        seed=(plan.master_seed, p_index, t_index))
    out = []
    for j, rec in enumerate(records):
        row = {}
        for name, o in rec.outcomes.items():
            row[name] = (int(o.outage.sum()), int(o.oris_used), o.snr_db.astype(float),
                         int(o.status == NODE_LIMIT))
        out.append((j, row))
    return p_index, t_index, out


def _work_items(plan):
    for p_index, (grid, _) in enumerate(plan.points()):
        for t in range(plan.trials_for(grid)):
            yield (plan, p_index, t)


def estimate_outage(plan: ExperimentPlan, workers: int = 1, progress=None):
    """Run every trial of ``plan`` and pool user events per (algorithm, point, threshold).

    Returns a list of ``(grid, OutageEstimate)`` in sweep order. Results are
    consumed in (point, trial) order, so the output is the same for any
    ``workers``.
    """
    points = plan.points()
    n_th = 1 if plan.experiment == "fig1" else len(plan.thresholds_db)
    acc = {}
    for p_index, (grid, U) in enumerate(points):
        for j in range(n_th):
            th = math.nan if plan.experiment == "fig1" else plan.thresholds_db[j]
            for name in ALGORITHMS:
                acc[(p_index, j, name)] = [OutageEstimate(name, U, th, 0, 0, 0, 0), []]

    def consume(result):
        p_index, _, rows = result
        U = points[p_index][1]
        for j, row in rows:
            for name, (events, used, snr, limited) in row.items():
                est, snrs = acc[(p_index, j, name)]
                est.trials += 1
                est.user_events += U
                est.outage_events += events
                est.oris_used_total += used
                est.node_limit_trials += limited
                snrs.append(snr)
        if progress is not None:
            progress()

    items = _work_items(plan)
    if workers <= 1:
        for item in items:
            consume(_run_item(item))
    else:
        ctx = mp.get_context("spawn")
        with ctx.Pool(workers) as pool:
            for result in pool.imap(_run_item, items, chunksize=4):
                consume(result)

    out = []
    for p_index, (grid, _) in enumerate(points):
        for j in range(n_th):
            for name in ALGORITHMS:
                est, snrs = acc[(p_index, j, name)]
                est.snr_db = np.concatenate(snrs) if snrs else np.zeros(0)
                out.append((grid, est))
    return out


def element_area(config: SceneConfig, grid) -> float:
    cols, rows = grid
    if cols == 0 or rows == 0:
        return 0.0
    room = config.room
    # the longer walls set the reported size; square rooms have a single value
    return max(room.width, room.depth) / cols * (room.height / 3.0) / rows


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".10g")


def _row(experiment, grid, area, est: OutageEstimate, users_label=None, th_label=None):
    snr = est.snr_db
    wl, q1, med, q3, wh = box_stats(snr)
    lo, hi = est.interval
    return [
        experiment, est.algorithm,
        users_label if users_label is not None else est.users,
        th_label if th_label is not None else est.gamma_th_db,
        f"{grid[0]}x{grid[1]}", area, est.trials, est.user_events, est.outage_events,
        est.p_out, lo, hi, est.mean_oris_used,
        float(np.mean(snr)) if len(snr) else math.nan,
        med, q1, q3, wl, wh, est.node_limit_trials,
    ]


def _pooled(name, group):
    """Pool several estimates of one algorithm (fig4 averages over U and thresholds)."""
    tot = OutageEstimate(name, 0, math.nan, 0, 0, 0, 0)
    snrs = []
    for est in group:
        tot.trials += est.trials
        tot.user_events += est.user_events
        tot.outage_events += est.outage_events
        tot.oris_used_total += est.oris_used_total
        tot.node_limit_trials += est.node_limit_trials
        snrs.append(est.snr_db)
    tot.snr_db = np.concatenate(snrs) if snrs else np.zeros(0)
    return tot


def campaign_rows(plan: ExperimentPlan, estimates):
    """CSV rows (without header) for a finished campaign."""
    rows = []
    if plan.experiment == "fig4":
        for grid in plan.grids:
            area = element_area(plan.scene, grid)
            for name in ALGORITHMS:
                group = [e for g, e in estimates if tuple(g) == tuple(grid) and e.algorithm == name]
                tot = _pooled(name, group)
                # trial-level counts: every (trial, threshold) pair is one sample
                rows.append(_row("fig4", grid, area, tot,
                                 users_label=f"{min(plan.users)}-{max(plan.users)}",
                                 th_label=f"{min(plan.thresholds_db):g}-{max(plan.thresholds_db):g}"))
        return rows
    for grid, est in estimates:
        area = element_area(plan.scene, grid)
        th = "" if plan.experiment == "fig1" else est.gamma_th_db
        rows.append(_row(plan.experiment, grid, area, est, th_label=th))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def run_campaign(plan: ExperimentPlan, workers: int = 1, progress=None) -> str:
    """Run ``plan`` and return its CSV text."""
    return rows_to_csv(campaign_rows(plan, estimate_outage(plan, workers, progress)))


def experiment_fig1(plan, workers=1):
    return run_campaign(plan, workers)


def experiment_fig2(plan, workers=1):
    return run_campaign(plan, workers)


def experiment_fig3(plan, workers=1):
    return run_campaign(plan, workers)


def experiment_fig4(plan, workers=1):
    return run_campaign(plan, workers)
