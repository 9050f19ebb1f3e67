"""ORIS element association: max-min optical SNR with an element penalty.

For a set of active users the allocation solves::

    max  t - eps * sum(beta)
    s.t. sum_{l,u} beta[l,k,u] <= 1             for every element k
         t <= c_u + sum_{l,k} a[l,k,u] beta[l,k,u]   for every active user u
         beta binary

``algorithm1`` repeats this, dropping the worst user while the optimum
stays below the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelCoefficients, to_db
from .milp import LE, NODE_LIMIT, OPTIMAL, LinearProgram, SolverConfig, solve_milp

__all__ = [
    "Allocation", "SolverConfig", "build_problem", "solve_single_shot", "algorithm1",
    "removal_path", "no_oris_baseline", "greedy_allocate", "allocation_record",
    "algorithm1_thresholds", "algorithm1_from_path", "max_reach",
]

HEURISTIC = "heuristic"


@dataclass
class Allocation:
    triples: np.ndarray  # (n, 3) int rows of (l, k, u)
    gamma_prime_min: float
    per_user_gamma_prime: np.ndarray
    supported_users: tuple
    status: str = OPTIMAL
    gap: float = 0.0
    nodes: int = 0
    iterations: int = 1
    history: list = field(default_factory=list)  # gamma'_min per Algorithm 1 iteration

    @property
    def oris_used(self) -> int:
        return len(self.triples)

    def objective(self, epsilon: float) -> float:
        return self.gamma_prime_min - epsilon * self.oris_used

    def snr_db(self) -> np.ndarray:
        return to_db(self.per_user_gamma_prime)


def _empty_triples():
    return np.zeros((0, 3), dtype=np.int64)


def _finish(coeffs, triples, active, **kw) -> Allocation:
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    if len(triples):
        triples = triples[np.lexsort((triples[:, 2], triples[:, 1], triples[:, 0]))]
    g = coeffs.gamma_prime(triples)
    active = tuple(sorted(int(u) for u in active))
    gmin = float(min(g[list(active)])) if active else math.nan
    return Allocation(triples, gmin, g, active, **kw)


def _check_active(coeffs, active_users):
    if active_users is None:
        active_users = range(coeffs.n_users)
    active = sorted({int(u) for u in active_users})
    if not active:
        raise ValueError("active user set is empty")
    if active[0] < 0 or active[-1] >= coeffs.n_users:
        raise ValueError("active user index out of range")
    return active


# ---------------------------------------------------------------------------
# Literal formulation
# ---------------------------------------------------------------------------

@dataclass
class AllocationProblem:
    lp: LinearProgram
    triples: np.ndarray  # variable j < t_index -> (l, k, u)
    t_index: int
    scale: float = 1.0


def build_problem(coeffs: ChannelCoefficients, active_users=None, epsilon=1e-3) -> AllocationProblem:
    """The max-min problem over every stored ``(l, k, u)`` entry of active users."""
    active = _check_active(coeffs, active_users)
    keep = np.isin(coeffs.a_u, active) & (coeffs.a_val > 0)
    l, k, u, a = coeffs.a_l[keep], coeffs.a_k[keep], coeffs.a_u[keep], coeffs.a_val[keep]
    c = coeffs.c
    lp = LinearProgram()
    for li, ki, ui in zip(l, k, u):
        lp.add_var(-epsilon, 0.0, 1.0, binary=True, name=f"b_{li}_{ki}_{ui}")
    reach = np.array([c[v] + a[u == v].sum() for v in active])
    t = lp.add_var(1.0, 0.0, float(reach.max()), name="gmin")
    for kk in np.unique(k):
        lp.add_row({int(j): 1.0 for j in np.nonzero(k == kk)[0]}, LE, 1.0, name=f"c1_{kk}")
    for v in active:
        row = {int(j): -float(a[j]) for j in np.nonzero(u == v)[0]}
        row[t] = 1.0
        lp.add_row(row, LE, float(c[v]), name=f"c3_{v}")
    return AllocationProblem(lp, np.stack([l, k, u], axis=1).astype(np.int64), t)


# ---------------------------------------------------------------------------
# Reduced formulation actually solved
# ---------------------------------------------------------------------------

@dataclass
class _Reduced:
    """Pairs ``(k, u)`` with the best LED per pair, scaled to O(1)."""

    active: list
    k: np.ndarray
    u: np.ndarray
    l: np.ndarray
    a: np.ndarray  # scaled gains
    c: np.ndarray  # scaled constants, indexed by user id
    t_hi: float
    scale: float
    eps: float  # scaled penalty

    @property
    def n(self):
        return len(self.a)


def _reduce(coeffs: ChannelCoefficients, active, epsilon) -> _Reduced:
    keep = np.isin(coeffs.a_u, active) & (coeffs.a_val > 0)
    l, k, u, a = coeffs.a_l[keep], coeffs.a_k[keep], coeffs.a_u[keep], coeffs.a_val[keep]
    # one LED per (element, user): largest gain, lowest LED index on ties
    order = np.lexsort((l, -a, u, k))
    l, k, u, a = l[order], k[order], u[order], a[order]
    first = np.ones(len(a), dtype=bool)
    first[1:] = (k[1:] != k[:-1]) | (u[1:] != u[:-1])
    l, k, u, a = l[first], k[first], u[first], a[first]
    # variables ordered by user, then element
    order = np.lexsort((k, u))
    l, k, u, a = l[order], k[order], u[order], a[order]
    c = np.asarray(coeffs.c, float)
    reach = np.array([c[v] + a[u == v].sum() for v in active])
    scale = max(float(a.max(initial=0.0)), float(c[active].max()), 1e-300)
    return _Reduced(list(active), k, u, l, a / scale, c / scale, float(reach.min()) / scale,
                    scale, epsilon / scale)


def _reduced_lp(red: _Reduced):
    """LP over reduced pairs; single-user elements need no exclusivity row."""
    lp = LinearProgram()
    for j in range(red.n):
        lp.add_var(-red.eps, 0.0, 1.0, binary=True)
    t = lp.add_var(1.0, 0.0, red.t_hi)
    uk, counts = np.unique(red.k, return_counts=True)
    for kk in uk[counts > 1]:
        lp.add_row({int(j): 1.0 for j in np.nonzero(red.k == kk)[0]}, LE, 1.0)
    for v in red.active:
        idx = np.nonzero(red.u == v)[0]
        if len(idx) == 0:
            continue  # constant row already folded into t_hi
        row = {int(j): -float(red.a[j]) for j in idx}
        row[t] = 1.0
        lp.add_row(row, LE, float(red.c[v]))
    return lp, t


# ---------------------------------------------------------------------------
# Heuristics on the reduced pairs
# ---------------------------------------------------------------------------

class _State:
    """Assignment of pair indices with per-user totals (scaled units)."""

    def __init__(self, red: _Reduced, chosen=()):
        self.red = red
        self.chosen = np.zeros(red.n, dtype=bool)
        self.owner = {}  # element -> pair index
        self.g = red.c.copy()
        for j in chosen:
            self.add(int(j))

    def add(self, j):
        self.chosen[j] = True
        self.owner[int(self.red.k[j])] = j
        self.g[self.red.u[j]] += self.red.a[j]

    def remove(self, j):
        self.chosen[j] = False
        del self.owner[int(self.red.k[j])]
        self.g[self.red.u[j]] -= self.red.a[j]

    def tmin(self):
        return min(min(self.g[v] for v in self.red.active), self.red.t_hi)

    def objective(self):
        return self.tmin() - self.red.eps * int(self.chosen.sum())

    def argmin_user(self):
        act = self.red.active
        vals = [self.g[v] for v in act]
        return act[int(np.argmin(vals))]


def _greedy_fill(st: _State, by_user):
    """Give the current minimum user its best free element until it has none."""
    red = st.red
    ptr = {v: 0 for v in red.active}
    while True:
        v = st.argmin_user()
        if st.g[v] >= red.t_hi:
            return
        cand = by_user[v]
        i = ptr[v]
        while i < len(cand) and int(red.k[cand[i]]) in st.owner:
            i += 1
        ptr[v] = i
        if i == len(cand):
            return
        st.add(cand[i])


def _prune(st: _State):
    """Drop elements that are not needed to keep every user at the minimum."""
    red = st.red
    t = st.tmin()
    for v in red.active:
        idx = np.nonzero(st.chosen & (red.u == v))[0]
        for j in idx[np.argsort(red.a[idx], kind="stable")]:
            if st.g[v] - red.a[j] >= t - 1e-12:
                st.remove(j)
            else:
                break


def _improve(st: _State, by_user, max_moves=None):
    """Move elements from richer users to the bottleneck user while it helps."""
    red = st.red
    max_moves = max_moves if max_moves is not None else 4 * red.n + 10
    for _ in range(max_moves):
        b = st.argmin_user()
        gb = st.g[b]
        best, best_val = None, gb
        for j in by_user[b]:
            kk = int(red.k[j])
            owner = st.owner.get(kk)
            if owner is None:
                val = gb + red.a[j]
            else:
                v = red.u[owner]
                if v == b:
                    continue
                val = min(gb + red.a[j], st.g[v] - red.a[owner])
            if val > best_val + 1e-12:
                best, best_val = (j, owner), val
        if best is None:
            return
        j, owner = best
        if owner is not None:
            st.remove(owner)
        st.add(j)
        _greedy_fill(st, by_user)


def _by_user(red: _Reduced):
    out = {}
    for v in red.active:
        idx = np.nonzero(red.u == v)[0]
        out[v] = idx[np.argsort(-red.a[idx], kind="stable")]
    return out


def _heuristic_solution(red: _Reduced, start=(), improve=True):
    by_user = _by_user(red)
    st = _State(red, start)
    _greedy_fill(st, by_user)
    if improve:
        _improve(st, by_user)
    _prune(st)
    return st


def _pairs_to_x(red, chosen, t_index):
    x = np.zeros(t_index + 1)
    x[:red.n] = chosen
    g = red.c.copy()
    np.add.at(g, red.u[chosen.astype(bool)], red.a[chosen.astype(bool)])
    x[t_index] = min(min(g[v] for v in red.active), red.t_hi)
    return x


def _lagrangian_bound(red: _Reduced, target: float, iters=300):
    """Upper bound on the reduced objective from the LP dual, by subgradient steps.

    For user weights ``w`` on the simplex (plus a weight on the ``t`` cap)
    the bound is ``sum w_u c_u + w_cap t_hi + sum_k max(0, max_u w_u a_ku - eps)``.
    Steps use the Polyak rule towards ``target`` (an achieved objective).
    """
    act = red.active
    pos = {v: i for i, v in enumerate(act)}
    ui = np.array([pos[int(v)] for v in red.u], dtype=np.int64)
    # element x slot layout: pairs of one element side by side, padded
    elems, ke, counts = np.unique(red.k, return_inverse=True, return_counts=True)
    order = np.argsort(ke, kind="stable")
    slot = np.arange(red.n) - np.repeat(np.cumsum(counts) - counts, counts)
    P = np.full((len(elems), int(counts.max(initial=1))), -1, dtype=np.int64)
    P[ke[order], slot] = order
    pad = P < 0
    Pi = np.where(pad, 0, P)
    cvec = np.append(red.c[act], red.t_hi)
    best = float(red.t_hi)
    w = np.zeros(len(act) + 1)
    w[int(np.argmin(cvec))] = 1.0
    rows = np.arange(len(elems))
    for _ in range(iters):
        val = np.where(pad, -np.inf, (w[ui] * red.a - red.eps)[Pi])
        arg = np.argmax(val, axis=1)
        top = P[rows, arg]
        top = top[val[rows, arg] > 0]
        f = float(cvec @ w + (w[ui[top]] * red.a[top] - red.eps).sum())
        best = min(best, f)
        grad = cvec.copy()
        np.add.at(grad, ui[top], red.a[top])
        gap = f - target
        if gap <= 1e-12:
            break
        w = _project_simplex(w - gap / max(grad @ grad, 1e-300) * grad)
    return best


def _project_simplex(v):
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


# ---------------------------------------------------------------------------
# Public algorithms
# ---------------------------------------------------------------------------

def no_oris_baseline(coeffs: ChannelCoefficients) -> Allocation:
    return _finish(coeffs, _empty_triples(), range(coeffs.n_users))


def greedy_allocate(coeffs: ChannelCoefficients, active_users=None, epsilon=1e-3) -> Allocation:
    """Greedy max-min: the current worst user takes its best free element.

    Stops once the worst user has no free element left, then releases
    elements that are not needed to hold the final minimum.
    """
    active = _check_active(coeffs, active_users)
    red = _reduce(coeffs, active, epsilon)
    if red.n == 0:
        return _finish(coeffs, _empty_triples(), active, status=HEURISTIC)
    st = _heuristic_solution(red, improve=False)
    return _finish(coeffs, _pairs_triples(red, st.chosen), active, status=HEURISTIC)


def _pairs_triples(red, chosen):
    idx = np.nonzero(chosen)[0]
    return np.stack([red.l[idx], red.k[idx], red.u[idx]], axis=1) if len(idx) else _empty_triples()


def _triples_to_start(red, triples):
    """Pair indices of ``red`` matching the ``(k, u)`` of earlier triples."""
    if triples is None or not len(triples):
        return []
    lookup = {(int(k), int(u)): j for j, (k, u) in enumerate(zip(red.k, red.u))}
    return [lookup[(int(k), int(u))] for _, k, u in triples if (int(k), int(u)) in lookup]


def solve_single_shot(coeffs: ChannelCoefficients, active_users=None,
                      config: SolverConfig = SolverConfig(), warm_start=None) -> Allocation:
    """Exact (node-limited) solution of the max-min problem for ``active_users``.

    ``warm_start`` is an optional earlier set of triples used as an extra
    incumbent candidate.
    """
    active = _check_active(coeffs, active_users)
    red = _reduce(coeffs, active, config.epsilon)
    if red.n == 0:
        return _finish(coeffs, _empty_triples(), active)

    t_index = red.n
    cands = [_heuristic_solution(red)]
    start = _triples_to_start(red, warm_start)
    if start:
        cands.append(_heuristic_solution(red, start))
    inc = max(cands, key=lambda s: s.objective())
    x_inc = _pairs_to_x(red, inc.chosen, t_index)

    _, counts = np.unique(red.k, return_counts=True)
    rows = int((counts > 1).sum()) + len(np.unique(red.u))
    cells = (rows + 1) * (red.n + 2 * rows + 2)
    if cells > config.max_lp_cells:
        bound = _lagrangian_bound(red, inc.objective())
        gap = max(0.0, bound - inc.objective()) * red.scale
        status = OPTIMAL if gap <= config.gap_rel * (1 + abs(inc.objective() * red.scale)) else NODE_LIMIT
        return _finish(coeffs, _pairs_triples(red, inc.chosen), active, status=status, gap=gap, nodes=0)

    lp, _ = _reduced_lp(red)

    def rounding(x):
        frac_order = np.argsort(-x[:red.n], kind="stable")
        start = [j for j in frac_order if x[j] > 0.5]
        st = _heuristic_solution(red, start)
        return _pairs_to_x(red, st.chosen, t_index)

    sol = solve_milp(lp, config, incumbent=x_inc, heuristic=rounding)
    if sol.x is None:  # cannot happen: beta = 0 is always feasible
        raise RuntimeError(f"allocation solver failed with status {sol.status}")
    chosen = sol.x[:red.n] > 0.5
    return _finish(coeffs, _pairs_triples(red, chosen), active, status=sol.status,
                   gap=sol.gap * red.scale, nodes=sol.nodes)


def removal_path(coeffs: ChannelCoefficients, config: SolverConfig = SolverConfig(),
                 stop_at=math.inf):
    """Successive single-shot solutions, removing the worst user each time.

    Stops after the first solution whose minimum reaches ``stop_at`` or when
    no user is left. Entry ``i`` is the solve with ``i`` users removed.
    """
    active = list(range(coeffs.n_users))
    steps = []
    prev = None
    while active:
        warm = None
        if prev is not None:
            warm = prev.triples[np.isin(prev.triples[:, 2], active)]
        alloc = solve_single_shot(coeffs, active, config, warm_start=warm)
        steps.append(alloc)
        if alloc.gamma_prime_min >= stop_at:
            break
        g = alloc.per_user_gamma_prime
        worst = min(active, key=lambda v: (g[v], v))
        active = [v for v in active if v != worst]
        prev = alloc
    return steps


def algorithm1_from_path(coeffs: ChannelCoefficients, steps, gamma_th_prime: float) -> Allocation:
    """Algorithm 1 outcome for one threshold, read off a removal path."""
    history = []
    for i, step in enumerate(steps):
        history.append(step.gamma_prime_min)
        if step.gamma_prime_min >= gamma_th_prime:
            out = _finish(coeffs, step.triples, step.supported_users, status=step.status,
                          gap=step.gap, nodes=step.nodes)
            out.iterations = i + 1
            out.history = history
            return out
    out = _finish(coeffs, _empty_triples(), ())
    out.status = steps[-1].status if steps else OPTIMAL
    out.iterations = len(steps)
    out.history = history
    return out


def max_reach(coeffs: ChannelCoefficients) -> np.ndarray:
    """Per-user optical SNR if that user alone received every element it can use."""
    red = _reduce(coeffs, list(range(coeffs.n_users)), 1.0)
    reach = np.asarray(coeffs.c, float).copy()
    np.add.at(reach, red.u, red.a * red.scale)
    return reach


def algorithm1(coeffs: ChannelCoefficients, gamma_th_prime: float,
               config: SolverConfig = SolverConfig()) -> Allocation:
    """Drop the worst user until the max-min optimum reaches ``gamma_th_prime``.

    Removed users get no elements and keep their fixed SNR term.
    """
    return algorithm1_thresholds(coeffs, [gamma_th_prime], config)[0]


def algorithm1_thresholds(coeffs: ChannelCoefficients, thresholds,
                          config: SolverConfig = SolverConfig()) -> list:
    """Algorithm 1 for several thresholds from a single removal path.

    Which user is removed at each step does not depend on the threshold,
    so one path serves every threshold. When no user can reach a threshold
    even with every element, every iteration must fail and the outcome is
    the empty supported set; that case is answered without solving.
    """
    thresholds = [float(t) for t in thresholds]
    if any(not t > 0 for t in thresholds):
        raise ValueError("threshold must be positive")
    U = coeffs.n_users
    if U == 0:
        return [_finish(coeffs, _empty_triples(), ()) for _ in thresholds]
    best = float(max_reach(coeffs).max())
    reachable = [t for t in thresholds if t <= best]
    steps = removal_path(coeffs, config, stop_at=max(reachable)) if reachable else []
    out = []
    for t in thresholds:
        if t <= best:
            out.append(algorithm1_from_path(coeffs, steps, t))
        else:
            alloc = _finish(coeffs, _empty_triples(), ())
            alloc.iterations = U
            out.append(alloc)
    return out


def allocation_record(alloc: Allocation, gamma_th_prime=None) -> dict:
    """JSON-ready summary of an allocation."""
    def num(v):
        v = float(v)
        return v if math.isfinite(v) else None

    rec = {
        "assignments": [[int(l), int(k), int(u)] for l, k, u in alloc.triples],
        "gamma_prime_min": num(alloc.gamma_prime_min),
        "per_user_gamma_prime": [num(v) for v in alloc.per_user_gamma_prime],
        "per_user_snr_db": [num(v) for v in alloc.snr_db()],
        "supported_users": [int(u) for u in alloc.supported_users],
        "oris_used": alloc.oris_used,
        "status": alloc.status,
        "gap": num(alloc.gap),
        "nodes": int(alloc.nodes),
        "iterations": int(alloc.iterations),
    }
    if gamma_th_prime is not None:
        rec["outage"] = [bool(v < gamma_th_prime) or (u not in alloc.supported_users)
                         for u, v in enumerate(alloc.per_user_gamma_prime)]
    return rec
