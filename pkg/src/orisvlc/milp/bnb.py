"""Best-first branch-and-bound over the bounded simplex."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from .model import INFEASIBLE, NODE_LIMIT, OPTIMAL, UNBOUNDED, LinearProgram, MilpSolution
from .simplex import Tableau


@dataclass(frozen=True)
class SolverConfig:
    """Solver knobs shared by the allocation layer.

    ``epsilon`` is the per-element penalty of the allocation objective; the
    remaining fields drive branch-and-bound.
    """

    epsilon: float = 1e-3
    node_limit: int = 100_000
    gap_rel: float = 1e-9
    integrality_tol: float = 1e-9
    feasibility_tol: float = 1e-9
    tie_break: str = "lowest-index"
    heuristic_every: int = 5  # run the caller's rounding heuristic every this many nodes
    confirm_after: int = 50  # node re-solves refactor before accepting if this many pivots ran
    max_lp_cells: int = 4_000_000  # tableau size above which the LP is skipped
    node_memory: int = 256 * 2**20  # bytes of open-node tableaus kept in memory

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.node_limit < 1:
            raise ValueError("node limit must be at least 1")
        if self.tie_break != "lowest-index":
            raise ValueError(f"unknown tie-break rule {self.tie_break!r}")


def _fractionality(x, binary):
    f = np.abs(x - np.round(x))
    return np.where(binary, f, 0.0)


def _close(bound, incumbent, gap_rel):
    return bound - incumbent <= gap_rel * (1.0 + abs(incumbent))


def solve_milp(lp: LinearProgram, config: SolverConfig = SolverConfig(), incumbent=None,
               heuristic=None, kern=None) -> MilpSolution:
    """Maximize ``lp`` with its binary variables integral.

    ``incumbent`` is an optional feasible starting point. ``heuristic`` maps
    a fractional LP point to a feasible point (or ``None``) and is tried at
    every node. Nodes are explored best-bound first; ties go to the earlier
    node. The branching variable is the most fractional binary, lowest index
    on ties.
    """
    A, senses, b, c, lo, hi, binary = lp.arrays()
    int_tol = config.integrality_tol
    best_x, best_obj = None, -np.inf

    def offer(x):
        nonlocal best_x, best_obj
        if x is None:
            return
        x = np.asarray(x, float).copy()
        x[binary] = np.round(x[binary])
        if lp.max_violation(x) > config.feasibility_tol:
            return
        obj = float(c @ x)
        if obj > best_obj + 1e-15:
            best_x, best_obj = x, obj

    if incumbent is not None:
        offer(incumbent)

    if np.any(lo > hi):
        return MilpSolution(INFEASIBLE, nodes=0)

    root = Tableau(A, senses, b, c, lo, hi, kern=kern)
    st = root.solve()
    nodes = 1
    if st == INFEASIBLE:
        return MilpSolution(INFEASIBLE, nodes=nodes, lp_iterations=root.iterations)
    if st == UNBOUNDED:
        return MilpSolution(UNBOUNDED, nodes=nodes, lp_iterations=root.iterations)
    iterations = root.iterations
    n = root.n

    def evaluate(tab):
        x = tab.values()[:n]
        return x, float(c @ x)

    x0, z0 = evaluate(root)
    root_bound = z0
    history = [(nodes, z0, best_obj)]

    counter = itertools.count()
    heap = []
    node_bytes = root.T.nbytes + root.d.nbytes
    max_kept = max(0, config.node_memory // max(node_bytes, 1))
    kept = 0

    def consider(tab, x, z):
        frac = _fractionality(x, binary)
        if frac.max(initial=0.0) <= int_tol:
            offer(x)
            return
        if heuristic is not None and (nodes - 1) % config.heuristic_every == 0:
            offer(heuristic(x))
        if best_x is not None and _close(z, best_obj, config.gap_rel):
            return
        nonlocal kept
        if kept < max_kept:
            kept += 1
            state = tab  # full tableau, no rebuild on pop
        else:
            state = tab.snapshot()
        heapq.heappush(heap, (-z, next(counter), state, x))

    consider(root, x0, z0)
    status = OPTIMAL
    while heap:
        neg_z, _, state, x = heap[0]
        if best_x is not None and _close(-neg_z, best_obj, config.gap_rel):
            break
        if nodes >= config.node_limit:
            status = NODE_LIMIT
            break
        heapq.heappop(heap)
        if isinstance(state, Tableau):
            kept -= 1
            tab = state
        else:
            tab = root.restore(state)
        tab.iterations = 0
        tab.confirm_after = config.confirm_after
        frac = _fractionality(x, binary)
        j = int(np.argmax(frac))  # first index among equally fractional
        val = x[j]
        for new_lo, new_hi in ((tab.lb[j], np.floor(val)), (np.ceil(val), tab.ub[j])):
            child = tab.copy()
            child.set_bounds(j, new_lo, new_hi)
            st = child.dual()
            if st == OPTIMAL:
                st = child.primal()
            nodes += 1
            iterations += child.iterations
            if st != OPTIMAL:
                continue
            cx, cz = evaluate(child)
            if best_x is not None and cz <= best_obj + config.gap_rel * (1.0 + abs(best_obj)):
                continue
            consider(child, cx, cz)
        history.append((nodes, -heap[0][0] if heap else best_obj, best_obj))

    if best_x is None:
        return MilpSolution(INFEASIBLE if status == OPTIMAL else status, nodes=nodes,
                            lp_iterations=iterations, root_bound=root_bound, history=history)
    if status == OPTIMAL:
        bound = best_obj
        if heap:
            bound = max(best_obj, -heap[0][0])
    else:
        bound = max(best_obj, -heap[0][0])
    return MilpSolution(status, best_x, best_obj, bound, nodes, iterations, root_bound, history)
