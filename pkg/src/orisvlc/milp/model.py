"""Problem and solution containers, plus a CPLEX-LP text writer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LE, GE, EQ = "<=", ">=", "="
_SENSES = (LE, GE, EQ)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NODE_LIMIT = "node-limit"
ITERATION_LIMIT = "iteration-limit"


class SolverError(RuntimeError):
    pass


class InstanceTooLarge(ValueError):
    pass


class LinearProgram:
    """Maximize ``obj @ x`` subject to sparse rows and finite variable bounds.

    Rows are stored as ``(cols, vals, sense, rhs)``; variables carry a binary
    flag that the LP relaxation ignores.
    """

    def __init__(self):
        self.obj: list[float] = []
        self.lo: list[float] = []
        self.hi: list[float] = []
        self.binary: list[bool] = []
        self.var_names: list[str] = []
        self.rows: list[tuple[np.ndarray, np.ndarray, str, float]] = []
        self.row_names: list[str] = []

    @property
    def n_vars(self) -> int:
        return len(self.obj)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def add_var(self, obj=0.0, lo=0.0, hi=1.0, binary=False, name=None) -> int:
        if binary and not (0.0 <= lo <= hi <= 1.0):
            raise ValueError("binary variables need bounds within [0, 1]")
        if lo > hi:
            raise ValueError(f"empty bounds [{lo}, {hi}]")
        self.obj.append(float(obj))
        self.lo.append(float(lo))
        self.hi.append(float(hi))
        self.binary.append(bool(binary))
        self.var_names.append(name or f"x{len(self.obj) - 1}")
        return len(self.obj) - 1

    def add_row(self, coefs, sense, rhs, name=None) -> int:
        """``coefs`` maps variable index to coefficient (dict or pair list)."""
        if sense not in _SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        items = sorted(dict(coefs).items())
        cols = np.array([j for j, v in items if v != 0.0], dtype=np.int64)
        vals = np.array([v for j, v in items if v != 0.0], dtype=float)
        if len(cols) and (cols.min() < 0 or cols.max() >= self.n_vars):
            raise ValueError("row references an unknown variable")
        self.rows.append((cols, vals, sense, float(rhs)))
        self.row_names.append(name or f"r{len(self.rows) - 1}")
        return len(self.rows) - 1

    def arrays(self):
        """Dense ``(A, senses, b, c, lo, hi, binary)``."""
        A = np.zeros((self.n_rows, self.n_vars))
        for i, (cols, vals, _, _) in enumerate(self.rows):
            A[i, cols] = vals
        senses = [r[2] for r in self.rows]
        b = np.array([r[3] for r in self.rows], dtype=float)
        return (A, senses, b, np.array(self.obj, float), np.array(self.lo, float),
                np.array(self.hi, float), np.array(self.binary, bool))

    def objective(self, x) -> float:
        return float(np.dot(self.obj, x))

    def max_violation(self, x) -> float:
        """Largest constraint or bound violation of ``x`` (0 when feasible)."""
        x = np.asarray(x, float)
        worst = float(max(np.max(np.array(self.lo) - x, initial=0.0),
                          np.max(x - np.array(self.hi), initial=0.0)))
        for cols, vals, sense, rhs in self.rows:
            lhs = float(np.dot(vals, x[cols]))
            if sense == LE:
                worst = max(worst, lhs - rhs)
            elif sense == GE:
                worst = max(worst, rhs - lhs)
            else:
                worst = max(worst, abs(lhs - rhs))
        return worst

    def is_feasible(self, x, tol=1e-9) -> bool:
        return self.max_violation(x) <= tol

    def to_lp_format(self) -> str:
        """Render in CPLEX LP text format for cross-checking with other solvers."""
        def term(v, name, first):
            sign = "-" if v < 0 else ("" if first else "+")
            return f"{sign} {abs(v):.17g} {name}".strip()

        out = ["\\ generated by orisvlc", "Maximize", " obj:"]
        objterms = [term(v, self.var_names[j], i == 0)
                    for i, (j, v) in enumerate((j, v) for j, v in enumerate(self.obj) if v != 0)]
        out[-1] += " " + (" ".join(objterms) if objterms else "0 " + self.var_names[0])
        out.append("Subject To")
        for (cols, vals, sense, rhs), name in zip(self.rows, self.row_names):
            body = " ".join(term(v, self.var_names[j], i == 0) for i, (j, v) in enumerate(zip(cols, vals)))
            out.append(f" {name}: {body or '0 ' + self.var_names[0]} {sense} {rhs:.17g}")
        out.append("Bounds")
        for j, name in enumerate(self.var_names):
            out.append(f" {self.lo[j]:.17g} <= {name} <= {self.hi[j]:.17g}")
        bins = [n for n, b in zip(self.var_names, self.binary) if b]
        if bins:
            out.append("Binaries")
            out.append(" " + " ".join(bins))
        out.append("End")
        return "\n".join(out) + "\n"


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0


@dataclass
class MilpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    bound: float = float("nan")
    nodes: int = 0
    lp_iterations: int = 0
    root_bound: float = float("nan")
    history: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        if self.x is None:
            return float("inf")
        return max(0.0, self.bound - self.objective)
