"""Mixed-binary linear programming: bounded simplex, branch-and-bound, brute force."""

from .bnb import SolverConfig, solve_milp
from .brute import brute_force
from .model import (EQ, GE, INFEASIBLE, ITERATION_LIMIT, LE, NODE_LIMIT, OPTIMAL, UNBOUNDED,
                    InstanceTooLarge, LinearProgram, LpSolution, MilpSolution, SolverError)
from .simplex import Tableau, solve_lp

__all__ = [
    "EQ", "GE", "LE", "INFEASIBLE", "ITERATION_LIMIT", "NODE_LIMIT", "OPTIMAL", "UNBOUNDED",
    "InstanceTooLarge", "LinearProgram", "LpSolution", "MilpSolution", "SolverConfig",
    "SolverError", "Tableau", "brute_force", "solve_lp", "solve_milp",
]
