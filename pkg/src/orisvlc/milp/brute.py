"""Exhaustive enumeration oracle for tiny mixed-binary programs."""

from __future__ import annotations

import numpy as np

from .model import EQ, GE, INFEASIBLE, LE, OPTIMAL, InstanceTooLarge, LinearProgram, MilpSolution

MAX_BINARIES = 20
MAX_ASSIGNMENTS = 1 << MAX_BINARIES
_CHUNK = 1 << 14


def _choice_groups(A, senses, b, bins):
    """Split binaries into disjoint at-most-one groups plus singletons.

    A row ``sum x_j <= 1`` over binaries with unit coefficients admits only
    the all-zero point or a single one, so enumerating per group skips
    points that row would reject anyway. Every row is still checked.
    """
    pos = {int(j): i for i, j in enumerate(bins)}
    taken = np.zeros(len(bins), dtype=bool)
    groups = []
    for i, s in enumerate(senses):
        if s != LE or abs(b[i] - 1.0) > 1e-12:
            continue
        nz = np.nonzero(A[i])[0]
        if len(nz) < 2 or np.any(A[i, nz] != 1.0) or any(int(j) not in pos for j in nz):
            continue
        idx = np.array([pos[int(j)] for j in nz])
        if np.any(taken[idx]):
            continue
        taken[idx] = True
        groups.append(np.sort(idx))
    groups += [np.array([i]) for i in np.nonzero(~taken)[0]]
    return sorted(groups, key=lambda g: int(g[0]))


def _decode(codes, groups, nb):
    """Mixed-radix decoding: digit 0 of a group means all zero, d means member d-1."""
    X = np.zeros((len(codes), nb))
    rest = codes.copy()
    for g in reversed(groups):
        digit = rest % (len(g) + 1)
        rest //= len(g) + 1
        hit = digit > 0
        X[np.nonzero(hit)[0], g[digit[hit] - 1]] = 1.0
    return X


def brute_force(lp: LinearProgram, tol: float = 1e-9) -> MilpSolution:
    """Enumerate every binary assignment; the (at most one) continuous
    variable is set in closed form from the rows it appears in.

    Binaries covered by an at-most-one row are enumerated together, which
    keeps instances with more than ``MAX_BINARIES`` binaries in reach as
    long as at most ``MAX_ASSIGNMENTS`` points remain. Ties keep the first
    point in enumeration order (lowest variable index set first).
    """
    A, senses, b, c, lo, hi, binary = lp.arrays()
    bins = np.nonzero(binary)[0]
    conts = np.nonzero(~binary)[0]
    groups = _choice_groups(A, senses, b, bins)
    total = 1
    for g in groups:
        total *= len(g) + 1
    if total > MAX_ASSIGNMENTS:
        raise InstanceTooLarge(f"{total} binary assignments exceed the limit of {MAX_ASSIGNMENTS}")
    if len(conts) > 1:
        raise ValueError("brute force handles at most one continuous variable")
    nb = len(bins)
    # binaries whose bounds fix them
    fixed_lo = lo[bins] > 0.5
    fixed_hi = hi[bins] < 0.5
    if np.any(fixed_lo & fixed_hi):
        return MilpSolution(INFEASIBLE)

    sense = np.array(senses, dtype=object)
    le = sense == LE
    ge = sense == GE
    eq = sense == EQ
    Ab = A[:, bins]
    if len(conts):
        j = conts[0]
        a_c = A[:, j]
        c_c = c[j]
        lo_c, hi_c = lo[j], hi[j]
    best_obj, best_x = -np.inf, None
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        X = _decode(codes, groups, nb)  # (P, nb)
        ok = np.all((X >= lo[bins] - tol) & (X <= hi[bins] + tol), axis=1)
        resid = b[None, :] - X @ Ab.T  # remaining rhs for the continuous part
        if not len(conts):
            ok &= np.all(np.where(le, resid >= -tol, True), axis=1)
            ok &= np.all(np.where(ge, resid <= tol, True), axis=1)
            ok &= np.all(np.where(eq, np.abs(resid) <= tol, True), axis=1)
            val = X @ c[bins]
            xc = None
        else:
            # each row restricts the continuous variable to an interval
            low = np.full(len(codes), lo_c)
            high = np.full(len(codes), hi_c)
            for i in range(len(b)):
                a = a_c[i]
                r = resid[:, i]
                if a == 0.0:
                    if le[i]:
                        ok &= r >= -tol
                    elif ge[i]:
                        ok &= r <= tol
                    else:
                        ok &= np.abs(r) <= tol
                    continue
                bound = r / a
                if eq[i]:
                    low = np.maximum(low, bound)
                    high = np.minimum(high, bound)
                elif le[i] == (a > 0):
                    high = np.minimum(high, bound)
                else:
                    low = np.maximum(low, bound)
            ok &= low <= high + tol
            if c_c > 0:
                xc = high
            elif c_c < 0:
                xc = low
            else:
                xc = np.clip(0.0, low, high)
            val = X @ c[bins] + c_c * xc
        val = np.where(ok, val, -np.inf)
        i = int(np.argmax(val))
        if np.isfinite(val[i]) and val[i] > best_obj + 1e-15 * max(1.0, abs(val[i])):
            best_obj = float(val[i])
            x = np.zeros(lp.n_vars)
            x[bins] = X[i]
            if len(conts):
                x[conts[0]] = xc[i]
            best_x = x
    if best_x is None:
        return MilpSolution(INFEASIBLE, nodes=total)
    return MilpSolution(OPTIMAL, best_x, best_obj, best_obj, nodes=total)
