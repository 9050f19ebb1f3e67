"""Pure-numpy implementations of the hot kernels.

These are the reference versions; the compiled module ``_kernels_c`` must
return identical results and is preferred when it imports.
"""

import numpy as np

# Segments are processed in blocks so the (segments x cylinders) temporaries
# stay small.
_BLOCK = 4096


def segments_blocked(p0, p1, cylinders, tol=1e-9):
    """Flag segments whose interior passes through any cylinder.

    Parameters
    ----------
    p0, p1 : (N, 3) float arrays
        Segment endpoints.
    cylinders : (C, 4) float array
        Rows of ``(cx, cy, radius, height)``; each cylinder is solid and
        stands on the floor.
    tol : float
        Minimum chord length in meters for a hit to count.

    Returns
    -------
    (N,) uint8 array, 1 where the segment is blocked.
    """
    p0 = np.ascontiguousarray(p0, dtype=np.float64).reshape(-1, 3)
    p1 = np.ascontiguousarray(p1, dtype=np.float64).reshape(-1, 3)
    cyl = np.ascontiguousarray(cylinders, dtype=np.float64).reshape(-1, 4)
    n = p0.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    if n == 0 or cyl.shape[0] == 0:
        return out
    cx, cy, r, h = (cyl[:, i][None, :] for i in range(4))
    for s in range(0, n, _BLOCK):
        a = p0[s:s + _BLOCK]
        d = p1[s:s + _BLOCK] - a
        length = np.sqrt(np.einsum("ij,ij->i", d, d))[:, None]
        x0, y0, z0 = a[:, 0:1], a[:, 1:2], a[:, 2:3]
        dx, dy, dz = d[:, 0:1], d[:, 1:2], d[:, 2:3]

        lo = np.zeros((a.shape[0], cyl.shape[0]))
        hi = np.ones_like(lo)

        # height slab 0 <= z <= h
        with np.errstate(divide="ignore", invalid="ignore"):
            flat = np.abs(dz) < 1e-300
            ta = np.where(flat, -np.inf, (0.0 - z0) / dz)
            tb = np.where(flat, np.inf, (h - z0) / dz)
        inside_slab = (z0 >= 0.0) & (z0 <= h)
        t_in = np.minimum(ta, tb)
        t_out = np.maximum(ta, tb)
        t_in = np.where(flat, np.where(inside_slab, -np.inf, np.inf), t_in)
        t_out = np.where(flat, np.where(inside_slab, np.inf, -np.inf), t_out)
        lo = np.maximum(lo, t_in)
        hi = np.minimum(hi, t_out)

        # infinite vertical cylinder
        fx = x0 - cx
        fy = y0 - cy
        qa = dx * dx + dy * dy
        qb = fx * dx + fy * dy
        qc = fx * fx + fy * fy - r * r
        vertical = qa < 1e-300
        disc = qb * qb - qa * qc
        sq = np.sqrt(np.maximum(disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            r_in = np.where(vertical, 0.0, (-qb - sq) / qa)
            r_out = np.where(vertical, 0.0, (-qb + sq) / qa)
        hit_v = qc <= 0.0
        r_in = np.where(vertical, np.where(hit_v, -np.inf, np.inf), r_in)
        r_out = np.where(vertical, np.where(hit_v, np.inf, -np.inf), r_out)
        miss = ~vertical & (disc <= 0.0)
        r_in = np.where(miss, np.inf, r_in)
        r_out = np.where(miss, -np.inf, r_out)
        lo = np.maximum(lo, r_in)
        hi = np.minimum(hi, r_out)

        chord = (hi - lo) * length
        out[s:s + _BLOCK] = np.any(chord > tol, axis=1)
    return out


# ---------------------------------------------------------------------------
# Simplex primitives. Variable status codes: 0 basic, 1 at lower, 2 at upper.
# ---------------------------------------------------------------------------

def pivot(T, d, r, q):
    """Gauss-Jordan pivot on ``T[r, q]`` in place, updating reduced costs ``d``."""
    prow = T[r] / T[r, q]
    col = T[:, q].copy()
    T -= np.outer(col, prow)
    T[r] = prow
    d -= d[q] * prow
    d[q] = 0.0


def price(d, status, movable, tol, bland):
    """Entering column and direction (+1 up, -1 down), or ``(-1, 0)`` at optimum."""
    up = (status == 1) & movable & (d > tol)
    dn = (status == 2) & movable & (d < -tol)
    elig = up | dn
    if not elig.any():
        return -1, 0
    if bland:
        q = int(np.argmax(elig))
    else:
        q = int(np.argmax(np.where(elig, np.abs(d), 0.0)))
    return q, (1 if up[q] else -1)


def primal_ratio(col, beta, lbB, ubB, direction, piv_tol, bland, basis):
    """Leaving row for a primal step.

    Returns ``(r, theta, to_upper)``; ``r = -1`` when no basic variable
    limits the step (``theta = inf``).
    """
    if len(col) == 0:
        return -1, np.inf, False
    alpha = direction * col
    with np.errstate(divide="ignore", invalid="ignore"):
        dec = alpha > piv_tol
        inc = alpha < -piv_tol
        ratio = np.full(alpha.shape, np.inf)
        ratio = np.where(dec, (beta - lbB) / alpha, ratio)
        ratio = np.where(inc, (ubB - beta) / (-alpha), ratio)
    ratio = np.where(np.isnan(ratio), np.inf, ratio)
    ratio = np.maximum(ratio, 0.0)
    theta = ratio.min()
    if not np.isfinite(theta):
        return -1, np.inf, False
    ties = ratio <= theta + 1e-12
    if bland:
        cand = np.nonzero(ties)[0]
        r = int(cand[np.argmin(basis[cand])])
    else:
        r = int(np.argmax(np.where(ties, np.abs(alpha), -1.0)))
    return r, float(ratio[r]), bool(alpha[r] < 0)


def dual_leave(beta, lbB, ubB, tol):
    """Most infeasible basic row; ``(-1, False)`` when primal feasible."""
    if len(beta) == 0:
        return -1, False
    below = lbB - beta
    above = beta - ubB
    viol = np.maximum(below, above)
    r = int(np.argmax(viol))
    if viol[r] <= tol:
        return -1, False
    return r, bool(above[r] > below[r])


def dual_ratio(row, d, status, movable, to_upper, piv_tol):
    """Entering column for a dual step on a leaving row, or -1 (infeasible)."""
    # leaving var must decrease when above its upper bound, increase otherwise
    sgn = -1.0 if to_upper else 1.0
    s = sgn * row
    cand = movable & (((status == 1) & (s < -piv_tol)) | ((status == 2) & (s > piv_tol)))
    if not cand.any():
        return -1
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(cand, np.abs(d) / np.abs(row), np.inf)
    best = ratio.min()
    ties = ratio <= best + 1e-12
    return int(np.argmax(np.where(ties, np.abs(row), -1.0)))
