# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()


cdef inline bint _blocked_one(double x0, double y0, double z0,
                              double dx, double dy, double dz, double length,
                              double cx, double cy, double r, double h,
                              double tol) nogil:
    cdef double lo = 0.0, hi = 1.0
    cdef double ta, tb, fx, fy, qa, qb, qc, disc, sq
    if fabs(dz) < 1e-300:
        if z0 < 0.0 or z0 > h:
            return False
    else:
        ta = (0.0 - z0) / dz
        tb = (h - z0) / dz
        if ta > tb:
            ta, tb = tb, ta
        if ta > lo:
            lo = ta
        if tb < hi:
            hi = tb
        if hi <= lo:
            return False
    fx = x0 - cx
    fy = y0 - cy
    qa = dx * dx + dy * dy
    qc = fx * fx + fy * fy - r * r
    if qa < 1e-300:
        if qc > 0.0:
            return False
    else:
        qb = fx * dx + fy * dy
        disc = qb * qb - qa * qc
        if disc <= 0.0:
            return False
        sq = sqrt(disc)
        ta = (-qb - sq) / qa
        tb = (-qb + sq) / qa
        if ta > lo:
            lo = ta
        if tb < hi:
            hi = tb
    return (hi - lo) * length > tol


def segments_blocked(p0, p1, cylinders, double tol=1e-9):
    cdef double[:, ::1] a = np.ascontiguousarray(p0, dtype=np.float64).reshape(-1, 3)
    cdef double[:, ::1] b = np.ascontiguousarray(p1, dtype=np.float64).reshape(-1, 3)
    cdef double[:, ::1] cyl = np.ascontiguousarray(cylinders, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t n = a.shape[0], nc = cyl.shape[0], i, j
    out_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef double dx, dy, dz, length
    with nogil:
        for i in range(n):
            dx = b[i, 0] - a[i, 0]
            dy = b[i, 1] - a[i, 1]
            dz = b[i, 2] - a[i, 2]
            length = sqrt(dx * dx + dy * dy + dz * dz)
            for j in range(nc):
                if _blocked_one(a[i, 0], a[i, 1], a[i, 2], dx, dy, dz, length,
                                cyl[j, 0], cyl[j, 1], cyl[j, 2], cyl[j, 3], tol):
                    out[i] = 1
                    break
    return out_arr


# ---------------------------------------------------------------------------
# Simplex primitives (same contracts as the numpy versions).
# ---------------------------------------------------------------------------

def pivot(double[:, ::1] T, double[::1] d, Py_ssize_t r, Py_ssize_t q):
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1], i, j
    cdef double piv = T[r, q], f, dq
    with nogil:
        for j in range(n):
            T[r, j] = T[r, j] / piv
        for i in range(m):
            if i == r:
                continue
            f = T[i, q]
            if f != 0.0:
                for j in range(n):
                    T[i, j] = T[i, j] - f * T[r, j]
        dq = d[q]
        if dq != 0.0:
            for j in range(n):
                d[j] = d[j] - dq * T[r, j]
        d[q] = 0.0


def price(double[::1] d, signed char[::1] status, unsigned char[::1] movable,
          double tol, bint bland):
    cdef Py_ssize_t n = d.shape[0], j, q = -1
    cdef double best = 0.0, v
    cdef int direction = 0
    for j in range(n):
        if not movable[j]:
            continue
        if status[j] == 1 and d[j] > tol:
            v = d[j]
        elif status[j] == 2 and d[j] < -tol:
            v = -d[j]
        else:
            continue
        if bland:
            return j, (1 if status[j] == 1 else -1)
        if v > best:
            best = v
            q = j
    if q < 0:
        return -1, 0
    return q, (1 if status[q] == 1 else -1)


def primal_ratio(double[::1] col, double[::1] beta, double[::1] lbB, double[::1] ubB,
                 int direction, double piv_tol, bint bland, cnp.int64_t[::1] basis):
    cdef Py_ssize_t m = col.shape[0], i, r = -1
    cdef double theta = INFINITY, a, rat, best_a = -1.0
    # first pass: minimum ratio
    for i in range(m):
        a = direction * col[i]
        if a > piv_tol:
            rat = (beta[i] - lbB[i]) / a
        elif a < -piv_tol:
            rat = (ubB[i] - beta[i]) / (-a)
        else:
            continue
        if rat != rat:
            continue
        if rat < 0.0:
            rat = 0.0
        if rat < theta:
            theta = rat
    if theta == INFINITY:
        return -1, INFINITY, False
    # second pass: tie-break among near-minimal ratios
    for i in range(m):
        a = direction * col[i]
        if a > piv_tol:
            rat = (beta[i] - lbB[i]) / a
        elif a < -piv_tol:
            rat = (ubB[i] - beta[i]) / (-a)
        else:
            continue
        if rat != rat:
            continue
        if rat < 0.0:
            rat = 0.0
        if rat <= theta + 1e-12:
            if bland:
                if r < 0 or basis[i] < basis[r]:
                    r = i
            elif fabs(a) > best_a:
                best_a = fabs(a)
                r = i
    a = direction * col[r]
    if a > piv_tol:
        rat = (beta[r] - lbB[r]) / a
    else:
        rat = (ubB[r] - beta[r]) / (-a)
    if rat < 0.0:
        rat = 0.0
    return r, rat, a < 0


def dual_leave(double[::1] beta, double[::1] lbB, double[::1] ubB, double tol):
    cdef Py_ssize_t m = beta.shape[0], i, r = 0
    cdef double best = -INFINITY, below, above, v
    cdef bint r_up = False
    for i in range(m):
        below = lbB[i] - beta[i]
        above = beta[i] - ubB[i]
        v = below if below >= above else above
        if v > best:
            best = v
            r = i
            r_up = above > below
    if m == 0 or best <= tol:
        return -1, False
    return r, r_up


def dual_ratio(double[::1] row, double[::1] d, signed char[::1] status,
               unsigned char[::1] movable, bint to_upper, double piv_tol):
    cdef Py_ssize_t n = row.shape[0], j, q = -1
    cdef double sgn = -1.0 if to_upper else 1.0, s, rat, best = INFINITY, best_a = -1.0
    for j in range(n):
        if not movable[j]:
            continue
        s = sgn * row[j]
        if (status[j] == 1 and s < -piv_tol) or (status[j] == 2 and s > piv_tol):
            rat = fabs(d[j]) / fabs(row[j])
            if rat < best:
                best = rat
    if best == INFINITY:
        return -1
    for j in range(n):
        if not movable[j]:
            continue
        s = sgn * row[j]
        if (status[j] == 1 and s < -piv_tol) or (status[j] == 2 and s > piv_tol):
            rat = fabs(d[j]) / fabs(row[j])
            if rat <= best + 1e-12 and fabs(row[j]) > best_a:
                best_a = fabs(row[j])
                q = j
    return q
