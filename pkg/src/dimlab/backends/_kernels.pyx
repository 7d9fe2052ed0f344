# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: scaling-exponent scans, capacity sums, cover DP.

Mirrors backends/pure.py; the Python glue chooses one module at import.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, log, pow, sqrt

cnp.import_array()

NAME = "compiled"


cdef inline Py_ssize_t _bisect_left(const double[::1] a, double v) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _bisect_right(const double[::1] a, double v) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef double _g_sorted(const double[::1] coords, const double[::1] weights,
                      double x, double r_lo, double r_hi,
                      double stop_below) noexcept nogil:
    cdef Py_ssize_t i0 = _bisect_left(coords, x - r_hi)
    cdef Py_ssize_t i1 = _bisect_right(coords, x + r_hi) - 1
    if i1 < i0:
        return INFINITY
    cdef double m = 0.0
    cdef Py_ssize_t k
    for k in range(i0, i1 + 1):
        m += weights[k]
    cdef double cur = INFINITY
    cdef double log_rlo = log(r_lo)
    cdef Py_ssize_t li = i0, rj = i1
    cdef double dl, dr, d, h
    while li <= rj:
        dl = x - coords[li]
        dr = coords[rj] - x
        d = dl if dl >= dr else dr
        if d <= r_lo:
            break
        if m > 0.0:
            h = log(m) / log(d)
            if h < cur:
                cur = h
                if cur <= stop_below:
                    return cur
        if dl == d:
            while li <= rj and x - coords[li] == d:
                m -= weights[li]
                li += 1
        if dr == d and li <= rj:
            while rj >= li and coords[rj] - x == d:
                m -= weights[rj]
                rj -= 1
        if m <= 0.0:
            m = 0.0
            if li > rj:
                break
        elif log(m) / log_rlo >= cur:
            return cur
    if li <= rj and m > 0.0:
        h = log(m) / log_rlo
        if h < cur:
            cur = h
    return cur


def exact_g_sorted(const double[::1] coords, const double[::1] weights,
                   double x, double r_lo, double r_hi,
                   double stop_below=-INFINITY):
    """Exact inf over r in [r_lo, r_hi] of log(mass(B(x,r)))/log(r), 1-d."""
    return _g_sorted(coords, weights, x, r_lo, r_hi, stop_below)


def extremum_sorted(const double[::1] coords, const double[::1] weights,
                    const double[::1] xs, const double[::1] bounds,
                    double r_lo, double r_hi, double prune_eps):
    """Max over the (bound-descending) query points of the exact per-point
    infimum; stops once bounds drop below the running max."""
    cdef double best = -INFINITY
    cdef Py_ssize_t arg = -1, i, n = xs.shape[0]
    cdef Py_ssize_t scanned = 0
    cdef double g
    with nogil:
        for i in range(n):
            if bounds[i] != bounds[i] or bounds[i] == -INFINITY:
                break
            if arg >= 0 and bounds[i] <= best - prune_eps:
                break
            scanned += 1
            g = _g_sorted(coords, weights, xs[i], r_lo, r_hi, best)
            if g != INFINITY and g > best:
                best = g
                arg = i
    return best, arg, scanned


from libc.stdlib cimport free, malloc


cdef int _dw_cmp(const void* a, const void* b) noexcept nogil:
    # sort (distance, weight) pairs by distance DESCENDING
    cdef double da = (<const double*>a)[0]
    cdef double db = (<const double*>b)[0]
    if da > db:
        return -1
    if da < db:
        return 1
    return 0


from libc.stdlib cimport qsort


cdef double _g_points(const double[:, ::1] points, const double[::1] weights,
                      const double* x, double r_lo, double r_hi,
                      double stop_below, double* buf) noexcept nogil:
    """Exact per-point scan in n dimensions; ``buf`` holds 2*N doubles."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t dim = points.shape[1]
    cdef Py_ssize_t cnt = 0, i, j
    cdef double acc, diff, r2 = r_hi * r_hi
    for i in range(n):
        acc = 0.0
        for j in range(dim):
            diff = points[i, j] - x[j]
            acc += diff * diff
        if acc <= r2:
            buf[2 * cnt] = sqrt(acc)
            buf[2 * cnt + 1] = weights[i]
            cnt += 1
    if cnt == 0:
        return INFINITY
    qsort(buf, cnt, 2 * sizeof(double), _dw_cmp)
    cdef double m = 0.0
    for i in range(cnt):
        m += buf[2 * i + 1]
    cdef double cur = INFINITY
    cdef double log_rlo = log(r_lo)
    cdef double dd, h
    i = 0
    while i < cnt:
        dd = buf[2 * i]
        if dd <= r_lo:
            break
        if m > 0.0:
            h = log(m) / log(dd)
            if h < cur:
                cur = h
                if cur <= stop_below:
                    return cur
        while i < cnt and buf[2 * i] == dd:
            m -= buf[2 * i + 1]
            i += 1
        if m <= 0.0:
            m = 0.0
            if i >= cnt:
                break
        elif log(m) / log_rlo >= cur:
            return cur
    if i < cnt and m > 0.0:
        h = log(m) / log_rlo
        if h < cur:
            cur = h
    return cur


def exact_g_points(const double[:, ::1] points, const double[::1] weights,
                   const double[::1] x, double r_lo, double r_hi,
                   double stop_below=-INFINITY):
    """n-dimensional exact scan: collect in-ball atoms, walk distances desc."""
    cdef double* buf = <double*>malloc(2 * points.shape[0] * sizeof(double))
    if buf == NULL:
        raise MemoryError
    try:
        return _g_points(points, weights, &x[0], r_lo, r_hi, stop_below, buf)
    finally:
        free(buf)


def extremum_points(const double[:, ::1] points, const double[::1] weights,
                    const double[:, ::1] evals, const double[::1] bounds,
                    double r_lo, double r_hi, double prune_eps):
    """Batched n-d counterpart of :func:`extremum_sorted`."""
    cdef double best = -INFINITY
    cdef Py_ssize_t arg = -1, i, n = evals.shape[0]
    cdef Py_ssize_t scanned = 0
    cdef double g
    cdef double* buf = <double*>malloc(2 * points.shape[0] * sizeof(double))
    if buf == NULL:
        raise MemoryError
    try:
        with nogil:
            for i in range(n):
                if bounds[i] != bounds[i] or bounds[i] == -INFINITY:
                    break
                if arg >= 0 and bounds[i] <= best - prune_eps:
                    break
                scanned += 1
                g = _g_points(points, weights, &evals[i, 0], r_lo, r_hi,
                              best, buf)
                if g != INFINITY and g > best:
                    best = g
                    arg = i
    finally:
        free(buf)
    return best, arg, scanned


def masses_points_grid(const double[:, ::1] points, const double[::1] weights,
                       const double[:, ::1] evals, double r, double cell,
                       const long long[::1] cell_keys_sorted,
                       const long long[::1] atom_order,
                       const long long[::1] group_start,
                       const long long[:, ::1] group_cell,
                       const double[::1] group_mass,
                       const long long[::1] base, long long side):
    """Closed-ball masses at radius r (<= cell) via a cell grid of size
    ``cell``; cells fully inside a ball contribute their precomputed mass."""
    cdef Py_ssize_t n_e = evals.shape[0]
    cdef Py_ssize_t dim = points.shape[1]
    cdef Py_ssize_t n_groups = group_start.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n_e)
    cdef double[::1] ov = out
    cdef double r2 = r * r
    cdef Py_ssize_t e, j, g, a, idx
    cdef long long key
    cdef long long cx[3]
    cdef long long off0
    cdef double lo, hi, mn, mx, s_mn, s_mx, diff, acc, xd
    cdef Py_ssize_t noff = 1
    cdef Py_ssize_t p
    for p in range(dim):
        noff *= 3
    cdef long long digits[3]
    cdef Py_ssize_t lo_g, hi_g, mid
    for e in range(n_e):
        for j in range(dim):
            cx[j] = <long long>((evals[e, j]) / cell + 1048576.0) - 1048576 - base[j]
        acc = 0.0
        for g in range(noff):
            # decode neighbour offset in {-1,0,1}^dim
            idx = g
            for j in range(dim):
                digits[j] = idx % 3 - 1
                idx //= 3
            key = 0
            for j in range(dim):
                off0 = cx[j] + digits[j]
                if off0 < 0 or off0 >= side:
                    key = -1
                    break
                key = key * side + off0
            if key < 0:
                continue
            # binary search for the cell group
            lo_g = 0
            hi_g = n_groups
            while lo_g < hi_g:
                mid = (lo_g + hi_g) // 2
                if cell_keys_sorted[mid] < key:
                    lo_g = mid + 1
                else:
                    hi_g = mid
            if lo_g >= n_groups or cell_keys_sorted[lo_g] != key:
                continue
            # bounds test: min/max distance from eval point to the cell box
            s_mn = 0.0
            s_mx = 0.0
            for j in range(dim):
                lo = (group_cell[lo_g, j] + base[j]) * cell
                hi = lo + cell
                xd = evals[e, j]
                mn = 0.0
                if lo - xd > mn:
                    mn = lo - xd
                if xd - hi > mn:
                    mn = xd - hi
                mx = xd - lo
                if hi - xd > mx:
                    mx = hi - xd
                s_mn += mn * mn
                s_mx += mx * mx
            if s_mn > r2:
                continue
            if s_mx <= r2:
                acc += group_mass[lo_g]
                continue
            for a in range(group_start[lo_g], group_start[lo_g + 1]):
                idx = atom_order[a]
                s_mn = 0.0
                for j in range(dim):
                    diff = points[idx, j] - evals[e, j]
                    s_mn += diff * diff
                if s_mn <= r2:
                    acc += weights[idx]
        ov[e] = acc
    return out


def capacity_components_sorted(const double[::1] coords, const double[::1] weights,
                               const double[::1] evals, double r, double rtheta,
                               double m_exp):
    cdef Py_ssize_t n_e = evals.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] A = np.empty(n_e)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] C = np.empty(n_e)
    cdef double[::1] Av = A
    cdef double[::1] Cv = C
    cdef Py_ssize_t i, k, lo, hi, lo2, hi2, n = coords.shape[0]
    cdef double x, a, c
    for i in range(n_e):
        x = evals[i]
        lo = _bisect_left(coords, x - r)
        hi = _bisect_right(coords, x + r)
        a = 0.0
        for k in range(lo, hi):
            a += weights[k]
        lo2 = _bisect_left(coords, x - rtheta)
        hi2 = _bisect_right(coords, x + rtheta)
        c = 0.0
        for k in range(lo2):
            c += weights[k] * pow(rtheta / (x - coords[k]), m_exp)
        for k in range(hi2, n):
            c += weights[k] * pow(rtheta / (coords[k] - x), m_exp)
        Av[i] = a
        Cv[i] = c
    return A, C


def capacity_ring_sorted(const double[::1] coords, const double[::1] weights,
                         const double[::1] evals, double r, double rtheta,
                         double s):
    cdef Py_ssize_t n_e = evals.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] B = np.empty(n_e)
    cdef double[::1] Bv = B
    cdef Py_ssize_t i, k, lo, hi, lo2, hi2
    cdef double x, b
    for i in range(n_e):
        x = evals[i]
        lo = _bisect_left(coords, x - r)
        hi = _bisect_right(coords, x + r)
        lo2 = _bisect_left(coords, x - rtheta)
        hi2 = _bisect_right(coords, x + rtheta)
        b = 0.0
        for k in range(lo2, lo):
            b += weights[k] * pow(r / (x - coords[k]), s)
        for k in range(hi, hi2):
            b += weights[k] * pow(r / (coords[k] - x), s)
        Bv[i] = b
    return B


def cover_dp(const double[::1] points, double s, double dmin, double dmax,
             bint want_choices=False):
    """Exact interval-cover DP; see backends.pure.cover_dp."""
    cdef Py_ssize_t n = points.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dp = np.zeros(n + 1)
    cdef double[::1] dpv = dp
    cdef cnp.ndarray[cnp.int64_t, ndim=1] choice = np.full(n, -1, dtype=np.int64)
    cdef long long[::1] chv = choice
    cdef double cmin = pow(dmin, s)
    cdef Py_ssize_t i, j, k0, jmax, arg
    cdef double best, cand, L
    for i in range(n - 1, -1, -1):
        k0 = _bisect_right(points, points[i] + dmin)
        best = cmin + dpv[k0]
        arg = k0 - 1
        jmax = _bisect_right(points, points[i] + dmax) - 1
        for j in range(k0, jmax + 1):
            L = points[j] - points[i]
            cand = pow(L, s) + dpv[j + 1]
            if cand < best:
                best = cand
                arg = j
        dpv[i] = best
        chv[i] = arg
    if not want_choices:
        return float(dpv[0])
    starts = []
    lengths = []
    cdef double length
    i = 0
    while i < n:
        j = chv[i]
        length = points[j] - points[i]
        if dmin > length:
            length = dmin
        starts.append(float(points[i]))
        lengths.append(float(length))
        i = _bisect_right(points, points[i] + length)
    return float(dpv[0]), np.asarray(starts), np.asarray(lengths)
