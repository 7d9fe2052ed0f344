"""Pure numpy backend: reference implementations of the hot kernels.

Selected at import when the compiled extension is unavailable (or forced via
DIMLAB_BACKEND=python).  Semantics match ``_kernels`` exactly; the compiled
module only changes constants, so cross-backend results agree to rounding.
"""

from __future__ import annotations

import math

import numpy as np

NAME = "python"

_INF = math.inf


def exact_g_sorted(coords, weights, x, r_lo, r_hi, stop_below=-_INF):
    """Exact inf over r in [r_lo, r_hi] of log(mass(B(x,r)))/log(r), 1-d.

    Candidates are r_lo plus every atom distance in (r_lo, r_hi]; zero-mass
    candidates are skipped; +inf when all candidates carry zero mass.
    Returns early with a value <= stop_below once the infimum is known not to
    exceed it (the returned value is then only an upper bound on g).
    """
    i0 = int(np.searchsorted(coords, x - r_hi, side="left"))
    i1 = int(np.searchsorted(coords, x + r_hi, side="right")) - 1
    if i1 < i0:
        return _INF
    m = float(np.sum(weights[i0:i1 + 1]))
    cur = _INF
    log_rlo = math.log(r_lo)
    li, rj = i0, i1
    while li <= rj:
        dl = x - coords[li]
        dr = coords[rj] - x
        d = dl if dl >= dr else dr
        if d <= r_lo:
            break
        if m > 0.0:
            h = math.log(m) / math.log(d)
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
        elif math.log(m) / log_rlo >= cur:
            return cur
    if li <= rj and m > 0.0:
        h = math.log(m) / log_rlo
        if h < cur:
            cur = h
    return cur


def exact_g_points(points, weights, x, r_lo, r_hi, stop_below=-_INF):
    """n-dimensional counterpart of :func:`exact_g_sorted` (brute force)."""
    d = np.sqrt(((points - x) ** 2).sum(axis=1))
    sel = d <= r_hi
    if not sel.any():
        return _INF
    ds = d[sel]
    ws = weights[sel]
    order = np.argsort(ds)[::-1]
    ds = ds[order]
    ws = ws[order]
    m = float(np.sum(ws))
    cur = _INF
    log_rlo = math.log(r_lo)
    i, n = 0, len(ds)
    while i < n:
        dd = ds[i]
        if dd <= r_lo:
            break
        if m > 0.0:
            h = math.log(m) / math.log(dd)
            if h < cur:
                cur = h
                if cur <= stop_below:
                    return cur
        while i < n and ds[i] == dd:
            m -= ws[i]
            i += 1
        if m <= 0.0:
            m = 0.0
            if i >= n:
                break
        elif math.log(m) / log_rlo >= cur:
            return cur
    if i < n and m > 0.0:
        h = math.log(m) / log_rlo
        if h < cur:
            cur = h
    return cur


def masses_points(points, weights, evals, r, chunk=4_000_000):
    """Closed-ball masses at radius r for every evaluation point (n-d)."""
    n = points.shape[0]
    step = max(1, chunk // max(n, 1))
    out = np.empty(evals.shape[0])
    r2 = r * r
    for a in range(0, evals.shape[0], step):
        b = min(a + step, evals.shape[0])
        d2 = ((evals[a:b, None, :] - points[None, :, :]) ** 2).sum(axis=2)
        out[a:b] = (d2 <= r2) @ weights
    return out


def extremum_sorted(coords, weights, xs, bounds, r_lo, r_hi, prune_eps):
    """Max over (bound-descending) query points of the exact infimum, 1-d."""
    best = -_INF
    arg = -1
    scanned = 0
    for i in range(xs.shape[0]):
        b = bounds[i]
        if math.isnan(b) or b == -_INF:
            break
        if arg >= 0 and b <= best - prune_eps:
            break
        scanned += 1
        g = exact_g_sorted(coords, weights, float(xs[i]), r_lo, r_hi, best)
        if g != _INF and g > best:
            best = g
            arg = i
    return best, arg, scanned


def extremum_points(points, weights, evals, bounds, r_lo, r_hi, prune_eps):
    """Batched n-d counterpart of :func:`extremum_sorted`."""
    best = -_INF
    arg = -1
    scanned = 0
    for i in range(evals.shape[0]):
        b = bounds[i]
        if math.isnan(b) or b == -_INF:
            break
        if arg >= 0 and b <= best - prune_eps:
            break
        scanned += 1
        g = exact_g_points(points, weights, evals[i], r_lo, r_hi, best)
        if g != _INF and g > best:
            best = g
            arg = i
    return best, arg, scanned


# -- capacity kernels ----------------------------------------------------------


def capacity_components_sorted(coords, weights, evals, r, rtheta, m):
    """Per evaluation point: inner mass A and outer sum C (1-d sorted atoms).

    A(x) = mass within r; C(x) = sum over |x - a| > rtheta of w*(rtheta/d)^m.
    The s-dependent ring term is computed by :func:`capacity_ring_sorted`.
    """
    n_e = evals.shape[0]
    A = np.empty(n_e)
    C = np.empty(n_e)
    for i in range(n_e):
        x = evals[i]
        lo = np.searchsorted(coords, x - r, side="left")
        hi = np.searchsorted(coords, x + r, side="right")
        A[i] = np.sum(weights[lo:hi])
        lo2 = np.searchsorted(coords, x - rtheta, side="left")
        hi2 = np.searchsorted(coords, x + rtheta, side="right")
        dl = x - coords[:lo2]
        dr = coords[hi2:] - x
        C[i] = (np.sum(weights[:lo2] * (rtheta / dl) ** m)
                + np.sum(weights[hi2:] * (rtheta / dr) ** m))
    return A, C


def capacity_ring_sorted(coords, weights, evals, r, rtheta, s):
    """Ring term B(x; s) = sum over r < |x - a| <= rtheta of w*(r/d)^s."""
    n_e = evals.shape[0]
    B = np.empty(n_e)
    for i in range(n_e):
        x = evals[i]
        lo = np.searchsorted(coords, x - r, side="left")
        hi = np.searchsorted(coords, x + r, side="right")
        lo2 = np.searchsorted(coords, x - rtheta, side="left")
        hi2 = np.searchsorted(coords, x + rtheta, side="right")
        dl = x - coords[lo2:lo]
        dr = coords[hi:hi2] - x
        B[i] = (np.sum(weights[lo2:lo] * (r / dl) ** s)
                + np.sum(weights[hi:hi2] * (r / dr) ** s))
    return B


def capacity_components_points(points, weights, evals, r, rtheta, m):
    """n-d variant of :func:`capacity_components_sorted`."""
    n_e = evals.shape[0]
    A = np.empty(n_e)
    C = np.empty(n_e)
    for i in range(n_e):
        d = np.sqrt(((points - evals[i]) ** 2).sum(axis=1))
        A[i] = np.sum(weights[d <= r])
        out = d > rtheta
        C[i] = np.sum(weights[out] * (rtheta / d[out]) ** m)
    return A, C


def capacity_ring_points(points, weights, evals, r, rtheta, s):
    n_e = evals.shape[0]
    B = np.empty(n_e)
    for i in range(n_e):
        d = np.sqrt(((points - evals[i]) ** 2).sum(axis=1))
        ring = (d > r) & (d <= rtheta)
        B[i] = np.sum(weights[ring] * (r / d[ring]) ** s)
    return B


# -- interval-cover dynamic program --------------------------------------------


def cover_dp(points, s, dmin, dmax, want_choices=False):
    """Minimal sum of |U|^s over closed-interval covers of a sorted point set.

    Interval diameters are constrained to [dmin, dmax].  Exact dynamic
    program over "first uncovered point" states.
    """
    p = points
    n = p.shape[0]
    dp = np.zeros(n + 1)
    choice = np.full(n, -1, dtype=np.int64) if want_choices else None
    cmin = dmin ** s
    for i in range(n - 1, -1, -1):
        k0 = int(np.searchsorted(p, p[i] + dmin, side="right"))
        best = cmin + dp[k0]
        arg = k0 - 1
        jmax = int(np.searchsorted(p, p[i] + dmax, side="right")) - 1
        if jmax >= k0:
            js = np.arange(k0, jmax + 1)
            cand = (p[js] - p[i]) ** s + dp[js + 1]
            jbest = int(np.argmin(cand))
            if cand[jbest] < best:
                best = float(cand[jbest])
                arg = int(js[jbest])
        dp[i] = best
        if want_choices:
            choice[i] = arg
    if not want_choices:
        return float(dp[0])
    # reconstruct intervals as (start, length)
    starts, lengths = [], []
    i = 0
    while i < n:
        j = choice[i]
        length = max(dmin, p[j] - p[i])
        starts.append(float(p[i]))
        lengths.append(float(length))
        i = int(np.searchsorted(p, p[i] + length, side="right"))
    return float(dp[0]), np.asarray(starts), np.asarray(lengths)
