"""Reference measures and independent oracles.

Generators produce measures whose dimensions are known in closed form or
computable by brute force; the cover-cost dynamic program provides an exact
set-dimension oracle in dimension 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backends import get_backend
from .errors import ConfigError, NumericError, ResourceCapError
from .estimators import DEFAULT_GRID, _extrapolate
from .measure import AtomicMeasure, ScaleGrid, build_measure

__all__ = [
    "SequenceFamilyParams",
    "IfsDustParams",
    "sequence_measure",
    "closed_form_dim_theta",
    "weak_limit_pair",
    "sphere_shell_measure",
    "ifs_dust_measure",
    "uniform_grid_measure",
    "product_measure",
    "cover_cost_oracle",
    "set_dim_theta_oracle",
    "frostman_like_measure",
]


@dataclass(frozen=True)
class SequenceFamilyParams:
    """Atoms at k**(-lam) with weights k**(-beta), k = 1..K."""

    lam: float
    beta: float
    K: int

    def __post_init__(self):
        if self.lam <= 0:
            raise ConfigError("lam must be positive")
        if self.beta <= 1:
            raise ConfigError("beta must exceed 1 so that total mass is finite")
        if self.K < 10:
            raise ConfigError("K must be at least 10")
        if self.lam * math.log(self.K) > 600:
            raise ConfigError("lam*log(K) too large: atom positions underflow")

    @property
    def s(self) -> float:
        return (self.beta - 1.0) / self.lam

    @property
    def t(self) -> float:
        return self.beta / (self.lam + 1.0)


def sequence_measure(params: SequenceFamilyParams,
                     normalize: bool = False) -> AtomicMeasure:
    """The discrete family: sum of k**(-beta) point masses at k**(-lam),
    accumulating at 0.  The recorded resolution is the last atom gap
    a_K - a_{K+1} (sampling fidelity of the truncation)."""
    k = np.arange(1, params.K + 1, dtype=float)
    atoms = k ** (-params.lam)
    weights = k ** (-params.beta)
    res = params.K ** (-params.lam) - (params.K + 1.0) ** (-params.lam)
    a_K = params.K ** (-params.lam)
    return build_measure(atoms, weights, accumulation_points=[0.0],
                         normalize=normalize, resolution=res,
                         acc_tol=a_K * (1 + 1e-12))


def closed_form_dim_theta(lam: float, beta: float, theta: float) -> float:
    """Closed form for the discrete family: s when s >= 1, otherwise
    max(s, f(theta)) with f(theta) = beta*theta / (beta*theta + lam + 1 - beta)."""
    if not (0.0 < theta <= 1.0):
        raise ConfigError("theta must lie in (0, 1]")
    if lam <= 0 or beta <= 1:
        raise ConfigError("need lam > 0 and beta > 1")
    s = (beta - 1.0) / lam
    if s >= 1.0:
        return s
    f = beta * theta / (beta * theta + lam + 1.0 - beta)
    return max(s, f)


def weak_limit_pair(k: int, K: int, normalize: bool = False):
    """(mu, mu_k) with mu = sum n**-1.5 delta_{1/n} and mu_k replacing the
    tail from n = k by weights n**-1.1; mu_k converges weakly to mu while the
    Minkowski dimensions stay 3/4 and 11/20 apart."""
    if k < 2:
        raise ConfigError("k must be at least 2")
    n = np.arange(1, K + 1, dtype=float)
    atoms = 1.0 / n
    w_full = n ** -1.5
    w_k = np.where(n <= k - 1, n ** -1.5, n ** -1.1)
    res = 1.0 / K - 1.0 / (K + 1.0)
    mu = build_measure(atoms, w_full, accumulation_points=[0.0],
                       normalize=normalize, resolution=res,
                       acc_tol=(1.0 / K) * (1 + 1e-12))
    mu_k = build_measure(atoms, w_k, accumulation_points=[0.0],
                         normalize=normalize, resolution=res,
                         acc_tol=(1.0 / K) * (1 + 1e-12))
    return mu, mu_k


def _circle_points(radius, count, rng):
    offset = rng.uniform(0.0, 2.0 * math.pi)
    ang = offset + 2.0 * math.pi * np.arange(count) / count
    return np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])


def _sphere_points(radius, count, rng):
    # Fibonacci lattice with a seeded random rotation about z
    i = np.arange(count, dtype=float) + 0.5
    z = 1.0 - 2.0 * i / count
    phi = math.pi * (1.0 + math.sqrt(5.0)) * i + rng.uniform(0, 2 * math.pi)
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return radius * np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def sphere_shell_measure(n: int, p: float, K: int, points_per_shell: int,
                         seed: int = 0) -> AtomicMeasure:
    """Concentric spheres of radius k**(-p) carrying their surface measure,
    sampled with point counts proportional to surface area (the outermost
    shell gets ``points_per_shell`` points)."""
    if n not in (2, 3):
        raise ConfigError("sphere shells are implemented for n in {2, 3}")
    if p <= 1.0 / (n - 1):
        raise ConfigError("need p > 1/(n-1) so that total mass is finite")
    if points_per_shell < 6:
        raise ConfigError("points_per_shell must be at least 6")
    rng = np.random.default_rng(seed)
    pts, ws = [], []
    max_spacing = 0.0
    for k in range(1, K + 1):
        rho = k ** (-p)
        if n == 2:
            surf = 2.0 * math.pi * rho
            count = max(6, int(round(points_per_shell * rho)))
            pts.append(_circle_points(rho, count, rng))
            max_spacing = max(max_spacing, 2.0 * math.pi * rho / count)
        else:
            surf = 4.0 * math.pi * rho * rho
            count = max(6, int(round(points_per_shell * rho * rho)))
            pts.append(_sphere_points(rho, count, rng))
            max_spacing = max(max_spacing,
                              math.sqrt(4.0 * math.pi * rho * rho / count))
        ws.append(np.full(len(pts[-1]), surf / len(pts[-1])))
    atoms = np.vstack(pts)
    weights = np.concatenate(ws)
    origin = np.zeros(n)
    return build_measure(atoms, weights, accumulation_points=[origin],
                         resolution=max_spacing,
                         acc_tol=(K ** (-p)) * (1 + 1e-12))


@dataclass(frozen=True)
class IfsDustParams:
    """Equicontractive similarity maps x -> ratio*x + t_i with uniform
    weights; images must be pairwise disjoint at depth 1."""

    ratios: tuple
    translations: tuple
    depth: int

    def __post_init__(self):
        if len(self.ratios) != len(self.translations):
            raise ConfigError("one ratio per translation")
        if len(set(self.ratios)) != 1:
            raise ConfigError("ratios must be equal across maps")
        if not (0.0 < self.ratios[0] < 1.0):
            raise ConfigError("contraction ratio must lie in (0, 1)")
        if self.depth < 1:
            raise ConfigError("depth must be at least 1")

    @property
    def nmaps(self) -> int:
        return len(self.ratios)

    @property
    def similarity_dimension(self) -> float:
        return math.log(self.nmaps) / math.log(1.0 / self.ratios[0])


def square_dust_params(ratio: float = 1.0 / 8.0, depth: int = 6,
                       nmaps: int = 4) -> IfsDustParams:
    """Standard corner dust in the unit square (4 maps) or on a line (2)."""
    if nmaps == 4:
        trans = ((0.0, 0.0), (1.0 - ratio, 0.0), (0.0, 1.0 - ratio),
                 (1.0 - ratio, 1.0 - ratio))
    elif nmaps == 2:
        trans = ((0.0,), (1.0 - ratio,))
    else:
        raise ConfigError("square_dust_params supports 2 or 4 maps")
    return IfsDustParams((ratio,) * nmaps, trans, depth)


def _attractor_box(params: IfsDustParams):
    ratio = params.ratios[0]
    t = np.asarray(params.translations, dtype=float)
    lo, hi = t.min(axis=0), t.max(axis=0) + 1e-12
    for _ in range(80):
        los = ratio * lo + t
        his = ratio * hi + t
        lo, hi = los.min(axis=0), his.max(axis=0)
    return lo, hi


def ifs_dust_measure(params: IfsDustParams) -> AtomicMeasure:
    """Depth-fold images of a base point under all map compositions, with
    uniform weights M**(-depth).  Separation of the depth-1 images is
    checked numerically against the attractor bounding box."""
    ratio = params.ratios[0]
    t = np.asarray(params.translations, dtype=float)
    lo, hi = _attractor_box(params)
    boxes = [(ratio * lo + ti, ratio * hi + ti) for ti in t]
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            (alo, ahi), (blo, bhi) = boxes[i], boxes[j]
            if np.all(ahi >= blo) and np.all(bhi >= alo):
                raise ConfigError("depth-1 images overlap: separation violated")
    base = t[0] / (1.0 - ratio)          # fixed point of the first map
    pts = base[None, :]
    for _ in range(params.depth):
        pts = np.concatenate([ratio * pts + ti for ti in t])
    weights = np.full(pts.shape[0], float(params.nmaps) ** -params.depth)
    res = _min_nn_distance(pts)
    return build_measure(pts, weights, resolution=res)


def _min_nn_distance(pts: np.ndarray) -> float:
    n = pts.shape[0]
    if n < 2:
        return 0.0
    best = math.inf
    step = max(1, 4_000_000 // n)
    for a in range(0, n, step):
        b = min(a + step, n)
        d2 = ((pts[a:b, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        rows = np.arange(a, b)
        d2[rows - a, rows] = math.inf
        best = min(best, float(np.sqrt(d2.min())))
    return best


def uniform_grid_measure(count: int, dim: int = 1) -> AtomicMeasure:
    """Equal weights on a regular grid in [0, 1]^dim."""
    if count < 2:
        raise ConfigError("need at least two atoms")
    side = np.linspace(0.0, 1.0, count)
    if dim == 1:
        pts = side
        res = side[1] - side[0]
    else:
        mesh = np.meshgrid(*([side] * dim), indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        res = side[1] - side[0]
    n = pts.shape[0] if pts.ndim > 1 else len(pts)
    return build_measure(pts, np.full(n, 1.0 / n), resolution=res)


def product_measure(mu: AtomicMeasure, nu: AtomicMeasure,
                    cap: int = 200_000) -> AtomicMeasure:
    """Product measure: concatenated coordinates, multiplied weights.

    Accumulation points combine as acc x atoms, atoms x acc and acc x acc.
    """
    n = mu.natoms * nu.natoms
    if n > cap:
        raise ResourceCapError(
            f"product would have {n} atoms, exceeding the cap {cap}")
    ax = np.repeat(mu.atoms, nu.natoms, axis=0)
    ay = np.tile(nu.atoms, (mu.natoms, 1))
    atoms = np.hstack([ax, ay])
    weights = np.multiply.outer(mu.weights, nu.weights).ravel()

    acc = []
    for p in mu.accumulation_points:
        for q in np.vstack([nu.atoms, nu.accumulation_points]):
            acc.append(np.concatenate([p, q]))
    for p in mu.atoms:
        for q in nu.accumulation_points:
            acc.append(np.concatenate([p, q]))
    res_candidates = [r for r in (mu.resolution, nu.resolution)
                      if r is not None]
    res = min(res_candidates) if res_candidates else None
    out = build_measure(atoms, weights,
                        accumulation_points=acc if acc else None,
                        resolution=res)
    if mu.normalized and nu.normalized:
        out = AtomicMeasure(out.atoms, out.weights, out.accumulation_points,
                            True, out.resolution)
    return out


def cover_cost_oracle(points_1d, s: float, dmin: float, dmax: float,
                      backend=None, want_intervals: bool = False):
    """Exact minimum of sum |U_i|^s over covers of a finite 1-d point set by
    closed intervals with diameters in [dmin, dmax] (dynamic program)."""
    if s < 0:
        raise ConfigError("s must be nonnegative")
    if not (0 < dmin <= dmax):
        raise ConfigError("need 0 < dmin <= dmax")
    p = np.unique(np.asarray(points_1d, dtype=float))
    if p.size == 0:
        raise ConfigError("empty point set")
    be = backend or get_backend()
    return be.cover_dp(p, float(s), float(dmin), float(dmax),
                       want_intervals)


def set_dim_theta_oracle(points_1d, theta: float,
                         grid: ScaleGrid | None = None, threshold: float = 1.0,
                         tol: float = 1e-3, backend=None):
    """Set-level theta-intermediate dimension oracle: for each scale delta,
    the s where the minimal cover cost (diameters in [delta**(1/theta),
    delta]) crosses ``threshold``; window max/min plus the debiased
    regression intercept."""
    if not (0.0 < theta <= 1.0):
        raise ConfigError("theta must lie in (0, 1]")
    grid = grid or DEFAULT_GRID
    p = np.unique(np.asarray(points_1d, dtype=float))
    if p.size > 2 * 10 ** 4:
        raise ResourceCapError("set oracle is desk-scale: at most 2e4 points")
    be = backend or get_backend()
    roots, deltas = [], []
    for delta in grid.scales():
        delta = float(delta)
        dmin = delta ** (1.0 / theta)
        if dmin <= 0.0:
            continue
        cost0 = be.cover_dp(p, 0.0, dmin, delta, False)
        if cost0 <= threshold:
            roots.append(0.0)
            deltas.append(delta)
            continue
        lo, hi = 0.0, 1.0
        while be.cover_dp(p, hi, dmin, delta, False) > threshold:
            hi *= 2.0
            if hi > 64:
                raise NumericError("cover cost does not drop below threshold")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if be.cover_dp(p, mid, dmin, delta, False) > threshold:
                lo = mid
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
        deltas.append(delta)
    if not roots:
        raise NumericError("no usable scales for the set oracle")
    wr = roots[-grid.window:]
    wd = deltas[-grid.window:]
    return {
        "upper": max(wr),
        "lower": min(wr),
        "extrapolated": _extrapolate(wd, wr),
        "per_scale": list(zip(deltas, roots)),
    }


def frostman_like_measure(points_1d, theta: float, s: float,
                          grid: ScaleGrid | None = None,
                          cost_cap: float = 64.0,
                          backend=None) -> AtomicMeasure:
    """Measure built from per-scale minimal covers: every interval U of the
    scale-n cover contributes an atom at its leftmost covered point with
    weight |U|^s.  By construction mu(B(x, |U|)) >= |U|^s at each scale."""
    if not (0.0 < theta <= 1.0):
        raise ConfigError("theta must lie in (0, 1]")
    if s <= 0:
        raise ConfigError("s must be positive")
    grid = grid or DEFAULT_GRID
    p = np.unique(np.asarray(points_1d, dtype=float))
    be = backend or get_backend()
    atoms, weights = [], []
    min_len = math.inf
    used_scales = []
    for delta in grid.scales():
        delta = float(delta)
        dmin = delta ** (1.0 / theta)
        if dmin <= 0.0:
            continue
        cost, starts, lengths = be.cover_dp(p, float(s), dmin, delta, True)
        if cost > cost_cap:
            raise NumericError(
                f"cover cost {cost:.3g} exceeds cap at delta={delta:g}: "
                "s is below the set dimension at this scale")
        atoms.extend(starts.tolist())
        weights.extend((lengths ** s).tolist())
        min_len = min(min_len, float(lengths.min()))
        used_scales.append(delta)
    if not atoms:
        raise NumericError("no usable construction scales")
    mu = build_measure(atoms, weights, resolution=min_len)
    mu.construction_scales = used_scales
    return mu
