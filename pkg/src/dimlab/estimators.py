"""Multi-scale dimension estimators for atomic measures.

The central quantity is the per-scale extremum

    E(delta) = max over support points x of
               inf over r in [Phi(delta), delta] of log mu(B(x,r)) / log r,

whose window max/min over the smallest usable scales stand in for the
limsup/liminf in the definitions of the theta-intermediate (Phi-intermediate)
dimensions.  A linear regression of E(delta) against 1/log(1/delta) is
reported alongside: multiplicative constants enter the log-ratio as
O(1/log(1/delta)), so the intercept removes the leading finite-scale bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backends import get_backend
from .errors import ConfigError, NumericError
from .measure import AtomicMeasure, ScaleGrid

__all__ = [
    "PhiShape",
    "ScaleValue",
    "ThetaEstimate",
    "MinkowskiEstimate",
    "DimensionProfile",
    "scaling_exponent",
    "scale_extremum",
    "dim_theta",
    "dim_phi",
    "dim_minkowski",
    "local_dims",
    "dim_hausdorff_upper",
    "dim_assouad",
    "dimension_profile",
]

DEFAULT_GRID = ScaleGrid()
ACC_SKIP_FACTOR = 16.0
_PRUNE_EPS = 1e-12


@dataclass(frozen=True)
class PhiShape:
    """Lower end of the radius range probed at outer scale delta.

    kind "power":    Phi(delta) = delta**(1/theta), theta in (0, 1]
    kind "log_slow": Phi(delta) = delta / (-log delta)  (slowly varying;
                     recovers the Minkowski dimension)
    """

    kind: str
    theta: float | None = None

    @staticmethod
    def power(theta: float) -> "PhiShape":
        if not (0.0 < theta <= 1.0):
            raise ConfigError("theta must lie in (0, 1]")
        return PhiShape("power", float(theta))

    @staticmethod
    def log_slow() -> "PhiShape":
        return PhiShape("log_slow", None)

    def value(self, delta: float) -> float:
        if not (0.0 < delta < 1.0):
            raise ConfigError("scales must satisfy 0 < delta < 1")
        if self.kind == "power":
            return delta ** (1.0 / self.theta)
        if self.kind == "log_slow":
            if delta >= math.exp(-1.0):
                raise ConfigError("log_slow needs delta < 1/e so Phi <= delta")
            return delta / (-math.log(delta))
        raise ConfigError(f"unknown Phi kind {self.kind!r}")

    def is_admissible(self) -> bool:
        """Phi(delta)/delta -> 0 (symbolic check by kind)."""
        if self.kind == "power":
            return self.theta < 1.0
        return True

    def label(self) -> str:
        if self.kind == "power":
            return f"power({self.theta:g})"
        return "log_slow"


@dataclass
class ScaleValue:
    """Diagnostics for one grid scale of one estimate."""

    j: int
    delta: float
    status: str              # ok | guard | underflow | empty
    value: float = math.nan
    argmax: tuple | None = None
    n_empty: int = 0
    n_acc_skipped: int = 0
    n_scanned: int = 0


@dataclass
class ThetaEstimate:
    label: str
    mode: str
    estimate: float
    extrapolated: float
    lower: float
    upper: float
    window_js: list[int]
    per_scale: list[ScaleValue]
    warnings: dict = field(default_factory=dict)

    def window_values(self) -> list[float]:
        byj = {sv.j: sv.value for sv in self.per_scale}
        return [byj[j] for j in self.window_js]


@dataclass
class MinkowskiEstimate:
    theta_path: ThetaEstimate
    single_radius: ThetaEstimate
    estimate: float
    extrapolated: float
    agreement: float


def _eval_points(mu: AtomicMeasure, eval_points):
    if eval_points is not None:
        pts = np.asarray(eval_points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        n_atom_evals = pts.shape[0]
        acc_mask = np.zeros(pts.shape[0], dtype=bool)
        return pts, acc_mask
    pts = mu.support_points()
    acc_mask = np.zeros(pts.shape[0], dtype=bool)
    acc_mask[mu.natoms:] = True
    return pts, acc_mask


def _acc_keep_mask(mu, acc_mask, delta, acc_skip_factor):
    """Accumulation points are skipped at scales below ``factor`` times their
    nearest-atom gap: the visible ball there only sees the truncation edge."""
    keep = np.ones(acc_mask.shape[0], dtype=bool)
    if acc_mask.any() and acc_skip_factor > 0:
        gaps = mu.accumulation_gaps()
        skipped = delta < acc_skip_factor * gaps
        keep[np.where(acc_mask)[0]] = ~skipped
    return keep


def _weights_for(mu: AtomicMeasure, raw_mass: bool):
    return mu.weights if raw_mass else mu.normalized_weights()


def scaling_exponent(mu: AtomicMeasure, x, delta: float,
                     phi: PhiShape | None = None, theta: float | None = None,
                     raw_mass: bool = False, backend=None) -> float:
    """g(x, delta) = inf over r in [Phi(delta), delta] of log mu(B(x,r))/log r.

    The infimum is exact: over each constancy interval of the ball-mass step
    function it is attained at the left endpoint, so only the breakpoint
    radii are evaluated.  Returns +inf when every candidate has zero mass.
    """
    if phi is None:
        phi = PhiShape.power(1.0 if theta is None else theta)
    if not (0.0 < delta < 1.0):
        raise ConfigError("need 0 < delta < 1 (log r sign flips at 1)")
    r_lo = phi.value(delta)
    if r_lo <= 0.0:
        raise NumericError("Phi(delta) underflowed to zero")
    be = backend or get_backend()
    w = _weights_for(mu, raw_mass)
    xq = np.ascontiguousarray(np.asarray(x, dtype=float).reshape(-1))
    if xq.shape[0] != mu.ndim:
        raise ConfigError("query point dimension mismatch")
    if mu.ndim == 1:
        return be.exact_g_sorted(mu.coords1d, w, float(xq[0]), r_lo, delta)
    return be.exact_g_points(mu.atoms, w, xq, r_lo, delta)


@dataclass
class ScaleExtremum:
    value: float
    argmax: tuple
    n_empty: int
    n_acc_skipped: int
    n_scanned: int


def _masses_1d(coords, prefix, xs, r):
    lo = np.searchsorted(coords, xs - r, side="left")
    hi = np.searchsorted(coords, xs + r, side="right")
    return prefix[hi] - prefix[lo]


def _extremum(mu, evals, acc_mask, r_lo, r_hi, w, backend,
              acc_skip_factor) -> ScaleExtremum:
    keep = _acc_keep_mask(mu, acc_mask, r_hi, acc_skip_factor)
    n_acc_skipped = int((~keep).sum())
    pts = evals[keep]
    if pts.shape[0] == 0:
        raise NumericError("no evaluation points left at this scale")

    if mu.ndim == 1:
        coords = mu.coords1d
        prefix = np.concatenate(([0.0], np.cumsum(w)))
        xs = pts[:, 0]
        m_hi = _masses_1d(coords, prefix, xs, r_hi)
        m_lo = _masses_1d(coords, prefix, xs, r_lo)
    else:
        m_hi, m_lo = backend.masses_points_multi(mu.atoms, w, pts,
                                                 [r_hi, r_lo])

    log_rhi = math.log(r_hi)
    log_rlo = math.log(r_lo)
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = np.where(m_hi > 0, np.log(np.maximum(m_hi, 1e-320)) / log_rhi,
                         -np.inf)
        b2 = np.where(m_lo > 0, np.log(np.maximum(m_lo, 1e-320)) / log_rlo,
                      np.inf)
    n_empty = int((m_hi <= 0).sum())
    bound = np.minimum(bound, b2)
    bound[m_hi <= 0] = -np.inf

    order = np.argsort(-bound, kind="stable")
    ordered_bounds = np.ascontiguousarray(bound[order])
    if mu.ndim == 1:
        xs = np.ascontiguousarray(pts[order, 0])
        best, arg, scanned = backend.extremum_sorted(
            mu.coords1d, w, xs, ordered_bounds, r_lo, r_hi, _PRUNE_EPS)
    else:
        evals_ord = np.ascontiguousarray(pts[order])
        best, arg, scanned = backend.extremum_points(
            mu.atoms, w, evals_ord, ordered_bounds, r_lo, r_hi, _PRUNE_EPS)
    if arg < 0:
        raise NumericError(
            "all evaluation points yielded +infinity "
            "(scale range invalid for this truncation)")
    return ScaleExtremum(best, tuple(pts[order[arg]]), n_empty, n_acc_skipped,
                         scanned)


def scale_extremum(mu: AtomicMeasure, delta: float, phi: PhiShape | None = None,
                   eval_points=None, raw_mass: bool = False,
                   acc_skip_factor: float = ACC_SKIP_FACTOR,
                   backend=None) -> ScaleExtremum:
    """E(delta) = max over evaluation points of the scaling exponent.

    Finite values only; +inf markers (zero-mass candidate sets) are excluded
    and counted.  Raises NumericError when every point yields +inf.
    """
    if phi is None:
        phi = PhiShape.power(1.0)
    if not (0.0 < delta < 1.0):
        raise ConfigError("need 0 < delta < 1")
    r_lo = phi.value(delta)
    if r_lo <= 0.0:
        raise NumericError("Phi(delta) underflowed to zero")
    be = backend or get_backend()
    w = _weights_for(mu, raw_mass)
    evals, acc_mask = _eval_points(mu, eval_points)
    return _extremum(mu, evals, acc_mask, r_lo, delta, w, be, acc_skip_factor)


def _extrapolate(deltas, values):
    """Intercept of values regressed on u = 1/log(1/delta) (OLS)."""
    if len(values) < 2:
        return float(values[0]) if values else math.nan
    u = 1.0 / np.log(1.0 / np.asarray(deltas))
    v = np.asarray(values)
    A = np.vstack([u, np.ones_like(u)]).T
    sol, *_ = np.linalg.lstsq(A, v, rcond=None)
    return float(sol[1])


def _phi_estimate(mu: AtomicMeasure, phi: PhiShape, grid: ScaleGrid,
                  raw_mass=False, eval_points=None,
                  acc_skip_factor=ACC_SKIP_FACTOR, backend=None,
                  label=None) -> ThetaEstimate:
    """Shared engine of dim_theta / dim_phi / dim_minkowski."""
    be = backend or get_backend()
    per_scale: list[ScaleValue] = []
    ok: list[ScaleValue] = []
    warnings = {"guard_rejected": 0, "underflow": 0, "empty_scales": 0,
                "empty_points": 0, "acc_skipped": 0}
    for j, delta in zip(grid.js(), grid.scales()):
        try:
            r_lo = phi.value(float(delta))
        except ConfigError:
            raise
        if r_lo <= 0.0:
            per_scale.append(ScaleValue(int(j), float(delta), "underflow"))
            warnings["underflow"] += 1
            continue
        if mu.resolution is not None and r_lo < mu.resolution:
            per_scale.append(ScaleValue(int(j), float(delta), "guard"))
            warnings["guard_rejected"] += 1
            continue
        try:
            ex = _extremum(mu, *_eval_points(mu, eval_points), r_lo,
                           float(delta),
                           _weights_for(mu, raw_mass), be, acc_skip_factor)
        except NumericError:
            per_scale.append(ScaleValue(int(j), float(delta), "empty"))
            warnings["empty_scales"] += 1
            continue
        sv = ScaleValue(int(j), float(delta), "ok", ex.value, ex.argmax,
                        ex.n_empty, ex.n_acc_skipped, ex.n_scanned)
        warnings["empty_points"] += ex.n_empty
        warnings["acc_skipped"] += ex.n_acc_skipped
        per_scale.append(sv)
        ok.append(sv)
    if not ok:
        raise NumericError(
            f"no usable scales for {phi.label()} on this grid "
            "(resolution guard or underflow rejected all)")
    win = ok[-grid.window:]
    if len(win) < grid.window:
        warnings["window_truncated"] = grid.window - len(win)
    vals = [sv.value for sv in win]
    upper = max(vals)
    lower = min(vals)
    extrap = _extrapolate([sv.delta for sv in win], vals)
    return ThetaEstimate(label or phi.label(), "both", math.nan, extrap,
                         lower, upper, [sv.j for sv in win], per_scale,
                         warnings)


def _with_mode(est: ThetaEstimate, mode: str) -> ThetaEstimate:
    if mode not in ("upper", "lower"):
        raise ConfigError("mode must be 'upper' or 'lower'")
    est.mode = mode
    est.estimate = est.upper if mode == "upper" else est.lower
    return est


def dim_theta(mu: AtomicMeasure, theta: float, grid: ScaleGrid | None = None,
              mode: str = "upper", **kw) -> ThetaEstimate:
    """theta-intermediate dimension estimate (upper: window max of E;
    lower: window min), theta in (0, 1].

    Scales whose inner radius delta**(1/theta) falls below the measure's
    declared resolution are rejected (truncation guard) and the window moves
    to the smallest surviving scales.
    """
    grid = grid or DEFAULT_GRID
    phi = PhiShape.power(theta)
    est = _phi_estimate(mu, phi, grid, label=f"theta={theta:g}", **kw)
    return _with_mode(est, mode)


def dim_phi(mu: AtomicMeasure, phi: PhiShape, grid: ScaleGrid | None = None,
            mode: str = "upper", **kw) -> ThetaEstimate:
    """Phi-intermediate dimension estimate for an admissible shape."""
    grid = grid or DEFAULT_GRID
    est = _phi_estimate(mu, phi, grid, **kw)
    return _with_mode(est, mode)


def dim_minkowski(mu: AtomicMeasure, grid: ScaleGrid | None = None,
                  mode: str = "upper", raw_mass=False,
                  acc_skip_factor=ACC_SKIP_FACTOR,
                  backend=None) -> MinkowskiEstimate:
    """Minkowski dimension via the theta=1 path and the direct single-radius
    form max_x log mu(B(x, delta))/log delta; the two must agree."""
    grid = grid or DEFAULT_GRID
    theta_path = _with_mode(
        _phi_estimate(mu, PhiShape.power(1.0), grid, raw_mass=raw_mass,
                      acc_skip_factor=acc_skip_factor, backend=backend,
                      label="minkowski"), mode)

    be = backend or get_backend()
    w = _weights_for(mu, raw_mass)
    evals, acc_mask = _eval_points(mu, None)
    per_scale: list[ScaleValue] = []
    ok = []
    for j, delta in zip(grid.js(), grid.scales()):
        delta = float(delta)
        if mu.resolution is not None and delta < mu.resolution:
            per_scale.append(ScaleValue(int(j), delta, "guard"))
            continue
        keep = _acc_keep_mask(mu, acc_mask, delta, acc_skip_factor)
        pts = evals[keep]
        if mu.ndim == 1:
            prefix = np.concatenate(([0.0], np.cumsum(w)))
            m = _masses_1d(mu.coords1d, prefix, pts[:, 0], delta)
        else:
            m = be.masses_points_multi(mu.atoms, w, pts, [delta])[0]
        pos = m > 0
        if not pos.any():
            per_scale.append(ScaleValue(int(j), delta, "empty"))
            continue
        h = np.log(m[pos]) / math.log(delta)
        k = int(np.argmax(h))
        sv = ScaleValue(int(j), delta, "ok", float(h[k]),
                        tuple(pts[pos][k]), int((~pos).sum()),
                        int((~keep).sum()), int(pos.sum()))
        per_scale.append(sv)
        ok.append(sv)
    if not ok:
        raise NumericError("single-radius path found no usable scales")
    win = ok[-grid.window:]
    vals = [sv.value for sv in win]
    single = ThetaEstimate("minkowski-single", mode, math.nan,
                           _extrapolate([sv.delta for sv in win], vals),
                           min(vals), max(vals), [sv.j for sv in win],
                           per_scale)
    single = _with_mode(single, mode)
    agreement = abs(single.estimate - theta_path.estimate)
    return MinkowskiEstimate(theta_path, single, theta_path.estimate,
                             theta_path.extrapolated, agreement)


def local_dims(mu: AtomicMeasure, x, grid: ScaleGrid | None = None,
               raw_mass=False):
    """(lower, upper) local-dimension surrogates of log mu(B(x,r))/log r
    over the window scales, plus the per-scale values and the debiased
    (extrapolated) lower estimate."""
    grid = grid or DEFAULT_GRID
    w = _weights_for(mu, raw_mass)
    xq = np.asarray(x, dtype=float).reshape(-1)
    vals, deltas = [], []
    for delta in grid.scales():
        delta = float(delta)
        if mu.resolution is not None and delta < mu.resolution:
            continue
        m = None
        if mu.ndim == 1:
            prefix = np.concatenate(([0.0], np.cumsum(w)))
            m = float(_masses_1d(mu.coords1d, prefix,
                                 np.array([xq[0]]), delta)[0])
        else:
            d2 = ((mu.atoms - xq) ** 2).sum(axis=1)
            m = float(np.sum(w[d2 <= delta * delta]))
        if m > 0:
            vals.append(math.log(m) / math.log(delta))
            deltas.append(delta)
    if not vals:
        raise NumericError("point sees no mass at any usable scale")
    wv = vals[-grid.window:]
    wd = deltas[-grid.window:]
    return {
        "lower": min(wv),
        "upper": max(wv),
        "extrapolated": _extrapolate(wd, wv),
        "per_scale": list(zip(wd, wv)),
    }


def dim_hausdorff_upper(mu: AtomicMeasure, grid: ScaleGrid | None = None,
                        quantile_mass: float = 1.0 - 1e-3,
                        use_extrapolated: bool = False,
                        raw_mass=False, backend=None) -> float:
    """Upper Hausdorff dimension surrogate: the smallest s such that atoms of
    total (normalized) mass >= quantile_mass have lower local estimate <= s.

    ``use_extrapolated`` replaces each atom's window-min by the debiased
    regression intercept (clamped at 0), which converges much faster for
    isolated atoms.
    """
    if not (0.0 < quantile_mass <= 1.0):
        raise ConfigError("quantile_mass must lie in (0, 1]")
    grid = grid or DEFAULT_GRID
    be = backend or get_backend()
    w = _weights_for(mu, raw_mass)
    deltas = [float(d) for d in grid.scales()
              if mu.resolution is None or d >= mu.resolution]
    if not deltas:
        raise NumericError("degenerate grid: no usable scales")
    deltas = deltas[-grid.window:]
    hs = []
    prefix = (np.concatenate(([0.0], np.cumsum(w)))
              if mu.ndim == 1 else None)
    for delta in deltas:
        if mu.ndim == 1:
            m = _masses_1d(mu.coords1d, prefix, mu.coords1d, delta)
        else:
            m = be.masses_points_multi(mu.atoms, w, mu.atoms, [delta])[0]
        hs.append(np.log(m) / math.log(delta))
    H = np.vstack(hs)                      # scales x atoms
    if use_extrapolated:
        u = 1.0 / np.log(1.0 / np.asarray(deltas))
        A = np.vstack([u, np.ones_like(u)]).T
        sol, *_ = np.linalg.lstsq(A, H, rcond=None)
        stat = np.maximum(sol[1], 0.0)
    else:
        stat = H.min(axis=0)
    order = np.argsort(stat, kind="stable")
    cum = np.cumsum(mu.normalized_weights()[order])
    k = int(np.searchsorted(cum, quantile_mass, side="left"))
    k = min(k, len(order) - 1)
    return float(stat[order[k]])


def dim_assouad(mu: AtomicMeasure, grid: ScaleGrid | None = None,
                inner_ratio_range: float = 256.0, raw_mass=False,
                acc_skip_factor=ACC_SKIP_FACTOR, backend=None):
    """Two-scale ball-mass ratio exponent:

        sup over x and scale pairs r < R <= r * inner_ratio_range of
        log(mu(B(x,R))/mu(B(x,r))) / log(R/r),

    with r in the window of usable scales and R anywhere in the usable grid.
    Evaluation points with zero inner mass are skipped with a warning.
    """
    grid = grid or DEFAULT_GRID
    be = backend or get_backend()
    w = _weights_for(mu, raw_mass)
    deltas = [float(d) for d in grid.scales()
              if mu.resolution is None or d >= mu.resolution]
    if len(deltas) < 2:
        raise NumericError("need at least two usable scales for ratio pairs")
    evals, acc_mask = _eval_points(mu, None)
    keep = _acc_keep_mask(mu, acc_mask, deltas[-1], acc_skip_factor)
    pts = evals[keep]
    masses = []
    prefix = (np.concatenate(([0.0], np.cumsum(w)))
              if mu.ndim == 1 else None)
    if mu.ndim == 1:
        for d in deltas:
            masses.append(_masses_1d(mu.coords1d, prefix, pts[:, 0], d))
    else:
        masses = be.masses_points_multi(mu.atoms, w, pts, deltas)
    masses = np.vstack(masses)            # scales (desc delta) x points
    window_idx = range(max(0, len(deltas) - grid.window), len(deltas))
    best = 0.0
    arg = None
    skipped = 0
    for ri in window_idx:
        r = deltas[ri]
        for Ri in range(ri):
            R = deltas[Ri]
            if R > r * inner_ratio_range or R > 1.0:
                continue
            mr = masses[ri]
            mR = masses[Ri]
            ok = mr > 0
            skipped += int((~ok).sum())
            if not ok.any():
                continue
            expo = np.log(mR[ok] / mr[ok]) / math.log(R / r)
            k = int(np.argmax(expo))
            if expo[k] > best:
                best = float(expo[k])
                arg = (tuple(pts[ok][k]), r, R)
    return {"estimate": best, "argmax": arg, "skipped_zero_inner": skipped}


@dataclass
class DimensionProfile:
    """Map theta -> (upper, lower, debiased) with per-scale diagnostics."""

    thetas: list[float]
    upper: list[float]
    lower: list[float]
    extrapolated: list[float]
    window_used: int
    js: list[int]
    per_scale: np.ndarray        # thetas x grid scales, NaN where rejected
    estimates: list[ThetaEstimate]

    def to_csv_rows(self, closed_form=None):
        head = ["theta", "upper", "lower", "extrapolated"]
        if closed_form is not None:
            head.append("closed_form")
        head += [f"E_{j}" for j in self.js]
        rows = [head]
        for i, th in enumerate(self.thetas):
            row = [th, self.upper[i], self.lower[i], self.extrapolated[i]]
            if closed_form is not None:
                row.append(closed_form[i])
            row += list(self.per_scale[i])
            rows.append(row)
        return rows

    def to_json_dict(self):
        return {
            "thetas": self.thetas,
            "upper": self.upper,
            "lower": self.lower,
            "extrapolated": self.extrapolated,
            "window_used": self.window_used,
            "grid_js": self.js,
            "per_scale": [[None if math.isnan(v) else v for v in row]
                          for row in self.per_scale],
            "diagnostics": [
                {
                    "label": est.label,
                    "window_js": est.window_js,
                    "warnings": est.warnings,
                    "argmax": [
                        {"j": sv.j, "point": list(sv.argmax)}
                        for sv in est.per_scale
                        if sv.status == "ok" and sv.argmax is not None
                    ],
                }
                for est in self.estimates
            ],
        }


def dimension_profile(mu: AtomicMeasure, thetas, grid: ScaleGrid | None = None,
                      **kw) -> DimensionProfile:
    """Upper/lower/debiased estimates over a theta grid (shared scale work)."""
    grid = grid or DEFAULT_GRID
    thetas = [float(t) for t in thetas]
    js = [int(j) for j in grid.js()]
    per = np.full((len(thetas), len(js)), math.nan)
    ests, upper, lower, extrap = [], [], [], []
    for i, th in enumerate(thetas):
        est = _phi_estimate(mu, PhiShape.power(th), grid,
                            label=f"theta={th:g}", **kw)
        ests.append(est)
        upper.append(est.upper)
        lower.append(est.lower)
        extrap.append(est.extrapolated)
        for sv in est.per_scale:
            if sv.status == "ok":
                per[i, js.index(sv.j)] = sv.value
    return DimensionProfile(thetas, upper, lower, extrap, grid.window, js,
                            per, ests)
