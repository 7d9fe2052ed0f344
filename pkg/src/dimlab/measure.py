"""Finite atomic measures with exact ball-mass and breakpoint queries.

An :class:`AtomicMeasure` is a finite weighted point set in R^n, optionally
with declared accumulation points (zero-mass support points).  All queries
use closed balls and are deterministic: weights of selected atoms are summed
in the canonical (sorted) atom order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "AtomicMeasure",
    "ScaleGrid",
    "build_measure",
    "ball_mass",
    "breakpoint_radii",
    "load_measure",
    "save_measure",
]


@dataclass(frozen=True)
class ScaleGrid:
    """Geometric grid of outer scales delta_j = base**(-j), j = j_min..j_max.

    ``window`` is the number of smallest usable scales that stand in for the
    limit delta -> 0 (limsup/liminf surrogates).
    """

    base: float = 2.0
    j_min: int = 4
    j_max: int = 17
    window: int = 4

    def __post_init__(self):
        if not self.base > 1.0:
            raise ConfigError("grid base must be > 1")
        if self.j_max < self.j_min:
            raise ConfigError("j_max must be >= j_min")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if self.window > self.j_max - self.j_min + 1:
            raise ConfigError("window larger than grid")

    def scales(self) -> np.ndarray:
        """All scales, decreasing (largest delta first)."""
        j = np.arange(self.j_min, self.j_max + 1)
        return self.base ** (-j.astype(float))

    def js(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1)


class AtomicMeasure:
    """Immutable finite atomic measure on R^n.

    Attributes
    ----------
    atoms : (N, n) float64 array, sorted lexicographically (canonical order)
    weights : (N,) float64 array of strictly positive masses
    accumulation_points : (M, n) float64 array of zero-mass support points
    normalized : True when weights were rescaled to total mass 1 at build
    resolution : sampling-fidelity radius of a truncated family (smallest
        trusted inter-atom feature size), or None for exact finite supports
    """

    def __init__(self, atoms, weights, accumulation_points, normalized,
                 resolution=None):
        self.atoms = atoms
        self.weights = weights
        self.accumulation_points = accumulation_points
        self.normalized = normalized
        self.resolution = resolution
        self.ndim = atoms.shape[1]
        self.total_mass = float(np.sum(weights))
        # prefix sums in canonical order; internal fast path for 1-d bounds
        self._prefix = np.concatenate(([0.0], np.cumsum(weights)))
        self._acc_gap = None
        self._nn_cache = None

    # -- construction helpers -------------------------------------------------

    @property
    def natoms(self) -> int:
        return self.atoms.shape[0]

    @property
    def coords1d(self) -> np.ndarray:
        """Sorted coordinates for dimension-1 measures."""
        if self.ndim != 1:
            raise ConfigError("coords1d is only defined in dimension 1")
        return self.atoms[:, 0]

    def normalized_weights(self) -> np.ndarray:
        if self.normalized:
            return self.weights
        return self.weights / self.total_mass

    def accumulation_gaps(self) -> np.ndarray:
        """Distance from each accumulation point to its nearest atom."""
        if self._acc_gap is None:
            if len(self.accumulation_points) == 0:
                self._acc_gap = np.zeros(0)
            else:
                gaps = np.empty(len(self.accumulation_points))
                for i, p in enumerate(self.accumulation_points):
                    d = np.sqrt(((self.atoms - p) ** 2).sum(axis=1))
                    gaps[i] = d.min()
                self._acc_gap = gaps
        return self._acc_gap

    def acc_gap(self) -> float:
        """Largest accumulation-point gap (0.0 when there are none)."""
        g = self.accumulation_gaps()
        return float(g.max()) if len(g) else 0.0

    def support_points(self) -> np.ndarray:
        """Atoms plus accumulation points; the default evaluation set."""
        if len(self.accumulation_points) == 0:
            return self.atoms
        return np.vstack([self.atoms, self.accumulation_points])

    def scaled(self, factor: float) -> "AtomicMeasure":
        """Same atoms with every weight multiplied by ``factor`` (> 0)."""
        if factor <= 0:
            raise ConfigError("weight factor must be positive")
        return AtomicMeasure(self.atoms, self.weights * factor,
                             self.accumulation_points, False, self.resolution)


def build_measure(points, weights, accumulation_points=None, normalize=False,
                  resolution=None, acc_tol=None) -> AtomicMeasure:
    """Build an :class:`AtomicMeasure`, merging exactly-duplicate atoms.

    Parameters
    ----------
    points, weights : equal-length sequences; weights strictly positive.
    accumulation_points : optional support closure points (zero mass); each
        must lie within ``acc_tol`` of some atom.
    normalize : rescale weights to total mass 1 and record the flag.
    resolution : declared sampling-fidelity radius (see AtomicMeasure).
    acc_tol : tolerance for the accumulation-point proximity check; defaults
        to the distance of the farthest accumulation point's nearest atom
        times (1 + 1e-9) being required under ``resolution`` semantics only
        when given explicitly.  When None, the check uses 2x the largest
        nearest-atom distance as a sanity bound against typos.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    w = np.asarray(weights, dtype=float)
    if pts.shape[0] == 0:
        raise ConfigError("empty atom list")
    if pts.shape[0] != w.shape[0]:
        raise ConfigError("points and weights have different lengths")
    if not np.all(np.isfinite(pts)):
        raise ConfigError("atoms must have finite coordinates (compact support)")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ConfigError("weights must be finite and strictly positive")

    # canonical order: lexicographic by coordinates; exact duplicates merged
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    w = w[order]
    if pts.shape[0] > 1:
        dup = np.all(pts[1:] == pts[:-1], axis=1)
        if dup.any():
            group = np.concatenate(([0], np.cumsum(~dup)))
            n_unique = group[-1] + 1
            merged_w = np.zeros(n_unique)
            np.add.at(merged_w, group, w)
            keep = np.concatenate(([True], ~dup))
            pts = pts[keep]
            w = merged_w

    acc = np.zeros((0, pts.shape[1]))
    if accumulation_points is not None and len(accumulation_points) > 0:
        acc = np.asarray(accumulation_points, dtype=float)
        if acc.ndim == 1:
            acc = acc[:, None]
        if acc.shape[1] != pts.shape[1]:
            raise ConfigError("accumulation points have mismatched dimension")
        if not np.all(np.isfinite(acc)):
            raise ConfigError("accumulation points must be finite")

    normalized = False
    if normalize:
        w = w / np.sum(w)
        normalized = True

    mu = AtomicMeasure(pts, w, acc, normalized, resolution)

    if len(acc) > 0:
        gaps = mu.accumulation_gaps()
        if acc_tol is not None and np.any(gaps > acc_tol):
            raise ConfigError(
                "accumulation point farther than acc_tol from every atom "
                f"(max gap {gaps.max():.3g} > {acc_tol:.3g})")
    return mu


def _range_1d(coords: np.ndarray, x: float, r: float):
    lo = np.searchsorted(coords, x - r, side="left")
    hi = np.searchsorted(coords, x + r, side="right")
    return lo, hi


def ball_mass(mu: AtomicMeasure, x, r: float) -> float:
    """Exact mass of the closed ball B(x, r).

    Weights of atoms with distance(atom, x) <= r are summed in canonical
    atom order (ties at distance exactly r included).
    """
    if r < 0:
        raise ConfigError("negative radius")
    xq = np.asarray(x, dtype=float).reshape(-1)
    if xq.shape[0] != mu.ndim:
        raise ConfigError("query point dimension mismatch")
    if mu.ndim == 1:
        lo, hi = _range_1d(mu.coords1d, xq[0], r)
        return float(np.sum(mu.weights[lo:hi]))
    d2 = ((mu.atoms - xq) ** 2).sum(axis=1)
    return float(np.sum(mu.weights[d2 <= r * r]))


def ball_mass_brute(mu: AtomicMeasure, x, r: float) -> float:
    """Reference linear scan; must agree exactly with :func:`ball_mass`."""
    if r < 0:
        raise ConfigError("negative radius")
    xq = np.asarray(x, dtype=float).reshape(-1)
    d2 = ((mu.atoms - xq) ** 2).sum(axis=1)
    return float(np.sum(mu.weights[d2 <= r * r]))


def breakpoint_radii(mu: AtomicMeasure, x, r_lo: float, r_hi: float) -> np.ndarray:
    """Radii where r -> ball_mass(x, r) can change on [r_lo, r_hi].

    Returns {r_lo} united with the distinct atom distances in (r_lo, r_hi],
    sorted ascending.  On this set the step function attains all its values
    over the interval.
    """
    if not (0 < r_lo <= r_hi):
        raise ConfigError("invalid interval: need 0 < r_lo <= r_hi")
    xq = np.asarray(x, dtype=float).reshape(-1)
    if xq.shape[0] != mu.ndim:
        raise ConfigError("query point dimension mismatch")
    if mu.ndim == 1:
        d = np.abs(mu.coords1d - xq[0])
    else:
        d = np.sqrt(((mu.atoms - xq) ** 2).sum(axis=1))
    inside = d[(d > r_lo) & (d <= r_hi)]
    return np.concatenate(([r_lo], np.unique(inside)))


# -- file formats --------------------------------------------------------------


def save_measure(mu: AtomicMeasure, path: str) -> None:
    """Write a measure as JSON lines: header record, then one atom per line."""
    with open(path, "w") as fh:
        header = {
            "accumulation_points": [list(map(float, p))
                                    for p in mu.accumulation_points],
            "normalized": mu.normalized,
        }
        if mu.resolution is not None:
            header["resolution"] = float(mu.resolution)
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for p, wt in zip(mu.atoms, mu.weights):
            fh.write(json.dumps({"x": [float(c) for c in p], "w": float(wt)})
                     + "\n")


def load_measure(path: str) -> AtomicMeasure:
    """Read a measure from JSONL (with optional header) or CSV (x1..xn,w)."""
    if path.endswith(".csv"):
        return _load_csv(path)
    pts, ws = [], []
    acc, resolution, normalized = [], None, False
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if "x" in rec:
                pts.append(rec["x"])
                ws.append(rec["w"])
            else:
                acc = rec.get("accumulation_points", [])
                resolution = rec.get("resolution")
                normalized = bool(rec.get("normalized", False))
    mu = build_measure(pts, ws, accumulation_points=acc or None,
                       normalize=False, resolution=resolution)
    if normalized:
        mu = AtomicMeasure(mu.atoms, mu.weights / mu.total_mass,
                           mu.accumulation_points, True, mu.resolution)
    return mu


def _load_csv(path: str) -> AtomicMeasure:
    pts, ws = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = [c.strip().lower() for c in header]
        if "w" not in cols:
            raise ConfigError("CSV measure file needs columns x1..xn,w")
        wi = cols.index("w")
        xi = [i for i, c in enumerate(cols) if c.startswith("x")]
        for row in reader:
            if not row:
                continue
            pts.append([float(row[i]) for i in xi])
            ws.append(float(row[wi]))
    return build_measure(pts, ws)


def as_float(x) -> float:
    if isinstance(x, (int, float)):
        return float(x)
    return float(np.asarray(x).item())


def _isclose(a, b, tol=1e-12):
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)
