"""Backend selection: compiled Cython kernels with a pure-numpy fallback.

The default prefers the compiled extension.  Set DIMLAB_BACKEND=python or
DIMLAB_BACKEND=compiled to force a choice (the latter raises if the
extension is missing).
"""

from __future__ import annotations

import os

import numpy as np

from . import pure

_FORCED = os.environ.get("DIMLAB_BACKEND", "auto").lower()

_compiled = None
if _FORCED in ("auto", "compiled"):
    try:
        from . import _kernels as _compiled  # type: ignore
    except ImportError:
        if _FORCED == "compiled":
            raise
        _compiled = None


class _GridIndex:
    """Cell grid over an n-d point set; shared by grid-based mass queries."""

    __slots__ = ("points", "weights", "cell", "keys", "order", "start",
                 "group_cell", "group_mass", "base", "side")

    def __init__(self, points, weights, cell):
        ic = np.floor(points / cell).astype(np.int64)
        base = ic.min(axis=0) - 1
        rel = ic - base
        side = int(rel.max()) + 3
        if float(side) ** points.shape[1] > 9e17:
            raise OverflowError("cell grid too fine for packed keys")
        keys = np.zeros(points.shape[0], dtype=np.int64)
        for j in range(points.shape[1]):
            keys = keys * side + rel[:, j]
        order = np.argsort(keys, kind="stable").astype(np.int64)
        skeys = keys[order]
        uniq, first = np.unique(skeys, return_index=True)
        start = np.append(first, len(skeys)).astype(np.int64)
        gcell = np.empty((len(uniq), points.shape[1]), dtype=np.int64)
        rel_sorted = rel[order]
        gcell[:, :] = rel_sorted[first]
        gmass = np.add.reduceat(weights[order], first)
        self.points = points
        self.weights = weights
        self.cell = float(cell)
        self.keys = uniq
        self.order = order
        self.start = start
        self.group_cell = gcell
        self.group_mass = gmass
        self.base = base.astype(np.int64)
        self.side = side


class CompiledBackend:
    NAME = "compiled"

    exact_g_sorted = staticmethod(lambda *a, **k: _compiled.exact_g_sorted(*a, **k))
    exact_g_points = staticmethod(lambda *a, **k: _compiled.exact_g_points(*a, **k))
    extremum_sorted = staticmethod(lambda *a, **k: _compiled.extremum_sorted(*a, **k))
    extremum_points = staticmethod(lambda *a, **k: _compiled.extremum_points(*a, **k))
    capacity_components_sorted = staticmethod(
        lambda *a, **k: _compiled.capacity_components_sorted(*a, **k))
    capacity_ring_sorted = staticmethod(
        lambda *a, **k: _compiled.capacity_ring_sorted(*a, **k))
    capacity_components_points = staticmethod(pure.capacity_components_points)
    capacity_ring_points = staticmethod(pure.capacity_ring_points)
    cover_dp = staticmethod(lambda *a, **k: _compiled.cover_dp(*a, **k))

    @staticmethod
    def masses_points_multi(points, weights, evals, radii):
        """Masses at several radii; one grid sized to the largest radius."""
        cell = max(radii)
        try:
            g = _GridIndex(points, weights, cell)
        except OverflowError:
            return [pure.masses_points(points, weights, evals, r) for r in radii]
        return [
            _compiled.masses_points_grid(
                points, weights, evals, float(r), g.cell, g.keys, g.order,
                g.start, g.group_cell, g.group_mass, g.base, g.side)
            for r in radii
        ]


class PureBackend:
    NAME = "python"

    exact_g_sorted = staticmethod(pure.exact_g_sorted)
    exact_g_points = staticmethod(pure.exact_g_points)
    extremum_sorted = staticmethod(pure.extremum_sorted)
    extremum_points = staticmethod(pure.extremum_points)
    capacity_components_sorted = staticmethod(pure.capacity_components_sorted)
    capacity_ring_sorted = staticmethod(pure.capacity_ring_sorted)
    capacity_components_points = staticmethod(pure.capacity_components_points)
    capacity_ring_points = staticmethod(pure.capacity_ring_points)
    cover_dp = staticmethod(pure.cover_dp)

    @staticmethod
    def masses_points_multi(points, weights, evals, radii):
        return [pure.masses_points(points, weights, evals, r) for r in radii]


_ACTIVE = CompiledBackend if (_compiled is not None and _FORCED != "python") \
    else PureBackend


def get_backend(name=None):
    """Return the active backend class (or a named one for benchmarks)."""
    if name in (None, "auto"):
        return _ACTIVE
    if name == "python":
        return PureBackend
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled backend is not available")
        return CompiledBackend
    raise ValueError(f"unknown backend {name!r}")


def backend_name() -> str:
    return _ACTIVE.NAME
