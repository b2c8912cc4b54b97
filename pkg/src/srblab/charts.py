"""Charts: the coordinate patches systems are written in.

Two kinds of axis are supported: periodic (circle of given period) and box
(interval with hard bounds).  The chart metric is the product metric; the
exponential map is the identity, so geodesics are straight lines in
coordinates and displacements are plain coordinate differences (wrapped on
periodic axes).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Chart:
    """A product chart: each axis is either periodic or a bounded interval.

    Parameters
    ----------
    chart_id : str
        Name used to tag points and check that operands agree.
    lower, upper : tuple of float
        Per-axis bounds.  For a periodic axis the period is upper - lower.
    periodic : tuple of bool
        Which axes wrap.
    """

    chart_id: str
    lower: tuple
    upper: tuple
    periodic: tuple

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.periodic)):
            raise ValueError("chart axis descriptions must have equal length")

    @property
    def dim(self):
        return len(self.lower)

    @property
    def widths(self):
        return np.asarray(self.upper, float) - np.asarray(self.lower, float)

    @property
    def diameter(self):
        """Diameter of the chart in the product metric."""
        w = self.widths
        per = np.asarray(self.periodic)
        spans = np.where(per, w / 2.0, w)
        return float(np.sqrt(np.sum(spans ** 2)))

    def wrap(self, coords):
        """Fold coordinates back into the fundamental domain (periodic axes)."""
        coords = np.asarray(coords, float)
        out = np.array(coords, copy=True)
        lo = np.asarray(self.lower, float)
        w = self.widths
        for j in range(self.dim):
            if self.periodic[j]:
                out[..., j] = np.mod(out[..., j] - lo[j], w[j]) + lo[j]
        return out

    def displacement(self, a, b):
        """Minimal displacement b - a in the chart metric (wrapped per axis)."""
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        d = b - a
        w = self.widths
        out = np.array(d, copy=True)
        for j in range(self.dim):
            if self.periodic[j]:
                out[..., j] = np.mod(d[..., j] + w[j] / 2.0, w[j]) - w[j] / 2.0
        return out

    def distance(self, a, b):
        """Chart-metric distance; broadcasts over leading axes."""
        return np.linalg.norm(self.displacement(a, b), axis=-1)

    def contains(self, coords, tol=1e-9):
        """True where box axes respect their bounds (periodic axes always do)."""
        coords = np.asarray(coords, float)
        ok = np.ones(coords.shape[:-1], dtype=bool)
        for j in range(self.dim):
            if not self.periodic[j]:
                ok &= (coords[..., j] >= self.lower[j] - tol)
                ok &= (coords[..., j] <= self.upper[j] + tol)
        return ok


@dataclass(frozen=True)
class Point:
    """A point tagged with the chart it lives on."""

    chart_id: str
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords",
                           np.array(self.coords, dtype=float, copy=True))
        if self.coords.ndim != 1:
            raise ValueError("Point coords must be a 1-D array")


def torus_chart(dim, chart_id=None):
    """The flat dim-torus with unit periods, coordinates in [0, 1)."""
    cid = chart_id or f"torus{dim}"
    return Chart(cid, (0.0,) * dim, (1.0,) * dim, (True,) * dim)


def require_same_chart(chart, point):
    if point.chart_id != chart.chart_id:
        raise ValueError(
            f"point lives on chart {point.chart_id!r}, expected {chart.chart_id!r}")
