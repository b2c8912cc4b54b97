"""Embedded disks tangent to F and the finite-time geometry run on them.

A disk is a sampled immersion of the parameter unit ball (dim 1 or 2) into a
chart.  Samples are stored anchored: a center point plus per-sample
displacements in the universal cover.  The anchoring matters: carving at a
hyperbolic time n pulls the disk back by factors like lambda^-n, far below
what absolute float64 coordinates can resolve, while displacement arithmetic
keeps full relative precision at any scale.  Below a switch threshold the
iteration propagates displacements through the center's tangent map (the
quadratic remainder is below float resolution exactly when the switch is
active); above it, the map is evaluated directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (CarvingFailed, ChartOverflow, ConstantsInvalid,
                     DegenerateTangent, DimensionMismatch, HypothesisViolated,
                     ResolutionExhausted)
from .linalg import Subspace, graph_norm, oblique_components, subspace_distance
from .pliss import hyperbolic_times
from .systems import _batch_qr, cocycle_logs

MICRO_SWITCH = 1e-8


@dataclass
class EmbeddedDisk:
    """A sampled disk: parameters on the unit ball, anchored sample geometry.

    params    : (S, dim) parameter coordinates in the unit ball.
    center    : (d,) wrapped chart coordinates of the center sample.
    disp      : (S, d) displacement of each sample from the center, in the
                universal cover (periodic axes unwrapped along the mesh).
    tangents  : (S, d, dim) orthonormal tangent frames.
    grid_shape: (R,) for curves, (R, R) for 2-D disks (with a ball mask).
    """

    chart: object
    dim: int
    params: np.ndarray
    center: np.ndarray
    disp: np.ndarray
    tangents: np.ndarray
    center_index: int
    radius: float
    grid_shape: tuple
    mask: np.ndarray = None

    @property
    def n_samples(self):
        return self.params.shape[0]

    def points(self):
        """Wrapped chart coordinates of all samples."""
        return self.chart.wrap(self.center + self.disp)

    def center_point(self):
        return self.chart.wrap(self.center)

    # ---- intrinsic metric -------------------------------------------
    def _edges(self):
        """(i, j) index pairs of mesh edges."""
        if self.dim == 1:
            i = np.arange(self.n_samples - 1)
            return np.stack([i, i + 1], axis=1)
        r = self.grid_shape[0]
        idx = -np.ones(self.grid_shape, dtype=int)
        idx[tuple(self._node_ij.T)] = np.arange(self.n_samples)
        pairs = []
        for di, dj in ((0, 1), (1, 0)):
            a = idx[: r - di, : r - dj]
            b = idx[di:, dj:]
            ok = (a >= 0) & (b >= 0)
            pairs.append(np.stack([a[ok], b[ok]], axis=1))
        return np.concatenate(pairs, axis=0)

    def edge_lengths(self):
        e = self._edges()
        return np.linalg.norm(self.disp[e[:, 1]] - self.disp[e[:, 0]], axis=1)

    def arclengths(self):
        """1-D only: signed arclength coordinate per sample (0 at sample 0)."""
        if self.dim != 1:
            raise DimensionMismatch("arclengths are defined for curves only")
        seg = np.linalg.norm(np.diff(self.disp, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        return s

    def dist_from_center(self):
        """Intrinsic distance of every sample from the center sample."""
        if self.dim == 1:
            s = self.arclengths()
            return np.abs(s - s[self.center_index])
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import dijkstra
        e = self._edges()
        w = self.edge_lengths()
        g = coo_matrix((np.concatenate([w, w]),
                        (np.concatenate([e[:, 0], e[:, 1]]),
                         np.concatenate([e[:, 1], e[:, 0]]))),
                       shape=(self.n_samples, self.n_samples))
        return dijkstra(g.tocsr(), indices=self.center_index)

    def pairwise_intrinsic(self, indices=None):
        """Intrinsic distance matrix between the given samples (all by default)."""
        if self.dim == 1:
            s = self.arclengths()
            if indices is not None:
                s = s[indices]
            return np.abs(s[:, None] - s[None, :])
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import dijkstra
        e = self._edges()
        w = self.edge_lengths()
        g = coo_matrix((np.concatenate([w, w]),
                        (np.concatenate([e[:, 0], e[:, 1]]),
                         np.concatenate([e[:, 1], e[:, 0]]))),
                       shape=(self.n_samples, self.n_samples)).tocsr()
        idx = np.arange(self.n_samples) if indices is None else np.asarray(indices)
        return dijkstra(g, indices=idx)[:, idx]

    def intrinsic_radius(self):
        """Smallest intrinsic distance from the center to the disk boundary."""
        d = self.dist_from_center()
        if self.dim == 1:
            return float(min(d[0], d[-1]))
        return float(np.min(d[self._boundary_nodes()]))

    def _boundary_nodes(self):
        r = self.grid_shape[0]
        idx = -np.ones(self.grid_shape, dtype=int)
        idx[tuple(self._node_ij.T)] = np.arange(self.n_samples)
        out = []
        for k, (i, j) in enumerate(self._node_ij):
            nb = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
            if any(not (0 <= a < r and 0 <= b < r) or idx[a, b] < 0
                   for a, b in nb):
                out.append(k)
        return np.asarray(out, dtype=int)

    def cell_weights(self):
        """Normalized intrinsic-volume weights per sample (the disk's Lebesgue)."""
        if self.dim == 1:
            seg = np.linalg.norm(np.diff(self.disp, axis=0), axis=1)
            w = np.zeros(self.n_samples)
            w[:-1] += seg / 2.0
            w[1:] += seg / 2.0
        else:
            e = self._edges()
            el = self.edge_lengths()
            acc = np.zeros(self.n_samples)
            cnt = np.zeros(self.n_samples)
            for (i, j), L in zip(e, el):
                acc[i] += L
                acc[j] += L
                cnt[i] += 1
                cnt[j] += 1
            h = acc / np.maximum(cnt, 1)
            w = h ** 2
        total = w.sum()
        if total <= 0:
            raise CarvingFailed("disk has no positive intrinsic volume")
        return w / total


def _unit_ball_grid(dim, resolution):
    if resolution < 3 or resolution % 2 == 0:
        raise ValueError("resolution must be an odd integer >= 3")
    if dim == 1:
        t = np.linspace(-1.0, 1.0, resolution)
        return t[:, None], (resolution,), None, resolution // 2
    t = np.linspace(-1.0, 1.0, resolution)
    gi, gj = np.meshgrid(t, t, indexing="ij")
    mask = gi ** 2 + gj ** 2 <= 1.0 + 1e-12
    params = np.stack([gi[mask], gj[mask]], axis=1)
    node_ij = np.argwhere(mask)
    center = int(np.argwhere((node_ij == resolution // 2).all(axis=1))[0][0])
    return params, (resolution, resolution), node_ij, center


def make_disk(sys, x, direction, radius, resolution=101):
    """A flat disk through x spanned by `direction`, sampled on a grid.

    direction: a Subspace (or spanning columns) of dimension 1 or 2.
    Raises ChartOverflow when the disk cannot sit inside one chart (box
    bounds violated, or diameter at least half a period on a periodic axis).
    """
    if radius <= 0:
        raise ValueError("radius must be > 0")
    if not isinstance(direction, Subspace):
        direction = Subspace(np.asarray(direction, float))
    dim = direction.dim
    if dim not in (1, 2):
        raise DimensionMismatch(f"disk dimension must be 1 or 2, got {dim}")
    coords = np.asarray(getattr(x, "coords", x), float)
    chart = sys.chart

    widths = chart.widths
    for j in range(chart.dim):
        if chart.periodic[j] and 2.0 * radius >= widths[j] / 2.0:
            raise ChartOverflow(
                f"disk diameter {2 * radius} reaches half the period on axis {j}")

    params, grid_shape, node_ij, center_index = _unit_ball_grid(dim, resolution)
    disp = radius * params @ direction.frame.T
    pts = coords[None, :] + disp
    if not np.all(chart.contains(pts)):
        raise ChartOverflow("disk leaves the chart's box bounds")
    tangents = np.broadcast_to(direction.frame,
                               (params.shape[0],) + direction.frame.shape).copy()
    d = EmbeddedDisk(chart=chart, dim=dim, params=params,
                     center=chart.wrap(coords), disp=disp, tangents=tangents,
                     center_index=center_index, radius=float(radius),
                     grid_shape=grid_shape)
    if node_ij is not None:
        d._node_ij = node_ij
    return d


def _copy_disk(d, center, disp, tangents):
    out = EmbeddedDisk(chart=d.chart, dim=d.dim, params=d.params.copy(),
                       center=center, disp=disp, tangents=tangents,
                       center_index=d.center_index, radius=d.radius,
                       grid_shape=d.grid_shape, mask=d.mask)
    if hasattr(d, "_node_ij"):
        out._node_ij = d._node_ij
    return out


def _advance(sys, d):
    """One forward step of an anchored disk; returns a new disk."""
    scale = float(np.max(np.linalg.norm(d.disp, axis=1))) if d.n_samples else 0.0
    new_center = sys.forward(d.center)
    if scale < MICRO_SWITCH:
        t = sys.tangent(d.center)
        new_disp = d.disp @ t.T
        new_tangents = _batch_qr(t[None, :, :] @ d.tangents)
    else:
        pts = d.chart.wrap(d.center + d.disp)
        imgs = sys.forward(pts)
        # rebuild cover displacements by accumulating short per-edge jumps
        new_disp = np.empty_like(d.disp)
        edges = d._edges()
        ctr = d.center_index
        new_disp[ctr] = d.chart.displacement(new_center, imgs[ctr])
        if d.dim == 1:
            for i in range(ctr + 1, d.n_samples):
                new_disp[i] = new_disp[i - 1] + d.chart.displacement(
                    imgs[i - 1], imgs[i])
            for i in range(ctr - 1, -1, -1):
                new_disp[i] = new_disp[i + 1] + d.chart.displacement(
                    imgs[i + 1], imgs[i])
        else:
            adj = [[] for _ in range(d.n_samples)]
            for i, j in edges:
                adj[i].append(j)
                adj[j].append(i)
            seen = np.zeros(d.n_samples, bool)
            seen[ctr] = True
            stack = [ctr]
            while stack:
                i = stack.pop()
                for j in adj[i]:
                    if not seen[j]:
                        seen[j] = True
                        new_disp[j] = new_disp[i] + d.chart.displacement(
                            imgs[i], imgs[j])
                        stack.append(j)
        t = sys.tangent(pts)
        new_tangents = _batch_qr(t @ d.tangents)
    return _copy_disk(d, d.chart.wrap(new_center), new_disp, new_tangents)


@dataclass
class DiskTrace:
    """Disks at every step of an iteration, step 0 = the input disk."""

    disks: list

    def __getitem__(self, k):
        return self.disks[k]

    def __len__(self):
        return len(self.disks)


def iterate_disk(sys, d, steps, max_gap=None, keep_trace=False):
    """Push a disk forward `steps` times.

    Raises ResolutionExhausted as soon as an edge exceeds the trust ceiling
    (default: a tenth of the chart diameter); the harness owns any
    refine-and-retry loop.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    ceiling = max_gap if max_gap is not None else 0.1 * sys.chart.diameter
    cur = d
    trace = [d]
    for k in range(1, steps + 1):
        cur = _advance(sys, cur)
        gap = float(np.max(cur.edge_lengths()))
        if gap > ceiling:
            raise ResolutionExhausted(k, gap, ceiling)
        if keep_trace:
            trace.append(cur)
    if keep_trace:
        return cur, DiskTrace(trace)
    return cur


@dataclass(frozen=True)
class TangencyReport:
    max_width: float        # worst ||v_E||/||v_F|| over all tangent vectors
    max_f_distance: float   # worst subspace distance from T_yD to F(y)


def tangency_report(d, splitting):
    """How far the disk's tangents sit from F, measured two ways."""
    pts = d.points()
    worst_w = 0.0
    worst_dist = 0.0
    for s in range(d.n_samples):
        e, f = splitting.at(pts[s])
        tan = Subspace(d.tangents[s])
        worst_dist = max(worst_dist, subspace_distance(tan, f))
        for col in range(d.tangents.shape[2]):
            v = d.tangents[s][:, col]
            ve, vf = oblique_components(v, e, f)
            nf = np.linalg.norm(vf)
            w = np.inf if nf == 0 else np.linalg.norm(ve) / nf
            worst_w = max(worst_w, w)
    return TangencyReport(max_width=float(worst_w),
                          max_f_distance=float(worst_dist))


def _param_to_disp(d, t):
    """Linear interpolation of the displacement field at parameter t (1-D).

    Queries inside the two segments adjacent to the center are anchored at
    the center node (displacement exactly 0), so parameters many orders of
    magnitude below the grid step keep full relative precision instead of
    cancelling against the neighbour node's value.
    """
    t = np.atleast_1d(np.asarray(t, float))
    base = d.params[:, 0]
    out = np.empty((len(t), d.disp.shape[1]))
    for c in range(d.disp.shape[1]):
        out[:, c] = np.interp(t, base, d.disp[:, c])
    ci = d.center_index
    lo = base[ci - 1] if ci > 0 else 0.0
    hi = base[ci + 1] if ci + 1 < len(base) else 0.0
    neg = (t < 0) & (t > lo)
    pos = (t > 0) & (t < hi)
    if lo < 0 and np.any(neg):
        out[neg] = np.outer(t[neg] / lo, d.disp[ci - 1])
    if hi > 0 and np.any(pos):
        out[pos] = np.outer(t[pos] / hi, d.disp[ci + 1])
    out[t == 0.0] = 0.0
    return out


def _pair_distances(sys, center, disp0, n):
    """||displacement||_k between the orbits of center+disp0 and center.

    Anchored two-point propagation: below the micro switch the displacement
    rides the center's tangent map (full relative precision at any scale);
    above it both points are mapped directly.
    """
    chart = sys.chart
    ctr = chart.wrap(np.asarray(center, float))
    disp = np.asarray(disp0, float).copy()
    out = np.empty(n + 1)
    out[0] = np.linalg.norm(disp)
    for k in range(1, n + 1):
        if np.linalg.norm(disp) < MICRO_SWITCH:
            t = sys.tangent(ctr)
            disp = t @ disp
            ctr = chart.wrap(sys.forward(ctr))
        else:
            pt = chart.wrap(ctr + disp)
            new_ctr = chart.wrap(sys.forward(ctr))
            disp = chart.displacement(new_ctr, sys.forward(pt))
            ctr = new_ctr
        out[k] = np.linalg.norm(disp)
    return out


def _ball_condition(sys, d, n, r, t):
    """True iff the orbit of the param-t point stays r-close to the center orbit."""
    disp = _param_to_disp(d, t)[0]
    return bool(np.all(_pair_distances(sys, d.center, disp, n) <= r))


def _bisect_edge(sys, d, n, r, good, bad, iters=60):
    for _ in range(iters):
        mid = 0.5 * (good + bad)
        if mid == good or mid == bad:
            break
        if _ball_condition(sys, d, n, r, mid):
            good = mid
        else:
            bad = mid
    return good


def _edge_of_component(sys, d, n, r, sign):
    """Outermost parameter on one ray satisfying the full-orbit ball condition.

    The edge can sit exponentially deep (scale sigma^n of the ray), so the
    bracket is found by geometric shrinking before linear bisection refines
    it to full relative precision.
    """
    t = float(sign)
    if _ball_condition(sys, d, n, r, t):
        return t
    bad = t
    good = 0.0
    while abs(bad) > 1e-300:
        t = bad / 2.0
        if _ball_condition(sys, d, n, r, t):
            good = t
            break
        bad = t
    if good == 0.0:
        raise CarvingFailed("ball condition fails arbitrarily close to the center")
    return _bisect_edge(sys, d, n, r, good, bad)


def _resample_interval(d, t_minus, t_plus, resolution):
    """Sub-disk of a 1-D disk over [t_minus, t_plus], keeping the center at 0.

    The two sides are resampled separately so that parameter 0 still maps to
    the original center sample.
    """
    half = resolution // 2
    left = np.linspace(t_minus, 0.0, half + 1)
    right = np.linspace(0.0, t_plus, half + 1)
    t_new = np.concatenate([left[:-1], right])
    disp = _param_to_disp(d, t_new)
    disp[half] = 0.0 * disp[half]
    tan = np.empty((len(t_new),) + d.tangents.shape[1:])
    base = d.params[:, 0]
    for c in range(d.tangents.shape[1]):
        tan[:, c, 0] = np.interp(t_new, base, d.tangents[:, c, 0])
    tan = _batch_qr(tan)
    scale = max(abs(t_minus), abs(t_plus))
    params = np.where(t_new[:, None] >= 0,
                      t_new[:, None] / (t_plus if t_plus > 0 else 1.0),
                      t_new[:, None] / (abs(t_minus) if t_minus < 0 else 1.0))
    out = EmbeddedDisk(chart=d.chart, dim=1, params=params,
                       center=d.center.copy(), disp=disp, tangents=tan,
                       center_index=half, radius=float(d.radius * scale),
                       grid_shape=(len(t_new),))
    return out


def hyperbolic_component(sys, d, n, r, sigma=None, verify_tol=0.05):
    """The sub-disk around the center whose whole n-orbit stays r-close and
    whose n-th image has intrinsic radius r.

    Construction, per parameter ray: bisect the outermost parameter whose
    anchored two-point orbit satisfies the r-ball condition at every step
    0..n (the component of a curve under expanding dynamics is an interval,
    so first-exit bisection finds its edge), resample the surviving interval
    at the original resolution, verify the ball conditions on the resampled
    trace, then trim so the intrinsic radius of the n-th image equals r on
    each side.  When sigma is given, n is first certified as a
    sigma-hyperbolic time of the center orbit.

    1-D disks get the full bisection treatment; 2-D disks are carved at
    sample granularity (rays of grid nodes), which is all their linear test
    coverage needs.
    """
    if r <= 0:
        raise ValueError("r must be > 0")
    per = [w for w, p in zip(d.chart.widths, d.chart.periodic) if p]
    if per and r > min(per) / 8.0:
        raise ValueError(
            f"r = {r} too large for unambiguous wrapped distances "
            f"(limit {min(per) / 8.0})")
    if sigma is not None:
        logs = cocycle_logs(sys, d.center_point(), n)
        rep = hyperbolic_times(logs.f_inv_from_one(), sigma)
        if n not in rep.times:
            raise HypothesisViolated(
                f"n = {n} is not a sigma = {sigma} hyperbolic time of the center")
    if d.dim == 2:
        return _carve_2d(sys, d, n, r)

    t0 = d.params[:, 0]
    t_plus = _edge_of_component(sys, d, n, r, +1)
    t_minus = _edge_of_component(sys, d, n, r, -1)

    carved = _resample_interval(d, t_minus, t_plus, len(t0))
    final, ftrace = iterate_disk(sys, carved, n, keep_trace=True)
    # The edge bisection propagates anchored two-point displacements; the
    # trace below accumulates per-edge wrapped differences.  Near the
    # micro/macro switch both carry ~eps/MICRO_SWITCH relative rounding per
    # step, so they agree only to ~n * 2e-8; 1e-5 covers that with margin.
    for k in range(n + 1):
        dk = ftrace[k]
        dist = np.linalg.norm(dk.disp, axis=1)
        if np.any(dist > r * (1.0 + 1e-5)):
            raise CarvingFailed(
                f"resampled component leaves the r-ball at step {k}: the "
                f"first-exit interval assumption does not hold here")

    # trim each side to intrinsic radius exactly r in the n-th image
    s = final.arclengths()
    s_c = s[final.center_index]
    right = s[final.center_index:] - s_c
    left = s_c - s[: final.center_index + 1][::-1]
    if right[-1] < r * (1 - verify_tol) or left[-1] < r * (1 - verify_tol):
        raise CarvingFailed(
            f"n-th image radius only ({left[-1]:.3g}, {right[-1]:.3g}) < r = {r}; "
            f"initial disk too small or resolution too coarse")
    tp = carved.params[:, 0][final.center_index:]
    tm = carved.params[:, 0][: final.center_index + 1][::-1]
    cut_p = float(np.interp(r, right, tp)) if right[-1] > r else 1.0
    cut_m = float(np.interp(r, left, tm)) if left[-1] > r else -1.0

    t_hi = cut_p * (t_plus if t_plus > 0 else 1.0)
    t_lo = abs(cut_m) * (t_minus if t_minus < 0 else -1.0)
    out = _resample_interval(d, t_lo, t_hi, len(t0))
    if out.n_samples < 3 or t_hi <= 0.0 or t_lo >= 0.0:
        raise CarvingFailed("carved component collapsed below 3 samples")
    return out


def _carve_2d(sys, d, n, r):
    _, trace = iterate_disk(sys, d, n, keep_trace=True)
    ok = np.ones(d.n_samples, bool)
    for k in range(n + 1):
        dk = trace[k]
        dist = dk.chart.distance(dk.chart.wrap(dk.center + dk.disp),
                                 dk.center_point())
        ok &= dist <= r
    # star carve: a node survives only if every node on its param ray does
    ctr_param = d.params[d.center_index]
    keep = np.zeros(d.n_samples, bool)
    for i in range(d.n_samples):
        if not ok[i]:
            continue
        ray = d.params[i] - ctr_param
        steps = max(int(np.ceil(np.linalg.norm(ray) / 0.05)), 1)
        ts = np.linspace(0.0, 1.0, steps + 1)[1:]
        pts_on_ray = ctr_param + ts[:, None] * ray
        dists = np.linalg.norm(d.params[None, :, :] - pts_on_ray[:, None, :],
                               axis=2)
        nearest = np.argmin(dists, axis=1)
        keep[i] = bool(np.all(ok[nearest]))
    keep[d.center_index] = True
    per_axis = max(int(np.sqrt(keep.sum())), 1)
    if keep.sum() < 9 or per_axis < 3:
        raise CarvingFailed(
            f"carved component has {int(keep.sum())} samples, below 3 per axis")
    idx = np.where(keep)[0]
    sub = EmbeddedDisk(chart=d.chart, dim=2, params=d.params[idx].copy(),
                       center=d.center.copy(), disp=d.disp[idx].copy(),
                       tangents=d.tangents[idx].copy(),
                       center_index=int(np.where(idx == d.center_index)[0][0]),
                       radius=d.radius, grid_shape=d.grid_shape)
    sub._node_ij = d._node_ij[idx]
    return sub


@dataclass(frozen=True)
class ContractionReport:
    max_violation: float      # worst d_{n-k} / (sigma^{k/2} d_n)
    per_k: np.ndarray         # worst ratio for each k = 1..n
    sigma: float
    n: int


def backward_contraction_check(sys, d, n, sigma):
    """Check d_{f^{n-k}D}(center, y) <= sigma^{k/2} d_{f^nD}(center, y).

    d should be a carved hyperbolic-time disk; ratios are measured for every
    sample y != center and every 1 <= k <= n on the iterated trace.
    """
    if not (0.0 < sigma < 1.0):
        raise ValueError("sigma must be in (0, 1)")
    _, trace = iterate_disk(sys, d, n, keep_trace=True)
    arcs = np.stack([trace[k].dist_from_center() for k in range(n + 1)])
    final = arcs[n]
    live = final > 0
    live[d.center_index] = False
    per_k = np.empty(n, float)
    for k in range(1, n + 1):
        ratio = arcs[n - k][live] / (sigma ** (k / 2.0) * final[live])
        per_k[k - 1] = float(np.max(ratio)) if ratio.size else 0.0
    return ContractionReport(max_violation=float(np.max(per_k)), per_k=per_k,
                             sigma=float(sigma), n=n)


# ---- distortion ------------------------------------------------------

@dataclass(frozen=True)
class DistortionReport:
    ratio: float
    bound_k: float
    n: int
    y_index: int


def _step_jacobians(sys, trace):
    """(n, S) restricted tangent-volume factors along an iterated trace."""
    n = len(trace) - 1
    out = np.empty((n, trace[0].n_samples))
    for k in range(n):
        dk = trace[k]
        pts = dk.chart.wrap(dk.center + dk.disp)
        t = sys.tangent(pts)
        img = t @ dk.tangents
        if dk.tangents.shape[2] == 1:
            out[k] = np.linalg.norm(img[..., 0], axis=-1)
        else:
            g = np.swapaxes(img, -2, -1) @ img
            out[k] = np.sqrt(np.clip(np.linalg.det(g), 0.0, None))
    return out


def distortion_profile(sys, d, n, bound_k=None):
    """Volume-distortion ratios of f^n between every sample and the center."""
    _, trace = iterate_disk(sys, d, n, keep_trace=True)
    jac = _step_jacobians(sys, trace)
    logs = np.log(jac)
    tot = logs.sum(axis=0)
    ratios = np.exp(tot - tot[d.center_index])
    return ratios


def distortion(sys, d, y_index, n, constants=None):
    """Distortion of f^n along the disk between sample y_index and the center.

    constants: a DistortionConstants (measured R1/R2 etc); when present the
    report carries the bound exp(2 R1 a/(1-l2) + R2 l2^{b/2}/(1-l2^{b/2})).
    """
    if not (0 <= y_index < d.n_samples):
        raise ValueError(f"y_index {y_index} out of range")
    ratios = distortion_profile(sys, d, n)
    bound = constants.bound_k if constants is not None else None
    return DistortionReport(ratio=float(ratios[y_index]),
                            bound_k=float(bound) if bound else np.inf,
                            n=n, y_index=y_index)


@dataclass(frozen=True)
class DistortionConstants:
    """Measured regularity constants feeding the distortion bound."""

    r1: float        # Lipschitz constant of log-volume in the tangent plane
    r2: float        # beta-Hoelder constant of log-volume along F
    a: float         # cone width
    lambda2: float
    beta: float

    @property
    def bound_k(self):
        l2 = self.lambda2
        return float(np.exp(2.0 * self.r1 * self.a / (1.0 - l2)
                            + self.r2 * l2 ** (self.beta / 2.0)
                            / (1.0 - l2 ** (self.beta / 2.0))))


def measure_distortion_constants(sys, a, lambda2, beta=None, grid_points=150,
                                 seed=3, safety=1.5):
    """Grid-scan estimates of R1 and R2, padded by the safety factor.

    R1: worst |d log vol(Df | plane)| per unit subspace distance, probed by
    tilting F(x) by small rotations.  R2: worst beta-Hoelder quotient of
    log vol(Df|F) over nearby sample pairs.
    """
    from .models import region_sample   # local import: models builds on disks' siblings
    from .systems import splitting_frames_along_orbit

    beta = sys.constants.beta if beta is None else float(beta)
    pts = region_sample(sys, grid_points, seed=seed, burn_in=10)
    t = sys.tangent(pts)
    _, f = splitting_frames_along_orbit(sys, pts[None, ...])
    f = f[0]

    def logvol(tm, fr):
        img = tm @ fr
        if fr.shape[-1] == 1:
            return np.log(np.linalg.norm(img[..., 0], axis=-1))
        g = np.swapaxes(img, -2, -1) @ img
        return 0.5 * np.log(np.clip(np.linalg.det(g), 1e-300, None))

    base = logvol(t, f)
    rng = np.random.default_rng(seed)
    r1 = 0.0
    for h in (0.02, 0.005):
        w = rng.standard_normal(f.shape)
        tilted = _batch_qr(f + h * w)
        dist = np.array([subspace_distance(Subspace(f[i]), Subspace(tilted[i]))
                         for i in range(len(pts))])
        val = logvol(t, tilted)
        ok = dist > 1e-12
        r1 = max(r1, float(np.max(np.abs(val - base)[ok] / dist[ok])))

    order = np.argsort(pts[:, 0])
    p, q = order[:-1], order[1:]
    gap = sys.chart.distance(pts[p], pts[q])
    ok = gap > 1e-9
    r2 = float(np.max(np.abs(base[p] - base[q])[ok] / gap[ok] ** beta))
    return DistortionConstants(r1=safety * r1, r2=safety * r2, a=float(a),
                               lambda2=float(lambda2), beta=beta)


# ---- curvature -------------------------------------------------------

def holder_curvature(d, xi, delta0=None):
    """Worst ||L_x(y)|| / d_D(x,y)^xi over sample pairs within delta0.

    L_x(y) is the linear map carrying T_xD onto T_yD as a graph over T_xD
    into its orthogonal complement.  Raises DegenerateTangent when a pair's
    tangents are more than 45 degrees apart (the graph leaves the width-1
    cone and the representation breaks down).
    """
    if not (0.0 < xi <= 1.0):
        raise ValueError("xi must be in (0, 1]")
    delta0 = delta0 if delta0 is not None else 0.1 * d.chart.diameter
    dist = d.pairwise_intrinsic()
    sel = (dist > 0) & (dist <= delta0)
    if not np.any(sel):
        return 0.0
    if d.tangents.shape[2] == 1:
        tmat = d.tangents[:, :, 0]
        g = tmat @ tmat.T
        # perpendicular part of t_j relative to t_i, as explicit vectors:
        # the difference arithmetic stays exact for near-parallel tangents,
        # where 1 - g^2 would square away all precision
        diff = tmat[None, :, :] - g[:, :, None] * tmat[:, None, :]
        perp = np.linalg.norm(diff, axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = perp / np.abs(g)
        if np.any(sel & (ratio > 1.0 + 1e-12)):
            raise DegenerateTangent(
                "tangent pair further than 45 degrees apart within delta0")
        vals = ratio[sel] / dist[sel] ** xi
        return float(np.max(vals))
    worst = 0.0
    idx = np.argwhere(sel)
    for i, j in idx:
        gn = graph_norm(Subspace(d.tangents[i]), Subspace(d.tangents[j]))
        if gn > 1.0 + 1e-12:
            raise DegenerateTangent(
                "tangent pair further than 45 degrees apart within delta0")
        worst = max(worst, gn / dist[i, j] ** xi)
    return float(worst)


@dataclass(frozen=True)
class CurvatureConstants:
    """Inputs of the curvature recursion bound."""

    l1: float       # xi-Hoelder constant of the tangent map
    b: float        # infimum of mininorm(Df|F)
    xi: float
    alpha: float    # cone/angle slack, must stay below b/4
    lambda4: float  # contraction slot in (lambda3, 1)

    def __post_init__(self):
        if not (0.0 < self.alpha < self.b / 4.0):
            raise ConstantsInvalid(
                f"alpha = {self.alpha} must lie in (0, b/4) = (0, {self.b / 4.0})")
        if not (0.0 < self.lambda4 < 1.0):
            raise ConstantsInvalid("lambda4 must lie in (0, 1)")

    @property
    def l_term(self):
        return float(2.0 ** (1.0 + self.xi) * self.l1 / self.b ** (1.0 + self.xi))


def measure_l1(sys, xi, grid_points=200, seed=3, safety=1.5):
    """xi-Hoelder constant of x -> Df(x) over nearby sampled pairs, padded."""
    from .models import region_sample
    pts = region_sample(sys, grid_points, seed=seed, burn_in=10)
    t = sys.tangent(pts)
    order = np.argsort(pts[:, 0])
    p, q = order[:-1], order[1:]
    gap = sys.chart.distance(pts[p], pts[q])
    ok = gap > 1e-9
    diff = np.linalg.norm(t[p] - t[q], ord=2, axis=(1, 2))
    if not np.any(ok):
        return 0.0
    return float(safety * np.max(diff[ok] / gap[ok] ** xi))


def curvature_constants(sys, consts_h, l1=None, alpha=None, lambda4=None):
    """Assemble the curvature recursion constants from a constant chain."""
    b = consts_h.b
    xi = consts_h.xi
    if l1 is None:
        l1 = measure_l1(sys, xi)
    alpha = b / 8.0 if alpha is None else float(alpha)
    lambda4 = (consts_h.lambda3 + 1.0) / 2.0 if lambda4 is None else float(lambda4)
    if not (consts_h.lambda3 < lambda4 < 1.0):
        raise ConstantsInvalid(
            f"lambda4 = {lambda4} outside (lambda3, 1) = ({consts_h.lambda3}, 1)")
    return CurvatureConstants(l1=float(l1), b=float(b), xi=float(xi),
                              alpha=alpha, lambda4=lambda4)


@dataclass(frozen=True)
class CurvatureReport:
    measured: float
    bound: float            # min of the two forms
    bound_product: float
    bound_closed: float
    c_values: np.ndarray


def curvature_recursion(sys, d, n, consts, xi=None, check=True):
    """Iterate a disk n steps and compare measured curvature to the recursion.

    The per-step factors c_j = (||Df|E(f^j x)|| + 2 alpha) /
    (mininorm(Df|F(f^j x)) - 2 alpha)^(1+xi) come from the center orbit
    (0-based products).  The bound is the smaller of the unrolled product
    form and the closed form lambda4^n H_0 + L/(1 - lambda4).
    """
    xi = consts.xi if xi is None else float(xi)
    logs = cocycle_logs(sys, d.center_point(), n - 1, include_zero=True)
    norm_e = np.exp(logs.log_e)
    min_f = np.exp(-logs.log_f_inv)
    if np.any(min_f - 2.0 * consts.alpha <= 0.0):
        raise ConstantsInvalid("mininorm(Df|F) - 2 alpha hits zero on the orbit")
    c = (norm_e + 2.0 * consts.alpha) / (min_f - 2.0 * consts.alpha) ** (1.0 + xi)

    for k in range(n):
        tail = np.prod(c[k:])
        if tail > consts.lambda4 ** (n - k) * (1.0 + 1e-9):
            raise ConstantsInvalid(
                f"product of c_j over trailing window [{k}, {n}) is {tail:.4g} "
                f"> lambda4^{n - k} = {consts.lambda4 ** (n - k):.4g}")

    h0 = holder_curvature(d, xi)
    final = iterate_disk(sys, d, n)
    measured = holder_curvature(final, xi)

    lterm = consts.l_term
    geo = 1.0
    acc = 1.0
    for j in range(n - 1, 0, -1):
        acc *= c[j]
        geo += acc
    bound_product = float(np.prod(c) * h0 + lterm * geo)
    bound_closed = float(consts.lambda4 ** n * h0 + lterm / (1.0 - consts.lambda4))
    bound = min(bound_product, bound_closed)
    if check and measured > bound * 1.05:
        raise ConstantsInvalid(
            f"measured curvature {measured:.4g} exceeds bound {bound:.4g}")
    return CurvatureReport(measured=float(measured), bound=bound,
                           bound_product=bound_product,
                           bound_closed=bound_closed, c_values=c)


def make_graph_disk(sys, x, base_dir, normal_dir, radius, resolution=101,
                    curvature=0.0):
    """A quadratic-graph curve: useful for curvature tests and demos.

    disp(t) = t r u + (t r)^2/2 kappa w, tangent renormalized accordingly.
    """
    coords = np.asarray(getattr(x, "coords", x), float)
    u = np.asarray(base_dir, float)
    u = u / np.linalg.norm(u)
    w = np.asarray(normal_dir, float)
    w = w - (w @ u) * u
    w = w / np.linalg.norm(w)
    params, grid_shape, _, center_index = _unit_ball_grid(1, resolution)
    t = params[:, 0] * radius
    disp = np.outer(t, u) + 0.5 * curvature * np.outer(t ** 2, w)
    tan = u[None, :] + curvature * np.outer(t, w)
    tan = tan / np.linalg.norm(tan, axis=1, keepdims=True)
    return EmbeddedDisk(chart=sys.chart, dim=1, params=params,
                        center=sys.chart.wrap(coords), disp=disp,
                        tangents=tan[:, :, None], center_index=center_index,
                        radius=float(radius), grid_shape=grid_shape)
