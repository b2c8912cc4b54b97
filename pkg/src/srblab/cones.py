"""Cone fields around F and average-domination bookkeeping.

A cone of width a at x collects the vectors whose E-component (in the
oblique splitting decomposition) is at most a times their F-component.
Average domination of a cocycle certifies that such cones are mapped
strictly into themselves with geometrically shrinking width.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import Point
from .errors import EmptyRadius, HypothesisViolated
from .linalg import Subspace, oblique_components
from .systems import CocycleLog, orbit_coords, splitting_frames_along_orbit


@dataclass(frozen=True)
class ConeSpec:
    """Width plus the splitting field the cone is erected over."""

    width: float
    splitting: object   # a SplittingField

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("cone width must be positive")


@dataclass(frozen=True)
class DominationCertificate:
    """Witness that cumulative E/F ratio products stay under gamma^i."""

    gamma: float
    n: int
    ratios: np.ndarray          # cumulative products, i = 1..n
    base: Point


def cone_from_system(sys, width):
    return ConeSpec(width=width, splitting=sys.splitting)


def in_cone(v, x, cone):
    """Is v inside the width-a cone over F at x?

    Decomposes v = v_E + v_F along the splitting at x and checks
    ||v_E|| <= a ||v_F||.  Vectors with v_F = 0 (and v != 0) are outside.
    """
    coords = np.asarray(getattr(x, "coords", x), float)
    e, f = cone.splitting.at(coords)
    ve, vf = oblique_components(np.asarray(v, float), e, f)
    ne, nf = np.linalg.norm(ve), np.linalg.norm(vf)
    if nf == 0.0:
        return ne == 0.0
    return bool(ne <= cone.width * nf)


def cone_width_of(v, e, f):
    """Width ||v_E||/||v_F|| of a single vector; inf when v_F vanishes."""
    ve, vf = oblique_components(v, e, f)
    nf = np.linalg.norm(vf)
    if nf == 0.0:
        return np.inf
    return float(np.linalg.norm(ve) / nf)


def check_avg_domination(cocycle, gamma, n=None):
    """Certify prod_{j=0}^{i-1} ||Df|E(f^j x)|| / mininorm(Df|F(f^j x)) <= gamma^i.

    The product is 0-based, so the cocycle must carry entry 0 (request
    cocycle_logs with include_zero=True).  Returns a DominationCertificate,
    or raises HypothesisViolated naming the first failing i.
    """
    if not isinstance(cocycle, CocycleLog):
        raise TypeError("expected a CocycleLog")
    if cocycle.start != 0:
        raise HypothesisViolated(
            "average-domination products start at the orbit's entry 0; "
            "build the cocycle with include_zero=True")
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    avail = len(cocycle.log_e)
    n = avail if n is None else int(n)
    if n > avail:
        raise ValueError(f"n = {n} exceeds the {avail} available entries")
    step_logs = (np.asarray(cocycle.log_e[:n], np.longdouble)
                 + np.asarray(cocycle.log_f_inv[:n], np.longdouble))
    cum = np.cumsum(step_logs)
    bound = np.log(np.longdouble(gamma)) * np.arange(1, n + 1, dtype=np.longdouble)
    bad = np.argwhere(cum > bound + 1e-12)
    if bad.size:
        i = int(bad[0][0]) + 1
        raise HypothesisViolated(
            f"domination fails at i = {i}: log-product {float(cum[i - 1]):.6f} "
            f"> i*log(gamma) = {float(bound[i - 1]):.6f}")
    return DominationCertificate(gamma=float(gamma), n=n,
                                 ratios=np.exp(cum).astype(float),
                                 base=cocycle.base)


def cone_width_bound(a, gamma, i):
    """Width ceiling gamma^i * a for the i-th image of a width-a cone."""
    if not (a > 0 and 0 < gamma):
        raise ValueError("need a > 0 and gamma > 0")
    if i < 0:
        raise ValueError("i must be nonnegative")
    return float(gamma ** i * a)


def verify_cone_contraction(sys, x, a, gamma, n, samples=16, seed=5):
    """Push cone-boundary vectors through Df^i and compare widths to gamma^i a.

    Samples unit vectors on the width-a boundary at x (||v_E|| = a ||v_F||),
    transports them along the orbit, and measures the width of each image in
    the splitting at f^i(x).  Returns the (n,) array of worst ratios
    width_i / (gamma^i * a); a certificate-consistent run stays <= 1 + tol.
    """
    coords = np.asarray(getattr(x, "coords", x), float)
    rows = orbit_coords(sys, coords[None, :], n)
    e_fr, f_fr = splitting_frames_along_orbit(sys, rows)
    e0, f0 = Subspace(e_fr[0, 0]), Subspace(f_fr[0, 0])
    rng = np.random.default_rng(seed)
    vs = []
    for _ in range(samples):
        ce = rng.standard_normal(e0.dim)
        cf = rng.standard_normal(f0.dim)
        ve = e0.frame @ (ce / np.linalg.norm(ce))
        vf = f0.frame @ (cf / np.linalg.norm(cf))
        vs.append(a * ve + vf)
    vecs = np.stack(vs, axis=0)
    worst = np.empty(n, float)
    for i in range(1, n + 1):
        t = sys.tangent(rows[i - 1, 0])
        vecs = vecs @ t.T
        e_i, f_i = Subspace(e_fr[i, 0]), Subspace(f_fr[i, 0])
        widths = [cone_width_of(v, e_i, f_i) for v in vecs]
        worst[i - 1] = max(widths) / cone_width_bound(a, gamma, i)
    return worst


def domination_robustness_radius(sys, gamma1, gamma2, grid_per_axis=24,
                                 safety=2.0):
    """Largest certified radius r keeping perturbed ratios inside
    [sqrt(gamma1/gamma2), sqrt(gamma2/gamma1)].

    pre: gamma1 < gamma2 (the slack pays for the perturbation).
    Scans a grid for the per-step quantities log||Df|E|| and
    log mininorm(Df|F), measures their modulus of continuity via adjacent
    grid differences, and returns bound / (safety * worst_slope), capped at
    the chart diameter.  Raises EmptyRadius when even one grid step already
    moves some quantity past the bound.
    """
    if not (0.0 < gamma1 < gamma2):
        raise ValueError("need 0 < gamma1 < gamma2")
    bound = 0.5 * float(np.log(gamma2 / gamma1))

    chart = sys.chart
    lo = np.asarray(chart.lower, float)
    hi = np.asarray(chart.upper, float)
    axes = [np.linspace(lo[j], hi[j], grid_per_axis, endpoint=False)
            if chart.periodic[j] else
            np.linspace(lo[j], hi[j], grid_per_axis)
            for j in range(chart.dim)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    pts = mesh.reshape(-1, chart.dim)
    keep = sys.in_region(pts)

    t = sys.tangent(pts)
    e, f = splitting_frames_along_orbit(sys, pts[None, ...])
    e, f = e[0], f[0]
    log_e = np.log(np.linalg.svd(t @ e, compute_uv=False)[..., 0])
    img_f = t @ f
    if f.shape[-1] == 1:
        log_f = np.log(np.linalg.norm(img_f[..., 0], axis=-1))
    else:
        log_f = np.log(np.linalg.svd(img_f, compute_uv=False)[..., -1])

    shape = mesh.shape[:-1]
    worst_slope = 0.0
    finest_jump = 0.0
    for vals in (log_e.reshape(shape), log_f.reshape(shape)):
        mask = keep.reshape(shape)
        for j in range(chart.dim):
            step = (hi[j] - lo[j]) / (grid_per_axis if chart.periodic[j]
                                      else grid_per_axis - 1)
            if chart.periodic[j]:
                nxt = np.roll(vals, -1, axis=j)
                ok = mask & np.roll(mask, -1, axis=j)
            else:
                nxt = np.roll(vals, -1, axis=j)
                sl = [slice(None)] * chart.dim
                sl[j] = slice(0, -1)
                ok = np.zeros_like(mask)
                ok[tuple(sl)] = True
                ok &= mask & np.roll(mask, -1, axis=j)
            diffs = np.abs(nxt - vals)[ok]
            if diffs.size == 0:
                continue
            jump = float(np.max(diffs))
            finest_jump = max(finest_jump, jump)
            worst_slope = max(worst_slope, jump / step)

    if finest_jump > bound:
        raise EmptyRadius(
            f"a single grid step already moves a ratio by {finest_jump:.4g} "
            f"> bound {bound:.4g}; no positive radius certifiable at this grid")
    if worst_slope == 0.0:
        return chart.diameter
    return float(min(bound / (safety * worst_slope), chart.diameter))
