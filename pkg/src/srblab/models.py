"""Model zoo: four concrete systems with known or measurable ground truth.

cat            -- the linear torus automorphism [[2,1],[1,1]]; everything exact.
perturbed_cat  -- cat plus an eps*sin shear in the first coordinate; splitting
                  recovered by cone iteration.
solenoid       -- angle-doubling solid-torus contraction; fiber plane exactly
                  invariant, unstable line converged.
dfa            -- cat deformed near its fixed point so the unstable multiplier
                  interpolates from 1+delta at the origin back to the linear
                  value outside radius rho; the non-uniform showcase.

`measure_constants_h` turns sampled derivative data into a constant chain
0 < l1 < l1 e^eps0 < l2 < l3 < 1 or explains why none exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .charts import Chart, torus_chart
from .errors import ChainInfeasible, ConstructionFailed, NoConvergence
from .linalg import (Subspace, restricted_mininorm, restricted_norm,
                     subspace_distance)
from .pliss import lambda_membership_batch
from .systems import (ConstantsH, ConvergedSplitting, ExactSplitting,
                      MapSystem, SystemConstants, cocycle_logs_batch,
                      orbit_coords, splitting_frames_along_orbit)

LAMBDA_U = (3.0 + np.sqrt(5.0)) / 2.0
LAMBDA_S = (3.0 - np.sqrt(5.0)) / 2.0
CAT_MATRIX = np.array([[2.0, 1.0], [1.0, 1.0]])
CAT_INVERSE = np.array([[1.0, -1.0], [-1.0, 2.0]])

_GOLDEN = 0.6180339887498949


def _unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


CAT_UNSTABLE = _unit([1.0, LAMBDA_U - 2.0])
CAT_STABLE = _unit([1.0, LAMBDA_S - 2.0])


@dataclass(frozen=True)
class ModelSpec:
    """Name plus parameters, as they appear in experiment configs."""

    name: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GridSpec:
    """Sampling budget for constant measurement."""

    points: int = 400
    orbit_count: int = 200
    horizon: int = 400
    burn_in: int = 30
    seed: int = 7
    quantile: float = 0.9
    margin: float = 0.01


MODEL_INFO = {
    "cat": {
        "params": {},
        "doc": "linear torus automorphism [[2,1],[1,1]]; exact splitting",
    },
    "perturbed_cat": {
        "params": {"eps": 0.01},
        "doc": "cat + eps*(sin(2*pi*x1), 0); eps in [0, 0.05]; converged splitting",
    },
    "solenoid": {
        "params": {"c": 0.25, "d": 0.5},
        "doc": "(phi, w) -> (2 phi, c w + d e^{i phi}) on the solid torus; "
               "0 < c < 1/2, c < d, c + d < 1",
    },
    "dfa": {
        "params": {"delta": 0.05, "rho": 0.2},
        "doc": "cat deformed near its fixed point: unstable multiplier 1+delta "
               "at the origin, linear outside radius rho",
    },
}


def _constant_matrix_fns(a):
    a = np.asarray(a, float)
    ainv = np.linalg.inv(a)

    def forward(c, chart):
        return chart.wrap(np.einsum("ij,...j->...i", a, c))

    def inverse(c, chart):
        return chart.wrap(np.einsum("ij,...j->...i", ainv, c))

    def tangent(c):
        c = np.asarray(c, float)
        return np.broadcast_to(a, c.shape[:-1] + a.shape).copy()

    return forward, inverse, tangent


def linear_torus_system(matrix, e_dirs, f_dirs, name="linear"):
    """A torus automorphism with a declared constant splitting.

    Intended for exact baselines: any integer unimodular matrix works, in any
    dimension.  e_dirs / f_dirs are spanning columns for the two bundles.
    """
    a = np.asarray(matrix, float)
    if abs(abs(np.linalg.det(a)) - 1.0) > 1e-9:
        raise ConstructionFailed("torus automorphism needs |det| = 1")
    dim = a.shape[0]
    chart = torus_chart(dim, chart_id=f"torus{dim}")
    fwd, inv, tan = _constant_matrix_fns(a)
    e_frame = np.linalg.qr(np.atleast_2d(np.asarray(e_dirs, float).T).T)[0]
    f_frame = np.linalg.qr(np.atleast_2d(np.asarray(f_dirs, float).T).T)[0]

    def e_fn(c):
        return np.broadcast_to(e_frame, c.shape[:-1] + e_frame.shape).copy()

    def f_fn(c):
        return np.broadcast_to(f_frame, c.shape[:-1] + f_frame.shape).copy()

    sup_e = float(np.linalg.svd(a @ e_frame, compute_uv=False)[0])
    min_f = float(np.linalg.svd(a @ f_frame, compute_uv=False)[-1])
    consts = SystemConstants(
        b=min_f, c0=abs(float(np.log(min_f))), sup_e=sup_e,
        beta=1.0, xi=0.5,
        ground_truth={"matrix": a.tolist()})
    return MapSystem(
        name=name, chart=chart,
        forward=lambda c: fwd(c, chart),
        inverse=lambda c: inv(c, chart),
        tangent=tan,
        splitting=ExactSplitting(e_frame.shape[1], f_frame.shape[1], e_fn, f_fn),
        constants=consts)


def _build_cat():
    sys = linear_torus_system(CAT_MATRIX, CAT_STABLE, CAT_UNSTABLE, name="cat")
    sys.constants.ground_truth.update({
        "lambda_u": LAMBDA_U,
        "lambda_s": LAMBDA_S,
        "log_lambda_u": float(np.log(LAMBDA_U)),
    })
    sys.constants.xi = 0.5
    return sys


def _build_perturbed_cat(eps=0.01):
    if not (0.0 <= eps <= 0.05):
        raise ConstructionFailed(f"eps = {eps} outside [0, 0.05]")
    chart = torus_chart(2)
    two_pi = 2.0 * np.pi

    def forward(c):
        c = np.asarray(c, float)
        lin = np.einsum("ij,...j->...i", CAT_MATRIX, c)
        lin[..., 0] += eps * np.sin(two_pi * c[..., 0])
        return chart.wrap(lin)

    def inverse(y):
        y = np.asarray(y, float)
        x = chart.wrap(np.einsum("ij,...j->...i", CAT_INVERSE, y))
        for _ in range(80):
            rhs = np.array(y, copy=True)
            rhs[..., 0] -= eps * np.sin(two_pi * x[..., 0])
            nxt = chart.wrap(np.einsum("ij,...j->...i", CAT_INVERSE, rhs))
            step = np.max(chart.distance(nxt, x)) if nxt.size else 0.0
            x = nxt
            if step < 1e-15:
                break
        return x

    def tangent(c):
        c = np.asarray(c, float)
        t = np.broadcast_to(CAT_MATRIX, c.shape[:-1] + (2, 2)).copy()
        t[..., 0, 0] += eps * two_pi * np.cos(two_pi * c[..., 0])
        return t

    splitting = ConvergedSplitting(1, 1, forward, inverse, tangent, depth=40)
    consts = SystemConstants(beta=0.5, xi=0.5,
                             ground_truth={"eps": eps})
    return MapSystem(name="perturbed_cat", chart=chart, forward=forward,
                     inverse=inverse, tangent=tangent, splitting=splitting,
                     constants=consts)


def _build_solenoid(c=0.25, d=0.5):
    if not (0.0 < c < 0.5):
        raise ConstructionFailed(f"c = {c} outside (0, 1/2)")
    if not (d > c):
        raise ConstructionFailed(f"need d > c for injectivity, got d = {d}, c = {c}")
    if not (c + d < 1.0):
        raise ConstructionFailed(f"need c + d < 1 for trapping, got {c + d}")
    two_pi = 2.0 * np.pi
    chart = Chart("solenoid", (0.0, -1.6, -1.6), (two_pi, 1.6, 1.6),
                  (True, False, False))

    def forward(x):
        x = np.asarray(x, float)
        out = np.empty_like(x)
        out[..., 0] = np.mod(2.0 * x[..., 0], two_pi)
        out[..., 1] = c * x[..., 1] + d * np.cos(x[..., 0])
        out[..., 2] = c * x[..., 2] + d * np.sin(x[..., 0])
        return out

    def inverse(y):
        y = np.asarray(y, float)
        half = y[..., 0] / 2.0
        cand = np.stack([half, np.mod(half + np.pi, two_pi)], axis=-1)
        best = np.empty_like(y)
        w2 = np.full(y.shape[:-1], np.inf)
        for k in range(2):
            phi = cand[..., k]
            u = (y[..., 1] - d * np.cos(phi)) / c
            v = (y[..., 2] - d * np.sin(phi)) / c
            r2 = u * u + v * v
            take = r2 < w2
            w2 = np.where(take, r2, w2)
            best[..., 0] = np.where(take, phi, best[..., 0])
            best[..., 1] = np.where(take, u, best[..., 1])
            best[..., 2] = np.where(take, v, best[..., 2])
        return best

    def tangent(x):
        x = np.asarray(x, float)
        t = np.zeros(x.shape[:-1] + (3, 3), float)
        t[..., 0, 0] = 2.0
        t[..., 1, 0] = -d * np.sin(x[..., 0])
        t[..., 1, 1] = c
        t[..., 2, 0] = d * np.cos(x[..., 0])
        t[..., 2, 2] = c
        return t

    e_frame = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    def exact_e(coords):
        coords = np.asarray(coords, float)
        return np.broadcast_to(e_frame, coords.shape[:-1] + (3, 2)).copy()

    splitting = ConvergedSplitting(2, 1, forward, inverse, tangent, depth=40,
                                   exact_e=exact_e)

    def region(coords):
        coords = np.asarray(coords, float)
        return coords[..., 1] ** 2 + coords[..., 2] ** 2 <= 1.0 + 1e-9

    consts = SystemConstants(sup_e=c, beta=0.5, xi=0.5,
                             ground_truth={"c": c, "d": d,
                                           "log_e": float(np.log(c)),
                                           "base_factor": 2.0})
    return MapSystem(name="solenoid", chart=chart, forward=forward,
                     inverse=inverse, tangent=tangent, splitting=splitting,
                     constants=consts, region_contains=region)


def _build_dfa(delta=0.05, rho=0.2):
    if not (0.0 < delta <= 0.5):
        raise ConstructionFailed(f"delta = {delta} outside (0, 0.5]")
    if not (0.05 <= rho <= 0.45):
        raise ConstructionFailed(f"rho = {rho} outside [0.05, 0.45]")
    chart = torus_chart(2)
    nu = 1.0 - (1.0 + delta) / LAMBDA_U
    vs, vu = CAT_STABLE, CAT_UNSTABLE

    def _eig_coords(y):
        # displacement of y from the fixed point, in (stable, unstable) coords
        z = chart.displacement(np.zeros_like(y), y)
        return z @ vs, z @ vu

    def _deform(y):
        """The radial unstable-coordinate squeeze h; identity outside the ball."""
        s, u = _eig_coords(y)
        r2 = (s * s + u * u) / rho ** 2
        inside = r2 < 1.0
        m = np.where(inside, 1.0 - nu * (1.0 - r2) ** 3, 1.0)
        unew = u * m
        out = np.asarray(y, float) + np.multiply.outer(unew - u, vu)
        return chart.wrap(out)

    def _deform_tangent(y):
        s, u = _eig_coords(y)
        r2 = (s * s + u * u) / rho ** 2
        inside = r2 < 1.0
        one_m_r2 = np.where(inside, 1.0 - r2, 0.0)
        m = 1.0 - nu * one_m_r2 ** 3
        dm_dr2 = 3.0 * nu * one_m_r2 ** 2
        du_ds = np.where(inside, u * dm_dr2 * (2.0 * s / rho ** 2), 0.0)
        du_du = np.where(inside, m + u * dm_dr2 * (2.0 * u / rho ** 2), 1.0)
        shape = np.shape(s)
        t = np.zeros(shape + (2, 2), float)
        t[..., 0, 0] = 1.0
        t[..., 1, 0] = du_ds
        t[..., 1, 1] = du_du
        v = np.stack([vs, vu], axis=1)   # columns: eig basis (orthogonal)
        return np.einsum("ij,...jk,lk->...il", v, t, v)

    def _deform_inverse(y):
        s, uprime = _eig_coords(y)
        r2y = (s * s + uprime * uprime) / rho ** 2
        inside = r2y < 1.0
        bnd = np.sqrt(np.clip(rho ** 2 - s * s, 0.0, None))
        u = np.array(uprime, copy=True)
        for _ in range(60):
            r2 = (s * s + u * u) / rho ** 2
            one_m_r2 = np.clip(1.0 - r2, 0.0, None)
            m = 1.0 - nu * one_m_r2 ** 3
            g = u * m
            gp = m + u * (3.0 * nu * one_m_r2 ** 2) * (2.0 * u / rho ** 2)
            step = np.where(inside, (g - uprime) / gp, 0.0)
            u = np.where(inside, np.clip(u - step, -bnd, bnd), u)
            if np.max(np.abs(step)) < 1e-15:
                break
        out = np.asarray(y, float) + np.multiply.outer(
            np.where(inside, u - uprime, 0.0), vu)
        return chart.wrap(out)

    def forward(x):
        x = np.asarray(x, float)
        lin = chart.wrap(np.einsum("ij,...j->...i", CAT_MATRIX, x))
        return _deform(lin)

    def inverse(y):
        mid = _deform_inverse(np.asarray(y, float))
        return chart.wrap(np.einsum("ij,...j->...i", CAT_INVERSE, mid))

    def tangent(x):
        x = np.asarray(x, float)
        lin = chart.wrap(np.einsum("ij,...j->...i", CAT_MATRIX, x))
        dh = _deform_tangent(lin)
        return dh @ CAT_MATRIX

    # construction-time sanity: Jacobian determinant bounded away from zero
    gg = np.linspace(-rho, rho, 41)
    mesh = np.stack(np.meshgrid(gg, gg, indexing="ij"), axis=-1).reshape(-1, 2)
    dets = np.linalg.det(_deform_tangent(chart.wrap(mesh)))
    if np.min(dets) < 0.05:
        raise ConstructionFailed(
            f"deformation Jacobian dips to {np.min(dets):.3g}; "
            f"reduce delta or enlarge rho")

    splitting = ConvergedSplitting(1, 1, forward, inverse, tangent, depth=40)
    consts = SystemConstants(beta=0.5, xi=1.0,
                             ground_truth={
                                 "delta": delta, "rho": rho,
                                 "unstable_multiplier_at_p0": 1.0 + delta,
                             })
    return MapSystem(name="dfa", chart=chart, forward=forward, inverse=inverse,
                     tangent=tangent, splitting=splitting, constants=consts)


_BUILDERS = {
    "cat": _build_cat,
    "perturbed_cat": _build_perturbed_cat,
    "solenoid": _build_solenoid,
    "dfa": _build_dfa,
}


def build(spec, **params):
    """Instantiate a zoo model from a ModelSpec or a bare name + params."""
    if isinstance(spec, ModelSpec):
        name, params = spec.name, dict(spec.params)
    else:
        name = spec
    if name not in _BUILDERS:
        raise ConstructionFailed(
            f"unknown model {name!r}; choose from {sorted(_BUILDERS)}")
    try:
        return _BUILDERS[name](**params)
    except TypeError as exc:
        raise ConstructionFailed(f"bad parameters for {name}: {exc}") from None


def quasi_uniform(lower, upper, count, seed=0, accept=None):
    """Low-discrepancy points in a box (Halton plus an irrational offset,
    which keeps the sequence off dyadic-rational artifacts of linear maps).

    accept: optional boolean predicate on (..., dim) coords; candidates
    failing it are skipped.  Deterministic in (count, seed).
    """
    lo = np.asarray(lower, float)
    hi = np.asarray(upper, float)
    dim = len(lo)
    sampler = qmc.Halton(d=dim, scramble=False, seed=seed)
    offset = np.mod(_GOLDEN * (np.arange(dim) + 1)
                    + 0.123456789 * (seed + 1), 1.0)
    pts = []
    while len(pts) < count:
        raw = sampler.random(max(count, 64))
        cand = lo + np.mod(raw + offset, 1.0) * (hi - lo)
        ok = accept(cand) if accept is not None else np.ones(len(cand), bool)
        for row in cand[ok]:
            pts.append(row)
            if len(pts) == count:
                break
    return np.asarray(pts, float)


def region_sample(sys, count, seed=0, burn_in=0):
    """Quasi-uniform points of the system's region.

    Points are optionally burned forward a few steps, which for dissipative
    models lands them near the attractor.  Deterministic in (count, seed).
    """
    chart = sys.chart

    def accept(cand):
        return sys.in_region(chart.wrap(cand))

    pts = chart.wrap(quasi_uniform(chart.lower, chart.upper, count,
                                   seed=seed, accept=accept))
    if burn_in > 0:
        pts = orbit_coords(sys, pts, burn_in)[-1]
    return pts


def converge_splitting(sys, x, depth=None):
    """(E, F, residual) at x, refined to the requested depth.

    residual is the worst invariance defect over the two bundles:
    subspace_distance(span(Df(x) B(x)), B(f(x))).  Raises NoConvergence when
    deepening from depth/2 to depth failed to improve a residual that is
    still above the float floor.
    """
    coords = np.asarray(getattr(x, "coords", x), float)
    sp = sys.splitting
    depth = depth or getattr(sp, "depth", 40)

    def frames_at(c, dep):
        if sp.kind == "exact":
            return sp.e_frames(c), sp.f_frames(c)
        return sp.e_frames(c, depth=dep), sp.f_frames(c, depth=dep)

    def residual_at(dep):
        e0, f0 = frames_at(coords, dep)
        fx = sys.forward(coords)
        e1, f1 = frames_at(fx, dep)
        t = sys.tangent(coords)
        res_e = subspace_distance(Subspace(np.linalg.qr(t @ e0)[0]), Subspace(e1))
        res_f = subspace_distance(Subspace(np.linalg.qr(t @ f0)[0]), Subspace(f1))
        return max(res_e, res_f)

    res = residual_at(depth)
    if sp.kind != "exact" and res > 1e-12:
        res_half = residual_at(max(depth // 2, 1))
        if res > res_half:
            raise NoConvergence(
                f"residual {res:.3e} at depth {depth} worse than "
                f"{res_half:.3e} at depth {depth // 2}")
    e, f = frames_at(coords, depth)
    return Subspace(e), Subspace(f), float(res)


def measure_constants_h(sys, grid=None, xi=None):
    """Measure (H)-style constants on a sampled region and pick a valid chain.

    eps0 is the smallest margin-padded value compatible with every chain
    constraint: above log sup||Df|E||, above xi*log(b) (so the l3 slot stays
    above l2), and above zero.  lambda1 comes from the 0.9-quantile of
    long-run cocycle averages with 1% headroom; lambda2 sits at the geometric
    midpoint of its feasible window.  Raises ChainInfeasible with the
    measured numbers when the window is empty or F fails to expand on
    average.
    """
    grid = grid or GridSpec()
    xi = sys.constants.xi if xi is None else float(xi)
    pts = region_sample(sys, grid.points, seed=grid.seed, burn_in=grid.burn_in)

    t = sys.tangent(pts)
    e, f = splitting_frames_along_orbit(sys, pts[None, ...])
    e, f = e[0], f[0]
    img_e = t @ e
    sup_e = float(np.max(np.linalg.svd(img_e, compute_uv=False)[..., 0]))
    img_f = t @ f
    if f.shape[-1] == 1:
        mins = np.linalg.norm(img_f[..., 0], axis=-1)
    else:
        mins = np.linalg.svd(img_f, compute_uv=False)[..., -1]
    b = float(np.min(mins))
    c0 = float(np.max(np.abs(np.log(mins))))

    seeds = pts[: grid.orbit_count]
    _, lf = cocycle_logs_batch(sys, seeds, grid.horizon)
    averages = np.mean(lf, axis=1)
    q = float(np.quantile(averages, grid.quantile))
    lam1 = float(np.exp(q + grid.margin))
    if lam1 >= 1.0:
        raise ChainInfeasible(
            f"0.9-quantile of long-run averages is {q:.4f} >= -margin: "
            f"F does not expand on average, lambda1 = {lam1:.4f} >= 1")

    eps0 = max(np.log(sup_e), xi * np.log(b), 0.0) + grid.margin
    lo = lam1 * np.exp(eps0)
    hi = min(b ** xi * np.exp(-eps0), 1.0 - 1e-12)
    if not lo < hi:
        raise ChainInfeasible(
            f"no lambda2 window: lambda1*e^eps0 = {lo:.6f} >= "
            f"min(b^xi e^-eps0, 1) = {hi:.6f} "
            f"(b = {b:.6f}, sup_e = {sup_e:.6f}, xi = {xi}, eps0 = {eps0:.6f})")
    lam2 = float(np.sqrt(lo * hi))
    lam3 = float(lam2 * np.exp(eps0) / b ** xi)
    consts = ConstantsH(eps0=float(eps0), lambda1=lam1, lambda2=lam2,
                        lambda3=lam3, b=b, xi=xi)
    consts.validate()
    sys.constants.sup_e = sup_e
    if sys.constants.b is None:
        sys.constants.b = b
    if sys.constants.c0 is None:
        sys.constants.c0 = c0
    return consts


def lambda_fraction(sys, lam, horizon, count=400, seed=11, burn_in=0):
    """Fraction of sampled points whose finite-horizon prefix averages all
    stay below log(lam) — the sampling surrogate for membership mass."""
    pts = region_sample(sys, count, seed=seed, burn_in=burn_in)
    _, lf = cocycle_logs_batch(sys, pts, horizon)
    ok = lambda_membership_batch(lf, lam)
    return float(np.mean(ok)), pts[ok]
