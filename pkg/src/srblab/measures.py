"""Empirical measures from disk pushforwards and their diagnostics.

mu_n is the Cesaro average of forward pushes of a disk's normalized
intrinsic volume: atoms f^i(y_s) for 0 <= i < n, each carrying the initial
cell weight of its sample divided by n.  Weights are only relabeled, never
rescaled, so the total is conserved exactly and the invariance defect of
mu_n telescopes to a boundary term of size 2B/n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ZeroMass
from .pliss import hyperbolic_times, lambda_membership_batch
from .systems import cocycle_logs_batch, orbit_coords


@dataclass
class Observable:
    """A bounded test function; fn is vectorized over (..., dim) coords."""

    name: str
    fn: callable
    bound: float
    reference_integral: float = None
    reference_note: str = ""

    def __call__(self, coords):
        c = np.asarray(getattr(coords, "coords", coords), float)
        return self.fn(c)


@dataclass
class EmpiricalMeasure:
    """Weighted atoms on a chart; sub-probability totals are allowed."""

    coords: np.ndarray     # (M, dim)
    weights: np.ndarray    # (M,)
    chart: object
    total: float

    def __post_init__(self):
        self.coords = np.asarray(self.coords, float)
        self.weights = np.asarray(self.weights, float)
        if np.any(self.weights < 0):
            raise ValueError("atom weights must be nonnegative")
        s = math.fsum(self.weights.tolist())
        if abs(s - self.total) > 1e-12:
            raise ValueError(
                f"weights sum to {s}, declared total {self.total}")
        if not (0.0 < self.total <= 1.0 + 1e-12):
            raise ValueError(f"total {self.total} outside (0, 1]")

    @property
    def n_atoms(self):
        return len(self.weights)

    def atoms(self):
        for c, w in zip(self.coords, self.weights):
            yield c, float(w)

    def integrate(self, obs):
        """Exactly-rounded integral of the observable against the measure."""
        vals = np.asarray(obs(self.coords), float) * self.weights
        return math.fsum(vals.tolist())


def default_observables(chart, per_axis=4):
    """Trigonometric characters per periodic axis, capped-coordinate tests on
    box axes; the default family has per_axis tests for every coordinate."""
    obs = []
    for j in range(chart.dim):
        w = chart.widths[j]
        lo = chart.lower[j]
        if chart.periodic[j]:
            for k in range(1, per_axis // 2 + 1):
                freq = 2.0 * np.pi * k / w
                obs.append(Observable(
                    name=f"cos{k}_x{j}",
                    fn=(lambda c, j=j, freq=freq, lo=lo:
                        np.cos(freq * (c[..., j] - lo))),
                    bound=1.0, reference_integral=0.0,
                    reference_note="character integral over a full period"))
                obs.append(Observable(
                    name=f"sin{k}_x{j}",
                    fn=(lambda c, j=j, freq=freq, lo=lo:
                        np.sin(freq * (c[..., j] - lo))),
                    bound=1.0, reference_integral=0.0,
                    reference_note="character integral over a full period"))
        else:
            half = w / 2.0
            mid = lo + half
            obs.append(Observable(
                name=f"lin_x{j}",
                fn=lambda c, j=j, mid=mid, half=half: (c[..., j] - mid) / half,
                bound=1.0))
            obs.append(Observable(
                name=f"quad_x{j}",
                fn=(lambda c, j=j, mid=mid, half=half:
                    ((c[..., j] - mid) / half) ** 2),
                bound=1.0))
            for k in range(1, per_axis // 2):
                freq = np.pi * k / half
                obs.append(Observable(
                    name=f"wave{k}_x{j}",
                    fn=(lambda c, j=j, freq=freq, mid=mid:
                        np.cos(freq * (c[..., j] - mid))),
                    bound=1.0))
    return obs


def disk_measure(d):
    """The disk's normalized intrinsic volume as a discrete measure."""
    return EmpiricalMeasure(coords=d.points(), weights=d.cell_weights(),
                            chart=d.chart, total=1.0)


def pushforward_average(sys, d, n):
    """mu_n: atoms f^i(y_s) for 0 <= i < n, weights w_s/n, total exactly 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    w = d.cell_weights()
    rows = orbit_coords(sys, d.points(), n - 1)
    coords = rows.reshape(-1, rows.shape[-1])
    weights = np.tile(w / n, n)
    # the float total of the relabeled weights, declared exactly
    total = math.fsum(weights.tolist())
    return EmpiricalMeasure(coords=coords, weights=weights, chart=sys.chart,
                            total=total)


def pushforward_measure(sys, mu):
    """f_* mu: the same weights on forward-mapped atoms."""
    return EmpiricalMeasure(coords=sys.forward(mu.coords),
                            weights=mu.weights.copy(), chart=mu.chart,
                            total=mu.total)


def pushforward_integrals(sys, d, n, tests):
    """Integrals of the tests against mu_n, streamed step by step.

    Equivalent to pushforward_average(...).integrate(t) for every t, but
    without materializing the n x samples atom array; usable at n = 10^5.
    Returns {test name: integral}.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    w = d.cell_weights()
    pts = d.points()
    acc = {t.name: [] for t in tests}
    for i in range(n):
        for t in tests:
            vals = np.asarray(t(pts), float) * w
            acc[t.name].append(math.fsum(vals.tolist()))
        if i < n - 1:
            pts = sys.forward(pts)
    return {name: math.fsum(vals) / n for name, vals in acc.items()}


def weak_star_distance(mu, nu, tests):
    """max over tests of |int t d(mu)/mu.total - int t d(nu)/nu.total|."""
    if not tests:
        raise ValueError("tests must be nonempty")
    if mu.total == 0.0 or nu.total == 0.0:
        raise ZeroMass("cannot normalize a zero-mass measure")
    worst = 0.0
    for t in tests:
        a = mu.integrate(t) / mu.total
        b = nu.integrate(t) / nu.total
        worst = max(worst, abs(a - b))
    return float(worst)


@dataclass(frozen=True)
class DefectReport:
    per_test: dict      # name -> |int t dmu_n - int t d f_* mu_n|
    bound: dict         # name -> 2 * bound / n
    n: int

    @property
    def max_excess(self):
        return max(self.per_test[k] - self.bound[k] for k in self.per_test)


def invariance_defect(sys, d, n, tests):
    """The Cesaro invariance defect of mu_n against each test.

    |int t d(f_* mu_n) - int t d(mu_n)| telescopes to
    |int t d(f^n_* mu_0) - int t d(mu_0)| / n <= 2 bound / n; both sides are
    reported per test.
    """
    mu = pushforward_average(sys, d, n)
    fmu = pushforward_measure(sys, mu)
    per = {}
    bound = {}
    for t in tests:
        per[t.name] = abs(fmu.integrate(t) / fmu.total
                          - mu.integrate(t) / mu.total)
        bound[t.name] = 2.0 * t.bound / n
    return DefectReport(per_test=per, bound=bound, n=n)


def select_disjoint_balls(dist, radius):
    """Greedy maximal packing from a pairwise distance matrix.

    Processes centers in index order; a center is selected iff its ball of
    the given radius is disjoint from every previously selected ball
    (distance > 2*radius).  Returns the selected indices.  By construction
    the balls are pairwise disjoint and every center lies within 2*radius of
    a selected one.
    """
    if radius <= 0:
        raise ValueError("radius must be > 0")
    dist = np.asarray(dist, float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise ValueError("dist must be a square pairwise-distance matrix")
    m = dist.shape[0]
    selected = []
    for i in range(m):
        if all(dist[i, j] > 2.0 * radius for j in selected):
            selected.append(i)
    return np.asarray(selected, dtype=int)


def packing_check(dist, radius, selected):
    """Verify disjointness and 2r-maximality of a packing; returns (ok, why)."""
    dist = np.asarray(dist, float)
    sel = list(selected)
    for a in range(len(sel)):
        for b in range(a + 1, len(sel)):
            if dist[sel[a], sel[b]] <= 2.0 * radius:
                return False, f"balls {sel[a]} and {sel[b]} intersect"
    for i in range(dist.shape[0]):
        if not any(dist[i, j] <= 2.0 * radius for j in sel):
            return False, f"center {i} is 2r-far from every selected ball"
    return True, ""


@dataclass(frozen=True)
class HyperbolicMassReport:
    eta: float             # accumulated selected-ball mass / n
    per_i: np.ndarray      # selected-ball mass at each step i (un-divided)
    lambda_mass: float     # disk volume of the finite-horizon membership set
    tau: float             # min over nonempty steps of captured/total mass
    floor: float           # tau * theta * lambda_mass (nan without theta)
    densities: np.ndarray  # per qualifying sample: hyperbolic-time density


def hyperbolic_mass(sys, d, n, sigma, r1, lam=None, theta=None, n_start=1):
    """Mass of mu_n captured by disjoint balls at hyperbolic-time images.

    For each 0 <= i < n: S_i = samples whose cocycle rows pass the lam
    long-run test (all samples when lam is None) and for which i is a
    sigma-hyperbolic time; their step-i images get a greedy packing by balls
    of radius r1/4 (chart metric: at useful horizons the stretched image's
    intrinsic metric only exceeds it, so chart-disjoint is the conservative
    side), and the mass of S_i samples inside selected balls accumulates.
    eta is the grand total over i divided by n.
    """
    if not (0.0 < sigma < 1.0):
        raise ValueError("sigma must be in (0, 1)")
    if r1 <= 0:
        raise ValueError("r1 must be > 0")
    w = d.cell_weights()
    pts = d.points()
    rows = orbit_coords(sys, pts, n)
    _, log_f_inv = cocycle_logs_batch(sys, pts, n)

    if lam is not None:
        member = lambda_membership_batch(log_f_inv, lam, n_start=n_start)
    else:
        member = np.ones(len(w), bool)
    lambda_mass = float(math.fsum(w[member].tolist()))

    hyp = np.zeros((len(w), n + 1), bool)
    densities = []
    for s in range(len(w)):
        if not member[s]:
            continue
        times = hyperbolic_times(log_f_inv[s], sigma).times
        hyp[s, times] = True
        densities.append(len(times) / float(n))

    per_i = np.zeros(n, float)
    captured_tot = 0.0
    avail_tot = 0.0
    tau = np.inf
    for i in range(n):
        in_set = member & hyp[:, i]
        idx = np.where(in_set)[0]
        if idx.size == 0:
            continue
        img = rows[i][idx]
        dist = sys.chart.distance(img[:, None, :], img[None, :, :])
        sel = select_disjoint_balls(dist, r1 / 4.0)
        near = (dist[:, sel] <= r1 / 4.0).any(axis=1)
        captured = float(math.fsum(w[idx[near]].tolist()))
        avail = float(math.fsum(w[idx].tolist()))
        per_i[i] = captured
        captured_tot += captured
        avail_tot += avail
        if avail > 0:
            tau = min(tau, captured / avail)
    eta = captured_tot / n
    tau = 0.0 if not np.isfinite(tau) else float(tau)
    floor = float(tau * theta * lambda_mass) if theta is not None else float("nan")
    return HyperbolicMassReport(eta=float(eta), per_i=per_i,
                                lambda_mass=lambda_mass, tau=tau, floor=floor,
                                densities=np.asarray(densities, float))


def birkhoff(sys, x, obs, n):
    """(1/n) sum of obs over the first n orbit points, exactly-rounded."""
    if n < 1:
        raise ValueError("n must be >= 1")
    coords = np.asarray(getattr(x, "coords", x), float)
    rows = orbit_coords(sys, coords, n - 1)
    vals = np.asarray(obs(rows), float)
    return math.fsum(vals.tolist()) / n


def _reference_integrals(mu_ref, tests):
    out = {}
    for t in tests:
        if isinstance(mu_ref, dict):
            out[t.name] = float(mu_ref[t.name])
        else:
            out[t.name] = mu_ref.integrate(t) / mu_ref.total
    return out


def physical_fraction(sys, region, mu_ref, tests, n, tol, samples,
                      seed=0, workers=1):
    """Fraction of quasi-uniform starts whose Birkhoff averages match mu_ref.

    region: (lower, upper) arrays, or None for the whole chart.  mu_ref: an
    EmpiricalMeasure or a {test name: integral} dict.  A start point counts
    iff every test's n-step average is within tol of the reference; orbits
    that leave the system region count as non-converged.  Results are
    independent of the worker count: samples are chunked, each sample's
    accumulation is elementwise, and chunk results are concatenated in order.
    """
    if samples < 100:
        raise ValueError("samples must be >= 100")
    if n < 1:
        raise ValueError("n must be >= 1")
    from .models import quasi_uniform
    lower, upper = (region if region is not None
                    else (sys.chart.lower, sys.chart.upper))
    pts = quasi_uniform(np.asarray(lower, float), np.asarray(upper, float),
                        samples, seed=seed,
                        accept=lambda c: sys.in_region(sys.chart.wrap(c)))
    pts = sys.chart.wrap(pts)
    ref = _reference_integrals(mu_ref, tests)

    def run_chunk(chunk):
        cur = chunk.copy()
        alive = sys.in_region(cur)
        sums = np.zeros((len(tests), len(cur)))
        for _ in range(n):
            for ti, t in enumerate(tests):
                sums[ti] += np.where(alive, np.asarray(t(cur), float), 0.0)
            nxt = sys.forward(cur)
            ok = sys.in_region(nxt)
            cur = np.where((alive & ok)[..., None], nxt, cur)
            alive = alive & ok
        avg = sums / n
        good = alive.copy()
        for ti, t in enumerate(tests):
            good &= np.abs(avg[ti] - ref[t.name]) <= tol
        return good

    workers = max(int(workers), 1)
    chunks = np.array_split(pts, min(workers, len(pts)))
    if workers == 1:
        parts = [run_chunk(c) for c in chunks]
    else:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, chunks))
    good = np.concatenate(parts)
    return float(np.count_nonzero(good) / samples)


def write_atoms(mu, path):
    """Columnar text serialization: one row per atom, coords then weight."""
    with open(path, "w") as fh:
        cols = [f"x{j}" for j in range(mu.coords.shape[1])] + ["weight"]
        fh.write(",".join(cols) + "\n")
        for c, w in zip(mu.coords, mu.weights):
            row = [f"{v:.17g}" for v in c] + [f"{w:.17g}"]
            fh.write(",".join(row) + "\n")
