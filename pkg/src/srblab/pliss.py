"""Good-time selection along finite orbit segments.

The three workhorses:

* pliss_times   -- indices where every lookback window of a bounded sequence
                   keeps its average above a threshold (linear-time scan).
* hyperbolic_times -- indices n where every trailing window product of the
                   F-restricted inverse norms is below sigma^k.
* first_nonneg_shift -- the smallest start index from which all tail partial
                   sums are nonnegative, given that full prefix sums are
                   eventually nonnegative.

Prefix sums are accumulated in extended precision so that detection at
horizons ~1e5 is not at the mercy of float64 cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HypothesisViolated


@dataclass(frozen=True)
class PlissParams:
    """Thresholds c0 >= c1 > c2 >= 0 for the selection lemma."""

    c0: float
    c1: float
    c2: float

    def __post_init__(self):
        if not (self.c0 >= self.c1 > self.c2 >= 0.0):
            raise ValueError(
                f"need c0 >= c1 > c2 >= 0, got {self.c0}, {self.c1}, {self.c2}")

    @property
    def theta(self):
        return (self.c1 - self.c2) / (self.c0 - self.c2)


@dataclass(frozen=True)
class HyperbolicTimeReport:
    """Detected contraction-certified times and their density."""

    times: np.ndarray   # ascending, 1-based orbit indices
    sigma: float
    density: float


def _prefix(values):
    """S(0..N) with S(0) = 0, accumulated in extended precision."""
    v = np.asarray(values, dtype=np.longdouble)
    s = np.empty(len(v) + 1, dtype=np.longdouble)
    s[0] = 0.0
    np.cumsum(v, out=s[1:])
    return s


def pliss_times(b, params):
    """Indices n_i (1-based) whose every lookback window averages >= c2.

    pre: b_j <= c0 for all j, and sum(b) >= c1 * N.
    post: for each returned n_i and every 0 <= n < n_i,
          sum(b[n+1..n_i]) >= c2 * (n_i - n); the count exceeds theta * N
          with theta = (c1 - c2)/(c0 - c2).

    Linear time: n qualifies iff the adjusted prefix sum T(n) = S(n) - n*c2
    is a running maximum of T(0..n).
    """
    b = np.asarray(b, float)
    n_len = len(b)
    if n_len == 0:
        raise ValueError("empty sequence")
    bad = np.argwhere(b > params.c0 + 1e-12)
    if bad.size:
        raise HypothesisViolated(
            f"b[{bad[0][0] + 1}] = {b[bad[0][0]]} exceeds c0 = {params.c0}")
    total = float(np.sum(np.asarray(b, np.longdouble)))
    if total < params.c1 * n_len - 1e-9:
        raise HypothesisViolated(
            f"sum(b) = {total} below c1*N = {params.c1 * n_len}")
    t = _prefix(b) - params.c2 * np.arange(n_len + 1, dtype=np.longdouble)
    out = []
    running = t[0]
    for n in range(1, n_len + 1):
        if t[n] >= running:
            out.append(n)
        running = max(running, t[n])
    return np.asarray(out, dtype=int)


def hyperbolic_times(log_f_inv, sigma):
    """Times n where every trailing window sum of log_f_inv is <= k log sigma.

    The array is read 1-based: entry p is orbit index p+1.  n qualifies iff
    S(n) - S(n-k) <= k log(sigma) for all 1 <= k <= n, detected in linear
    time via running minima of U(m) = S(m) - m log(sigma).
    """
    if not (0.0 < sigma < 1.0):
        raise ValueError(f"sigma must be in (0, 1), got {sigma}")
    a = np.asarray(log_f_inv, float)
    n_len = len(a)
    # threshold in double first, then upcast: ties are decided in the same
    # precision the caller's entries live in, accumulation in extended
    u = _prefix(a) - np.longdouble(np.log(sigma)) * np.arange(
        n_len + 1, dtype=np.longdouble)
    times = []
    running_min = u[0]
    for n in range(1, n_len + 1):
        if u[n] <= running_min:
            times.append(n)
        running_min = min(running_min, u[n])
    times = np.asarray(times, dtype=int)
    return HyperbolicTimeReport(times=times, sigma=float(sigma),
                                density=len(times) / n_len if n_len else 0.0)


def first_nonneg_shift(a, n_good):
    """Smallest k such that every tail sum a[k..n], k <= n <= N, is >= 0.

    pre: prefix sums S(n) >= 0 for all n_good <= n <= N.
    The first argmin of S over 0..n_good, plus one, is both valid and
    minimal: any earlier valid start would tie the argmin earlier, and k-1
    always fails immediately (strict drop into the argmin).
    """
    a = np.asarray(a, float)
    n_len = len(a)
    if not (1 <= n_good <= n_len):
        raise ValueError(f"n_good = {n_good} outside 1..{n_len}")
    s = _prefix(a)
    bad = [n for n in range(n_good, n_len + 1) if s[n] < -1e-12]
    if bad:
        raise HypothesisViolated(
            f"prefix sum at n = {bad[0]} is {float(s[bad[0]])} < 0 "
            f"despite n >= n_good = {n_good}")
    window = s[: n_good + 1]
    k = int(np.argmin(window)) + 1
    return k


def lambda_membership(log_f_inv, lam, n_start=1):
    """True iff every prefix average from n_start on stays <= log(lam).

    The array is read 1-based; checks (1/n) sum_{j=1..n} log_f_inv[j]
    <= log(lam) for all n_start <= n <= N.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    a = np.asarray(log_f_inv, float)
    n_len = len(a)
    if not (1 <= n_start <= n_len):
        raise ValueError(f"n_start = {n_start} outside 1..{n_len}")
    s = _prefix(a)
    ns = np.arange(n_start, n_len + 1, dtype=np.longdouble)
    return bool(np.all(s[n_start:] <= np.longdouble(np.log(lam)) * ns))


def lambda_membership_batch(log_f_inv_rows, lam, n_start=1):
    """Vectorized lambda_membership over rows of a (N, horizon) array."""
    a = np.asarray(log_f_inv_rows, dtype=np.longdouble)
    s = np.cumsum(a, axis=1)
    ns = np.arange(1, a.shape[1] + 1, dtype=np.longdouble)
    ok = s <= np.longdouble(np.log(lam)) * ns
    return np.all(ok[:, n_start - 1:], axis=1)


def density_theta(sigma1, sigma2, c0):
    """Guaranteed density of sigma2-hyperbolic times on sigma1-average orbits.

    theta = (log sigma2 - log sigma1) / (log sigma2 + c0): the selection
    lemma's (c1 - c2)/(c0 - c2) with c1 = -log sigma1, c2 = -log sigma2.
    """
    if not (0.0 < sigma1 < sigma2 < 1.0):
        raise HypothesisViolated(
            f"need 0 < sigma1 < sigma2 < 1, got {sigma1}, {sigma2}")
    c1 = -np.log(sigma1)
    c2 = -np.log(sigma2)
    if c0 < c1 - 1e-15:
        raise HypothesisViolated(f"c0 = {c0} must dominate -log sigma1 = {c1}")
    return float((c1 - c2) / (c0 - c2))
