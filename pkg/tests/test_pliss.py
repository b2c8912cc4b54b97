import numpy as np
import pytest

from srblab import (HypothesisViolated, PlissParams, density_theta,
                    first_nonneg_shift, hyperbolic_times, lambda_membership,
                    lambda_membership_batch, pliss_times)

from .conftest import LOG_LAM_U
from .oracles import (admissible_sequence, hyperbolic_oracle,
                      membership_oracle, pliss_oracle, shift_oracle)


class TestPlissTimes:
    def test_constant_sequence_selects_everything(self):
        p = PlissParams(c0=2.0, c1=1.2, c2=1.0)
        out = pliss_times(np.full(3, 1.2), p)
        assert list(out) == [1, 2, 3]

    def test_alternating_example(self):
        # windows ending at even indices dip to average 1 == c2 on the last
        # two entries only when they close at an odd peak
        p = PlissParams(c0=2.0, c1=1.2, c2=1.0)
        out = pliss_times(np.array([2.0, 0.0, 2.0, 0.0, 2.0]), p)
        assert list(out) == [1, 3, 5]
        assert len(out) > p.theta * 5

    def test_cat_cocycle_all_times(self, cat):
        b = np.full(100, LOG_LAM_U)
        out = pliss_times(b, PlissParams(c0=1.0, c1=0.96, c2=0.5))
        assert list(out) == list(range(1, 101))

    def test_hypothesis_ceiling_violation(self):
        p = PlissParams(c0=1.0, c1=0.5, c2=0.2)
        with pytest.raises(HypothesisViolated):
            pliss_times(np.array([0.4, 1.5, 0.4]), p)

    def test_hypothesis_mean_violation(self):
        p = PlissParams(c0=1.0, c1=0.9, c2=0.2)
        with pytest.raises(HypothesisViolated):
            pliss_times(np.array([0.5, 0.5, 0.5]), p)

    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            n = int(rng.integers(3, 65))
            c0 = float(rng.uniform(0.5, 2.0))
            c2 = float(rng.uniform(0.0, 0.4)) * c0
            c1 = float(rng.uniform(c2 + 0.1 * c0, 0.8 * c0))
            b = admissible_sequence(rng, c0, c1, n)
            got = pliss_times(b, PlissParams(c0, c1, c2))
            want = pliss_oracle(b, c2)
            assert np.array_equal(got, want)
            assert len(got) > (c1 - c2) / (c0 - c2) * n

    def test_theta_formula(self):
        p = PlissParams(c0=3.0, c1=2.0, c2=1.0)
        assert p.theta == pytest.approx(0.5)


class TestHyperbolicTimes:
    def test_uniformly_expanding_lists_everything(self):
        rep = hyperbolic_times(np.full(20, np.log(0.3)), 0.5)
        assert list(rep.times) == list(range(1, 21))
        assert rep.density == 1.0

    def test_two_entry_example(self):
        rep = hyperbolic_times(np.log(np.array([0.9, 0.1])), 0.5)
        assert list(rep.times) == [2]
        assert rep.density == 0.5

    def test_contracting_cocycle_is_empty(self):
        rep = hyperbolic_times(np.full(10, np.log(2.0)), 0.99)
        assert len(rep.times) == 0

    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(2, 65))
            v = rng.uniform(-1.0, 1.0, n) - rng.uniform(0.0, 0.5)
            sigma = float(rng.uniform(0.3, 0.95))
            got = hyperbolic_times(v, sigma).times
            want = hyperbolic_oracle(v, sigma)
            assert np.array_equal(got, want)

    def test_monotone_in_sigma(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            v = rng.uniform(-1.0, 0.3, int(rng.integers(4, 40)))
            small = set(hyperbolic_times(v, 0.4).times.tolist())
            large = set(hyperbolic_times(v, 0.7).times.tolist())
            assert small <= large

    def test_prefix_stability(self):
        # whether n qualifies depends only on entries 1..n
        rng = np.random.default_rng(13)
        for _ in range(200):
            v = rng.uniform(-1.0, 0.2, 30)
            full = set(hyperbolic_times(v, 0.6).times.tolist())
            head = set(hyperbolic_times(v[:17], 0.6).times.tolist())
            assert head == {n for n in full if n <= 17}

    def test_matches_pliss_selection(self):
        # the two selections are the same windows with flipped signs
        rng = np.random.default_rng(17)
        for _ in range(200):
            v = rng.uniform(-1.0, 0.5, 25)
            sigma = 0.55
            ht = hyperbolic_times(v, sigma).times
            po = pliss_oracle(-v, -np.log(sigma))
            assert np.array_equal(ht, po)


class TestFirstNonnegShift:
    def test_all_positive(self):
        assert first_nonneg_shift(np.ones(3), 1) == 1

    def test_skips_bad_head(self):
        assert first_nonneg_shift(np.array([-1.0, 2.0, -1.0, 1.0]), 2) == 2

    def test_argmin_choice(self):
        assert first_nonneg_shift(np.array([-3.0, 1.0, 1.0, 1.0, 1.0]), 5) == 2

    def test_precondition_violation(self):
        with pytest.raises(HypothesisViolated):
            first_nonneg_shift(np.array([-1.0, -1.0, 3.0]), 1)

    def test_exhaustive_oracle(self):
        rng = np.random.default_rng(23)
        done = 0
        while done < 300:
            n = int(rng.integers(2, 30))
            a = rng.uniform(-1.0, 1.2, n)
            n_good = int(rng.integers(1, n + 1))
            sums = np.cumsum(a)
            if np.any(sums[n_good - 1:] < 0.0):
                continue
            k = first_nonneg_shift(a, n_good)
            assert k == shift_oracle(a, n_good)
            done += 1


class TestLambdaMembership:
    def test_constant_cat_cocycle(self):
        v = np.full(50, -LOG_LAM_U)
        assert lambda_membership(v, 0.5, 1)

    def test_zero_cocycle_never_member(self):
        assert not lambda_membership(np.zeros(10), 0.9, 1)

    def test_prefix_average_example(self):
        # average over the first two entries is -0.75 > log(1/e), so the
        # membership horizon only opens at n_start = 3
        v = np.array([0.5, -2.0, -2.0, -2.0])
        lam = np.exp(-1.0)
        assert not lambda_membership(v, lam, 1)
        assert not lambda_membership(v, lam, 2)
        assert lambda_membership(v, lam, 3)

    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(31)
        for _ in range(500):
            n = int(rng.integers(2, 50))
            v = rng.uniform(-1.5, 0.5, n)
            lam = float(rng.uniform(0.3, 0.9))
            ns = int(rng.integers(1, n + 1))
            assert lambda_membership(v, lam, ns) == membership_oracle(v, lam, ns)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(37)
        rows = rng.uniform(-1.5, 0.2, (64, 20))
        got = lambda_membership_batch(rows, 0.6, 2)
        want = np.array([lambda_membership(r, 0.6, 2) for r in rows])
        assert np.array_equal(got, want)

    def test_anti_monotone_in_horizon(self):
        # extending the horizon can only remove members
        rng = np.random.default_rng(41)
        for _ in range(1000):
            v = rng.uniform(-1.2, 0.4, 24)
            if lambda_membership(v, 0.7, 3):
                assert lambda_membership(v[:12], 0.7, 3)


class TestDensityTheta:
    def test_halfway_example(self):
        th = density_theta(np.exp(-2.0), np.exp(-1.0), 3.0)
        assert th == pytest.approx(0.5)

    def test_degenerate_gap(self):
        s2 = 0.6
        s1 = s2 - 1e-4 * (1.0 - s2)
        assert density_theta(s1, s2, 2.0) < 0.01

    def test_saturated_cocycle(self):
        s1 = 0.2
        assert density_theta(s1, 0.5, -np.log(s1)) == pytest.approx(1.0)

    def test_ordering_violation(self):
        with pytest.raises(HypothesisViolated):
            density_theta(0.6, 0.4, 2.0)
        with pytest.raises(HypothesisViolated):
            density_theta(0.2, 0.5, 0.1)

    def test_short_exact_ties_count(self):
        # constant entries exactly at the threshold: extended-precision
        # partial sums of <= 64 identical doubles are exact, so every tie
        # must count as satisfying the non-strict inequality
        v = np.full(64, np.log(0.5))
        assert len(hyperbolic_times(v, 0.5).times) == 64

    def test_long_cocycle_margin_robustness(self):
        # 1e5 entries a hair on either side of the threshold: accumulation
        # drift must stay far below a 1e-9 per-entry margin
        n = 100000
        below = np.full(n, np.log(0.5) - 1e-9)
        above = np.full(n, np.log(0.5) + 1e-9)
        assert len(hyperbolic_times(below, 0.5).times) == n
        assert len(hyperbolic_times(above, 0.5).times) == 0
