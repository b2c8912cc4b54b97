"""Empirical measures, pushforwards, weak-star bookkeeping, packings,
and mass capture at hyperbolic times."""

import math
import os

import numpy as np
import pytest

from srblab import disks, measures
from srblab.errors import ZeroMass

from .conftest import V_U
from .oracles import greedy_packing_oracle

X = np.array([0.2, 0.7])


def unstable_disk(sys, resolution=101):
    return disks.make_disk(sys, X, V_U, 0.02, resolution=resolution)


class TestObservables:
    def test_torus_set(self, cat):
        obs = measures.default_observables(cat.chart)
        assert len(obs) == 8
        names = {o.name for o in obs}
        assert names == {"cos1_x0", "sin1_x0", "cos2_x0", "sin2_x0",
                         "cos1_x1", "sin1_x1", "cos2_x1", "sin2_x1"}
        assert all(o.bound == 1.0 for o in obs)
        assert all(o.reference_integral == 0.0 for o in obs)

    def test_solenoid_set(self, sol):
        obs = measures.default_observables(sol.chart)
        assert len(obs) == 10
        names = [o.name for o in obs]
        assert "lin_x1" in names and "quad_x2" in names

    def test_characters_annihilate_lebesgue(self, cat):
        # Riemann sum of each character over the full torus is ~0
        g = np.linspace(0.0, 1.0, 400, endpoint=False)
        pts = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
        for o in measures.default_observables(cat.chart):
            assert abs(np.mean(o(pts))) < 1e-12


class TestEmpiricalMeasure:
    def test_disk_measure_normalized(self, cat):
        mu = measures.disk_measure(unstable_disk(cat))
        assert mu.coords.shape == (101, 2)
        assert math.isclose(math.fsum(mu.weights.tolist()), 1.0, rel_tol=1e-12)
        assert mu.total == 1.0
        # trapezoid endpoints carry half a cell
        assert np.isclose(mu.weights[0], mu.weights[1] / 2.0, rtol=1e-12)

    def test_negative_weights_rejected(self, cat):
        with pytest.raises(ValueError, match="nonnegative"):
            measures.EmpiricalMeasure(np.zeros((2, 2)), np.array([-0.5, 1.5]),
                                      cat.chart, 1.0)

    def test_total_must_match_weights(self, cat):
        with pytest.raises(ValueError, match="declared total"):
            measures.EmpiricalMeasure(np.zeros((2, 2)), np.array([0.5, 0.3]),
                                      cat.chart, 1.0)

    def test_zero_total_rejected(self, cat):
        with pytest.raises(ValueError):
            measures.EmpiricalMeasure(np.zeros((2, 2)), np.zeros(2),
                                      cat.chart, 0.0)


class TestPushforward:
    def test_measure_moves_atoms(self, cat):
        mu = measures.disk_measure(unstable_disk(cat))
        nu = measures.pushforward_measure(cat, mu)
        assert np.allclose(nu.coords, cat.forward(mu.coords))
        assert np.array_equal(nu.weights, mu.weights)

    def test_average_stages(self, cat):
        d = unstable_disk(cat)
        pa = measures.pushforward_average(cat, d, 5)
        assert pa.coords.shape == (5 * 101, 2)
        # each of the 5 stages carries 1/5 of the mass
        assert np.isclose(math.fsum(pa.weights[:101].tolist()), 0.2,
                          rtol=1e-12)

    def test_integrals_agree_with_average(self, cat):
        d = unstable_disk(cat)
        obs = measures.default_observables(cat.chart)
        pa = measures.pushforward_average(cat, d, 5)
        pi = measures.pushforward_integrals(cat, d, 5, obs)
        assert set(pi) == {o.name for o in obs}
        for o in obs:
            assert np.isclose(pa.integrate(o), pi[o.name], atol=1e-14)

    def test_horizon_validated(self, cat):
        with pytest.raises(ValueError):
            measures.pushforward_integrals(
                cat, unstable_disk(cat), 0,
                measures.default_observables(cat.chart))


class TestWeakStar:
    def test_hand_computed_distance(self, cat):
        obs = measures.default_observables(cat.chart)
        a = measures.EmpiricalMeasure(np.array([[0.0, 0.0]]), np.array([1.0]),
                                      cat.chart, 1.0)
        b = measures.EmpiricalMeasure(np.array([[0.25, 0.0]]),
                                      np.array([1.0]), cat.chart, 1.0)
        # cos(2 pi x0): 1 at 0 vs 0 at 1/4 -> distance 1;
        # cos(4 pi x0): 1 vs -1 -> distance 2 is the max
        assert np.isclose(measures.weak_star_distance(a, b, obs), 2.0,
                          atol=1e-12)

    def test_symmetry_and_identity(self, cat):
        obs = measures.default_observables(cat.chart)
        mu = measures.disk_measure(unstable_disk(cat))
        nu = measures.pushforward_measure(cat, mu)
        assert measures.weak_star_distance(mu, mu, obs) == 0.0
        assert np.isclose(measures.weak_star_distance(mu, nu, obs),
                          measures.weak_star_distance(nu, mu, obs))

    def test_empty_tests_rejected(self, cat):
        mu = measures.disk_measure(unstable_disk(cat))
        with pytest.raises(ValueError):
            measures.weak_star_distance(mu, mu, [])


class TestInvarianceDefect:
    @pytest.mark.parametrize("model", ["cat", "pcat", "sol", "dfa"])
    def test_bound_holds_everywhere(self, model, request):
        sys = request.getfixturevalue(model)
        obs = measures.default_observables(sys.chart)
        if sys.dim == 2:
            d = unstable_disk(sys)
        else:
            p = sys.point([0.3, 0.0, 0.0]).coords
            _, f = sys.splitting.at(p)
            d = disks.make_disk(sys, p, f, 0.02, resolution=101)
        rep = measures.invariance_defect(sys, d, 100, obs)
        assert rep.n == 100
        assert set(rep.per_test) == {o.name for o in obs}
        assert all(b == 2.0 / 100 for b in rep.bound.values())
        assert rep.max_excess < 0.0

    def test_bound_shrinks_with_horizon(self, cat):
        obs = measures.default_observables(cat.chart)
        d = unstable_disk(cat)
        r1 = measures.invariance_defect(cat, d, 100, obs)
        r2 = measures.invariance_defect(cat, d, 1000, obs)
        assert max(r2.per_test.values()) < max(r1.per_test.values())


class TestPacking:
    def test_hand_case(self):
        dist = np.array([[0.0, 1.0, 3.0],
                         [1.0, 0.0, 1.0],
                         [3.0, 1.0, 0.0]])
        sel = measures.select_disjoint_balls(dist, 0.6)
        assert list(sel) == [0, 2]
        ok, msg = measures.packing_check(dist, 0.6, sel)
        assert ok and msg == ""

    def test_check_flags_overlap(self):
        dist = np.array([[0.0, 1.0], [1.0, 0.0]])
        ok, msg = measures.packing_check(dist, 0.6, [0, 1])
        assert not ok and msg != ""

    def test_matches_oracle_on_random_clouds(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            pts = rng.uniform(size=(rng.integers(2, 25), 2))
            diff = pts[:, None, :] - pts[None, :, :]
            dist = np.linalg.norm(diff, axis=2)
            radius = float(rng.uniform(0.02, 0.3))
            sel = measures.select_disjoint_balls(dist, radius)
            assert list(sel) == greedy_packing_oracle(dist, radius)
            assert measures.packing_check(dist, radius, sel)[0]


class TestBirkhoff:
    def test_matches_manual_average(self, cat):
        obs = measures.default_observables(cat.chart)[0]
        pts = [X]
        for _ in range(49):
            pts.append(cat.forward(pts[-1]))
        manual = np.mean([obs(p) for p in pts])
        assert np.isclose(measures.birkhoff(cat, X, obs, 50), manual,
                          atol=1e-12)


class TestPhysicalFraction:
    def test_reference_dict_accepted(self, cat):
        obs = measures.default_observables(cat.chart)
        ref = {o.name: 0.0 for o in obs}
        frac = measures.physical_fraction(cat, None, ref, obs, 2000, 0.05,
                                          100, seed=1)
        assert frac == 1.0

    def test_measure_reference_and_workers_invariance(self, cat):
        obs = measures.default_observables(cat.chart)
        pa = measures.pushforward_average(cat, unstable_disk(cat), 5)
        f1 = measures.physical_fraction(cat, None, pa, obs, 200, 0.3, 100,
                                        seed=1)
        f3 = measures.physical_fraction(cat, None, pa, obs, 200, 0.3, 100,
                                        seed=1, workers=3)
        assert f1 == f3

    def test_region_restricts_samples(self, cat):
        obs = measures.default_observables(cat.chart)
        ref = {o.name: 0.0 for o in obs}
        region = (np.array([0.0, 0.0]), np.array([0.5, 1.0]))
        frac = measures.physical_fraction(cat, region, ref, obs, 2000, 0.05,
                                          100, seed=1)
        assert frac >= 0.99

    def test_sample_floor(self, cat):
        obs = measures.default_observables(cat.chart)
        with pytest.raises(ValueError, match=">= 100"):
            measures.physical_fraction(cat, None, {o.name: 0.0 for o in obs},
                                       obs, 10, 0.05, 50)


class TestHyperbolicMass:
    def test_cat_capture(self, cat):
        rep = measures.hyperbolic_mass(cat, unstable_disk(cat), 30, 0.5, 0.05)
        assert 0.0 < rep.eta <= 1.0
        assert np.isclose(rep.lambda_mass, 1.0, rtol=1e-12)
        assert rep.per_i.shape == (30,)
        assert len(rep.densities) == 101
        # every cat point has every time hyperbolic at sigma = 0.5
        assert np.allclose(rep.densities, 1.0)

    def test_validation(self, cat):
        d = unstable_disk(cat)
        with pytest.raises(ValueError):
            measures.hyperbolic_mass(cat, d, 10, 1.5, 0.05)
        with pytest.raises(ValueError):
            measures.hyperbolic_mass(cat, d, 10, 0.5, -1.0)


class TestAtomsIO:
    def test_roundtrip(self, cat, tmp_path):
        mu = measures.disk_measure(unstable_disk(cat))
        path = os.path.join(tmp_path, "atoms.csv")
        measures.write_atoms(mu, path)
        with open(path) as fh:
            header = fh.readline().strip()
            assert header == "x0,x1,weight"
            rows = np.loadtxt(fh, delimiter=",")
        assert np.array_equal(rows[:, :2], mu.coords)
        assert np.array_equal(rows[:, 2], mu.weights)
