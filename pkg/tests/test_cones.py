"""Cone membership, average-domination certificates, and robustness radii."""

import numpy as np
import pytest

from srblab import cones
from srblab.errors import EmptyRadius, HypothesisViolated
from srblab.systems import cocycle_logs

from .conftest import LAM_U, V_S, V_U

X = np.array([0.2, 0.7])


class TestConeSpec:
    def test_positive_width_required(self):
        with pytest.raises(ValueError):
            cones.ConeSpec(width=0.0, splitting=None)
        with pytest.raises(ValueError):
            cones.ConeSpec(width=-0.1, splitting=None)

    def test_from_system(self, cat):
        spec = cones.cone_from_system(cat, 0.3)
        assert spec.width == 0.3
        assert spec.splitting is cat.splitting


class TestInCone:
    def test_f_direction_inside(self, cat):
        spec = cones.cone_from_system(cat, 0.3)
        assert cones.in_cone(V_U, X, spec)

    def test_e_direction_outside(self, cat):
        spec = cones.cone_from_system(cat, 0.3)
        assert not cones.in_cone(V_S, X, spec)

    def test_zero_vector_inside(self, cat):
        spec = cones.cone_from_system(cat, 0.3)
        assert cones.in_cone(np.zeros(2), X, spec)

    def test_near_boundary_both_sides(self, cat):
        # exact equality is one rounding error away from either verdict, so
        # probe strictly inside and strictly outside instead
        spec = cones.cone_from_system(cat, 0.3)
        assert cones.in_cone(0.299 * V_S + V_U, X, spec)
        assert not cones.in_cone(0.301 * V_S + V_U, X, spec)

    def test_width_scales_admission(self, cat):
        v = 0.5 * V_S + V_U
        assert not cones.in_cone(v, X, cones.cone_from_system(cat, 0.4))
        assert cones.in_cone(v, X, cones.cone_from_system(cat, 0.6))


class TestConeWidthOf:
    def test_pure_f_zero(self, cat):
        e, f = cat.splitting.at(X)
        assert cones.cone_width_of(V_U, e, f) < 1e-12

    def test_pure_e_huge(self, cat):
        # the oblique decomposition leaves a ~1 ulp F-component, so the
        # result is finite but astronomically large rather than exactly inf
        e, f = cat.splitting.at(X)
        assert cones.cone_width_of(V_S, e, f) > 1e12

    def test_equal_mix_is_one(self, cat):
        e, f = cat.splitting.at(X)
        assert np.isclose(cones.cone_width_of(V_S + V_U, e, f), 1.0, rtol=1e-12)

    def test_scaling_invariance(self, cat):
        e, f = cat.splitting.at(X)
        w1 = cones.cone_width_of(0.37 * V_S + V_U, e, f)
        w2 = cones.cone_width_of(7.0 * (0.37 * V_S + V_U), e, f)
        assert np.isclose(w1, w2, rtol=1e-12)
        assert np.isclose(w1, 0.37, rtol=1e-12)


class TestConeWidthBound:
    def test_formula(self):
        assert cones.cone_width_bound(0.5, 0.2, 0) == 0.5
        assert np.isclose(cones.cone_width_bound(0.5, 0.2, 3), 0.5 * 0.2**3)

    def test_validation(self):
        with pytest.raises(ValueError):
            cones.cone_width_bound(0.0, 0.2, 1)
        with pytest.raises(ValueError):
            cones.cone_width_bound(0.5, 0.0, 1)
        with pytest.raises(ValueError):
            cones.cone_width_bound(0.5, 0.2, -1)


class TestAvgDomination:
    def test_cat_certificate_ratios(self, cat):
        logs = cocycle_logs(cat, X, 12, include_zero=True)
        cert = cones.check_avg_domination(logs, 0.15)
        n = len(cert.ratios)
        expected = LAM_U ** (-2.0 * np.arange(1, n + 1))
        assert np.allclose(cert.ratios, expected, rtol=1e-12)
        assert cert.gamma == 0.15
        assert cert.n == n

    def test_gamma_below_rate_fails(self, cat):
        logs = cocycle_logs(cat, X, 12, include_zero=True)
        with pytest.raises(HypothesisViolated, match="i = 1"):
            cones.check_avg_domination(logs, 0.14)

    def test_requires_entry_zero(self, cat):
        logs = cocycle_logs(cat, X, 12)          # starts at j = 1
        with pytest.raises(HypothesisViolated):
            cones.check_avg_domination(logs, 0.15)

    def test_gamma_range_validated(self, cat):
        logs = cocycle_logs(cat, X, 5, include_zero=True)
        for g in (0.0, 1.0, 1.2, -0.3):
            with pytest.raises(ValueError):
                cones.check_avg_domination(logs, g)

    def test_horizon_capped_by_entries(self, cat):
        logs = cocycle_logs(cat, X, 5, include_zero=True)
        with pytest.raises(ValueError):
            cones.check_avg_domination(logs, 0.15, n=100)

    def test_rejects_raw_arrays(self):
        with pytest.raises(TypeError):
            cones.check_avg_domination(np.zeros(5), 0.15)

    def test_perturbed_cat_still_dominated(self, pcat):
        logs = cocycle_logs(pcat, X, 60, include_zero=True)
        cert = cones.check_avg_domination(logs, 0.2)
        assert np.all(cert.ratios <= 0.2 ** np.arange(1, len(cert.ratios) + 1) * (1 + 1e-9))


class TestVerifyConeContraction:
    def test_cat_ratios_track_rate(self, cat):
        worst = cones.verify_cone_contraction(cat, X, 0.5, 0.15, 8)
        assert worst.shape == (8,)
        step = LAM_U**-2 / 0.15
        assert np.allclose(worst, step ** np.arange(1, 9), rtol=1e-8)
        assert np.all(worst <= 1.0)
        assert np.all(np.diff(worst) < 0)

    def test_perturbed_cat_within_budget(self, pcat):
        worst = cones.verify_cone_contraction(pcat, X, 0.5, 0.2, 10)
        assert np.all(worst <= 1.0 + 1e-9)


class TestRobustnessRadius:
    def test_cat_is_flat_so_radius_is_diameter(self, cat):
        r = cones.domination_robustness_radius(cat, 0.14, 0.16)
        assert r == cat.chart.diameter
        assert np.isclose(r, np.sqrt(2) / 2, rtol=1e-12)

    def test_perturbed_cat_positive_and_smaller(self, pcat):
        r = cones.domination_robustness_radius(pcat, 0.14, 0.16)
        assert 0.0 < r < pcat.chart.diameter
        assert np.isclose(r, 0.11635328138275451, rtol=1e-9)

    def test_wider_slack_never_shrinks_radius(self, pcat):
        narrow = cones.domination_robustness_radius(pcat, 0.145, 0.155)
        wide = cones.domination_robustness_radius(pcat, 0.10, 0.22)
        assert wide >= narrow

    def test_degenerate_slack_rejected(self, pcat):
        with pytest.raises(ValueError):
            cones.domination_robustness_radius(pcat, 0.16, 0.14)
        with pytest.raises(ValueError):
            cones.domination_robustness_radius(pcat, 0.15, 0.15)

    def test_vanishing_slack_raises_empty(self, pcat):
        with pytest.raises(EmptyRadius):
            cones.domination_robustness_radius(pcat, 0.15, 0.15 * (1 + 1e-12))
