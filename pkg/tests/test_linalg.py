import numpy as np
import pytest

from srblab import (Subspace, graph_norm, mininorm, oblique_components,
                    restricted_det, restricted_mininorm, restricted_norm,
                    span, subspace_distance, torus_chart)

from .conftest import LAM_S, LAM_U, V_S, V_U

CAT = np.array([[2.0, 1.0], [1.0, 1.0]])


class TestSubspace:
    def test_accepts_orthonormal_frame(self):
        s = Subspace(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
        assert s.ambient_dim == 3 and s.dim == 2

    def test_rejects_scaled_frame(self):
        with pytest.raises(ValueError):
            Subspace(np.array([[2.0, 0.0], [0.0, 3.0], [0.0, 0.0]]))

    def test_span_normalizes_scaled_columns(self):
        s = span(np.array([[2.0, 0.0], [0.0, 3.0], [0.0, 0.0]]))
        assert np.allclose(s.frame.T @ s.frame, np.eye(2), atol=1e-14)

    def test_span_orthonormalizes(self):
        s = span(np.array([[1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]))
        assert s.dim == 2
        assert np.allclose(s.frame.T @ s.frame, np.eye(2), atol=1e-14)

    def test_span_rejects_dependent_columns(self):
        from srblab import DegenerateImage
        v = np.array([1.0, 2.0, -1.0])
        with pytest.raises(DegenerateImage):
            span(np.column_stack([v, 2 * v]))

    def test_subspace_rejects_skew_frame(self):
        with pytest.raises(ValueError):
            Subspace(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_mininorm_is_smallest_singular_value(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a = rng.normal(size=(4, 4))
            assert mininorm(a) == pytest.approx(
                np.linalg.svd(a, compute_uv=False)[-1], rel=1e-12)


class TestRestrictedQuantities:
    def test_cat_eigendirections(self):
        assert restricted_norm(CAT, Subspace(V_U[:, None])) == \
            pytest.approx(LAM_U, rel=1e-14)
        assert restricted_mininorm(CAT, Subspace(V_U[:, None])) == \
            pytest.approx(LAM_U, rel=1e-14)
        assert restricted_norm(CAT, Subspace(V_S[:, None])) == \
            pytest.approx(LAM_S, rel=1e-13)

    def test_restricted_norms_vs_direct_svd(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a = rng.normal(size=(5, 5))
            q = span(rng.normal(size=(5, 2)))
            sv = np.linalg.svd(a @ q.frame, compute_uv=False)
            assert restricted_norm(a, q) == pytest.approx(sv[0], rel=1e-12)
            assert restricted_mininorm(a, q) == pytest.approx(sv[-1], rel=1e-12)
            assert restricted_det(a, q) == pytest.approx(np.prod(sv), rel=1e-10)

    def test_restricted_det_is_volume_ratio(self):
        # unit square spanned by the frame maps to a parallelogram whose
        # area is the restricted determinant
        a = np.diag([3.0, 0.5])
        q = Subspace(np.eye(2))
        assert restricted_det(a, q) == pytest.approx(1.5, rel=1e-14)


class TestSubspaceDistance:
    def test_zero_on_itself(self):
        s = span(np.array([[1.0, 1.0], [0.0, 1.0]]))
        assert subspace_distance(s, s) == pytest.approx(0.0, abs=1e-14)

    def test_known_rotation(self):
        th = 0.3
        a = Subspace(np.array([[1.0], [0.0]]))
        b = Subspace(np.array([[np.cos(th)], [np.sin(th)]]))
        assert subspace_distance(a, b) == pytest.approx(np.sin(th), rel=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            a = span(rng.normal(size=(4, 2)))
            b = span(rng.normal(size=(4, 2)))
            assert subspace_distance(a, b) == pytest.approx(
                subspace_distance(b, a), rel=1e-12)

    def test_orthogonal_complements_are_distance_one(self):
        a = Subspace(np.array([[1.0], [0.0]]))
        b = Subspace(np.array([[0.0], [1.0]]))
        assert subspace_distance(a, b) == pytest.approx(1.0)


class TestObliqueAndGraph:
    def test_components_reconstruct(self):
        rng = np.random.default_rng(13)
        e = Subspace(V_S[:, None])
        f = Subspace(V_U[:, None])
        for _ in range(20):
            v = rng.normal(size=2)
            ve, vf = oblique_components(v, e, f)
            assert np.allclose(ve + vf, v, atol=1e-12)
            assert abs(V_U @ ve) <= 1e-12 * np.linalg.norm(ve) + 1e-12 or \
                np.allclose(np.cross(ve, V_S), 0.0, atol=1e-12)

    def test_graph_norm_known_tilt(self):
        base = Subspace(np.array([[1.0], [0.0]]))
        target = span(np.array([[1.0], [0.25]]))
        assert graph_norm(base, target) == pytest.approx(0.25, rel=1e-12)

    def test_graph_norm_zero_on_same_space(self):
        base = Subspace(np.array([[1.0], [0.0]]))
        assert graph_norm(base, base) == pytest.approx(0.0, abs=1e-14)


class TestChart:
    def test_wrap_periodic(self):
        ch = torus_chart(2)
        assert np.allclose(ch.wrap(np.array([1.25, -0.25])), [0.25, 0.75])

    def test_displacement_shortest_way_around(self):
        ch = torus_chart(2)
        d = ch.displacement(np.array([0.9, 0.5]), np.array([0.1, 0.5]))
        assert np.allclose(d, [0.2, 0.0], atol=1e-14)

    def test_distance_symmetric(self):
        ch = torus_chart(2)
        a = np.array([0.95, 0.1])
        b = np.array([0.05, 0.9])
        assert ch.distance(a, b) == pytest.approx(ch.distance(b, a))
        assert ch.distance(a, b) == pytest.approx(np.hypot(0.1, 0.2))

    def test_contains_box_axis(self, sol):
        ch = sol.chart
        inside = np.array([1.0, 0.5, -0.5])
        outside = np.array([1.0, 2.5, 0.0])
        assert ch.contains(inside)
        assert not ch.contains(outside)

    def test_wrap_leaves_box_axes_alone(self, sol):
        ch = sol.chart
        p = np.array([7.0, 1.2, -0.7])
        w = ch.wrap(p)
        assert w[0] == pytest.approx(7.0 % (2 * np.pi))
        assert np.allclose(w[1:], p[1:])
