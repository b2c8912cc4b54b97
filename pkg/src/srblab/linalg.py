"""Linear-algebra kernel: mininorms, subspaces, restricted norms and volumes.

Everything here is plain numpy on small dense matrices.  Subspaces are
carried as orthonormal column frames; a `Subspace` remembers the base point
it was sampled at purely for bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateImage, DegenerateSplitting, DimensionMismatch, SingularMap

DET_FLOOR = 1e-12
FRAME_TOL = 1e-10
ANGLE_FLOOR = 1e-8


@dataclass(frozen=True)
class Subspace:
    """An orthonormal frame spanning a subspace of the ambient chart space.

    frame : (ambient_dim, dim) array with orthonormal columns.
    """

    frame: np.ndarray

    def __post_init__(self):
        f = np.array(self.frame, dtype=float, copy=True)
        if f.ndim == 1:
            f = f[:, None]
        if f.ndim != 2:
            raise ValueError("frame must be a 2-D array of columns")
        g = f.T @ f
        if not np.allclose(g, np.eye(f.shape[1]), atol=FRAME_TOL):
            raise ValueError("frame columns must be orthonormal")
        object.__setattr__(self, "frame", f)

    @property
    def ambient_dim(self):
        return self.frame.shape[0]

    @property
    def dim(self):
        return self.frame.shape[1]


def span(vectors):
    """Orthonormalize arbitrary spanning columns into a Subspace."""
    v = np.asarray(vectors, float)
    if v.ndim == 1:
        v = v[:, None]
    q, r = np.linalg.qr(v)
    keep = np.abs(np.diag(r)) > FRAME_TOL
    if not np.all(keep):
        raise DegenerateImage("spanning vectors are linearly dependent")
    return Subspace(q)


def mininorm(a):
    """Smallest singular value of an invertible square matrix.

    Equals 1/||a^-1||: the tightest lower bound on the stretch of any unit
    vector.  Raises SingularMap when |det| falls below the floor.
    """
    a = np.asarray(a, float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if abs(np.linalg.det(a)) < DET_FLOOR:
        raise SingularMap(f"|det| = {abs(np.linalg.det(a)):.3e} below floor {DET_FLOOR}")
    return float(np.linalg.svd(a, compute_uv=False)[-1])


def _onesided(qa, qb):
    # sup over unit u in span(qa) of dist(u, span(qb)):
    # largest singular value of (I - qb qb^T) qa.
    proj = qa - qb @ (qb.T @ qa)
    if proj.size == 0:
        return 0.0
    return float(np.linalg.svd(proj, compute_uv=False)[0])


def subspace_distance(a, b):
    """Symmetric sup-distance between two subspaces of the same ambient space.

    max of the two one-sided quantities sup_{unit u in A} dist(u, B) and the
    mirror image; for equal dimensions both sides coincide (largest principal
    angle sine) and the value is a metric on the Grassmannian.
    """
    if not isinstance(a, Subspace):
        a = Subspace(a)
    if not isinstance(b, Subspace):
        b = Subspace(b)
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch(
            f"ambient dims differ: {a.ambient_dim} vs {b.ambient_dim}")
    return max(_onesided(a.frame, b.frame), _onesided(b.frame, a.frame))


def restricted_norm(a, s):
    """Operator norm of a restricted to the subspace s (image in ambient norm)."""
    a = np.asarray(a, float)
    if a.shape[1] != s.ambient_dim:
        raise DimensionMismatch("matrix does not act on the subspace's space")
    return float(np.linalg.svd(a @ s.frame, compute_uv=False)[0])


def restricted_mininorm(a, s):
    """Mininorm of a restricted to s: min stretch over unit vectors of s."""
    a = np.asarray(a, float)
    if a.shape[1] != s.ambient_dim:
        raise DimensionMismatch("matrix does not act on the subspace's space")
    sv = np.linalg.svd(a @ s.frame, compute_uv=False)
    return float(sv[-1])


def restricted_det(a, s):
    """Unsigned volume expansion of a on the subspace s.

    sqrt(det(M^T M)) with M = a @ frame; the product of the singular values
    of the restriction.  Raises DegenerateImage when the image collapses.
    """
    a = np.asarray(a, float)
    if a.shape[1] != s.ambient_dim:
        raise DimensionMismatch("matrix does not act on the subspace's space")
    m = a @ s.frame
    g = m.T @ m
    val = float(np.sqrt(max(np.linalg.det(g), 0.0)))
    if val < DET_FLOOR:
        raise DegenerateImage(f"restricted volume {val:.3e} below floor")
    return val


def oblique_components(v, e, f):
    """Split v = v_E + v_F along a (possibly non-orthogonal) splitting.

    Returns (v_e, v_f) as ambient vectors.  Raises DegenerateSplitting when
    the joint frame [E | F] is numerically rank-deficient (smallest principal
    angle under the floor).
    """
    v = np.asarray(v, float)
    joint = np.hstack([e.frame, f.frame])
    if joint.shape[0] != joint.shape[1]:
        raise DimensionMismatch(
            f"E (+{e.dim}) and F (+{f.dim}) do not fill ambient dim {joint.shape[0]}")
    sv = np.linalg.svd(joint, compute_uv=False)
    if sv[-1] < ANGLE_FLOOR:
        raise DegenerateSplitting(
            f"joint frame smallest singular value {sv[-1]:.3e} below floor")
    coeff = np.linalg.solve(joint, v)
    ce, cf = coeff[: e.dim], coeff[e.dim:]
    return e.frame @ ce, f.frame @ cf


def graph_norm(base, target):
    """Norm of the linear map whose graph over `base` is parallel to `target`.

    Both arguments are Subspaces of equal dimension.  `target` is written as
    {u + L u : u in base} with L mapping into the orthogonal complement of
    `base`; returns ||L||.  Raises DegenerateTangent (via ValueError upstream)
    handling left to callers: here we only signal near-singular projections.
    """
    if base.dim != target.dim:
        raise DimensionMismatch("graph over a base of different dimension")
    bt = base.frame.T @ target.frame            # (d, d) component along base
    perp = target.frame - base.frame @ bt       # component orthogonal to base
    sv = np.linalg.svd(bt, compute_uv=False)
    if sv[-1] < ANGLE_FLOOR:
        return np.inf
    l = perp @ np.linalg.inv(bt)
    return float(np.linalg.svd(l, compute_uv=False)[0])
