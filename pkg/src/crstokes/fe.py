"""Reference bases, affine element maps, DOF maps and quadrature rules.

Reference triangle has vertices (0,0), (1,0), (0,1) with barycentric
coordinates ``l0 = 1 - x - y``, ``l1 = x``, ``l2 = y``.  Local edge ``k`` is
the edge opposite vertex ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .mesh import Mesh

MAX_DEGREE = 10

# barycentric gradients on the reference triangle, rows = functions
_REF_BARY_GRAD = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def barycentric(points) -> np.ndarray:
    """Reference (x, y) points to barycentric coordinates, shape (n, 3)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    return np.column_stack([1.0 - x - y, x, y])


@dataclass(frozen=True)
class ReferenceBasis:
    kind: str
    _values: Callable
    _gradients: Callable

    @property
    def size(self) -> int:
        return {"CR": 3, "P1": 3, "P0": 1}[self.kind]

    def values(self, points) -> np.ndarray:
        """Basis values at reference points, shape (n_points, n_basis)."""
        return self._values(barycentric(points))

    def gradients(self, points) -> np.ndarray:
        """Reference gradients, shape (n_points, n_basis, 2)."""
        n = len(barycentric(points))
        return np.broadcast_to(self._gradients(), (n,) + self._gradients().shape).copy()


def p1_reference_basis() -> ReferenceBasis:
    return ReferenceBasis("P1", lambda lam: lam, lambda: _REF_BARY_GRAD)


def cr_reference_basis() -> ReferenceBasis:
    # psi_k = 1 - 2 l_k: edge-mean 1 on edge k, 0 on the others
    return ReferenceBasis("CR", lambda lam: 1.0 - 2.0 * lam, lambda: -2.0 * _REF_BARY_GRAD)


def p0_reference_basis() -> ReferenceBasis:
    return ReferenceBasis(
        "P0", lambda lam: np.ones((len(lam), 1)), lambda: np.zeros((1, 2))
    )


@dataclass(frozen=True)
class ElementMap:
    """Affine map ``x = origin + jacobian @ xi`` from the reference triangle."""

    origin: np.ndarray
    jacobian: np.ndarray
    det: float
    inv_t: np.ndarray

    def __call__(self, ref_points) -> np.ndarray:
        return self.origin + np.atleast_2d(ref_points) @ self.jacobian.T

    def physical_gradients(self, ref_grads) -> np.ndarray:
        """Transform reference gradients (..., 2) by the inverse transpose."""
        return ref_grads @ self.inv_t.T


def _affine(p0, p1, p2):
    jac = np.column_stack([p1 - p0, p2 - p0])
    det = float(np.linalg.det(jac))
    if abs(det) <= 1e-14 * max(1.0, float(np.abs(jac).max()) ** 2):
        raise ValueError("degenerate triangle (zero area)")
    return ElementMap(np.asarray(p0, float), jac, det, np.linalg.inv(jac).T)


def element_map(m: Mesh, t: int) -> ElementMap:
    p = m.vertices[m.triangles[t]]
    return _affine(p[0], p[1], p[2])


def triangle_map(vertices) -> ElementMap:
    """Element map for a free-standing triangle given as a (3, 2) array."""
    p = np.asarray(vertices, dtype=float)
    return _affine(p[0], p[1], p[2])


def triangle_geometry(tri_coords):
    """Areas (T,) and physical barycentric gradients (T, 3, 2) of a triangle stack."""
    p = np.asarray(tri_coords, dtype=float)
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    scale = np.abs(jac).max(axis=(1, 2)) ** 2
    if np.any(np.abs(det) <= 1e-14 * scale):
        raise ValueError("degenerate triangle (zero area)")
    # grad_phys = J^{-T} grad_ref, written row-wise as grad_ref @ J^{-1}
    grads = np.einsum("kr,trs->tks", _REF_BARY_GRAD, np.linalg.inv(jac))
    return 0.5 * np.abs(det), grads


def bary_gradients(m: Mesh) -> np.ndarray:
    """Physical gradients of the barycentric coordinates, shape (T, 3, 2)."""
    return triangle_geometry(m.vertices[m.triangles])[1]


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # barycentric, (n, 3)
    weights: np.ndarray  # reference-area units, sum 1/2
    degree: int

    @property
    def ref_points(self) -> np.ndarray:
        return self.points[:, 1:]


@lru_cache(maxsize=None)
def triangle_quadrature(degree: int) -> QuadratureRule:
    """Collapsed Gauss rule on the reference triangle, exact to ``degree``.

    Gauss-Legendre along the collapsed direction and Gauss-Jacobi(1, 0)
    across it, which absorbs the Duffy Jacobian.
    """
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"unsupported triangle quadrature degree {degree} (max {MAX_DEGREE})")
    n = degree // 2 + 1
    xi, wx = roots_legendre(n)
    eta, wy = roots_jacobi(n, 1.0, 0.0)
    s = 0.5 * (1.0 + xi)
    t = 0.5 * (1.0 + eta)
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(0.5 * wx, 0.25 * wy)
    x = (S * (1.0 - T)).ravel()
    y = T.ravel()
    points = barycentric(np.column_stack([x, y]))
    weights = W.ravel()
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights, degree)


@dataclass(frozen=True)
class EdgeRule:
    points: np.ndarray  # parameter in [0, 1]
    weights: np.ndarray  # sum 1, so a weighted sum is an edge mean
    degree: int


@lru_cache(maxsize=None)
def edge_quadrature(degree: int) -> EdgeRule:
    if not 0 <= degree <= 2 * MAX_DEGREE + 1:
        raise ValueError(f"unsupported edge quadrature degree {degree}")
    xi, w = roots_legendre(degree // 2 + 1)
    return EdgeRule(0.5 * (1.0 + xi), 0.5 * w, degree)


def edge_mean(a, b, g: Callable, degree: int = 15) -> np.ndarray:
    """Mean of ``g(x, y)`` over the segment(s) from ``a`` to ``b``.

    ``a`` and ``b`` may be single points or (n, 2) arrays; ``g`` may return
    scalars or trailing vector components.
    """
    rule = edge_quadrature(degree)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    pts = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
    vals = np.asarray(g(pts[..., 0], pts[..., 1]), dtype=float)
    # vector-valued g returns components first: (ncomp, n_edges, n_points)
    return np.tensordot(vals, rule.weights, axes=([-1], [0]))


@dataclass(frozen=True)
class DofMap:
    """Entity-to-global index map for one discrete space.

    ``entity_dofs[e, c]`` is the global index of component ``c`` on entity
    ``e`` (edge for CR, vertex for P1, triangle for P0).
    """

    kind: str
    entity_dofs: np.ndarray
    boundary: np.ndarray

    @property
    def n_dofs(self) -> int:
        return self.entity_dofs.size

    @property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.boundary] = False
        return np.flatnonzero(mask)


def cr_dofmap(m: Mesh) -> DofMap:
    """Vector CR space, components blocked: dof ``c * E + e``."""
    ne = m.n_edges
    dofs = np.column_stack([np.arange(ne), ne + np.arange(ne)])
    bnd = np.flatnonzero(m.boundary_edges)
    return DofMap("CR", dofs, np.concatenate([bnd, ne + bnd]))


def p1_dofmap(m: Mesh) -> DofMap:
    bnd = np.unique(m.edges[m.boundary_edges])
    return DofMap("P1", np.arange(m.n_vertices)[:, None], bnd)


def p0_dofmap(m: Mesh) -> DofMap:
    return DofMap("P0", np.arange(m.n_triangles)[:, None], np.array([], dtype=np.int64))
