"""Assembly of the CR/P1 Stokes blocks, load vector and Dirichlet lifting.

Velocity unknowns are CR edge means, components blocked (``c * E + e``);
pressure unknowns are P1 vertex values.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from .fe import bary_gradients, cr_dofmap, edge_mean, triangle_geometry, triangle_quadrature
from .mesh import Mesh

DEFAULT_QUAD_DEGREE = 6
DEFAULT_EDGE_DEGREE = 15

SPACES = {"CR": 2, "P1": 1, "P0": 1}


def quad_degree() -> int:
    """Volume quadrature degree, overridable through ``CRSTOKES_QUAD_DEGREE``."""
    return int(os.environ.get("CRSTOKES_QUAD_DEGREE", DEFAULT_QUAD_DEGREE))


@dataclass
class DiscreteField:
    space: str  # "CR", "P1" or "P0"
    coefficients: np.ndarray
    mesh: Mesh | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.space not in SPACES:
            raise ValueError(f"unknown space {self.space!r}")
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.mesh is not None and len(self.coefficients) != space_size(self.mesh, self.space):
            raise ValueError(
                f"{self.space} field on this mesh needs {space_size(self.mesh, self.space)} "
                f"coefficients, got {len(self.coefficients)}"
            )


def space_size(m: Mesh, space: str) -> int:
    return {"CR": 2 * m.n_edges, "P1": m.n_vertices, "P0": m.n_triangles}[space]


# -- element kernels, vectorised over a stack of triangles (T, 3, 2) -------


def cr_stiffness_local(tri_coords) -> np.ndarray:
    """Scalar CR stiffness per element, (T, 3, 3); grad psi_k = -2 grad l_k."""
    area, g = triangle_geometry(tri_coords)
    return 4.0 * area[:, None, None] * np.einsum("tks,tls->tkl", g, g)


def p1_mass_local(tri_coords) -> np.ndarray:
    area, _ = triangle_geometry(tri_coords)
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return area[:, None, None] * ref


def cr_mass_local(tri_coords) -> np.ndarray:
    # CR basis is L2-orthogonal on each triangle
    area, _ = triangle_geometry(tri_coords)
    return area[:, None, None] * np.eye(3) / 3.0


def divergence_local(tri_coords) -> np.ndarray:
    """Element coupling int_T phi_a div(psi_k e_c), (T, 3, 6), column c*3+k."""
    area, g = triangle_geometry(tri_coords)
    dpsi = -2.0 * g  # (T, 3, 2)
    cols = np.concatenate([dpsi[:, :, 0], dpsi[:, :, 1]], axis=1)  # (T, 6)
    return (area / 3.0)[:, None, None] * np.broadcast_to(cols[:, None, :], (len(area), 3, 6))


def _coords(m: Mesh):
    return m.vertices[m.triangles]


def _scatter(rows, cols, vals, shape):
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape).tocsr()


def _cr_cols(m: Mesh):
    ne = m.n_edges
    return np.concatenate([m.tri_edges, ne + m.tri_edges], axis=1)  # (T, 6)


# -- global operators ------------------------------------------------------


def assemble_scalar_cr(m: Mesh, local: np.ndarray) -> sp.csr_matrix:
    te = m.tri_edges
    rows = np.broadcast_to(te[:, :, None], local.shape)
    cols = np.broadcast_to(te[:, None, :], local.shape)
    return _scatter(rows, cols, local, (m.n_edges, m.n_edges))


def assemble_stiffness(m: Mesh, nu: float = 1.0) -> sp.csr_matrix:
    """Vector CR stiffness ``nu * sum_T int_T grad u : grad v``."""
    k = assemble_scalar_cr(m, cr_stiffness_local(_coords(m)))
    return (nu * sp.block_diag([k, k], format="csr")).tocsr()


def assemble_velocity_mass(m: Mesh) -> sp.csr_matrix:
    k = assemble_scalar_cr(m, cr_mass_local(_coords(m)))
    return sp.block_diag([k, k], format="csr")


def assemble_divergence(m: Mesh) -> sp.csr_matrix:
    """Rows P1 pressure, columns CR velocity: ``sum_T int_T div v q``."""
    local = divergence_local(_coords(m))
    rows = np.broadcast_to(m.triangles[:, :, None], local.shape)
    cols = np.broadcast_to(_cr_cols(m)[:, None, :], local.shape)
    return _scatter(rows, cols, local, (m.n_vertices, 2 * m.n_edges))


def assemble_p0_divergence(m: Mesh) -> sp.csr_matrix:
    """Rows P0 pressure, columns CR velocity."""
    area, g = triangle_geometry(_coords(m))
    dpsi = -2.0 * g
    vals = area[:, None] * np.concatenate([dpsi[:, :, 0], dpsi[:, :, 1]], axis=1)
    rows = np.broadcast_to(np.arange(m.n_triangles)[:, None], vals.shape)
    return _scatter(rows, _cr_cols(m), vals, (m.n_triangles, 2 * m.n_edges))


def assemble_pressure_mass(m: Mesh):
    """P1 mass matrix and mean vector ``w_i = int phi_i``."""
    local = p1_mass_local(_coords(m))
    rows = np.broadcast_to(m.triangles[:, :, None], local.shape)
    cols = np.broadcast_to(m.triangles[:, None, :], local.shape)
    mass = _scatter(rows, cols, local, (m.n_vertices, m.n_vertices))
    w = np.bincount(m.triangles.ravel(), weights=np.repeat(m.areas / 3.0, 3),
                    minlength=m.n_vertices)
    return mass, w


def pressure_kernel(m: Mesh) -> np.ndarray:
    """Indicator basis (V, k) of the P1 pressures annihilated by ``B^T``.

    With all velocity boundary DOFs prescribed, ``B^T q = 0`` holds exactly
    when the vertex sum of ``q`` is the same on every triangle, i.e. when the
    two vertices opposite each interior edge carry equal values.  The basis
    is one indicator per equivalence class of that relation; constants are
    always in the span.  On three-colourable meshes there are three classes.
    """
    inner = np.flatnonzero(m.edge_tris[:, 1] >= 0)
    opposite = []
    for side in (0, 1):
        t = m.edge_tris[inner, side]
        k = np.argmax(m.tri_edges[t] == inner[:, None], axis=1)
        opposite.append(m.triangles[t, k])
    n = m.n_vertices
    graph = sp.coo_matrix((np.ones(len(inner)), tuple(opposite)), shape=(n, n))
    n_classes, labels = connected_components(graph, directed=False)
    basis = np.zeros((n, n_classes))
    basis[np.arange(n), labels] = 1.0
    return basis


def assemble_p0_mass(m: Mesh):
    return sp.diags(m.areas).tocsr(), m.areas.copy()


def quadrature_points(m: Mesh, degree: int | None = None):
    """Physical quadrature points (T, Q, 2), weights (T, Q), barycentrics (Q, 3)."""
    rule = triangle_quadrature(quad_degree() if degree is None else degree)
    pts = np.einsum("qk,tks->tqs", rule.points, _coords(m))
    weights = 2.0 * m.areas[:, None] * rule.weights[None, :]
    return pts, weights, rule.points


def assemble_load(m: Mesh, f: Callable, degree: int | None = None) -> np.ndarray:
    """``int f . psi`` for every CR velocity basis function (no lifting)."""
    pts, wts, lam = quadrature_points(m, degree)
    fv = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float)  # (2, T, Q)
    psi = 1.0 - 2.0 * lam  # (Q, 3)
    local = np.einsum("ctq,tq,qk->ctk", fv, wts, psi)
    ne = m.n_edges
    out = np.zeros(2 * ne)
    for c in range(2):
        out[c * ne : (c + 1) * ne] = np.bincount(
            m.tri_edges.ravel(), weights=local[c].ravel(), minlength=ne
        )
    return out


def interpolate_cr(m: Mesh, u: Callable, degree: int = DEFAULT_EDGE_DEGREE) -> np.ndarray:
    """CR interpolant of a vector field: edge means on every edge."""
    ends = m.vertices[m.edges]
    means = edge_mean(ends[:, 0], ends[:, 1], u, degree)  # (2, E)
    return np.concatenate([means[0], means[1]])


def interpolate_boundary(m: Mesh, g: Callable, degree: int = DEFAULT_EDGE_DEGREE):
    """Boundary CR DOF indices and their prescribed edge means."""
    dofs = cr_dofmap(m).boundary
    bnd = np.flatnonzero(m.boundary_edges)
    ends = m.vertices[m.edges[bnd]]
    means = edge_mean(ends[:, 0], ends[:, 1], g, degree)
    return dofs, np.concatenate([means[0], means[1]])


def interpolate_p1(m: Mesh, p: Callable) -> np.ndarray:
    return np.asarray(p(m.vertices[:, 0], m.vertices[:, 1]), dtype=float)


def cr_divergence(m: Mesh, u: np.ndarray) -> np.ndarray:
    """Element-wise divergence of a CR field (piecewise constant)."""
    g = bary_gradients(m)
    ne = m.n_edges
    u1, u2 = u[:ne][m.tri_edges], u[ne:][m.tri_edges]
    return -2.0 * (np.einsum("tk,tk->t", u1, g[:, :, 0]) + np.einsum("tk,tk->t", u2, g[:, :, 1]))


def cr_gradient(m: Mesh, u: np.ndarray) -> np.ndarray:
    """Element-wise gradient of a CR field, (T, 2, 2) with [component, direction]."""
    g = -2.0 * bary_gradients(m)
    ne = m.n_edges
    u1, u2 = u[:ne][m.tri_edges], u[ne:][m.tri_edges]
    return np.stack([np.einsum("tk,tks->ts", u1, g), np.einsum("tk,tks->ts", u2, g)], axis=1)


@dataclass(eq=False)
class SparseSystem:
    """Saddle-point blocks with boundary velocity DOFs eliminated.

    ``A`` and ``B`` act on the free (interior) velocity DOFs only; ``f`` and
    ``g`` carry the Dirichlet lifting.
    """

    mesh: Mesh
    nu: float
    A: sp.csr_matrix
    B: sp.csr_matrix
    M_p: sp.csr_matrix
    w: np.ndarray
    f: np.ndarray
    g: np.ndarray
    free: np.ndarray
    boundary: np.ndarray
    boundary_values: np.ndarray

    @property
    def n_u(self) -> int:
        return len(self.free)

    @property
    def n_p(self) -> int:
        return self.B.shape[0]

    @cached_property
    def stiffness_factor(self):
        return splu(self.A.tocsc())

    def full_velocity(self, u_free: np.ndarray) -> np.ndarray:
        u = np.zeros(2 * self.mesh.n_edges)
        u[self.free] = u_free
        u[self.boundary] = self.boundary_values
        return u


def lift_dirichlet(A, B, load, boundary, values):
    """Eliminate prescribed DOFs, moving their coupling to the right-hand side."""
    n = A.shape[0]
    mask = np.ones(n, dtype=bool)
    mask[boundary] = False
    free = np.flatnonzero(mask)
    ub = np.zeros(n)
    ub[boundary] = values
    rhs_u = load[free] - (A @ ub)[free]
    rhs_p = -(B @ ub)
    return free, A[free][:, free].tocsr(), B[:, free].tocsr(), rhs_u, rhs_p


def assemble_system(m: Mesh, nu: float, f: Callable | None = None,
                    g: Callable | None = None) -> SparseSystem:
    """Assemble the CR/P1 Stokes system for body force ``f`` and boundary data ``g``.

    ``None`` stands for a zero field.
    """
    if nu <= 0:
        raise ValueError("viscosity must be positive")
    A = assemble_stiffness(m, nu)
    B = assemble_divergence(m)
    M_p, w = assemble_pressure_mass(m)
    load = np.zeros(2 * m.n_edges) if f is None else assemble_load(m, f)
    if g is None:
        bdofs, bvals = cr_dofmap(m).boundary, np.zeros(len(cr_dofmap(m).boundary))
    else:
        bdofs, bvals = interpolate_boundary(m, g)
    free, A_ff, B_f, rhs_u, rhs_p = lift_dirichlet(A, B, load, bdofs, bvals)
    return SparseSystem(m, nu, A_ff, B_f, M_p, w, rhs_u, rhs_p, free, bdofs, bvals)
