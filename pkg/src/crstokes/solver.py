"""Direct solve of the saddle-point system with pressure constraints.

The pressure enters the momentum equation as ``-(p, div v)`` so that the
computed ``p`` approximates the pressure of ``-nu lap u + grad p = f``.
The zero-mean condition is imposed through a Lagrange multiplier row ``w``.
Any further pressure modes annihilated by ``B^T`` (three-colourable meshes
carry two) get one extra multiplier each, enforcing ``M_p``-orthogonality
to them; on meshes without such modes the system is the plain
``[[A, -B^T, 0], [-B, 0, w], [0, w^T, 0]]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .assembly import DiscreteField, SparseSystem, pressure_kernel

RESIDUAL_TOL = 1e-10


class SingularSystemError(RuntimeError):
    """The saddle-point matrix is singular, usually an assembly or BC bug."""


class ToleranceError(RuntimeError):
    """The algebraic residual exceeds the requested tolerance."""


@dataclass
class SaddleSolution:
    u: DiscreteField
    p: DiscreteField
    multiplier: float
    residual_norm: float
    kernel_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))


def pressure_constraints(sys: SparseSystem, mode: str = "kernel") -> np.ndarray:
    """Constraint columns (n_p, k); the first is always the mean vector ``w``.

    ``mode="mean"`` keeps only ``w``.
    """
    if mode == "mean":
        return sys.w[:, None]
    if mode != "kernel":
        raise ValueError(f"unknown constraint mode {mode!r}")
    extra = pressure_kernel(sys.mesh)[:, 1:]
    return np.column_stack([sys.w, sys.M_p @ extra])


def kkt_matrix(sys: SparseSystem, constraints: np.ndarray | None = None) -> sp.csc_matrix:
    C = sp.csr_matrix(sys.w[:, None] if constraints is None else constraints)
    return sp.bmat(
        [
            [sys.A, -sys.B.T, None],
            [-sys.B, None, C],
            [None, C.T, None],
        ],
        format="csc",
    )


def solve_stokes(sys: SparseSystem, tol: float = RESIDUAL_TOL,
                 constraints: str = "kernel") -> SaddleSolution:
    """Solve for velocity, zero-mean pressure and the constraint multipliers.

    Raises
    ------
    SingularSystemError
        If the factorization breaks down (e.g. ``constraints="mean"`` on a
        mesh whose pressure space has spurious modes).
    ToleranceError
        If the relative residual is above ``tol``.
    """
    C = pressure_constraints(sys, constraints)
    if constraints == "mean" and pressure_kernel(sys.mesh).shape[1] > 1:
        # LU may still succeed on a roundoff pivot and return an arbitrary
        # spurious pressure component, so refuse up front
        raise SingularSystemError("B^T has a kernel beyond constants; "
                                  "a single mean constraint cannot fix the pressure")
    K = kkt_matrix(sys, C)
    rhs = np.concatenate([sys.f, -sys.g, np.zeros(C.shape[1])])
    try:
        lu = splu(K)
    except RuntimeError as exc:
        raise SingularSystemError(f"saddle-point factorization failed: {exc}") from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("saddle-point solve produced non-finite values")
    res = np.linalg.norm(K @ x - rhs)
    scale = max(np.linalg.norm(rhs), abs(K).max() * np.linalg.norm(x))
    rel = res / scale if scale > 0 else 0.0
    if rel > tol:
        raise ToleranceError(f"relative residual {rel:.3e} above tolerance {tol:.1e}")

    n_u, n_p = sys.n_u, sys.n_p
    m = sys.mesh
    lam = x[n_u + n_p :]
    return SaddleSolution(
        u=DiscreteField("CR", sys.full_velocity(x[:n_u]), m),
        p=DiscreteField("P1", x[n_u : n_u + n_p], m),
        multiplier=float(lam[0]),
        residual_norm=float(rel),
        kernel_multipliers=lam[1:],
    )


def schur_apply(sys: SparseSystem, q: np.ndarray) -> np.ndarray:
    """``B A^{-1} B^T q`` using the cached stiffness factorization."""
    q = np.asarray(q, dtype=float)
    return sys.B @ sys.stiffness_factor.solve(sys.B.T @ q)
