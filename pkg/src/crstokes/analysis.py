"""Numerical checks of the CR/P1 stability argument.

``apply_Ih`` maps a continuous P1 pressure ``sum q_i phi_i`` to the
piecewise constant ``sum q_i chi_i`` where ``chi_i`` is the indicator of
the vertex patch of ``i``.  On a triangle this is the sum of its three
vertex values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import splu

from .assembly import (
    assemble_divergence,
    assemble_p0_divergence,
    assemble_p0_mass,
    assemble_pressure_mass,
    assemble_stiffness,
    assemble_velocity_mass,
    cr_divergence,
)
from .fe import cr_dofmap, triangle_quadrature
from .mesh import Mesh

DIM = 2
MAX_PRESSURE_DOFS = 3000
PAIRS = ("CR/P1", "CR/P0")


class DimensionCapError(ValueError):
    pass


@dataclass
class LemmaCheck:
    lhs: float
    rhs: float

    @property
    def relative_gap(self) -> float:
        return abs(self.lhs - self.rhs) / max(abs(self.lhs), abs(self.rhs), 1e-30)


@dataclass
class InfSupReport:
    """Discrete inf-sup data for one pair on one mesh.

    ``beta_h`` is taken over all zero-mean pressures.  ``spectrum_floor`` is
    the smallest generalized eigenvalue above the numerical-zero threshold;
    ``kernel_dim`` counts the eigenvalues below it.  Without spurious
    pressure modes ``beta_h == sqrt(spectrum_floor)``.
    """

    level: int
    pair: str
    n_u: int
    n_p: int
    beta_h: float
    spectrum_floor: float
    kernel_dim: int
    norm_convention: str

    @property
    def beta_reduced(self) -> float:
        return float(np.sqrt(self.spectrum_floor))


def apply_Ih(m: Mesh, q: np.ndarray) -> np.ndarray:
    """P0 values of ``I_h q``: per-triangle sum of vertex values."""
    return np.asarray(q, dtype=float)[m.triangles].sum(axis=1)


def random_velocity(m: Mesh, rng: np.random.Generator) -> np.ndarray:
    """Uniform(-1, 1) CR coefficients with boundary DOFs zeroed."""
    v = rng.uniform(-1.0, 1.0, 2 * m.n_edges)
    v[cr_dofmap(m).boundary] = 0.0
    return v


def random_pressure(m: Mesh, rng: np.random.Generator) -> np.ndarray:
    """Uniform(-1, 1) P1 coefficients projected to zero mean."""
    return zero_mean(m, rng.uniform(-1.0, 1.0, m.n_vertices))


def zero_mean(m: Mesh, q: np.ndarray) -> np.ndarray:
    _, w = assemble_pressure_mass(m)
    return q - (w @ q) / w.sum()


def check_lemma1(m: Mesh, v: np.ndarray, q: np.ndarray) -> LemmaCheck:
    """Compare ``(d+1) int div_h v q`` with ``int div_h v I_h q``.

    The left side integrates the P1 field by quadrature, the right side uses
    ``apply_Ih``; both are exact for these piecewise polynomials.
    """
    div = cr_divergence(m, v)
    rule = triangle_quadrature(1)
    q_at = np.asarray(q, dtype=float)[m.triangles] @ rule.points.T  # (T, Q)
    lhs = (DIM + 1) * np.sum(div[:, None] * q_at * (2.0 * m.areas[:, None] * rule.weights))
    rhs = np.sum(div * m.areas * apply_Ih(m, q))
    return LemmaCheck(float(lhs), float(rhs))


def p0_l2_norm(m: Mesh, c: np.ndarray) -> float:
    return float(np.sqrt(np.sum(m.areas * np.asarray(c) ** 2)))


def lemma2_ratio(m: Mesh, q: np.ndarray, mass=None) -> float:
    """``||I_h q||_0 / ||q||_0``."""
    if mass is None:
        mass, _ = assemble_pressure_mass(m)
    q = np.asarray(q, dtype=float)
    return p0_l2_norm(m, apply_Ih(m, q)) / float(np.sqrt(q @ (mass @ q)))


def check_lemma2(m: Mesh, samples: int, rng: np.random.Generator | None = None):
    """Empirical ``(min, max)`` of ``||I_h q|| / ||q||`` over random zero-mean ``q``."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng() if rng is None else rng
    mass, w = assemble_pressure_mass(m)
    ratios = []
    for _ in range(samples):
        q = rng.uniform(-1.0, 1.0, m.n_vertices)
        q -= (w @ q) / w.sum()
        ratios.append(lemma2_ratio(m, q, mass))
    return float(min(ratios)), float(max(ratios))


def velocity_norm_matrix(m: Mesh, norm: str = "full"):
    """Broken H1 norm (``full``) or semi-norm (``semi``) matrix on interior DOFs."""
    free = cr_dofmap(m).interior
    N = assemble_stiffness(m, 1.0)
    if norm == "full":
        N = N + assemble_velocity_mass(m)
    elif norm != "semi":
        raise ValueError(f"unknown velocity norm {norm!r}")
    return N[free][:, free].tocsc(), free


def infsup_constant(m: Mesh, pair: str = "CR/P1", norm: str = "full",
                    zero_tol: float = 1e-10) -> InfSupReport:
    """Smallest eigenvalue of ``B N^{-1} B^T q = lam M q`` on zero-mean pressures.

    Raises
    ------
    DimensionCapError
        If the pressure space exceeds ``MAX_PRESSURE_DOFS``.
    """
    if pair == "CR/P1":
        B = assemble_divergence(m)
        M, w = assemble_pressure_mass(m)
    elif pair == "CR/P0":
        B = assemble_p0_divergence(m)
        M, w = assemble_p0_mass(m)
    else:
        raise ValueError(f"unknown pair {pair!r}; choose from {PAIRS}")
    n_p = B.shape[0]
    if n_p > MAX_PRESSURE_DOFS:
        raise DimensionCapError(
            f"{pair} at level {m.level} has {n_p} pressure DOFs, "
            f"above the dense eigensolver cap of {MAX_PRESSURE_DOFS}"
        )
    N, free = velocity_norm_matrix(m, norm)
    Bf = B[:, free].tocsc()
    Y = splu(N).solve(Bf.T.toarray())
    S = np.asarray(Bf @ Y)
    S = 0.5 * (S + S.T)
    M = M.toarray()

    # orthonormal basis of {q : w.q = 0}
    Z = sla.null_space(w[None, :])
    evals = sla.eigh(Z.T @ S @ Z, Z.T @ M @ Z, eigvals_only=True)
    thresh = zero_tol * max(evals[-1], 1.0)
    nonzero = evals[evals > thresh]
    floor = float(nonzero[0]) if len(nonzero) else 0.0
    return InfSupReport(
        level=m.level,
        pair=pair,
        n_u=len(free),
        n_p=n_p,
        beta_h=float(np.sqrt(evals[0])) if evals[0] > thresh else 0.0,
        spectrum_floor=floor,
        kernel_dim=int(np.sum(evals <= thresh)),
        norm_convention="broken H1 norm" if norm == "full" else "broken H1 semi-norm",
    )
