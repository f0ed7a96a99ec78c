"""Discretization error norms and convergence records."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import cr_gradient, quadrature_points
from .mesh import Mesh


def broken_h1_seminorm_error(m: Mesh, u_h: np.ndarray, grad_u: Callable,
                             degree: int | None = None) -> float:
    """``sqrt(sum_T int_T |grad u_h - grad u|_F^2)`` for a CR vector field."""
    pts, wts, _ = quadrature_points(m, degree)
    exact = np.asarray(grad_u(pts[..., 0], pts[..., 1]), dtype=float)  # (2, 2, T, Q)
    disc = cr_gradient(m, np.asarray(u_h, dtype=float))  # (T, 2, 2)
    diff = exact - disc.transpose(1, 2, 0)[..., None]
    return math.sqrt(float(np.einsum("ijtq,tq->", diff**2, wts)))


def l2_error(m: Mesh, p_h: np.ndarray, p: Callable, degree: int | None = None) -> float:
    """``||p - p_h||_0`` for a P1 field ``p_h``."""
    pts, wts, lam = quadrature_points(m, degree)
    disc = np.einsum("tk,qk->tq", np.asarray(p_h, dtype=float)[m.triangles], lam)
    diff = np.asarray(p(pts[..., 0], pts[..., 1]), dtype=float) - disc
    return math.sqrt(float(np.sum(wts * diff**2)))


@dataclass
class ErrorRecord:
    level: int
    n_elements: int
    h: float
    err_u_h1_broken: float
    err_p_l2: float
    rate_u: float | None = None
    rate_p: float | None = None


def rate(coarse: float, fine: float) -> float:
    return math.log2(coarse / fine)


def fill_rates(records: list[ErrorRecord]) -> list[ErrorRecord]:
    for prev, cur in zip(records, records[1:]):
        cur.rate_u = rate(prev.err_u_h1_broken, cur.err_u_h1_broken)
        cur.rate_p = rate(prev.err_p_l2, cur.err_p_l2)
    return records
