"""Manufactured Stokes solutions on the unit square.

Vector-valued callables return an array whose leading axis is the
component, e.g. ``u(x, y).shape == (2,) + x.shape``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ManufacturedSolution:
    name: str
    nu: float
    u: Callable
    grad_u: Callable  # (2, 2, ...) indexed [component, direction]
    p: Callable
    f: Callable

    def with_viscosity(self, nu: float) -> ManufacturedSolution:
        """Rescale to viscosity ``nu`` keeping the same velocity.

        Pressure and body force scale by ``nu / self.nu`` so the pair stays an
        exact solution.
        """
        s = nu / self.nu
        p, f = self.p, self.f
        return replace(
            self,
            nu=nu,
            p=lambda x, y: s * p(x, y),
            f=lambda x, y: s * np.asarray(f(x, y)),
        )


def _example1() -> ManufacturedSolution:
    def u(x, y):
        return np.array([
            x + x**2 - 2 * x * y + x**3 - 3 * x * y**2 + x**2 * y,
            -y - 2 * x * y + y**2 - 3 * x**2 * y + y**3 - x * y**2,
        ])

    def grad_u(x, y):
        return np.array([
            [1 + 2 * x - 2 * y + 3 * x**2 - 3 * y**2 + 2 * x * y, -2 * x - 6 * x * y + x**2],
            [-2 * y - 6 * x * y - y**2, -1 - 2 * x + 2 * y - 3 * x**2 + 3 * y**2 - 2 * x * y],
        ])

    def p(x, y):
        return x * y + x + y + x**3 * y**2 - 4.0 / 3.0

    def f(x, y):
        # -lap u = (-2 - 2y, -2 + 2x), grad p = (y + 1 + 3x^2y^2, x + 1 + 2x^3y)
        return np.array([
            -1 - y + 3 * x**2 * y**2,
            -1 + 3 * x + 2 * x**3 * y,
        ])

    return ManufacturedSolution("example1", 1.0, u, grad_u, p, f)


def _example2() -> ManufacturedSolution:
    nu = 5.0

    def u(x, y):
        e, s, c = np.exp(y - x), np.sin(5 * x), np.cos(5 * x)
        return np.array([e * s, e * (s - 5 * c)])

    def grad_u(x, y):
        e, s, c = np.exp(y - x), np.sin(5 * x), np.cos(5 * x)
        return np.array([
            [e * (5 * c - s), e * s],
            [e * (24 * s + 10 * c), e * (s - 5 * c)],
        ])

    def p(x, y):
        return x * y * (1 - x) * (1 - y) - 1.0 / 36.0

    def f(x, y):
        e, s, c = np.exp(y - x), np.sin(5 * x), np.cos(5 * x)
        lap1 = e * (-23 * s - 10 * c)
        lap2 = e * (-73 * s + 105 * c)
        return np.array([
            -nu * lap1 + y * (1 - y) * (1 - 2 * x),
            -nu * lap2 + x * (1 - x) * (1 - 2 * y),
        ])

    return ManufacturedSolution("example2", nu, u, grad_u, p, f)


def _patch_linear() -> ManufacturedSolution:
    def u(x, y):
        return np.array([y + 0 * x, x + 0 * y])

    def grad_u(x, y):
        z, o = np.zeros_like(x + y), np.ones_like(x + y)
        return np.array([[z, o], [o, z]])

    def p(x, y):
        return np.zeros_like(x + y)

    def f(x, y):
        z = np.zeros_like(x + y)
        return np.array([z, z])

    return ManufacturedSolution("patch_linear", 1.0, u, grad_u, p, f)


_SOLUTIONS = {
    "example1": _example1,
    "example2": _example2,
    "patch_linear": _patch_linear,
}


def make_solution(name: str | int) -> ManufacturedSolution:
    key = f"example{name}" if isinstance(name, int) else name
    try:
        return _SOLUTIONS[key]()
    except KeyError:
        raise ValueError(f"unknown manufactured solution {name!r}; "
                         f"choose from {sorted(_SOLUTIONS)}") from None
