"""Crouzeix-Raviart velocity / continuous P1 pressure Stokes discretization."""

from .analysis import apply_Ih, check_lemma1, check_lemma2, infsup_constant
from .assembly import SparseSystem, assemble_system
from .mesh import Mesh, build_unit_square, refine_uniform
from .solutions import ManufacturedSolution, make_solution
from .solver import SaddleSolution, solve_stokes

__all__ = [
    "ManufacturedSolution",
    "Mesh",
    "SaddleSolution",
    "SparseSystem",
    "apply_Ih",
    "assemble_system",
    "build_unit_square",
    "check_lemma1",
    "check_lemma2",
    "infsup_constant",
    "make_solution",
    "refine_uniform",
    "solve_stokes",
]
