"""Command-line harness: convergence tables, inf-sup constants, lemma checks."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from .analysis import (
    PAIRS,
    DimensionCapError,
    InfSupReport,
    check_lemma1,
    check_lemma2,
    infsup_constant,
    random_pressure,
    random_velocity,
)
from .assembly import assemble_system
from .mesh import build_unit_square
from .norms import ErrorRecord, broken_h1_seminorm_error, l2_error, rate
from .solutions import make_solution
from .solver import SingularSystemError, ToleranceError, solve_stokes

MAX_LEVEL = 6
DEFAULT_MAX_LEVEL = {"convergence": 4, "infsup": 3, "lemmas": 3}

CONVERGENCE_HEADER = "level,n_elements,h,err_u_h1,rate_u,err_p_l2,rate_p"
INFSUP_HEADER = "pair,level,n_u,n_p,beta_h"
INFSUP_DETAIL = ",kernel_dim,beta_reduced"
LEMMAS_HEADER = "level,lemma1_max_gap,lemma2_min_ratio,lemma2_max_ratio"


@dataclass
class RunConfig:
    command: str
    example: int | None = None
    max_level: int | None = None
    min_level: int = 0
    nu_override: float | None = None
    seed: int = 0
    output_path: str | None = None
    format: str = "text"
    pair: str = "all"
    norm: str = "full"
    detail: bool = False
    lemma1_samples: int = 50
    lemma2_samples: int = 200

    def __post_init__(self):
        if self.command not in DEFAULT_MAX_LEVEL:
            raise ValueError(f"unknown command {self.command!r}")
        if self.max_level is None:
            self.max_level = DEFAULT_MAX_LEVEL[self.command]
        if self.max_level > MAX_LEVEL:
            raise ValueError(f"max_level {self.max_level} above desk-scale cap {MAX_LEVEL}")
        if self.min_level < 0:
            raise ValueError("min_level must be non-negative")
        if self.command == "convergence" and self.example not in (1, 2):
            raise ValueError("convergence needs example 1 or 2")
        if self.format not in ("text", "csv"):
            raise ValueError(f"unknown format {self.format!r}")

    @property
    def levels(self) -> range:
        return range(self.min_level, self.max_level + 1)

    def rng(self, level: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, level])


def _e(x: float) -> str:
    return f"{x:.5e}"


def _r(x: float | None) -> str:
    return "" if x is None else f"{x:.2f}"


def convergence_row(rec: ErrorRecord) -> list[str]:
    return [str(rec.level), str(rec.n_elements), _e(rec.h), _e(rec.err_u_h1_broken),
            _r(rec.rate_u), _e(rec.err_p_l2), _r(rec.rate_p)]


class _Table:
    """Row emitter that flushes every row as soon as it is produced.

    The header goes out with the first row, so an empty level range
    produces no output at all.
    """

    def __init__(self, out: TextIO, header: str, fmt: str):
        self.out = out
        self.fmt = fmt
        self.names = header.split(",")
        self.widths = [max(12, len(n)) for n in self.names]
        self._started = False

    def _write(self, cells):
        if self.fmt == "csv":
            line = ",".join(cells)
        else:
            line = "  ".join(c.rjust(w) for c, w in zip(cells, self.widths)).rstrip()
        self.out.write(line + "\n")
        self.out.flush()

    def row(self, cells):
        if not self._started:
            self._write(self.names)
            self._started = True
        self._write(cells)

    def note(self, text: str):
        if self.fmt == "text":
            self.out.write(text + "\n")
            self.out.flush()


def solve_level(solution, level: int) -> ErrorRecord:
    m = build_unit_square(level)
    system = assemble_system(m, solution.nu, solution.f, solution.u)
    sol = solve_stokes(system)
    return ErrorRecord(
        level=level,
        n_elements=m.n_triangles,
        h=m.h,
        err_u_h1_broken=broken_h1_seminorm_error(m, sol.u.coefficients, solution.grad_u),
        err_p_l2=l2_error(m, sol.p.coefficients, solution.p),
    )


def run_convergence(cfg: RunConfig, emit: Callable[[ErrorRecord], None] | None = None
                    ) -> list[ErrorRecord]:
    solution = make_solution(cfg.example)
    if cfg.nu_override is not None:
        solution = solution.with_viscosity(cfg.nu_override)
    records: list[ErrorRecord] = []
    for level in cfg.levels:
        rec = solve_level(solution, level)
        if records:
            rec.rate_u = rate(records[-1].err_u_h1_broken, rec.err_u_h1_broken)
            rec.rate_p = rate(records[-1].err_p_l2, rec.err_p_l2)
        records.append(rec)
        if emit is not None:
            emit(rec)
    return records


def run_infsup(cfg: RunConfig, emit: Callable[[InfSupReport], None] | None = None
               ) -> list[InfSupReport]:
    pairs = PAIRS if cfg.pair == "all" else (cfg.pair,)
    reports = []
    for pair in pairs:
        for level in cfg.levels:
            rep = infsup_constant(build_unit_square(level), pair, cfg.norm)
            reports.append(rep)
            if emit is not None:
                emit(rep)
    return reports


@dataclass
class LemmaSummary:
    level: int
    lemma1_max_gap: float
    lemma2_min_ratio: float
    lemma2_max_ratio: float


def run_lemmas(cfg: RunConfig, emit: Callable[[LemmaSummary], None] | None = None
               ) -> list[LemmaSummary]:
    out = []
    for level in cfg.levels:
        m = build_unit_square(level)
        rng = cfg.rng(level)
        gap = max(
            check_lemma1(m, random_velocity(m, rng), random_pressure(m, rng)).relative_gap
            for _ in range(cfg.lemma1_samples)
        )
        lo, hi = check_lemma2(m, cfg.lemma2_samples, rng)
        summary = LemmaSummary(level, gap, lo, hi)
        out.append(summary)
        if emit is not None:
            emit(summary)
    return out


def execute(cfg: RunConfig, out: TextIO) -> None:
    if cfg.command == "convergence":
        table = _Table(out, CONVERGENCE_HEADER, cfg.format)
        run_convergence(cfg, lambda rec: table.row(convergence_row(rec)))
    elif cfg.command == "infsup":
        header = INFSUP_HEADER + (INFSUP_DETAIL if cfg.detail else "")
        table = _Table(out, header, cfg.format)

        def emit(rep: InfSupReport):
            cells = [rep.pair, str(rep.level), str(rep.n_u), str(rep.n_p), _e(rep.beta_h)]
            if cfg.detail:
                cells += [str(rep.kernel_dim), _e(rep.beta_reduced)]
            table.row(cells)

        run_infsup(cfg, emit)
    else:
        table = _Table(out, LEMMAS_HEADER, cfg.format)
        rows = run_lemmas(cfg, lambda s: table.row(
            [str(s.level), _e(s.lemma1_max_gap), _e(s.lemma2_min_ratio), _e(s.lemma2_max_ratio)]
        ))
        if rows:
            table.note(f"max lemma-1 relative gap: {_e(max(r.lemma1_max_gap for r in rows))}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="crstokes",
        description="Crouzeix-Raviart / P1 Stokes: convergence and stability checks.",
    )
    ap.add_argument("--command", choices=sorted(DEFAULT_MAX_LEVEL), default="convergence")
    ap.add_argument("--example", type=int, choices=(1, 2))
    ap.add_argument("--max-level", type=int, help=f"finest level (<= {MAX_LEVEL})")
    ap.add_argument("--min-level", type=int, default=0)
    ap.add_argument("--nu", type=float, dest="nu_override",
                    help="rescale the example to this viscosity (pressure and force scale along)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--format", choices=("text", "csv"), default="text")
    ap.add_argument("--out", dest="output_path")
    ap.add_argument("--pair", choices=("all",) + PAIRS, default="all")
    ap.add_argument("--norm", choices=("full", "semi"), default="full")
    ap.add_argument("--detail", action="store_true",
                    help="infsup: add kernel dimension and reduced constant columns")
    ap.add_argument("--lemma1-samples", type=int, default=50)
    ap.add_argument("--lemma2-samples", type=int, default=200)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(**vars(args))
    except ValueError as exc:
        parser.error(str(exc))

    out = open(cfg.output_path, "w") if cfg.output_path else sys.stdout
    try:
        execute(cfg, out)
    except (SingularSystemError, ToleranceError, DimensionCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
