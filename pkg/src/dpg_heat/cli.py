"""Command-line driver: single runs, convergence studies, stability sweeps.

CSV output uses 17 significant digits so rows round-trip to the same
floating-point values. Exit codes: 0 success, 1 configuration error,
2 solver failure, 3 check failure (with --check).
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .assembly import SolverError
from .errors import ErrorReport, error_report, stability_ratio
from .mesh import TimeGrid, build_uniform_mesh, mesh_size
from .solutions import ExactSolution, example1, example2
from .spaces import TrialConfig
from .stepping import RunConfig, run

CONVERGE_HEADER = [
    "n", "h", "k", "N", "dofs",
    "err_u", "err_sigma", "err_hat_u", "err_hat_sigma", "err_u0", "err_energy",
    "stability_ratio", "C_n", "runtime_s",
]
STABILITY_HEADER = ["coupling", "n", "h", "k", "N", "stability_ratio", "max_step_ratio"]

STABILITY_SLACK = 1e-8
FIELD_ENERGY_SLACK = 1e-6

COUPLINGS = {
    "sqrt": lambda h, c: c * math.sqrt(h),
    "linear": lambda h, c: c * h,
    "twothirds": lambda h, c: c * h ** (2.0 / 3.0),
}


@dataclass
class CliConfig:
    example: int
    levels: list[int]
    coupling: str
    c: float
    T: float
    u_degree: int
    out: str | None
    threads: int
    check: bool
    series_terms: int = 1000


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _exact_for(config: CliConfig) -> ExactSolution:
    return example1() if config.example == 1 else example2(config.series_terms)


def snap_time_grid(T: float, k_requested: float) -> TimeGrid:
    """Snap k to T/N with N = ceil(T/k) so the last step lands on T."""
    N = max(1, math.ceil(T / k_requested - 1e-12))
    return TimeGrid(T=T, N=N)


def run_level(config: CliConfig, n: int, coupling: str) -> tuple[ErrorReport, object]:
    exact = _exact_for(config)
    h = mesh_size(build_uniform_mesh(n))
    grid = snap_time_grid(config.T, COUPLINGS[coupling](h, config.c))
    run_cfg = RunConfig(
        subdivisions=n,
        time_grid=grid,
        trial=TrialConfig(u_degree=config.u_degree),
        check_step_stability=False,
    )
    result = run(run_cfg, exact)
    return error_report(result, exact), result


def _write_csv(path: str | None, header: list[str], rows: list[list]) -> None:
    stream = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.writer(stream)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    finally:
        if path:
            stream.close()


def run_converge(config: CliConfig) -> int:
    rows = []
    ok = True
    for n in config.levels:
        try:
            report, _ = run_level(config, n, config.coupling)
        except SolverError as exc:
            print(f"error: level n={n} failed: {exc}", file=sys.stderr)
            return 2
        rows.append([
            n, report.h, report.k, report.N, report.dofs,
            report.err_u, report.err_sigma, report.err_hat_u,
            report.err_hat_sigma, report.err_u0, report.err_energy,
            report.stability_ratio, report.C_n, report.runtime_s,
        ])
        if config.check:
            lhs = report.err_u**2 + report.err_sigma**2
            if lhs > report.err_energy**2 * (1.0 + FIELD_ENERGY_SLACK):
                print(f"check failed: field-vs-energy bound at n={n}", file=sys.stderr)
                ok = False
            if report.err_energy > math.sqrt(3.0) * report.x2_bound * (1.0 + FIELD_ENERGY_SLACK):
                print(f"check failed: energy-vs-X2 bound at n={n}", file=sys.stderr)
                ok = False
    _write_csv(config.out, CONVERGE_HEADER, rows)
    return 0 if ok else 3


def run_stability(config: CliConfig) -> int:
    rows = []
    ok = True
    for coupling in ("linear", "sqrt"):
        for n in config.levels:
            try:
                report, result = run_level(config, n, coupling)
            except SolverError as exc:
                print(
                    f"error: level n={n} ({coupling}) failed: {exc}", file=sys.stderr
                )
                return 2
            ratio = stability_ratio(result)
            max_step = max(s.stability_ratio_step for s in result.steps)
            rows.append([coupling, n, report.h, report.k, report.N, ratio, max_step])
            if config.check and (
                ratio > 1.0 + STABILITY_SLACK or max_step > 1.0 + STABILITY_SLACK
            ):
                print(
                    f"check failed: stability ratio at n={n} ({coupling})",
                    file=sys.stderr,
                )
                ok = False
    _write_csv(config.out, STABILITY_HEADER, rows)
    return 0 if ok else 3


def run_single(config: CliConfig) -> int:
    config.levels = config.levels[:1]
    return run_converge(config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpg-heat",
        description="Backward-Euler DPG solver for the 2D heat equation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("run", "single run at the first level"),
        ("converge", "error table over refinement levels"),
        ("stability", "stability ratios for both time-step couplings"),
    ):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--example", type=int, choices=(1, 2), default=1)
        p.add_argument(
            "--levels", type=lambda s: [int(v) for v in s.split(",")],
            default=[4, 8, 16, 32],
            help="comma-separated mesh subdivisions, ascending",
        )
        p.add_argument(
            "--coupling", choices=sorted(COUPLINGS), default="sqrt",
            help="time-step/mesh coupling k = c*sqrt(h), c*h, or c*h^(2/3)",
        )
        p.add_argument("--c", type=float, default=None,
                       help="coupling constant (default 1/20, 1/10 for example 2)")
        p.add_argument("--T", type=float, default=0.1)
        p.add_argument("--u-degree", type=int, choices=(0, 1), default=0)
        p.add_argument("--series-terms", type=int, default=1000)
        p.add_argument("--out", default=None, help="CSV output path (default stdout)")
        p.add_argument("--threads", type=int, default=0)
        p.add_argument("--check", action="store_true",
                       help="exit 3 if the run violates the theory bounds")
    return parser


def parse_config(argv: list[str] | None = None) -> tuple[str, CliConfig]:
    args = build_parser().parse_args(argv)
    c = args.c
    if c is None:
        c = 0.1 if args.example == 2 else 0.05
    threads = args.threads
    env_threads = os.environ.get("DPG_HEAT_THREADS")
    if env_threads is not None:
        threads = int(env_threads)
    config = CliConfig(
        example=args.example,
        levels=args.levels,
        coupling=args.coupling,
        c=c,
        T=args.T,
        u_degree=args.u_degree,
        out=args.out,
        threads=threads,
        check=args.check,
        series_terms=args.series_terms,
    )
    if config.T <= 0.0 or config.c <= 0.0:
        raise ValueError("T and c must be positive")
    if not config.levels or sorted(config.levels) != config.levels:
        raise ValueError("levels must be a nonempty ascending list")
    if any(n < 1 for n in config.levels):
        raise ValueError("levels must be >= 1")
    return args.command, config


def main(argv: list[str] | None = None) -> int:
    try:
        command, config = parse_config(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors; fold the
        # latter into the configuration-error code.
        return 0 if not exc.code else 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        if command == "run":
            return run_single(config)
        if command == "converge":
            return run_converge(config)
        return run_stability(config)
    except SolverError as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
