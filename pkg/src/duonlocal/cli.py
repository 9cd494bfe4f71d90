"""Batch command-line front end.

Subcommands
-----------
certify           evaluate the contraction certificate, write a report
solve             certify, then Picard-solve one horizon and write outputs
global            certify, then chain certified windows over a long horizon
validate-kernels  run only the kernel admissibility checks
norms             report norms of the configured initial data and kernels

Exit codes: 0 on success, 1 when certification, validation, or the
solve itself fails, 2 for usage and configuration errors.  ``--force``
runs a solve despite a failing certificate; everything it produces is
marked UNCERTIFIED.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .config import (
    ConfigError,
    RunConfig,
    build_grid,
    build_initial_condition,
    build_kernel,
    build_reaction,
    dump_config,
    load_config,
)
from .fixedpoint import (
    Certificate,
    ContractionBreachError,
    PicardConvergenceError,
    UncertifiedError,
    certify,
    global_solve,
    picard_solve,
)
from .grid import FieldPhysical, HermitianSymmetryError, SpectralGrid, TailDecayError, check_tail_decay
from .io import write_trajectory_binary, write_trajectory_csv
from .kernels import Kernel, KernelPair, validate_kernels
from .nonlinearity import Nonlinearity
from .norms import h2_norm, l2_slice, spacetime_norm
from .propagation import KernelAdmissibilityError, Trajectory
from .reports import (
    certificate_items,
    norm_items,
    picard_items,
    render_report,
    validation_items,
)

_SOLVE_FAILURES = (
    TailDecayError,
    HermitianSymmetryError,
    KernelAdmissibilityError,
    UncertifiedError,
    PicardConvergenceError,
    ContractionBreachError,
)


@dataclass
class Problem:
    """Everything a command needs, built once from the configuration."""

    cfg: RunConfig
    grid: SpectralGrid
    diffusion: Kernel
    production: Kernel
    reaction: Nonlinearity
    u0: FieldPhysical


def _build_problem(cfg: RunConfig) -> Problem:
    """Construct grid, kernels, reaction, and initial state.

    Parameter-level mistakes (negative widths, mismatched files) are
    configuration errors; tail-decay refusals keep their own type so
    they exit as computational failures, not usage errors.
    """
    grid = build_grid(cfg)
    tail = cfg.solver.tail_threshold
    try:
        diffusion = build_kernel(cfg.diffusion_kernel, grid, tail)
        production = build_kernel(cfg.production_kernel, grid, tail)
        reaction = build_reaction(cfg, grid)
        u0 = build_initial_condition(cfg, grid)
        check_tail_decay(u0, tail, what="initial condition")
    except TailDecayError:
        raise
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from exc
    return Problem(cfg, grid, diffusion, production, reaction, u0)


def _write_report(outdir: Path, command: str, text: str) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"{command.replace('-', '_')}_report.txt"
    path.write_text(text, encoding="utf-8")
    return path


def _outdir(cfg: RunConfig, args) -> Path:
    return Path(args.out) if args.out else Path(cfg.output.directory)


def _certification(problem: Problem):
    """(validation report, certificate or None) for the configured setup."""
    cfg = problem.cfg
    validation = validate_kernels(
        problem.diffusion, problem.production, cfg.solver.sign_tolerance
    )
    certificate: Optional[Certificate] = None
    if validation.passed:
        pair = KernelPair.build(problem.diffusion, problem.production)
        certificate = certify(
            problem.grid,
            cfg.model,
            pair,
            problem.reaction,
            margin=cfg.solver.margin,
            support_threshold=cfg.solver.support_threshold,
        )
    return validation, certificate


def _write_trajectory(outdir: Path, cfg: RunConfig, trajectory: Trajectory) -> list:
    items = []
    if cfg.output.write_trajectory:
        if cfg.output.trajectory_format == "csv":
            path = outdir / "trajectory.csv"
            write_trajectory_csv(path, trajectory)
        else:
            path = outdir / "trajectory.bin"
            write_trajectory_binary(path, trajectory)
        items.append(("trajectory_file", str(path)))
        items.append(("trajectory_format", cfg.output.trajectory_format))
    return items


def _solve_command(args, chained: bool) -> int:
    cfg = load_config(args.config)
    outdir = _outdir(cfg, args)
    command = "global" if chained else "solve"
    try:
        problem = _build_problem(cfg)
    except TailDecayError as exc:
        report = render_report(command, "FAILED", __version__, [], dump_config(cfg), str(exc))
        path = _write_report(outdir, command, report)
        print(f"FAILED: {exc}", file=sys.stderr)
        print(f"report: {path}")
        return 1

    t0 = time.perf_counter()
    validation, certificate = _certification(problem)
    certify_seconds = time.perf_counter() - t0

    sections = [("kernel_validation", validation_items(validation))]
    if certificate is not None:
        sections.append(("certificate", certificate_items(certificate)))
    certified = validation.passed and certificate is not None and certificate.passes

    if not certified and not args.force:
        report = render_report(
            command,
            "REFUSED",
            __version__,
            sections,
            dump_config(cfg),
            "certification failed; rerun with --force to solve anyway (UNCERTIFIED)",
        )
        path = _write_report(outdir, command, report)
        print("REFUSED: certification failed (use --force to override)", file=sys.stderr)
        print(f"report: {path}")
        return 1

    solver = cfg.solver
    t0 = time.perf_counter()
    try:
        if chained:
            trajectory, window_reports = global_solve(
                cfg.model,
                problem.diffusion,
                problem.production,
                problem.reaction,
                problem.u0,
                solver.n_windows,
                tol=solver.tolerance,
                max_iter=solver.max_iter,
                ratio_slack=solver.ratio_slack,
                require_certified=certified,
                validate_kernel=certified,
                threads=args.threads,
            )
            picard_sections = [
                (f"picard_window_{i + 1}", picard_items(rep))
                for i, rep in enumerate(window_reports)
            ]
        else:
            trajectory, picard_report = picard_solve(
                cfg.model,
                problem.diffusion,
                problem.production,
                problem.reaction,
                problem.u0,
                tol=solver.tolerance,
                max_iter=solver.max_iter,
                ratio_slack=solver.ratio_slack,
                require_certified=certified,
                validate_kernel=certified,
                threads=args.threads,
            )
            picard_sections = [("picard", picard_items(picard_report))]
    except (*_SOLVE_FAILURES, ValueError) as exc:
        report = render_report(
            command, "FAILED", __version__, sections, dump_config(cfg), str(exc)
        )
        path = _write_report(outdir, command, report)
        print(f"FAILED: {exc}", file=sys.stderr)
        print(f"report: {path}")
        return 1
    solve_seconds = time.perf_counter() - t0

    sections.extend(picard_sections)
    norms = spacetime_norm(trajectory)
    terminal = trajectory.terminal_slice()
    norm_section = norm_items(norms) + [
        ("terminal_l2", l2_slice(terminal)),
        ("terminal_h2", h2_norm(terminal)),
    ]
    sections.append(("norms", norm_section))

    outdir.mkdir(parents=True, exist_ok=True)
    output_items = _write_trajectory(outdir, cfg, trajectory)
    if output_items:
        sections.append(("output", output_items))
    sections.append(
        (
            "timings",
            [("certify_seconds", certify_seconds), ("solve_seconds", solve_seconds)],
        )
    )
    status = "CERTIFIED" if certified else "UNCERTIFIED"
    report = render_report(command, status, __version__, sections, dump_config(cfg))
    path = _write_report(outdir, command, report)
    iterations = sum(
        rep.iterations for rep in (window_reports if chained else [picard_report])
    )
    print(f"{status}: converged in {iterations} iterations; report: {path}")
    return 0


def _cmd_solve(args) -> int:
    return _solve_command(args, chained=False)


def _cmd_global(args) -> int:
    return _solve_command(args, chained=True)


def _cmd_certify(args) -> int:
    cfg = load_config(args.config)
    outdir = _outdir(cfg, args)
    try:
        problem = _build_problem(cfg)
    except TailDecayError as exc:
        report = render_report(
            "certify", "FAILED", __version__, [], dump_config(cfg), str(exc)
        )
        path = _write_report(outdir, "certify", report)
        print(f"FAILED: {exc}", file=sys.stderr)
        print(f"report: {path}")
        return 1
    t0 = time.perf_counter()
    validation, certificate = _certification(problem)
    certify_seconds = time.perf_counter() - t0
    sections = [("kernel_validation", validation_items(validation))]
    if certificate is not None:
        sections.append(("certificate", certificate_items(certificate)))
    sections.append(("timings", [("certify_seconds", certify_seconds)]))
    passed = validation.passed and certificate is not None and certificate.passes
    status = "CERTIFIED" if passed else "NOT_CERTIFIED"
    report = render_report("certify", status, __version__, sections, dump_config(cfg))
    path = _write_report(outdir, "certify", report)
    if certificate is not None:
        print(f"{status}: contraction = {certificate.contraction:.17g}")
    else:
        print(f"{status}: kernel validation failed")
    print(f"report: {path}")
    return 0 if passed else 1


def _cmd_validate_kernels(args) -> int:
    cfg = load_config(args.config)
    outdir = _outdir(cfg, args)
    try:
        problem = _build_problem(cfg)
    except TailDecayError as exc:
        report = render_report(
            "validate-kernels", "FAILED", __version__, [], dump_config(cfg), str(exc)
        )
        path = _write_report(outdir, "validate-kernels", report)
        print(f"FAILED: {exc}", file=sys.stderr)
        print(f"report: {path}")
        return 1
    validation = validate_kernels(
        problem.diffusion, problem.production, cfg.solver.sign_tolerance
    )
    status = "PASSED" if validation.passed else "FAILED"
    report = render_report(
        "validate-kernels",
        status,
        __version__,
        [("kernel_validation", validation_items(validation))],
        dump_config(cfg),
    )
    path = _write_report(outdir, "validate-kernels", report)
    print(validation.summary())
    print(f"report: {path}")
    return 0 if validation.passed else 1


def _cmd_norms(args) -> int:
    cfg = load_config(args.config)
    outdir = _outdir(cfg, args)
    try:
        problem = _build_problem(cfg)
        u0_l2 = l2_slice(problem.u0)
        u0_h2 = h2_norm(problem.u0)
    except TailDecayError as exc:
        report = render_report(
            "norms", "FAILED", __version__, [], dump_config(cfg), str(exc)
        )
        path = _write_report(outdir, "norms", report)
        print(f"FAILED: {exc}", file=sys.stderr)
        print(f"report: {path}")
        return 1
    items = [
        ("initial_l2", u0_l2),
        ("initial_h2", u0_h2),
        ("diffusion_l1", problem.diffusion.l1_norm),
        ("production_l1", problem.production.l1_norm),
        ("production_second_derivative_l1", problem.production.second_derivative_l1_norm),
    ]
    if problem.production.second_derivative_l1_norm is not None:
        items.append(("production_gain", KernelPair.build(problem.diffusion, problem.production).gain))
    report = render_report(
        "norms", "OK", __version__, [("norms", items)], dump_config(cfg)
    )
    path = _write_report(outdir, "norms", report)
    for key, value in items:
        if value is not None:
            print(f"{key} = {value:.17g}")
    print(f"report: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duonlocal",
        description="Certified pseudospectral solver for doubly nonlocal dynamics.",
    )
    parser.add_argument("--version", action="version", version=f"duonlocal {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the TOML run configuration")
    common.add_argument("--out", default=None, help="output directory (default: from config)")
    common.add_argument(
        "--force",
        action="store_true",
        help="solve even when certification fails; outputs are marked UNCERTIFIED",
    )
    common.add_argument(
        "--threads",
        type=int,
        default=1,
        help="worker threads for the time-slice quadrature (0 = auto)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("certify", parents=[common], help="evaluate the contraction certificate").set_defaults(
        handler=_cmd_certify
    )
    sub.add_parser("solve", parents=[common], help="certify and solve one horizon").set_defaults(
        handler=_cmd_solve
    )
    sub.add_parser("global", parents=[common], help="chain certified windows").set_defaults(
        handler=_cmd_global
    )
    sub.add_parser(
        "validate-kernels", parents=[common], help="run kernel admissibility checks"
    ).set_defaults(handler=_cmd_validate_kernels)
    sub.add_parser(
        "norms", parents=[common], help="report norms of the configured data"
    ).set_defaults(handler=_cmd_norms)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
