"""Run configuration: strict TOML parsing, canonical echo, object builders.

A run is described by one TOML file with sections

    [grid] [model] [diffusion_kernel] [production_kernel]
    [reaction] [initial_condition] [solver] [output]

Parsing is strict: unknown keys, unknown kinds, missing sections,
non-finite numbers and dangling file paths are all configuration
errors.  Relative paths are resolved against the config file's
directory at parse time, so the echoed form of a configuration is
self-contained: parse(echo(parse(file))) == parse(file), and reports
embed the echo so any result can be reproduced from the report alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .grid import FieldPhysical, SpectralGrid
from .kernels import Kernel, load_field_text
from .nonlinearity import Nonlinearity
from .propagation import ModelParams


class ConfigError(ValueError):
    """The configuration file is malformed or internally inconsistent."""


_KERNEL_KINDS = ("gaussian", "negative_gaussian", "laplace", "tabulated")
_REACTION_KINDS = ("linear", "saturating_linear", "affine_offset")
_FIELD_KINDS = ("gaussian", "tabulated")
_TRAJECTORY_FORMATS = ("csv", "binary")


@dataclass(frozen=True)
class GridConfig:
    half_length: float
    n_points: int


@dataclass(frozen=True)
class KernelConfig:
    kind: str
    amplitude: Optional[float] = None
    width: Optional[float] = None
    scale: Optional[float] = None
    path: Optional[str] = None


@dataclass(frozen=True)
class FieldConfig:
    """A gaussian bump or a tabulated file; used for u0 and the offset."""

    kind: str
    amplitude: Optional[float] = None
    center: Optional[float] = None
    width: Optional[float] = None
    path: Optional[str] = None


@dataclass(frozen=True)
class ReactionConfig:
    kind: str
    c: float
    u_cap: Optional[float] = None
    offset: Optional[FieldConfig] = None


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10
    max_iter: int = 50
    ratio_slack: float = 0.05
    margin: float = 0.0
    support_threshold: float = 1e-8
    n_windows: int = 1
    tail_threshold: float = 1e-10
    sign_tolerance: float = 1e-12


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    trajectory_format: str = "csv"
    write_trajectory: bool = True


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig
    model: ModelParams
    diffusion_kernel: KernelConfig
    production_kernel: KernelConfig
    reaction: ReactionConfig
    initial_condition: FieldConfig
    solver: SolverConfig
    output: OutputConfig


# -- strict table readers ------------------------------------------------------

_MISSING = object()


def _section(doc: dict, name: str, required: bool = True) -> dict:
    table = doc.pop(name, _MISSING)
    if table is _MISSING:
        if required:
            raise ConfigError(f"missing section [{name}]")
        return {}
    if not isinstance(table, dict):
        raise ConfigError(f"[{name}] must be a table")
    return dict(table)


def _no_leftovers(table: dict, where: str) -> None:
    if table:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(table)}")


def _take_float(table: dict, key: str, where: str, default=_MISSING) -> float:
    value = table.pop(key, _MISSING)
    if value is _MISSING:
        if default is _MISSING:
            raise ConfigError(f"[{where}] is missing required key '{key}'")
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{where}].{key} must be a number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ConfigError(f"[{where}].{key} must be finite, got {value!r}")
    return value


def _take_int(table: dict, key: str, where: str, default=_MISSING) -> int:
    value = table.pop(key, _MISSING)
    if value is _MISSING:
        if default is _MISSING:
            raise ConfigError(f"[{where}] is missing required key '{key}'")
        return default
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"[{where}].{key} must be an integer, got {value!r}")
    return value


def _take_str(table: dict, key: str, where: str, choices=None, default=_MISSING) -> str:
    value = table.pop(key, _MISSING)
    if value is _MISSING:
        if default is _MISSING:
            raise ConfigError(f"[{where}] is missing required key '{key}'")
        return default
    if not isinstance(value, str):
        raise ConfigError(f"[{where}].{key} must be a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ConfigError(f"[{where}].{key} must be one of {choices}, got {value!r}")
    return value


def _take_bool(table: dict, key: str, where: str, default=_MISSING) -> bool:
    value = table.pop(key, _MISSING)
    if value is _MISSING:
        if default is _MISSING:
            raise ConfigError(f"[{where}] is missing required key '{key}'")
        return default
    if not isinstance(value, bool):
        raise ConfigError(f"[{where}].{key} must be a boolean, got {value!r}")
    return value


def _take_path(table: dict, key: str, where: str, base: Path) -> str:
    raw = _take_str(table, key, where)
    path = Path(raw)
    if not path.is_absolute():
        path = base / path
    path = path.resolve()
    if not path.is_file():
        raise ConfigError(f"[{where}].{key} does not exist: {path}")
    return str(path)


# -- section parsers -----------------------------------------------------------


def _parse_kernel(doc: dict, name: str, base: Path) -> KernelConfig:
    table = _section(doc, name)
    kind = _take_str(table, "kind", name, choices=_KERNEL_KINDS)
    cfg: KernelConfig
    if kind in ("gaussian", "negative_gaussian"):
        cfg = KernelConfig(
            kind=kind,
            amplitude=_take_float(table, "amplitude", name),
            width=_take_float(table, "width", name),
        )
    elif kind == "laplace":
        cfg = KernelConfig(
            kind=kind,
            amplitude=_take_float(table, "amplitude", name),
            scale=_take_float(table, "scale", name),
        )
    else:
        cfg = KernelConfig(kind=kind, path=_take_path(table, "path", name, base))
    _no_leftovers(table, name)
    return cfg


def _parse_field(table: dict, where: str, base: Path) -> FieldConfig:
    kind = _take_str(table, "kind", where, choices=_FIELD_KINDS)
    if kind == "gaussian":
        cfg = FieldConfig(
            kind=kind,
            amplitude=_take_float(table, "amplitude", where),
            center=_take_float(table, "center", where, default=0.0),
            width=_take_float(table, "width", where),
        )
    else:
        cfg = FieldConfig(kind=kind, path=_take_path(table, "path", where, base))
    _no_leftovers(table, where)
    return cfg


def _parse_reaction(doc: dict, base: Path) -> ReactionConfig:
    table = _section(doc, "reaction")
    kind = _take_str(table, "kind", "reaction", choices=_REACTION_KINDS)
    c = _take_float(table, "c", "reaction")
    u_cap = None
    offset = None
    if kind == "saturating_linear":
        u_cap = _take_float(table, "u_cap", "reaction")
    if kind == "affine_offset":
        raw = table.pop("offset", _MISSING)
        if raw is _MISSING or not isinstance(raw, dict):
            raise ConfigError("[reaction] affine_offset needs an [reaction.offset] table")
        offset = _parse_field(dict(raw), "reaction.offset", base)
    _no_leftovers(table, "reaction")
    return ReactionConfig(kind=kind, c=c, u_cap=u_cap, offset=offset)


def load_config(path) -> RunConfig:
    """Parse and validate a run configuration file."""
    path = Path(path)
    try:
        with open(path, "rb") as handle:
            doc = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file is not valid TOML: {exc}") from exc
    base = path.resolve().parent

    grid_table = _section(doc, "grid")
    grid = GridConfig(
        half_length=_take_float(grid_table, "half_length", "grid"),
        n_points=_take_int(grid_table, "n_points", "grid"),
    )
    _no_leftovers(grid_table, "grid")
    if grid.half_length <= 0:
        raise ConfigError(f"[grid].half_length must be positive, got {grid.half_length}")
    if grid.n_points < 8 or grid.n_points % 2:
        raise ConfigError(f"[grid].n_points must be even and >= 8, got {grid.n_points}")

    model_table = _section(doc, "model")
    try:
        model = ModelParams(
            linear_rate=_take_float(model_table, "linear_rate", "model"),
            transport_speed=_take_float(model_table, "transport_speed", "model"),
            horizon=_take_float(model_table, "horizon", "model"),
            n_steps=_take_int(model_table, "n_steps", "model"),
        )
    except ValueError as exc:
        raise ConfigError(f"[model]: {exc}") from exc
    _no_leftovers(model_table, "model")

    diffusion = _parse_kernel(doc, "diffusion_kernel", base)
    production = _parse_kernel(doc, "production_kernel", base)
    reaction = _parse_reaction(doc, base)

    initial_table = _section(doc, "initial_condition")
    initial = _parse_field(initial_table, "initial_condition", base)

    solver_table = _section(doc, "solver", required=False)
    solver = SolverConfig(
        tolerance=_take_float(solver_table, "tolerance", "solver", default=1e-10),
        max_iter=_take_int(solver_table, "max_iter", "solver", default=50),
        ratio_slack=_take_float(solver_table, "ratio_slack", "solver", default=0.05),
        margin=_take_float(solver_table, "margin", "solver", default=0.0),
        support_threshold=_take_float(
            solver_table, "support_threshold", "solver", default=1e-8
        ),
        n_windows=_take_int(solver_table, "n_windows", "solver", default=1),
        tail_threshold=_take_float(solver_table, "tail_threshold", "solver", default=1e-10),
        sign_tolerance=_take_float(
            solver_table, "sign_tolerance", "solver", default=1e-12
        ),
    )
    _no_leftovers(solver_table, "solver")
    if solver.tolerance <= 0:
        raise ConfigError("[solver].tolerance must be positive")
    if solver.max_iter < 1:
        raise ConfigError("[solver].max_iter must be >= 1")
    if not 0.0 <= solver.margin < 1.0:
        raise ConfigError("[solver].margin must lie in [0, 1)")
    if solver.n_windows < 1:
        raise ConfigError("[solver].n_windows must be >= 1")

    output_table = _section(doc, "output", required=False)
    output = OutputConfig(
        directory=_take_str(output_table, "directory", "output", default="out"),
        trajectory_format=_take_str(
            output_table,
            "trajectory_format",
            "output",
            choices=_TRAJECTORY_FORMATS,
            default="csv",
        ),
        write_trajectory=_take_bool(output_table, "write_trajectory", "output", default=True),
    )
    _no_leftovers(output_table, "output")

    if doc:
        raise ConfigError(f"unknown sections: {sorted(doc)}")
    return RunConfig(
        grid=grid,
        model=model,
        diffusion_kernel=diffusion,
        production_kernel=production,
        reaction=reaction,
        initial_condition=initial,
        solver=solver,
        output=output,
    )


# -- canonical echo ------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    raise TypeError(f"cannot format {value!r}")


def _emit_table(lines: list[str], name: str, items: list[tuple[str, object]]) -> None:
    lines.append(f"[{name}]")
    for key, value in items:
        if value is None:
            continue
        lines.append(f"{key} = {_fmt(value)}")
    lines.append("")


def dump_config(cfg: RunConfig) -> str:
    """Canonical TOML echo of a parsed configuration."""
    lines: list[str] = []
    _emit_table(
        lines,
        "grid",
        [("half_length", cfg.grid.half_length), ("n_points", cfg.grid.n_points)],
    )
    _emit_table(
        lines,
        "model",
        [
            ("linear_rate", cfg.model.linear_rate),
            ("transport_speed", cfg.model.transport_speed),
            ("horizon", cfg.model.horizon),
            ("n_steps", cfg.model.n_steps),
        ],
    )
    for name, kc in (
        ("diffusion_kernel", cfg.diffusion_kernel),
        ("production_kernel", cfg.production_kernel),
    ):
        _emit_table(
            lines,
            name,
            [
                ("kind", kc.kind),
                ("amplitude", kc.amplitude),
                ("width", kc.width),
                ("scale", kc.scale),
                ("path", kc.path),
            ],
        )
    _emit_table(
        lines,
        "reaction",
        [("kind", cfg.reaction.kind), ("c", cfg.reaction.c), ("u_cap", cfg.reaction.u_cap)],
    )
    if cfg.reaction.offset is not None:
        _emit_table(
            lines,
            "reaction.offset",
            [
                ("kind", cfg.reaction.offset.kind),
                ("amplitude", cfg.reaction.offset.amplitude),
                ("center", cfg.reaction.offset.center),
                ("width", cfg.reaction.offset.width),
                ("path", cfg.reaction.offset.path),
            ],
        )
    _emit_table(
        lines,
        "initial_condition",
        [
            ("kind", cfg.initial_condition.kind),
            ("amplitude", cfg.initial_condition.amplitude),
            ("center", cfg.initial_condition.center),
            ("width", cfg.initial_condition.width),
            ("path", cfg.initial_condition.path),
        ],
    )
    _emit_table(
        lines,
        "solver",
        [
            ("tolerance", cfg.solver.tolerance),
            ("max_iter", cfg.solver.max_iter),
            ("ratio_slack", cfg.solver.ratio_slack),
            ("margin", cfg.solver.margin),
            ("support_threshold", cfg.solver.support_threshold),
            ("n_windows", cfg.solver.n_windows),
            ("tail_threshold", cfg.solver.tail_threshold),
            ("sign_tolerance", cfg.solver.sign_tolerance),
        ],
    )
    _emit_table(
        lines,
        "output",
        [
            ("directory", cfg.output.directory),
            ("trajectory_format", cfg.output.trajectory_format),
            ("write_trajectory", cfg.output.write_trajectory),
        ],
    )
    return "\n".join(lines)


def parse_config_text(text: str, base: Path) -> RunConfig:
    """Parse configuration TOML from a string (used for echo round trips)."""
    import tempfile

    with tempfile.NamedTemporaryFile(
        "w", suffix=".toml", dir=base, delete=False, encoding="utf-8"
    ) as handle:
        handle.write(text)
        name = handle.name
    try:
        return load_config(name)
    finally:
        Path(name).unlink(missing_ok=True)


# -- builders -------------------------------------------------------------------


def build_grid(cfg: RunConfig) -> SpectralGrid:
    return SpectralGrid(cfg.grid.half_length, cfg.grid.n_points)


def build_kernel(kc: KernelConfig, grid: SpectralGrid, tail_threshold: float) -> Kernel:
    if kc.kind == "gaussian":
        return Kernel.gaussian(grid, kc.amplitude, kc.width, tail_threshold=tail_threshold)
    if kc.kind == "negative_gaussian":
        return Kernel.negative_gaussian(
            grid, kc.amplitude, kc.width, tail_threshold=tail_threshold
        )
    if kc.kind == "laplace":
        return Kernel.laplace(grid, kc.amplitude, kc.scale, tail_threshold=tail_threshold)
    return Kernel.from_file(grid, kc.path, tail_threshold=tail_threshold)


def build_field(fc: FieldConfig, grid: SpectralGrid) -> FieldPhysical:
    if fc.kind == "gaussian":
        center, width, amplitude = fc.center, fc.width, fc.amplitude
        if width <= 0:
            raise ConfigError(f"gaussian field width must be positive, got {width}")
        return grid.sample(lambda x: amplitude * np.exp(-((x - center) ** 2) / (2 * width**2)))
    return FieldPhysical(grid, load_field_text(grid, fc.path))


def build_reaction(cfg: RunConfig, grid: SpectralGrid) -> Nonlinearity:
    rc = cfg.reaction
    if rc.kind == "linear":
        return Nonlinearity.linear(rc.c)
    if rc.kind == "saturating_linear":
        return Nonlinearity.saturating_linear(rc.c, rc.u_cap)
    offset = build_field(rc.offset, grid)
    return Nonlinearity.affine_offset(rc.c, offset)


def build_initial_condition(cfg: RunConfig, grid: SpectralGrid) -> FieldPhysical:
    return build_field(cfg.initial_condition, grid)
