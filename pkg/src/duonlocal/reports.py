"""Structured, reproducible run reports.

Reports are TOML documents with stable field names and all numeric
values printed with 17 significant digits, so a report parses back to
exactly the floating-point numbers the run produced.  Each report
embeds the canonical echo of its configuration under [reproduce]:
re-running that echo reproduces the run bit-for-bit, timings aside.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional

from .fixedpoint import Certificate, PicardReport
from .kernels import KernelValidationReport
from .norms import SpacetimeNormReport

Item = tuple[str, object]


def fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(fmt_value(v) for v in value) + "]"
    raise TypeError(f"cannot format {value!r}")


def render_report(
    command: str,
    status: str,
    version: str,
    sections: Iterable[tuple[str, list[Item]]],
    config_echo: Optional[str] = None,
    error: Optional[str] = None,
) -> str:
    lines = [
        f"# duonlocal {command} report",
        f"command = {fmt_value(command)}",
        f"status = {fmt_value(status)}",
        f"version = {fmt_value(version)}",
    ]
    if error is not None:
        lines.append(f"error = {fmt_value(error)}")
    lines.append("")
    for name, items in sections:
        lines.append(f"[{name}]")
        for key, value in items:
            if value is None:
                continue
            lines.append(f"{key} = {fmt_value(value)}")
        lines.append("")
    if config_echo is not None:
        lines.append("[reproduce]")
        lines.append("config = '''")
        lines.append(config_echo.rstrip("\n"))
        lines.append("'''")
        lines.append("")
    return "\n".join(lines)


def validation_items(report: KernelValidationReport) -> list[Item]:
    return [
        ("passed", report.passed),
        ("max_real_diffusion_symbol", report.max_real_diffusion_symbol),
        ("worst_frequency", report.worst_frequency),
        ("sign_tolerance", report.sign_tolerance),
        ("diffusion_sign_ok", report.diffusion_sign_ok),
        ("diffusion_nontrivial", report.diffusion_nontrivial),
        ("production_nontrivial", report.production_nontrivial),
        ("production_l1", report.production_l1),
        ("production_second_derivative_l1", report.production_second_derivative_l1),
        (
            "production_second_derivative_integrable",
            report.production_second_derivative_l1 is not None,
        ),
    ]


def certificate_items(certificate: Certificate) -> list[Item]:
    return [
        ("passes", certificate.passes),
        ("contraction", certificate.contraction),
        ("gain", certificate.gain),
        ("lipschitz", certificate.lipschitz),
        ("growth", certificate.growth),
        ("linear_rate", certificate.linear_rate),
        ("transport_speed", certificate.transport_speed),
        ("horizon", certificate.horizon),
        ("diffusion_l1", certificate.diffusion_l1),
        ("certified_horizon", certificate.certified_horizon),
        ("nontrivial_support", certificate.nontrivial_support),
        ("support_overlap", certificate.support_overlap),
    ]


def picard_items(report: PicardReport) -> list[Item]:
    return [
        ("converged", report.converged),
        ("iterations", report.iterations),
        ("final_residual", report.final_residual),
        ("tolerance", report.tolerance),
        ("contraction_bound", report.contraction_bound),
        ("ratio_slack", report.ratio_slack),
        ("residuals", list(report.residuals)),
        ("ratios", list(report.ratios)),
    ]


def norm_items(report: SpacetimeNormReport) -> list[Item]:
    return [
        ("l2", report.l2),
        ("second_x_l2", report.second_x_l2),
        ("time_derivative_l2", report.time_derivative_l2),
        ("total", report.total),
    ]
