"""Deterministic report rendering: CSV, structured text, gnuplot pairs.

Every row carries the configuration hash, the master seed, and the package
version, so emitted files are self-describing and reproducible byte for
byte for a given configuration.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .experiments import Report

_TRACE_COLUMNS = ("config_hash", "seed", "version")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def render_csv(report: Report) -> str:
    lines = [",".join(list(report.columns) + list(_TRACE_COLUMNS))]
    trace = [_fmt(report.meta[c]) for c in _TRACE_COLUMNS]
    for row in report.rows:
        lines.append(",".join([_fmt(row[c]) for c in report.columns] + trace))
    for name, fit in sorted(report.fits.items()):
        lines.append(
            f"# fit {name}: slope={fit.slope!r} intercept={fit.intercept!r} "
            f"r_squared={fit.r_squared!r} points={len(fit.points)}"
        )
    for flag in report.flags:
        lines.append(f"# flag: {flag}")
    lines.append(f"# result: {'PASS' if report.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"


def render_text(report: Report) -> str:
    lines = [f"report: {report.command}"]
    for key, value in report.meta.items():
        lines.append(f"  {key} = {_fmt(value)}")
    for i, row in enumerate(report.rows, start=1):
        lines.append(f"row {i}:")
        for c in report.columns:
            lines.append(f"  {c} = {_fmt(row[c])}")
    for name, fit in sorted(report.fits.items()):
        lines.append(f"fit {name}:")
        lines.append(f"  slope = {fit.slope!r}")
        lines.append(f"  intercept = {fit.intercept!r}")
        lines.append(f"  r_squared = {fit.r_squared!r}")
    for flag in report.flags:
        lines.append(f"flag: {flag}")
    lines.append(f"result: {'PASS' if report.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"


def render(report: Report, fmt: str) -> str:
    if fmt == "csv":
        return render_csv(report)
    if fmt == "text":
        return render_text(report)
    raise ValueError(f"unknown format {fmt!r}; use csv or text")


def write_output(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def write_gnuplot(report: Report, base: str):
    """Write <base>.dat and <base>.gp plotting the report's main columns."""
    if report.plot_axes is None:
        raise ValueError(f"report {report.command!r} defines no plot axes")
    xcol, ycol, logx, logy = report.plot_axes
    dat = Path(f"{base}.dat")
    gp = Path(f"{base}.gp")
    rows = [r for r in report.rows if not (logy and r[ycol] <= 0)]
    lines = [f"# {report.command}: {xcol} {ycol}"]
    for r in rows:
        lines.append(f"{_fmt(r[xcol])} {_fmt(r[ycol])}")
    dat.write_text("\n".join(lines) + "\n", encoding="utf-8")
    script = [
        f'set title "{report.command} ({report.meta.get("problem", "")})"',
        f'set xlabel "{xcol}"',
        f'set ylabel "{ycol}"',
    ]
    if logx:
        script.append("set logscale x")
    if logy:
        script.append("set logscale y")
    script.append(f'plot "{dat.name}" using 1:2 with linespoints title "{ycol}"')
    gp.write_text("\n".join(script) + "\n", encoding="utf-8")
