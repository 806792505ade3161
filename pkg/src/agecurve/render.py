"""Output rendering: CSV, aligned text tables, and standalone SVG charts.

Everything here is deterministic: rendering the same inputs twice yields
byte-identical output (no timestamps, no environment lookups), so runs
can be diffed.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "write_csv",
    "read_csv",
    "format_table",
    "bin_midpoint",
    "svg_line_chart",
]

Cell = "str | float | int | None"


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write rows with quoted strings and bare numbers (numeric cells stay
    machine-readable after a round trip). ``None`` becomes an empty cell."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, quoting=csv.QUOTE_NONNUMERIC)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow(["" if cell is None else cell for cell in row])


def read_csv(path: str | Path) -> tuple[list[str], list[list]]:
    """Inverse of :func:`write_csv`: numeric-looking cells come back as
    floats, empty cells as None, everything else as str. Lines starting
    with ``#`` are skipped."""
    with Path(path).open(newline="", encoding="utf-8") as handle:
        lines = [line for line in handle if not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)

    def convert(cell: str):
        if cell == "":
            return None
        try:
            return float(cell)
        except ValueError:
            return cell

    return header, [[convert(cell) for cell in row] for row in reader if row]


def format_table(
    header: Sequence[str],
    rows: Sequence[Sequence],
    formats: Sequence[str] | None = None,
) -> str:
    """Right-aligned plain-text table.

    ``formats`` gives one printf-style format per column for non-string
    cells (default ``"%g"``); strings and None pass through.
    """
    if formats is None:
        formats = ["%g"] * len(header)
    if len(formats) != len(header):
        raise ValueError(f"{len(formats)} formats for {len(header)} columns")

    def render(cell, fmt: str) -> str:
        if cell is None:
            return ""
        if isinstance(cell, str):
            return cell
        return fmt % cell

    text_rows = [[render(c, f) for c, f in zip(row, formats)] for row in rows]
    widths = [
        max(len(header[j]), *(len(r[j]) for r in text_rows)) if text_rows else len(header[j])
        for j in range(len(header))
    ]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in text_rows:
        lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def bin_midpoint(label: str) -> float:
    """Plot coordinate for an age-bin label: ``"45-54"`` -> 49.5,
    open-ended ``"85+"`` -> 90 (lower bound plus five)."""
    if label.endswith("+"):
        return float(label[:-1]) + 5.0
    low, high = label.split("-")
    return (float(low) + float(high)) / 2.0


_PALETTE = (
    "#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951",
    "#ff8ab7", "#a463f2", "#97bbf5", "#9c6b4e", "#9498a0",
)


def _ticks(low: float, high: float, count: int = 6) -> list[float]:
    if high <= low:
        high = low + 1.0
    raw_step = (high - low) / (count - 1)
    magnitude = 10.0 ** int(f"{raw_step:e}".split("e")[1])
    for mult in (1, 2, 2.5, 5, 10):
        step = mult * magnitude
        if step >= raw_step:
            break
    first = step * int(low / step)
    if first < low - 1e-9:
        first += step
    ticks = []
    value = first
    while value <= high + 1e-9:
        ticks.append(round(value, 10))
        value += step
    return ticks


def svg_line_chart(
    series: Sequence[tuple[str, Sequence[tuple[float, float]]]],
    *,
    title: str = "",
    x_label: str = "age",
    y_label: str = "happiness",
    y_range: tuple[float, float] | None = (0.0, 10.0),
    width: int = 900,
    height: int = 520,
) -> str:
    """Standalone SVG line chart.

    ``series`` is ``[(name, [(x, y), ...]), ...]``; each series becomes
    one polyline plus a legend entry. ``y_range`` defaults to the full
    0-10 happiness scale so charts from different countries are visually
    comparable; pass None to fit the data instead.
    """
    if not series:
        raise ValueError("chart needs at least one series")
    points = [pt for _, pts in series for pt in pts]
    if not points:
        raise ValueError("chart needs at least one data point")

    x_low = min(x for x, _ in points)
    x_high = max(x for x, _ in points)
    if x_high == x_low:
        x_low, x_high = x_low - 1.0, x_high + 1.0
    if y_range is None:
        y_low = min(y for _, y in points)
        y_high = max(y for _, y in points)
        pad = 0.05 * (y_high - y_low or 1.0)
        y_low, y_high = y_low - pad, y_high + pad
    else:
        y_low, y_high = y_range

    margin_left, margin_right = 64, 180
    margin_top, margin_bottom = 48, 56
    plot_w = width - margin_left - margin_right
    plot_h = height - margin_top - margin_bottom

    def sx(x: float) -> float:
        return margin_left + plot_w * (x - x_low) / (x_high - x_low)

    def sy(y: float) -> float:
        return margin_top + plot_h * (1.0 - (y - y_low) / (y_high - y_low))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{title}</text>'
        )

    axis_style = 'stroke="#333" stroke-width="1"'
    out.append(
        f'<line x1="{margin_left}" y1="{margin_top + plot_h}" '
        f'x2="{margin_left + plot_w}" y2="{margin_top + plot_h}" {axis_style}/>'
    )
    out.append(
        f'<line x1="{margin_left}" y1="{margin_top}" '
        f'x2="{margin_left}" y2="{margin_top + plot_h}" {axis_style}/>'
    )
    for tick in _ticks(y_low, y_high):
        y = sy(tick)
        out.append(
            f'<line x1="{margin_left - 4}" y1="{y:.2f}" x2="{margin_left}" '
            f'y2="{y:.2f}" {axis_style}/>'
        )
        out.append(
            f'<line x1="{margin_left}" y1="{y:.2f}" '
            f'x2="{margin_left + plot_w}" y2="{y:.2f}" '
            f'stroke="#ddd" stroke-width="0.5"/>'
        )
        out.append(
            f'<text x="{margin_left - 8}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{tick:g}</text>'
        )
    for tick in _ticks(x_low, x_high):
        x = sx(tick)
        out.append(
            f'<line x1="{x:.2f}" y1="{margin_top + plot_h}" x2="{x:.2f}" '
            f'y2="{margin_top + plot_h + 4}" {axis_style}/>'
        )
        out.append(
            f'<text x="{x:.2f}" y="{margin_top + plot_h + 18}" '
            f'text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">{tick:g}</text>'
        )
    out.append(
        f'<text x="{margin_left + plot_w / 2:.1f}" y="{height - 12}" '
        f'text-anchor="middle" font-family="sans-serif" '
        f'font-size="12">{x_label}</text>'
    )
    out.append(
        f'<text x="16" y="{margin_top + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {margin_top + plot_h / 2:.1f})">{y_label}</text>'
    )

    for k, (name, pts) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="1.8"/>'
        )
        legend_y = margin_top + 16 * k
        out.append(
            f'<line x1="{margin_left + plot_w + 12}" y1="{legend_y:.1f}" '
            f'x2="{margin_left + plot_w + 34}" y2="{legend_y:.1f}" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        out.append(
            f'<text x="{margin_left + plot_w + 40}" y="{legend_y + 4:.1f}" '
            f'font-family="sans-serif" font-size="11">{name}</text>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"
