"""Minimal SVG line plots.

Renders polylines with linear or log axes into standalone SVG files.  No
external plotting dependency, no embedded timestamps or ids: the same
series always produce the same bytes.
"""

from __future__ import annotations

import math
from pathlib import Path

PALETTE = [
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
]

MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 62, 16, 30, 44


def _nice_step(span: float) -> float:
    raw = span / 5.0
    mag = 10.0 ** math.floor(math.log10(raw)) if raw > 0 else 1.0
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            return mult * mag
    return 10.0 * mag


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        lo_e = math.floor(math.log10(lo))
        hi_e = math.ceil(math.log10(hi))
        ticks = [10.0**e for e in range(lo_e, hi_e + 1)]
        return [t for t in ticks if lo / 1.0001 <= t <= hi * 1.0001]
    if hi <= lo:
        return [lo]
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return format(v, ".6g")


def line_plot(
    path: str | Path,
    series: list[dict],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
    width: int = 640,
    height: int = 420,
) -> None:
    """series entries: {"label", "x", "y", optional "color", "points"}.

    Non-finite values split a polyline into segments; log axes drop
    nonpositive values.
    """
    xs_all, ys_all = [], []
    for s in series:
        for x, y in zip(s["x"], s["y"]):
            x, y = float(x), float(y)
            if not (math.isfinite(x) and math.isfinite(y)):
                continue
            if (logx and x <= 0) or (logy and y <= 0):
                continue
            xs_all.append(x)
            ys_all.append(y)
    if not xs_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]

    def span(vals, log):
        lo, hi = min(vals), max(vals)
        if log:
            if hi <= lo:
                lo, hi = lo / 2, hi * 2
            return lo / 1.05, hi * 1.05
        if hi <= lo:
            pad = max(abs(lo), 1.0) * 0.1
            return lo - pad, hi + pad
        pad = (hi - lo) * 0.05
        return lo - pad, hi + pad

    x_lo, x_hi = span(xs_all, logx)
    y_lo, y_hi = span(ys_all, logy)

    plot_w = width - MARGIN_L - MARGIN_R
    plot_h = height - MARGIN_T - MARGIN_B

    def px(x: float) -> float:
        t = (
            (math.log10(x) - math.log10(x_lo))
            / (math.log10(x_hi) - math.log10(x_lo))
            if logx
            else (x - x_lo) / (x_hi - x_lo)
        )
        return MARGIN_L + t * plot_w

    def py(y: float) -> float:
        t = (
            (math.log10(y) - math.log10(y_lo))
            / (math.log10(y_hi) - math.log10(y_lo))
            if logy
            else (y - y_lo) / (y_hi - y_lo)
        )
        return MARGIN_T + (1.0 - t) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#333" stroke-width="1"/>',
    ]

    for t in _ticks(x_lo, x_hi, logx):
        x = px(t)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{MARGIN_T + plot_h}" x2="{_fmt(x)}" '
            f'y2="{MARGIN_T + plot_h + 5}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{MARGIN_T + plot_h + 18}" font-size="11" '
            f'font-family="sans-serif" text-anchor="middle">{_fmt(t)}</text>'
        )
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{MARGIN_T}" x2="{_fmt(x)}" '
            f'y2="{MARGIN_T + plot_h}" stroke="#ddd" stroke-width="0.5"/>'
        )
    for t in _ticks(y_lo, y_hi, logy):
        y = py(t)
        parts.append(
            f'<line x1="{MARGIN_L - 5}" y1="{_fmt(y)}" x2="{MARGIN_L}" '
            f'y2="{_fmt(y)}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{_fmt(y + 4)}" font-size="11" '
            f'font-family="sans-serif" text-anchor="end">{_fmt(t)}</text>'
        )
        parts.append(
            f'<line x1="{MARGIN_L}" y1="{_fmt(y)}" x2="{MARGIN_L + plot_w}" '
            f'y2="{_fmt(y)}" stroke="#ddd" stroke-width="0.5"/>'
        )

    if title:
        parts.append(
            f'<text x="{width / 2:g}" y="18" font-size="13" '
            f'font-family="sans-serif" text-anchor="middle">{title}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{MARGIN_L + plot_w / 2:g}" y="{height - 8}" font-size="12" '
            f'font-family="sans-serif" text-anchor="middle">{xlabel}</text>'
        )
    if ylabel:
        cy = MARGIN_T + plot_h / 2
        parts.append(
            f'<text x="14" y="{cy:g}" font-size="12" font-family="sans-serif" '
            f'text-anchor="middle" transform="rotate(-90 14 {cy:g})">{ylabel}</text>'
        )

    for i, s in enumerate(series):
        color = s.get("color", PALETTE[i % len(PALETTE)])
        seg: list[str] = []
        segments = [seg]
        for x, y in zip(s["x"], s["y"]):
            x, y = float(x), float(y)
            bad = (
                not (math.isfinite(x) and math.isfinite(y))
                or (logx and x <= 0)
                or (logy and y <= 0)
            )
            if bad:
                if seg:
                    seg = []
                    segments.append(seg)
                continue
            seg.append(f"{_fmt(px(x))},{_fmt(py(y))}")
        if s.get("points"):
            for pt in (p for sg in segments for p in sg):
                cx, cy = pt.split(",")
                parts.append(
                    f'<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>'
                )
        else:
            for sg in segments:
                if len(sg) >= 2:
                    parts.append(
                        f'<polyline points="{" ".join(sg)}" fill="none" '
                        f'stroke="{color}" stroke-width="1.5"/>'
                    )
                elif len(sg) == 1:
                    cx, cy = sg[0].split(",")
                    parts.append(
                        f'<circle cx="{cx}" cy="{cy}" r="2" fill="{color}"/>'
                    )

    labeled = [s for s in series if s.get("label")]
    if labeled:
        ly = MARGIN_T + 10
        for i, s in enumerate(series):
            if not s.get("label"):
                continue
            color = s.get("color", PALETTE[i % len(PALETTE)])
            lx = MARGIN_L + plot_w - 150
            parts.append(
                f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            parts.append(
                f'<text x="{lx + 27}" y="{ly}" font-size="11" '
                f'font-family="sans-serif">{s["label"]}</text>'
            )
            ly += 16

    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
