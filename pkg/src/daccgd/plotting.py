"""
Dependency-free SVG convergence plots.

Output is a fixed 800x600 document with two log-scale panels: function gap
against gradient evaluations (top) and against communication rounds (bottom).
Coordinates are printed with fixed precision so identical traces give
byte-identical files.
"""

from __future__ import annotations

import math
from html import escape
from pathlib import Path

import numpy as np

__all__ = ["emit_plot", "render_svg", "PLOT_FLOOR"]

PLOT_FLOOR = 1e-16
WIDTH, HEIGHT = 800, 600
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")
_LEFT, _RIGHT = 80, 20
_PANELS = (("grad_evals", "gradient evaluations per node", 30, 270),
           ("comm_rounds", "communication rounds", 330, 570))


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _series(trace, xname):
    if isinstance(trace, dict):
        x, y = trace[xname], trace["f_gap"]
    else:
        x, y = getattr(trace, xname), trace.f_gap
    x = np.asarray(x, dtype=float)
    y = np.maximum(np.asarray(y, dtype=float), PLOT_FLOOR)
    return x, np.log10(y)


def _label(trace, i):
    if isinstance(trace, dict):
        return trace.get("label") or f"trace {i}"
    return getattr(trace, "label", "") or f"trace {i}"


def render_svg(traces, title: str = "") -> str:
    """SVG text for a list of traces (RunTrace objects or dicts of columns)."""
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one trace")
    for t in traces:
        if len(_series(t, "grad_evals")[0]) == 0:
            raise ValueError("empty trace")
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{WIDTH // 2}" y="18" text-anchor="middle" font-size="14">'
                   f'{escape(title)}</text>')
    for xname, xlabel, top, bottom in _PANELS:
        series = [_series(t, xname) for t in traces]
        xmax = max(float(x.max()) for x, _ in series) or 1.0
        ylo = math.floor(min(float(y.min()) for _, y in series))
        yhi = math.ceil(max(float(y.max()) for _, y in series))
        if yhi <= ylo:
            yhi = ylo + 1
        x0, x1 = _LEFT, WIDTH - _RIGHT

        def sx(v):
            return x0 + (x1 - x0) * v / xmax

        def sy(v):
            return bottom - (bottom - top) * (v - ylo) / (yhi - ylo)

        out.append(f'<rect x="{x0}" y="{top}" width="{x1 - x0}" height="{bottom - top}" '
                   f'fill="none" stroke="black"/>')
        step = max(1, (yhi - ylo) // 8)
        for e in range(ylo, yhi + 1, step):
            y = _fmt(sy(e))
            out.append(f'<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#ddd"/>')
            out.append(f'<text x="{x0 - 6}" y="{y}" text-anchor="end" font-size="10" '
                       f'dominant-baseline="middle">1e{e}</text>')
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            out.append(f'<text x="{_fmt(sx(frac * xmax))}" y="{bottom + 14}" text-anchor="middle" '
                       f'font-size="10">{frac * xmax:g}</text>')
        out.append(f'<text x="{(x0 + x1) // 2}" y="{bottom + 27}" text-anchor="middle" '
                   f'font-size="11">{escape(xlabel)}</text>')
        out.append(f'<text x="16" y="{(top + bottom) // 2}" font-size="11" text-anchor="middle" '
                   f'transform="rotate(-90 16 {(top + bottom) // 2})">f gap</text>')
        for i, (x, y) in enumerate(series):
            pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y))
            out.append(f'<polyline fill="none" stroke="{COLORS[i % len(COLORS)]}" '
                       f'stroke-width="1.5" points="{pts}"/>')
    for i, t in enumerate(traces):
        y = 40 + 16 * i
        color = COLORS[i % len(COLORS)]
        out.append(f'<line x1="{WIDTH - 190}" y1="{y}" x2="{WIDTH - 165}" y2="{y}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{WIDTH - 160}" y="{y + 4}" font-size="11">{escape(_label(t, i))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(traces, path, title: str = "") -> Path:
    """Write :func:`render_svg` output to ``path``."""
    path = Path(path)
    path.write_text(render_svg(traces, title), encoding="utf-8")
    return path
