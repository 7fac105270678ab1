"""Static SVG charts from a metrics table: TDR/FDR scatter and RMSE per scenario.

Pure string markup, no renderer.  Each metrics row contributes one marker:
the scatter places it at (fdr, tdr) on fixed [0,1] x [0,1] axes, the RMSE
chart groups markers by method above a zero-based y axis.  Markers carry
class="pt" so output can be inspected mechanically.
"""

from __future__ import annotations

from pathlib import Path

from .errors import UserInputError
from .simulate import ALL_METHODS, MetricsRow

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 160, 40, 60  # margins; right edge holds the legend

_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
)


def _method_style(method: str) -> tuple[str, str]:
    methods = list(ALL_METHODS)
    idx = methods.index(method) if method in methods else len(_PALETTE) - 1
    shapes = ("circle", "square", "diamond", "triangle")
    return _PALETTE[idx % len(_PALETTE)], shapes[idx % len(shapes)]


def _marker(x: float, y: float, method: str) -> str:
    color, shape = _method_style(method)
    if shape == "circle":
        return f'<circle class="pt" cx="{x:.2f}" cy="{y:.2f}" r="4" fill="{color}"/>'
    if shape == "square":
        return (f'<rect class="pt" x="{x - 4:.2f}" y="{y - 4:.2f}" width="8" height="8" '
                f'fill="{color}"/>')
    if shape == "diamond":
        pts = f"{x:.2f},{y - 5:.2f} {x + 5:.2f},{y:.2f} {x:.2f},{y + 5:.2f} {x - 5:.2f},{y:.2f}"
        return f'<polygon class="pt" points="{pts}" fill="{color}"/>'
    pts = f"{x:.2f},{y - 5:.2f} {x + 4.5:.2f},{y + 4:.2f} {x - 4.5:.2f},{y + 4:.2f}"
    return f'<polygon class="pt" points="{pts}" fill="{color}"/>'


def _frame(title: str, x_label: str, y_label: str, body: list[str],
           x_ticks: list[tuple[float, str]], y_ticks: list[tuple[float, str]],
           legend: list[str]) -> str:
    px0, px1 = _ML, _W - _MR
    py0, py1 = _H - _MB, _MT
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{(px0 + px1) / 2}" y="22" text-anchor="middle" font-size="15">{title}</text>',
        f'<line x1="{px0}" y1="{py0}" x2="{px1}" y2="{py0}" stroke="black"/>',
        f'<line x1="{px0}" y1="{py0}" x2="{px0}" y2="{py1}" stroke="black"/>',
        f'<text x="{(px0 + px1) / 2}" y="{_H - 14}" text-anchor="middle" '
        f'font-size="12">{x_label}</text>',
        f'<text x="18" y="{(py0 + py1) / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 18 {(py0 + py1) / 2})">{y_label}</text>',
    ]
    for xpix, lab in x_ticks:
        parts.append(f'<line x1="{xpix:.2f}" y1="{py0}" x2="{xpix:.2f}" y2="{py0 + 5}" '
                     'stroke="black"/>')
        parts.append(f'<text x="{xpix:.2f}" y="{py0 + 18}" text-anchor="middle" '
                     f'font-size="10">{lab}</text>')
    for ypix, lab in y_ticks:
        parts.append(f'<line x1="{px0 - 5}" y1="{ypix:.2f}" x2="{px0}" y2="{ypix:.2f}" '
                     'stroke="black"/>')
        parts.append(f'<text x="{px0 - 8}" y="{ypix + 3:.2f}" text-anchor="end" '
                     f'font-size="10">{lab}</text>')
    parts.extend(body)
    parts.extend(legend)
    parts.append("</svg>")
    return "\n".join(parts)


def _legend(methods: list[str]) -> list[str]:
    out = []
    x = _W - _MR + 18
    for i, method in enumerate(methods):
        y = _MT + 16 + 20 * i
        out.append(_marker(x, y, method).replace('class="pt"', 'class="legend"'))
        out.append(f'<text x="{x + 10}" y="{y + 4}" font-size="11">{method}</text>')
    return out


def render_tdr_fdr_svg(rows: list[MetricsRow], scenario: str) -> str:
    """One marker per row at (fdr, tdr); axes fixed to [0,1] x [0,1]."""
    px0, px1 = _ML, _W - _MR
    py0, py1 = _H - _MB, _MT

    def sx(v):
        return px0 + v * (px1 - px0)

    def sy(v):
        return py0 - v * (py0 - py1)

    body = [_marker(sx(r.fdr), sy(r.tdr), r.method) for r in rows]
    ticks = [0.0, 0.25, 0.5, 0.75, 1.0]
    methods = sorted({r.method for r in rows}, key=_rank)
    return _frame(
        f"TDR vs FDR: {scenario}", "FDR", "TDR", body,
        [(sx(t), f"{t:g}") for t in ticks],
        [(sy(t), f"{t:g}") for t in ticks],
        _legend(methods),
    )


def render_rmse_svg(rows: list[MetricsRow], scenario: str) -> str:
    """One marker per row, grouped by method; y axis starts at 0."""
    px0, px1 = _ML, _W - _MR
    py0, py1 = _H - _MB, _MT
    methods = sorted({r.method for r in rows}, key=_rank)
    y_max = max((r.rmse for r in rows), default=1.0)
    y_max = 1.05 * y_max if y_max > 0 else 1.0

    def sy(v):
        return py0 - (v / y_max) * (py0 - py1)

    slot = (px1 - px0) / max(len(methods), 1)
    counts = {m: sum(1 for r in rows if r.method == m) for m in methods}
    seen = {m: 0 for m in methods}
    body = []
    x_ticks = []
    for i, m in enumerate(methods):
        x_ticks.append((px0 + (i + 0.5) * slot, m))
    for r in rows:
        i = methods.index(r.method)
        c = counts[r.method]
        offset = 0.0 if c == 1 else (seen[r.method] / (c - 1) - 0.5) * slot * 0.5
        seen[r.method] += 1
        body.append(_marker(px0 + (i + 0.5) * slot + offset, sy(r.rmse), r.method))
    n_ticks = 5
    y_ticks = [(sy(y_max * i / n_ticks), f"{y_max * i / n_ticks:.2f}") for i in range(n_ticks + 1)]
    return _frame(
        f"RMSE: {scenario}", "method", "RMSE", body, x_ticks, y_ticks, _legend(methods),
    )


def _rank(method: str) -> int:
    return ALL_METHODS.index(method) if method in ALL_METHODS else len(ALL_METHODS)


def write_report(rows: list[MetricsRow], out_dir) -> list[Path]:
    """One TDR/FDR scatter and one RMSE chart per scenario present in rows."""
    ok = [r for r in rows if r.status == "ok"]
    if not ok:
        raise UserInputError("metrics table has no successful rows to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    scenarios = sorted({r.scenario for r in ok})
    for scenario in scenarios:
        sub = [r for r in ok if r.scenario == scenario]
        for stem, text in (
            (f"tdr_fdr_{scenario}.svg", render_tdr_fdr_svg(sub, scenario)),
            (f"rmse_{scenario}.svg", render_rmse_svg(sub, scenario)),
        ):
            path = out_dir / stem
            path.write_text(text, encoding="utf-8")
            written.append(path)
    return written
