"""Self-contained SVG line charts for the CLI's ``--svg`` option."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#000000", "#1f5fbf", "#c0392b", "#7f8c8d", "#27ae60", "#8e44ad")


def line_chart_svg(
    lines: dict[str, list[float | None]],
    labels: list[str],
    title: str = "",
    width: int = 900,
    height: int = 420,
    bands: list[tuple[list[float | None], list[float | None], str]] = (),
) -> str:
    """Render named series over a shared categorical x axis.

    ``None`` entries break a line. ``bands`` are (lower, upper, colour) pairs
    drawn as translucent areas beneath the lines.
    """
    pad_l, pad_r, pad_t, pad_b = 80, 20, 40, 50
    vals = [v for ys in lines.values() for v in ys if v is not None and math.isfinite(v)]
    for lo, hi, _ in bands:
        vals += [v for v in lo + hi if v is not None and math.isfinite(v)]
    if not vals:
        vals = [0.0, 1.0]
    ymin, ymax = min(vals), max(vals)
    if ymax == ymin:
        ymin, ymax = ymin - 1.0, ymax + 1.0
    n = max(len(labels), 2)

    def px(i):
        return pad_l + (width - pad_l - pad_r) * i / (n - 1)

    def py(v):
        return pad_t + (height - pad_t - pad_b) * (1.0 - (v - ymin) / (ymax - ymin))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for k in range(5):
        v = ymin + (ymax - ymin) * k / 4
        y = py(v)
        out.append(f'<line x1="{pad_l}" x2="{width - pad_r}" y1="{y:.1f}" y2="{y:.1f}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{pad_l - 6}" y="{y + 4:.1f}" text-anchor="end">{v:.4g}</text>')
    step = max(1, len(labels) // 8)
    for i in range(0, len(labels), step):
        out.append(f'<text x="{px(i):.1f}" y="{height - pad_b + 18}" text-anchor="middle">{escape(labels[i])}</text>')
    for lo, hi, colour in bands:
        idx = [i for i in range(len(lo)) if lo[i] is not None and hi[i] is not None]
        if not idx:
            continue
        pts = [f"{px(i):.1f},{py(hi[i]):.1f}" for i in idx] + [f"{px(i):.1f},{py(lo[i]):.1f}" for i in reversed(idx)]
        out.append(f'<polygon points="{" ".join(pts)}" fill="{colour}" fill-opacity="0.2" stroke="none"/>')
    for j, (name, ys) in enumerate(lines.items()):
        colour = PALETTE[j % len(PALETTE)]
        seg: list[str] = []
        for i, v in enumerate(ys):
            if v is None or not math.isfinite(v):
                if len(seg) > 1:
                    out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{" ".join(seg)}"/>')
                seg = []
                continue
            seg.append(f"{px(i):.1f},{py(v):.1f}")
        if len(seg) > 1:
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{" ".join(seg)}"/>')
        out.append(f'<text x="{pad_l + 10 + 140 * j}" y="{pad_t - 8}" fill="{colour}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
