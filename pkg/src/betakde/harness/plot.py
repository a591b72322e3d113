"""Log-log SVG plots of report CSVs, drawn by hand."""

import math
from xml.sax.saxutils import escape

from ..exceptions import DomainError
from .report import read_csv, slope_fit

DEFAULT_AXES = {
    "rate": ("n", "risk"),
    "bias-floor": ("b", "integrated_bias"),
    "sawtooth-bias": ("b", "integrated_bias"),
    "log-factor": ("b", "normalized_variance"),
    "lemma4-check": ("b", "sup_delta2_over_b2"),
}

W, H = 640, 440
LEFT, RIGHT, TOP, BOTTOM = 80, 20, 40, 60


def _decades(lo, hi):
    return list(range(math.floor(lo), math.ceil(hi) + 1))


def _span(lo, hi):
    if hi - lo < 1e-9:
        return lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def render_svg(text, x=None, y=None):
    """SVG source for a log-log scatter of column ``y`` against ``x`` with its OLS line."""
    meta, columns, rows = read_csv(text)
    dx, dy = DEFAULT_AXES.get(meta.get("tag"), (None, None))
    x = x or dx or columns[0]
    y = y or dy or columns[1]
    for name in (x, y):
        if name not in columns:
            raise DomainError(f"column {name!r} not in CSV (have {', '.join(columns)})")
    xi, yi = columns.index(x), columns.index(y)
    pts = [(r[xi], r[yi]) for r in rows]
    if not pts or any(not isinstance(v, float) or v <= 0 for p in pts for v in p):
        raise DomainError("plot needs positive numeric values")
    lx = [math.log10(p[0]) for p in pts]
    ly = [math.log10(p[1]) for p in pts]
    x0, x1 = _span(min(lx), max(lx))
    y0, y1 = _span(min(ly), max(ly))

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * (W - LEFT - RIGHT)

    def py(v):
        return H - BOTTOM - (v - y0) / (y1 - y0) * (H - TOP - BOTTOM)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{W - LEFT - RIGHT}" height="{H - TOP - BOTTOM}" '
        'fill="none" stroke="black"/>',
    ]
    for k in _decades(x0, x1):
        if x0 <= k <= x1:
            out.append(f'<line x1="{px(k):.2f}" y1="{H - BOTTOM}" x2="{px(k):.2f}" y2="{H - BOTTOM + 6}" stroke="black"/>')
            out.append(f'<text x="{px(k):.2f}" y="{H - BOTTOM + 20}" font-size="12" text-anchor="middle">1e{k}</text>')
    for k in _decades(y0, y1):
        if y0 <= k <= y1:
            out.append(f'<line x1="{LEFT - 6}" y1="{py(k):.2f}" x2="{LEFT}" y2="{py(k):.2f}" stroke="black"/>')
            out.append(f'<text x="{LEFT - 10}" y="{py(k) + 4:.2f}" font-size="12" text-anchor="end">1e{k}</text>')
    title = escape(f"{y} vs {x}")
    if len(pts) >= 2 and len(set(lx)) > 1:
        slope, icpt, _, r2 = slope_fit([p[0] for p in pts], [p[1] for p in pts])
        c = icpt / math.log(10.0)
        out.append(
            f'<line x1="{px(x0):.2f}" y1="{py(c + slope * x0):.2f}" x2="{px(x1):.2f}" '
            f'y2="{py(c + slope * x1):.2f}" stroke="#c0392b" stroke-dasharray="6 4" clip-path="url(#plot)"/>'
        )
        title += escape(f"  (slope {slope:.4f}, r² {r2:.4f})")
    out.insert(
        1,
        f'<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{W - LEFT - RIGHT}" '
        f'height="{H - TOP - BOTTOM}"/></clipPath></defs>',
    )
    for a, b in zip(lx, ly):
        out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="4" fill="#2c3e50"/>')
    out.append(f'<text x="{W / 2:.0f}" y="24" font-size="14" text-anchor="middle">{title}</text>')
    out.append(f'<text x="{W / 2:.0f}" y="{H - 15}" font-size="13" text-anchor="middle">{escape(x)}</text>')
    out.append(
        f'<text x="18" y="{H / 2:.0f}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 18 {H / 2:.0f})">{escape(y)}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
