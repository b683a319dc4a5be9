"""Minimal SVG swarm plot of SHAP values (no plotting library needed)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

LOW_COLOR = (0x1E, 0x88, 0xE5)
HIGH_COLOR = (0xFF, 0x00, 0x52)


def _ramp(t: float) -> str:
    r, g, b = (round(lo + (hi - lo) * t) for lo, hi in zip(LOW_COLOR, HIGH_COLOR))
    return f"#{r:02x}{g:02x}{b:02x}"


def swarm_svg(features, values: np.ndarray, shap: np.ndarray, title: str = "", seed: int = 0,
              width: int = 720, band: int = 36) -> str:
    """One horizontal band per feature; x is the SHAP value, y is jitter.

    Fill runs from blue (low feature value) to red (high) within each
    feature's own range.  Jitter is seeded so the file is reproducible.
    """
    values = np.asarray(values, dtype=float)
    shap = np.asarray(shap, dtype=float)
    n, m = shap.shape
    left, right, top = 170, 20, 40 if title else 16
    height = top + band * m + 40
    lim = float(np.max(np.abs(shap))) if shap.size else 0.0
    lim = lim if lim > 0 else 1.0
    plot_w = width - left - right

    def sx(v):
        return left + (v + lim) / (2 * lim) * plot_w

    rng = np.random.default_rng(seed)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>')
    x0 = sx(0.0)
    out.append(f'<line x1="{x0:.2f}" y1="{top}" x2="{x0:.2f}" y2="{top + band * m}" stroke="#999" stroke-dasharray="3,3"/>')
    for j, name in enumerate(features):
        cy = top + band * j + band / 2
        out.append(f'<text x="{left - 8}" y="{cy + 4:.1f}" text-anchor="end">{escape(name)}</text>')
        col = values[:, j]
        lo, hi = (float(col.min()), float(col.max())) if n else (0.0, 0.0)
        jitter = rng.uniform(-0.35, 0.35, n) * band
        for i in range(n):
            t = 0.5 if hi == lo else (col[i] - lo) / (hi - lo)
            out.append(f'<circle cx="{sx(shap[i, j]):.2f}" cy="{cy + jitter[i]:.2f}" r="2.2" '
                       f'fill="{_ramp(t)}" fill-opacity="0.7"/>')
    axis_y = top + band * m + 14
    for v in (-lim, 0.0, lim):
        out.append(f'<text x="{sx(v):.2f}" y="{axis_y}" text-anchor="middle">{v:.3g}</text>')
    out.append(f'<text x="{left + plot_w / 2:.1f}" y="{axis_y + 16}" text-anchor="middle">SHAP value (impact on AOCC)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
