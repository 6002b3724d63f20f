"""Minimal SVG line plots (polylines, filled polygons, axes, labels)."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Plot:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    width: int = 640
    height: int = 480
    margin: int = 60
    _items: list = field(default_factory=list)

    def line(self, x, y, color=None, label=None, width=1.5, dash=None):
        self._items.append(("line", np.asarray(x, float), np.asarray(y, float),
                            color or COLORS[len(self._items) % len(COLORS)], label, width, dash))

    def polygon(self, x, y, color="#1f77b4", opacity=0.25, label=None):
        self._items.append(("poly", np.asarray(x, float), np.asarray(y, float), color, label,
                            opacity, None))

    def point(self, x, y, text="", color="#000000"):
        self._items.append(("point", np.array([x], float), np.array([y], float), color, text,
                            3.0, None))

    def _bounds(self):
        xs = np.concatenate([it[1][np.isfinite(it[1])] for it in self._items])
        ys = np.concatenate([it[2][np.isfinite(it[2])] for it in self._items])
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        if x1 == x0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 == y0:
            y0, y1 = y0 - 1, y1 + 1
        px, py = 0.04 * (x1 - x0), 0.04 * (y1 - y0)
        return x0 - px, x1 + px, y0 - py, y1 + py

    def render(self) -> str:
        W, H, m = self.width, self.height, self.margin
        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
               f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
               f'<rect width="{W}" height="{H}" fill="white"/>']
        if not self._items:
            out.append("</svg>")
            return "\n".join(out)
        x0, x1, y0, y1 = self._bounds()

        def sx(v):
            return m + (v - x0) / (x1 - x0) * (W - 2 * m)

        def sy(v):
            return H - m - (v - y0) / (y1 - y0) * (H - 2 * m)

        out.append(f'<rect x="{m}" y="{m}" width="{W - 2 * m}" height="{H - 2 * m}" '
                   'fill="none" stroke="black"/>')
        for v in np.linspace(x0, x1, 6):
            out.append(f'<line x1="{sx(v):.1f}" y1="{H - m}" x2="{sx(v):.1f}" y2="{H - m + 5}" '
                       'stroke="black"/>')
            out.append(f'<text x="{sx(v):.1f}" y="{H - m + 18}" text-anchor="middle">{v:.3g}</text>')
        for v in np.linspace(y0, y1, 6):
            out.append(f'<line x1="{m - 5}" y1="{sy(v):.1f}" x2="{m}" y2="{sy(v):.1f}" '
                       'stroke="black"/>')
            out.append(f'<text x="{m - 8}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>')
        legend = []
        for kind, x, y, color, label, w, dash in self._items:
            ok = np.isfinite(x) & np.isfinite(y)
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], y[ok]))
            if kind == "line":
                extra = f' stroke-dasharray="{dash}"' if dash else ""
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                           f'stroke-width="{w}"{extra}/>')
            elif kind == "poly":
                out.append(f'<polygon points="{pts}" fill="{color}" fill-opacity="{w}" '
                           f'stroke="{color}"/>')
            else:
                out.append(f'<circle cx="{sx(x[0]):.2f}" cy="{sy(y[0]):.2f}" r="{w}" '
                           f'fill="{color}"/>')
                if label:
                    out.append(f'<text x="{sx(x[0]) + 6:.2f}" y="{sy(y[0]) - 6:.2f}">'
                               f'{escape(label)}</text>')
                continue
            if label:
                legend.append((label, color))
        for i, (label, color) in enumerate(legend):
            yy = m + 16 + 16 * i
            out.append(f'<line x1="{W - m - 150}" y1="{yy}" x2="{W - m - 130}" y2="{yy}" '
                       f'stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{W - m - 125}" y="{yy + 4}">{escape(label)}</text>')
        out.append(f'<text x="{W / 2}" y="{m / 2}" text-anchor="middle" font-size="14">'
                   f'{escape(self.title)}</text>')
        out.append(f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{H / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {H / 2})">{escape(self.ylabel)}</text>')
        out.append("</svg>")
        return "\n".join(out)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.render())
