"""Minimal hand-rolled SVG rendering: heatmaps and curve overlays.

Figures here are verification aids, not publication graphics, so the
feature set is deliberately small: a rect-per-cell heatmap with a fixed
blue-to-yellow colormap, polyline overlays, and scatter markers.
"""

from pathlib import Path

import numpy as np

from .errors import DomainError

# anchor colors, dark blue -> teal -> yellow
_STOPS = np.array(
    [[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]],
    dtype=float,
)


def _color(v: float) -> str:
    v = min(max(float(v), 0.0), 1.0)
    pos = v * (len(_STOPS) - 1)
    i = min(int(pos), len(_STOPS) - 2)
    frac = pos - i
    rgb = (1.0 - frac) * _STOPS[i] + frac * _STOPS[i + 1]
    return "#{:02x}{:02x}{:02x}".format(*(int(round(c)) for c in rgb))


class SvgCanvas:
    """Maps data coordinates in ``extent`` onto a pixel viewport."""

    def __init__(self, extent, width: int = 480, height: int = 360, margin: int = 10):
        (self.x0, self.x1), (self.y0, self.y1) = extent
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise DomainError("extent must have positive span")
        self.w, self.h, self.m = width, height, margin
        self.parts = []

    def _px(self, x, y):
        u = (x - self.x0) / (self.x1 - self.x0)
        v = (y - self.y0) / (self.y1 - self.y0)
        return self.m + u * (self.w - 2 * self.m), self.h - self.m - v * (
            self.h - 2 * self.m
        )

    def heatmap(self, values: np.ndarray) -> None:
        """values[i, j]: i indexes x (columns), j indexes y (rows)."""
        vals = np.asarray(values, dtype=float)
        lo, hi = float(np.min(vals)), float(np.max(vals))
        span = hi - lo if hi > lo else 1.0
        nx, ny = vals.shape
        cw = (self.w - 2 * self.m) / nx
        ch = (self.h - 2 * self.m) / ny
        for i in range(nx):
            for j in range(ny):
                px = self.m + i * cw
                py = self.h - self.m - (j + 1) * ch
                col = _color((vals[i, j] - lo) / span)
                self.parts.append(
                    f'<rect x="{px:.2f}" y="{py:.2f}" width="{cw + 0.5:.2f}" '
                    f'height="{ch + 0.5:.2f}" fill="{col}"/>'
                )

    def polyline(self, xs, ys, color: str = "white", width: float = 2.0) -> None:
        pts = " ".join(
            "{:.2f},{:.2f}".format(*self._px(x, y)) for x, y in zip(xs, ys)
        )
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"/>'
        )

    def scatter(self, xs, ys, color: str = "red", r: float = 4.0) -> None:
        for x, y in zip(xs, ys):
            px, py = self._px(x, y)
            self.parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{r}" fill="{color}"/>')

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" '
            f'height="{self.h}" viewBox="0 0 {self.w} {self.h}">\n'
            f'<rect width="{self.w}" height="{self.h}" fill="#202020"/>\n'
            f"{body}\n</svg>\n"
        )

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render(), encoding="utf-8")
