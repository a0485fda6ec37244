"""Minimal deterministic SVG output.

Hand-rolled on purpose: figures must be byte-identical across runs, so
there are no timestamps, no library version strings, and all
coordinates go through one fixed float format.
"""
from __future__ import annotations

PALETTE = ("#3a6ea5", "#c0504d", "#5a9e6f", "#8064a2", "#e8a33d",
           "#4bacc6", "#7f7f7f", "#2c2c2c")


def _fmt(value: float) -> str:
    text = f"{value:.3f}".rstrip("0").rstrip(".")
    return text if text not in ("-0", "") else "0"


class Canvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self._parts: list[str] = []

    def rect(self, x, y, w, h, fill, stroke="none") -> None:
        self._parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
            f'height="{_fmt(h)}" fill="{fill}" stroke="{stroke}"/>')

    def line(self, x1, y1, x2, y2, stroke, width=1.0) -> None:
        self._parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
            f'y2="{_fmt(y2)}" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}"/>')

    def polyline(self, points, stroke, width=1.5) -> None:
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        self._parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}"/>')

    def circle(self, cx, cy, r, fill) -> None:
        self._parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" '
            f'fill="{fill}"/>')

    def square(self, cx, cy, half, fill) -> None:
        self.rect(cx - half, cy - half, 2 * half, 2 * half, fill)

    def triangle(self, cx, cy, half, fill) -> None:
        pts = [(cx, cy - half), (cx - half, cy + half), (cx + half, cy + half)]
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        self._parts.append(f'<polygon points="{coords}" fill="{fill}"/>')

    def text(self, x, y, content: str, size=11, anchor="start",
             fill="#2c2c2c") -> None:
        safe = (content.replace("&", "&amp;").replace("<", "&lt;")
                .replace(">", "&gt;"))
        self._parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" '
            f'font-family="sans-serif" text-anchor="{anchor}" '
            f'fill="{fill}">{safe}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" '
                f'width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">')
        body = "\n".join(self._parts)
        return f"{head}\n{body}\n</svg>\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())


class Axes:
    """A plot area with linear scales and ticked axes."""

    def __init__(self, canvas: Canvas, x0, y0, width, height,
                 x_domain, y_domain):
        self.canvas = canvas
        self.x0, self.y0 = x0, y0
        self.w, self.h = width, height
        xlo, xhi = x_domain
        ylo, yhi = y_domain
        self.xlo, self.xspan = xlo, (xhi - xlo) or 1.0
        self.ylo, self.yspan = ylo, (yhi - ylo) or 1.0

    def x(self, value: float) -> float:
        return self.x0 + (value - self.xlo) / self.xspan * self.w

    def y(self, value: float) -> float:
        # SVG y grows downward; plot y grows upward
        return self.y0 + self.h - (value - self.ylo) / self.yspan * self.h

    def frame(self, x_label="", y_label="", ticks=5) -> None:
        c = self.canvas
        c.line(self.x0, self.y0 + self.h, self.x0 + self.w, self.y0 + self.h,
               "#2c2c2c")
        c.line(self.x0, self.y0, self.x0, self.y0 + self.h, "#2c2c2c")
        for i in range(ticks):
            frac = i / (ticks - 1)
            xv = self.xlo + frac * self.xspan
            yv = self.ylo + frac * self.yspan
            xp, yp = self.x(xv), self.y(yv)
            c.line(xp, self.y0 + self.h, xp, self.y0 + self.h + 4, "#2c2c2c")
            c.text(xp, self.y0 + self.h + 16, f"{xv:.3g}", size=9,
                   anchor="middle")
            c.line(self.x0 - 4, yp, self.x0, yp, "#2c2c2c")
            c.text(self.x0 - 7, yp + 3, f"{yv:.3g}", size=9, anchor="end")
        if x_label:
            c.text(self.x0 + self.w / 2, self.y0 + self.h + 32, x_label,
                   anchor="middle")
        if y_label:
            c.text(self.x0 + 4, self.y0 - 8, y_label)
