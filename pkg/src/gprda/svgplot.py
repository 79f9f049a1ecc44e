"""Minimal deterministic SVG writer for line charts and scatter plots.

No plotting dependency: output is plain SVG with fixed float formatting so
identical inputs produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

WIDTH, HEIGHT = 640, 420
MARGIN = 56
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def _axis_range(values):
    lo, hi = min(values), max(values)
    if hi == lo:
        pad = 1.0 if hi == 0 else abs(hi) * 0.1
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.06
    return lo - pad, hi + pad


class _Canvas:
    def __init__(self, title, xlabel, ylabel, x_range, y_range):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="15" '
            f'font-family="sans-serif">{title}</text>',
        ]
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        self._frame(xlabel, ylabel)

    def xpix(self, x):
        return MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * MARGIN)

    def ypix(self, y):
        return HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2 * MARGIN)

    def _frame(self, xlabel, ylabel):
        p = self.parts
        p.append(f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
                 f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="#444"/>')
        for i in range(5):
            fx = self.x0 + (self.x1 - self.x0) * i / 4
            fy = self.y0 + (self.y1 - self.y0) * i / 4
            px = self.xpix(fx)
            py = self.ypix(fy)
            p.append(f'<text x="{_fmt(px)}" y="{HEIGHT - MARGIN + 18}" text-anchor="middle" '
                     f'font-size="11" font-family="sans-serif">{_fmt(fx)}</text>')
            p.append(f'<text x="{MARGIN - 8}" y="{_fmt(py + 4)}" text-anchor="end" '
                     f'font-size="11" font-family="sans-serif">{_fmt(fy)}</text>')
        p.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
                 f'font-size="13" font-family="sans-serif">{xlabel}</text>')
        p.append(f'<text x="16" y="{HEIGHT / 2}" text-anchor="middle" font-size="13" '
                 f'font-family="sans-serif" transform="rotate(-90 16 {HEIGHT / 2})">'
                 f'{ylabel}</text>')

    def polyline(self, xs, ys, color):
        pts = " ".join(f"{_fmt(self.xpix(x))},{_fmt(self.ypix(y))}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                          f'stroke-width="1.2"/>')

    def circles(self, xs, ys, color):
        for x, y in zip(xs, ys):
            self.parts.append(f'<circle cx="{_fmt(self.xpix(x))}" cy="{_fmt(self.ypix(y))}" '
                              f'r="3.5" fill="{color}" fill-opacity="0.8"/>')

    def legend(self, labels_colors):
        for i, (label, color) in enumerate(labels_colors):
            y = MARGIN + 16 + 16 * i
            self.parts.append(f'<rect x="{WIDTH - MARGIN - 150}" y="{y - 9}" width="10" '
                              f'height="10" fill="{color}"/>')
            self.parts.append(f'<text x="{WIDTH - MARGIN - 135}" y="{y}" font-size="11" '
                              f'font-family="sans-serif">{label}</text>')

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text("\n".join(self.parts) + "\n</svg>\n")
        return path


def line_chart(series: dict[str, tuple], path, title="", xlabel="", ylabel="") -> Path:
    """Plot named (xs, ys) series as colored polylines with a legend."""
    all_x = [x for xs, _ in series.values() for x in xs]
    all_y = [y for _, ys in series.values() for y in ys]
    canvas = _Canvas(title, xlabel, ylabel, _axis_range(all_x), _axis_range(all_y))
    legend = []
    for i, (name, (xs, ys)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        canvas.polyline(xs, ys, color)
        legend.append((name, color))
    canvas.legend(legend)
    return canvas.write(path)


def scatter_plot(points: list[tuple[float, float]], path, title="", xlabel="",
                 ylabel="", identity_line=False) -> Path:
    """Scatter of (x, y) points, optionally with the 1:1 reference line."""
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    span = _axis_range(xs + ys) if identity_line else None
    canvas = _Canvas(title, xlabel, ylabel,
                     span or _axis_range(xs), span or _axis_range(ys))
    if identity_line:
        canvas.polyline([canvas.x0, canvas.x1], [canvas.x0, canvas.x1], "#999")
    canvas.circles(xs, ys, PALETTE[0])
    return canvas.write(path)
