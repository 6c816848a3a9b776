"""Deterministic SVG figures: screening charts and QQ plots.

Hand-rolled SVG so identical inputs produce byte-identical documents;
coordinates are fixed-precision and nothing depends on the clock or
the environment.
"""

from __future__ import annotations

import io

import numpy as np

__all__ = ["render_chart", "render_qq"]

_WIDTH, _HEIGHT = 640, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 62, 16, 18, 46

_TAU_COLORS = ["#7b3294", "#2166ac", "#4393c3", "#333333",
               "#d6604d", "#b2182b", "#e08214", "#66a61e",
               "#666666", "#1b9e77"]


def _fmt(v):
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, x_range, y_range, x_label, y_label):
        self.buf = io.StringIO()
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        self.buf.write(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
            f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">\n')
        self.buf.write(
            f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" '
            'fill="#ffffff"/>\n')
        self._axes(x_label, y_label)

    def px(self, x):
        span = self.x1 - self.x0
        frac = (x - self.x0) / span if span else 0.5
        return _MARGIN_L + frac * (_WIDTH - _MARGIN_L - _MARGIN_R)

    def py(self, y):
        span = self.y1 - self.y0
        frac = (y - self.y0) / span if span else 0.5
        return _HEIGHT - _MARGIN_B - frac * (_HEIGHT - _MARGIN_T - _MARGIN_B)

    def _axes(self, x_label, y_label):
        x_l, x_r = _MARGIN_L, _WIDTH - _MARGIN_R
        y_b, y_t = _HEIGHT - _MARGIN_B, _MARGIN_T
        w = self.buf.write
        w(f'<line x1="{x_l}" y1="{y_b}" x2="{x_r}" y2="{y_b}" '
          'stroke="#000000" stroke-width="1"/>\n')
        w(f'<line x1="{x_l}" y1="{y_b}" x2="{x_l}" y2="{y_t}" '
          'stroke="#000000" stroke-width="1"/>\n')
        for frac in np.linspace(0.0, 1.0, 6):
            xv = self.x0 + frac * (self.x1 - self.x0)
            yv = self.y0 + frac * (self.y1 - self.y0)
            xp, yp = self.px(xv), self.py(yv)
            w(f'<line x1="{_fmt(xp)}" y1="{y_b}" x2="{_fmt(xp)}" '
              f'y2="{y_b + 4}" stroke="#000000" stroke-width="1"/>\n')
            w(f'<text x="{_fmt(xp)}" y="{y_b + 18}" font-size="11" '
              f'text-anchor="middle" font-family="sans-serif">{xv:.3g}</text>\n')
            w(f'<line x1="{x_l - 4}" y1="{_fmt(yp)}" x2="{x_l}" '
              f'y2="{_fmt(yp)}" stroke="#000000" stroke-width="1"/>\n')
            w(f'<text x="{x_l - 7}" y="{_fmt(yp + 4)}" font-size="11" '
              f'text-anchor="end" font-family="sans-serif">{yv:.4g}</text>\n')
        w(f'<text x="{(x_l + x_r) // 2}" y="{_HEIGHT - 10}" font-size="13" '
          f'text-anchor="middle" font-family="sans-serif">{x_label}</text>\n')
        w(f'<text x="14" y="{(y_b + y_t) // 2}" font-size="13" '
          'text-anchor="middle" font-family="sans-serif" '
          f'transform="rotate(-90 14 {(y_b + y_t) // 2})">{y_label}</text>\n')

    def polyline(self, xs, ys, color, width=1.5, dash=None):
        pts = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}"
                       for x, y in zip(xs, ys))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.buf.write(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{dash_attr}/>\n')

    def path_segment(self, x0, y0, x1, y1, color, width=1.5):
        self.buf.write(
            f'<path d="M {_fmt(self.px(x0))} {_fmt(self.py(y0))} '
            f'L {_fmt(self.px(x1))} {_fmt(self.py(y1))}" stroke="{color}" '
            f'stroke-width="{width}" fill="none"/>\n')

    def circle(self, x, y, color, radius=4.0, fill=True):
        fill_attr = color if fill else "none"
        self.buf.write(
            f'<circle cx="{_fmt(self.px(x))}" cy="{_fmt(self.py(y))}" '
            f'r="{radius}" fill="{fill_attr}" stroke="{color}"/>\n')

    def label(self, x, y, text, color="#000000", size=11, anchor="start"):
        self.buf.write(
            f'<text x="{_fmt(self.px(x))}" y="{_fmt(self.py(y))}" '
            f'font-size="{size}" text-anchor="{anchor}" '
            f'font-family="sans-serif" fill="{color}">{text}</text>\n')

    def finish(self):
        self.buf.write("</svg>\n")
        return self.buf.getvalue()


def render_chart(taus, centile_curves, curve_times, history, point,
                 band=None, x_label="time", y_label="measurement"):
    """Screening chart: one centile path per level, the subject's
    history, the current measurement, and optional bootstrap whiskers.

    ``centile_curves`` is (n_times, n_taus); ``band``, when given, is a
    (taus, lower, upper, t) tuple drawn as vertical interval segments.
    """
    curves = np.asarray(centile_curves, dtype=float)
    times = np.asarray(curve_times, dtype=float)
    ys = [curves.min(), curves.max(), point[1]]
    xs = [times.min(), times.max(), point[0]]
    if history:
        xs += [t for t, _ in history]
        ys += [v for _, v in history]
    if band is not None:
        ys += [min(band[1]), max(band[2])]
        xs.append(band[3])
    x_rng = _padded(min(xs), max(xs))
    y_rng = _padded(min(ys), max(ys))
    cv = _Canvas(x_rng, y_rng, x_label, y_label)

    if band is not None:
        _, lower, upper, t_band = band
        for lo, hi in zip(lower, upper):
            cv.path_segment(t_band, lo, t_band, hi, "#bbbbbb", width=5.0)
    for k, tau in enumerate(taus):
        color = _TAU_COLORS[k % len(_TAU_COLORS)]
        cv.polyline(times, curves[:, k], color)
        cv.label(times[-1], curves[-1, k], f"{tau:g}", color=color, size=10)
    if history:
        cv.polyline([t for t, _ in history], [v for _, v in history],
                    "#000000", width=1.0, dash="4,3")
        for t, v in history:
            cv.circle(t, v, "#000000", radius=2.5)
    cv.circle(point[0], point[1], "#d7191c", radius=4.5)
    return cv.finish()


def render_qq(qq_pairs, title=""):
    """QQ scatter of (simulated, observed) pairs with the y = x line."""
    pairs = np.asarray(qq_pairs, dtype=float)
    lo = float(pairs.min())
    hi = float(pairs.max())
    rng = _padded(lo, hi)
    cv = _Canvas(rng, rng, "simulated quantiles", "observed quantiles")
    cv.path_segment(rng[0], rng[0], rng[1], rng[1], "#888888", width=1.0)
    for sim, obs in pairs:
        cv.circle(sim, obs, "#2166ac", radius=2.5, fill=False)
    if title:
        cv.label(rng[0] + 0.02 * (rng[1] - rng[0]),
                 rng[1] - 0.04 * (rng[1] - rng[0]), title, size=13)
    return cv.finish()


def _padded(lo, hi):
    span = hi - lo
    pad = 0.05 * span if span > 0 else max(0.5, abs(hi) * 0.05 + 0.5)
    return lo - pad, hi + pad
