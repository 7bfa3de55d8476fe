"""Line data for two-state problems: expected utility as a function of belief.

For each action ``x`` the line is ``l_x(mu) = (1 - mu) u(x_0) + mu u(x_1)``
with ``mu`` the probability of state 1. Markers are the beliefs at which
``a`` (``mu_bar``) and ``ahat`` (``mu_hat``) tie with ``b``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np
from numpy.typing import ArrayLike, NDArray

from robustimp.core import Utility, as_payoffs
from robustimp.errors import DegeneracyError, DomainError
from robustimp.superiority import two_point_indifference

GRID_POINTS = 512


def indifference_belief(x: NDArray, b: NDArray, u: Utility | None = None) -> float | None:
    """Probability of state 1 at which ``x`` and ``b`` tie; ``None`` if they never cross."""
    try:
        if x[0] > b[0] and x[1] < b[1]:
            return two_point_indifference(x, b, u, 0, 1, 0.0)
        if x[1] > b[1] and x[0] < b[0]:
            return 1.0 - two_point_indifference(x, b, u, 1, 0, 0.0)
    except DegeneracyError:
        return None
    return None


@dataclass(frozen=True, eq=False)
class LineData:
    mu: NDArray[np.float64]
    columns: dict[str, NDArray[np.float64]]
    markers: dict[str, dict[str, float | None]] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.columns)
        w.writerow(["mu", *names])
        for i, m in enumerate(self.mu):
            w.writerow([repr(float(m)), *(repr(float(self.columns[k][i])) for k in names)])
        return buf.getvalue()

    def to_svg(self, width: int = 640, height: int = 420) -> str:
        return _svg(self, width, height)


def line_data(a: ArrayLike, b: ArrayLike, ahat: ArrayLike, u: Utility | None = None,
              points: int = GRID_POINTS) -> LineData:
    """Risk-neutral lines (and, given ``u``, utility lines) on a uniform belief grid."""
    a = as_payoffs(a)
    if a.shape[0] != 2:
        raise DomainError("line plots need exactly two states")
    b = as_payoffs(b, 2)
    ahat = as_payoffs(ahat, 2)
    mu = np.linspace(0.0, 1.0, points)

    def line(x, f):
        v = x if f is None else np.asarray(f(x), dtype=float)
        return (1.0 - mu) * v[0] + mu * v[1]

    cols = {"l_a": line(a, None), "l_ahat": line(ahat, None), "l_b": line(b, None)}
    markers = {"risk_neutral": {"mu_bar": indifference_belief(a, b),
                                "mu_hat": indifference_belief(ahat, b)}}
    if u is not None:
        cols.update({"u_a": line(a, u), "u_ahat": line(ahat, u), "u_b": line(b, u)})
        markers["utility"] = {"mu_bar": indifference_belief(a, b, u),
                              "mu_hat": indifference_belief(ahat, b, u)}
    return LineData(mu, cols, markers)


_STYLE = {
    "l_a": ("#1f77b4", ""), "l_ahat": ("#d62728", ""), "l_b": ("#2ca02c", ""),
    "u_a": ("#1f77b4", "6,4"), "u_ahat": ("#d62728", "6,4"), "u_b": ("#2ca02c", "6,4"),
}


def _svg(data: LineData, width: int, height: int) -> str:
    pad = 40
    ys = np.concatenate(list(data.columns.values()))
    lo, hi = float(ys.min()), float(ys.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0

    def px(m):
        return pad + m * (width - 2 * pad)

    def py(v):
        return height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" '
           'stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
           f'<text x="{width / 2}" y="{height - 8}" font-size="12" text-anchor="middle">'
           'belief in state 1</text>']
    for name, vals in data.columns.items():
        color, dash = _STYLE.get(name, ("black", ""))
        pts = " ".join(f"{px(m):.2f},{py(v):.2f}" for m, v in zip(data.mu, vals))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} '
                   f'points="{pts}"><title>{escape(name)}</title></polyline>')
    for group, marks in data.markers.items():
        for name, m in marks.items():
            if m is None:
                continue
            dash = "2,3" if group == "utility" else "1,2"
            out.append(f'<line x1="{px(m):.2f}" y1="{pad}" x2="{px(m):.2f}" y2="{height - pad}" '
                       f'stroke="gray" stroke-dasharray="{dash}"/>')
            out.append(f'<text x="{px(m):.2f}" y="{pad - 6}" font-size="10" '
                       f'text-anchor="middle">{escape(name)} ({escape(group)})</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
