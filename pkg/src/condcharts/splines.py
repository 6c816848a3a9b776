"""B-spline basis on a bounded time interval.

The nonparametric time trend of the conditional quantile model lives
in a regression-spline space spanned by B-spline basis functions of a
given order over a clamped knot vector.  Boundary knots are repeated
``order`` times at both ends of the domain, so the basis interpolates
at the endpoints and has dimension ``order + #interior_knots``.

Evaluation uses the Cox-de Boor recursion restricted to the single
knot span containing the point, which keeps every basis vector a
partition of unity with at most ``order`` nonzero entries.  Evaluation
exactly at an interior knot takes the right-continuous piece; the
upper domain endpoint is closed from the left.  Points outside
``[t_lower, t_upper]`` are a hard error, never extrapolated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "KnotSpec",
    "basis_dimension",
    "basis_eval",
    "basis_matrix",
    "spline_value",
    "greville_abscissae",
]


@dataclass(frozen=True)
class KnotSpec:
    """Clamped B-spline knot layout on the domain [t_lower, t_upper].

    ``interior_knots`` must be strictly increasing and strictly inside
    the domain; ``order`` is the spline order (4 = cubic).
    """

    interior_knots: tuple = ()
    order: int = 4
    t_lower: float = 0.0
    t_upper: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "interior_knots",
                           tuple(float(k) for k in self.interior_knots))
        object.__setattr__(self, "t_lower", float(self.t_lower))
        object.__setattr__(self, "t_upper", float(self.t_upper))
        if self.order < 1:
            raise ValueError("spline order must be at least 1")
        if not self.t_lower < self.t_upper:
            raise ValueError("domain requires t_lower < t_upper")
        ik = self.interior_knots
        if any(not np.isfinite(k) for k in ik):
            raise ValueError("interior knots must be finite")
        if any(b <= a for a, b in zip(ik, ik[1:])):
            raise ValueError("interior knots must be strictly increasing")
        if ik and not (self.t_lower < ik[0] and ik[-1] < self.t_upper):
            raise ValueError("interior knots must lie strictly inside the domain")

    @classmethod
    def from_times(cls, times, interior_knots=(), order=4):
        """Knot spec whose domain covers observed times with tiny slack.

        The bounds are the min/max of ``times`` expanded by a relative
        1e-9 margin so every observation is interior to the domain.
        """
        t = np.asarray(times, dtype=float)
        if t.size == 0:
            raise ValueError("cannot infer a domain from no times")
        lo, hi = float(t.min()), float(t.max())
        pad = 1e-9 * (1.0 + max(abs(lo), abs(hi)))
        return cls(tuple(interior_knots), order, lo - pad, hi + pad)

    @property
    def knot_vector(self):
        """Full clamped knot vector of length dimension + order."""
        return np.concatenate([
            np.full(self.order, self.t_lower),
            np.asarray(self.interior_knots, dtype=float),
            np.full(self.order, self.t_upper),
        ])

    def contains(self, t):
        t = np.asarray(t, dtype=float)
        return np.all((t >= self.t_lower) & (t <= self.t_upper))


def basis_dimension(spec):
    """Number of basis functions (length of every basis vector)."""
    return spec.order + len(spec.interior_knots)


def basis_matrix(spec, times):
    """Evaluate all basis functions at an array of times.

    Returns an (n_times, dimension) matrix whose rows are the basis
    vectors.  Raises :class:`DomainError` for any time outside the
    domain.
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.size and (not np.all(np.isfinite(t)) or not spec.contains(t)):
        bad = t[~(np.isfinite(t) & (t >= spec.t_lower) & (t <= spec.t_upper))]
        raise DomainError(
            f"time {bad[0]!r} outside spline domain "
            f"[{spec.t_lower!r}, {spec.t_upper!r}]")
    kn = basis_dimension(spec)
    p = spec.order - 1
    knots = spec.knot_vector
    n = t.size
    out = np.zeros((n, kn))
    if n == 0:
        return out

    # Knot span index: largest mu with knots[mu] <= t < knots[mu+1],
    # giving the right-continuous piece at interior knots; clipping
    # closes the top endpoint from the left.
    mu = np.searchsorted(knots, t, side="right") - 1
    np.clip(mu, p, kn - 1, out=mu)

    # Cox-de Boor triangle for the order nonzero functions per point.
    vals = np.zeros((n, spec.order))
    vals[:, 0] = 1.0
    left = np.empty((n, spec.order))
    right = np.empty((n, spec.order))
    for j in range(1, spec.order):
        left[:, j] = t - knots[mu + 1 - j]
        right[:, j] = knots[mu + j] - t
        saved = np.zeros(n)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            temp = vals[:, r] / denom
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved

    cols = mu[:, None] - p + np.arange(spec.order)[None, :]
    out[np.arange(n)[:, None], cols] = vals
    return out


def basis_eval(spec, t):
    """Basis vector at a single time point."""
    return basis_matrix(spec, [float(t)])[0]


def spline_value(spec, coefficients, t):
    """Spline function value: inner product of basis and coefficients."""
    coef = np.asarray(coefficients, dtype=float)
    kn = basis_dimension(spec)
    if coef.shape != (kn,):
        raise ValueError(
            f"expected {kn} coefficients, got shape {coef.shape}")
    rows = basis_matrix(spec, t)
    out = rows @ coef
    return float(out[0]) if np.isscalar(t) else out


def greville_abscissae(spec):
    """Greville sites: running means of order-1 consecutive knots.

    Interpolating a function at these sites yields spline coefficients
    that reproduce polynomials of degree < order.
    """
    knots = spec.knot_vector
    kn = basis_dimension(spec)
    if spec.order == 1:
        return 0.5 * (knots[:kn] + knots[1:kn + 1])
    return np.array([knots[i + 1:i + spec.order].mean() for i in range(kn)])
