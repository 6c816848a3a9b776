"""Deterministic random variate streams and empirical statistics.

Simulation, bootstrap and diagnosis all draw from :class:`RngStream`,
a splittable stream keyed by ``(seed, stream_id)``.  Two streams with
the same key always produce the same variate sequence, and streams
with different keys are statistically independent, so replicates can
run concurrently without coordination.

The underlying generator is the counter-based Philox 4x64 bit
generator, keyed directly with ``(seed, stream_id)``.  Standard
normals come from the ziggurat method.  Golden output sequences are
pinned in the test suite; any change to the variate path is a breaking
change.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["RngStream", "empirical_quantile"]

_SQRT3 = math.sqrt(3.0)
_SQRT2 = math.sqrt(2.0)


class RngStream:
    """Deterministic random stream identified by (seed, stream_id).

    Parameters
    ----------
    seed : int
        64-bit unsigned master seed shared by a family of streams.
    stream_id : int
        64-bit unsigned index selecting one member of the family,
        typically a replicate index.
    """

    def __init__(self, seed, stream_id=0):
        for name, value in (("seed", seed), ("stream_id", stream_id)):
            if not (0 <= int(value) < 2**64):
                raise ValueError(f"{name} must be an unsigned 64-bit integer")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def uniform(self, size=None):
        """Uniform variates on the open interval (0, 1)."""
        u = self._gen.random(size)
        # gen.random() yields [0, 1); nudge an exact zero into (0, 1).
        if size is None:
            return np.nextafter(0.0, 1.0) if u == 0.0 else float(u)
        tiny = u == 0.0
        if tiny.any():
            u[tiny] = np.nextafter(0.0, 1.0)
        return u

    def normal(self, size=None):
        """Standard normal variates (ziggurat method)."""
        out = self._gen.standard_normal(size)
        return float(out) if size is None else out

    def t3_std(self, size=None):
        """t(3) variates scaled to unit variance.

        Built as Z / sqrt(W/3) with W a sum of three squared standard
        normals, then divided by sqrt(3), the t(3) standard deviation.
        Consumes a (size, 4) block of normals: numerator first, then
        the three chi-square components.
        """
        n = 1 if size is None else int(np.prod(size))
        block = self._gen.standard_normal((n, 4))
        w = np.sum(block[:, 1:] ** 2, axis=1)
        t = block[:, 0] / np.sqrt(w / 3.0)
        out = t / _SQRT3
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def chisq1_std(self, size=None):
        """Chi-square(1) variates scaled to unit variance (Z^2 / sqrt(2))."""
        z = self._gen.standard_normal(size)
        out = z * z / _SQRT2
        return float(out) if size is None else out

    def uniform_order_stats(self, count):
        """`count` i.i.d. uniforms on (0, 1), sorted ascending."""
        if count < 1:
            raise ValueError("count must be at least 1")
        return np.sort(self.uniform(count))

    def integers(self, low, high, size=None):
        """Uniform integers in [low, high); plumbing for resampling."""
        return self._gen.integers(low, high, size=size)


def empirical_quantile(sample, level):
    """Order-statistic quantile with linear interpolation.

    The quantile at ``level`` interpolates between the order statistics
    bracketing index ``h = (n - 1) * level``.  ``level`` may be a
    scalar or an array of levels in [0, 1].

    Raises
    ------
    ValueError
        If the sample is empty or a level is outside [0, 1].
    """
    xs = np.sort(np.asarray(sample, dtype=float).ravel())
    if xs.size == 0:
        raise ValueError("empirical_quantile of an empty sample")
    lv = np.asarray(level, dtype=float)
    if np.any((lv < 0.0) | (lv > 1.0)):
        raise ValueError("quantile level must lie in [0, 1]")
    h = (xs.size - 1) * lv
    lo = np.floor(h).astype(int)
    hi = np.ceil(h).astype(int)
    out = xs[lo] + (h - lo) * (xs[hi] - xs[lo])
    return float(out) if np.isscalar(level) else out
