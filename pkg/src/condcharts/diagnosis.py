"""Simulation-based goodness-of-fit assessment.

For a fixed measurement index ``j`` the observed j-th measurements are
compared with a sample simulated from the fitted model: repeatedly
draw a subject that has at least ``j`` measurements, condition on that
subject's own history and covariates at its j-th time, draw a uniform
level ``U`` and return the model's U-level conditional quantile.  The
fit is summarized by QQ point pairs and by standardized differences

    z = sqrt(n) (tau_hat - tau) / sqrt(tau (1 - tau)),

where ``tau_hat`` is the share of observed values strictly below the
tau-quantile of the simulated sample.  Both can be computed for
covariate-defined subgroups, where a conditional model must keep
matching but an unconditional one typically breaks down.

The model is fit on a finite level grid, so the U-level quantile
interpolates the crossing-repaired grid predictions linearly in the
level; a U outside the grid clamps to the nearest grid prediction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .longdata import Dataset
from .numstat import empirical_quantile
from .splines import basis_matrix

__all__ = [
    "TauPoint",
    "DiagnosticsReport",
    "SubgroupRule",
    "parse_subgroup",
    "subgroup",
    "observed_jth",
    "simulate_jth",
    "tau_hat_stats",
    "qq_points",
    "diagnose",
    "default_assessment_grid",
]


def default_assessment_grid():
    """Ten equally spaced levels from 0.05 to 0.95."""
    return np.linspace(0.05, 0.95, 10)


@dataclass(frozen=True)
class TauPoint:
    tau: float
    tau_hat: float
    z: float


@dataclass(frozen=True)
class DiagnosticsReport:
    """Per-level standardized statistics and QQ pairs for one (group, j)."""

    j: int
    group_label: str
    n_observed: int
    tau_points: tuple
    qq_pairs: tuple

    @property
    def max_abs_z(self):
        if not self.tau_points:
            return None
        return max(abs(pt.z) for pt in self.tau_points)


@dataclass(frozen=True)
class SubgroupRule:
    """Subject filter with thresholds computed on the full dataset.

    ``basis`` selects the conditioning variable: ``"first_value"`` is
    the subject's first measurement; ``"covariate"`` is covariate
    ``covariate_index`` at measurement ``j`` (subjects with fewer than
    ``j`` measurements are excluded).  ``side`` keeps subjects strictly
    below the ``level`` quantile of that variable, or at/above it, so
    the two sides partition the dataset.
    """

    basis: str
    side: str = "below"
    level: float = 0.25
    covariate_index: int = 0
    j: int = 1

    def __post_init__(self):
        if self.basis not in ("first_value", "covariate"):
            raise InputError("subgroup basis must be first_value or covariate")
        if self.side not in ("below", "at_or_above"):
            raise InputError("subgroup side must be below or at_or_above")
        if not (0.0 <= self.level <= 1.0):
            raise InputError("subgroup quantile level must lie in [0, 1]")


def parse_subgroup(text):
    """Parse a subgroup descriptor string.

    Grammar: ``all`` | ``first<q0.25`` | ``first>=q0.25`` |
    ``x1<q0.25@j2`` (covariate 1 at measurement 2).  Returns ``None``
    for ``all``.
    """
    text = text.strip()
    if text == "all":
        return None
    m = re.match(r"^first(<|>=)q([01]?\.?\d*)$", text)
    if m:
        return SubgroupRule("first_value",
                            "below" if m.group(1) == "<" else "at_or_above",
                            float(m.group(2)))
    m = re.match(r"^x(\d+)(<|>=)q([01]?\.?\d*)(?:@j(\d+))?$", text)
    if m:
        return SubgroupRule(
            "covariate",
            "below" if m.group(2) == "<" else "at_or_above",
            float(m.group(3)),
            covariate_index=int(m.group(1)) - 1,
            j=int(m.group(4)) if m.group(4) else 1)
    raise InputError(f"cannot parse subgroup descriptor {text!r}")


def subgroup(dataset, rule):
    """Filter subjects by the rule; thresholds use the full dataset."""
    if rule is None:
        return dataset
    if rule.basis == "first_value":
        basis_of = {s.id: s.values[0] for s in dataset.subjects}
    else:
        if rule.covariate_index >= dataset.l:
            raise InputError(
                f"covariate index {rule.covariate_index} out of range")
        basis_of = {
            s.id: s.covariates[rule.j - 1, rule.covariate_index]
            for s in dataset.subjects if s.n_measurements >= rule.j}
    if not basis_of:
        return Dataset((), l=dataset.l)
    threshold = empirical_quantile(list(basis_of.values()), rule.level)
    if rule.side == "below":
        keep = {sid for sid, v in basis_of.items() if v < threshold}
    else:
        keep = {sid for sid, v in basis_of.items() if v >= threshold}
    return Dataset(tuple(s for s in dataset.subjects if s.id in keep),
                   l=dataset.l)


def observed_jth(dataset, j):
    """Observed j-th measurements (1-based) of all long-enough subjects."""
    if j < 1:
        raise InputError("measurement index must be at least 1")
    vals = [s.values[j - 1] for s in dataset.subjects
            if s.n_measurements >= j]
    return np.array(vals)


def _grid_predictions(model, dataset, j):
    """Crossing-repaired grid predictions for each eligible subject's
    j-th measurement, conditioning on its own observed history."""
    p = model.config.p
    if j < p + 1:
        raise InputError(f"measurement index j={j} needs j >= p+1 (p={p})")
    if dataset.l != model.l:
        raise InputError("dataset covariate dimension does not match the model")
    eligible = [s for s in dataset.subjects if s.n_measurements >= j]
    if not eligible:
        raise InputError(f"no subject has at least {j} measurements")

    t_q = np.array([s.times[j - 1] for s in eligible])
    d_lin = 2 * p + model.l
    lag = np.empty((len(eligible), d_lin))
    for k in range(1, p + 1):
        y_prev = np.array([s.values[j - 1 - k] for s in eligible])
        t_prev = np.array([s.times[j - 1 - k] for s in eligible])
        lag[:, 2 * (k - 1)] = y_prev
        lag[:, 2 * (k - 1) + 1] = (t_q - t_prev) * y_prev
    if model.l:
        lag[:, 2 * p:] = np.array([s.covariates[j - 1] for s in eligible])

    alpha = np.column_stack([tf.alpha for tf in model.tau_fits])
    beta = np.column_stack([tf.beta for tf in model.tau_fits])
    raw = basis_matrix(model.config.knots, t_q) @ alpha + lag @ beta
    return np.sort(raw, axis=1)


def simulate_jth(model, dataset, j, size, stream):
    """Sample the model-implied distribution of the j-th measurement.

    Draws subjects uniformly with replacement from those with at least
    ``j`` measurements (one integer block, then one uniform block from
    the stream), inverting the fitted quantile grid at uniform levels.
    """
    if size < 1:
        raise InputError("sample size must be at least 1")
    grid = _grid_predictions(model, dataset, j)
    idx = np.atleast_1d(stream.integers(0, grid.shape[0], size=size))
    u = np.atleast_1d(stream.uniform(size))
    return _interp_rows(np.asarray(model.tau_grid), grid[idx], u)


def _interp_rows(taus, rows, u):
    # Row-wise linear interpolation in the level, clamped at the ends.
    pos = np.searchsorted(taus, u)
    out = np.empty(u.shape)
    low = pos == 0
    high = pos == taus.size
    mid = ~(low | high)
    out[low] = rows[low, 0]
    out[high] = rows[high, -1]
    if mid.any():
        hi = pos[mid]
        lo = hi - 1
        w = (u[mid] - taus[lo]) / (taus[hi] - taus[lo])
        r = rows[mid]
        cols = np.arange(r.shape[0])
        out[mid] = (1.0 - w) * r[cols, lo] + w * r[cols, hi]
    return out


def tau_hat_stats(observed, simulated, assess_taus=None):
    """Standardized tau_hat - tau statistics over an assessment grid."""
    observed = np.asarray(observed, dtype=float).ravel()
    simulated = np.asarray(simulated, dtype=float).ravel()
    if observed.size == 0 or simulated.size == 0:
        raise InputError("both samples must be nonempty")
    taus = (default_assessment_grid() if assess_taus is None
            else np.asarray(assess_taus, dtype=float))
    thresholds = empirical_quantile(simulated, taus)
    n = observed.size
    points = []
    for tau, thr in zip(taus, thresholds):
        tau_hat = float(np.mean(observed < thr))
        z = np.sqrt(n) * (tau_hat - tau) / np.sqrt(tau * (1.0 - tau))
        points.append(TauPoint(float(tau), tau_hat, float(z)))
    return tuple(points)


def qq_points(observed, simulated, percentile_count=99):
    """Paired empirical quantiles at k/(count+1), k = 1..count.

    Returns an array of (simulated, observed) quantile pairs; a good
    fit puts the pairs on the line y = x.
    """
    observed = np.asarray(observed, dtype=float).ravel()
    simulated = np.asarray(simulated, dtype=float).ravel()
    if observed.size == 0 or simulated.size == 0:
        raise InputError("both samples must be nonempty")
    if percentile_count < 1:
        raise InputError("percentile count must be at least 1")
    levels = np.arange(1, percentile_count + 1) / (percentile_count + 1)
    return np.column_stack([
        empirical_quantile(simulated, levels),
        empirical_quantile(observed, levels),
    ])


def diagnose(model, dataset, j, stream, size=5000, assess_taus=None,
             percentile_count=99, group_label="all"):
    """Full assessment of one (group, j): tau statistics plus QQ pairs.

    ``dataset`` is the (sub)group to assess; an empty group yields a
    report with ``n_observed = 0`` and no statistics.
    """
    observed = observed_jth(dataset, j)
    if observed.size == 0:
        return DiagnosticsReport(j, group_label, 0, (), ())
    simulated = simulate_jth(model, dataset, j, size, stream)
    points = tau_hat_stats(observed, simulated, assess_taus)
    pairs = tuple(map(tuple, qq_points(observed, simulated, percentile_count)))
    return DiagnosticsReport(j, group_label, int(observed.size), points, pairs)
