"""Synthetic longitudinal generators and the calibration harness.

Six simulation designs share one backbone: measurements at sorted
uniform times on [0, 1], intercept curve ``h(t) = 40 t / (1 + 4 t)``
(shaped like an infant-weight centile), a subject covariate
``x_i ~ N(10, 1)``, and a lag-1 recursion

    y_j = h(t_j) + b * y_{j-1} + x_i + scale * e_j.

Designs 1-3 use homoscedastic errors (standard normal, t(3) scaled to
unit variance, chi-square(1) scaled to unit variance); designs 4-6 use
the same error families with scale ``1/2 + y_{j-1} / 25``, which makes
the effective lag coefficient at level tau equal to
``b + Q_tau(e) / 25``.  The first measurement has no predecessor and
is initialized without the lag term at unit scale.

The harness estimates rank-score-test rejection rates under the null
(Type I error) and along a grid of lag coefficients (power), with one
deterministic stream per replicate so runs parallelize reproducibly.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .longdata import Dataset, Subject, build_design
from .numstat import RngStream
from .ranktest import TestSpec, rank_score_test
from .splines import KnotSpec

__all__ = [
    "SimModelSpec",
    "CalibrationResult",
    "intercept_curve",
    "generate",
    "null_lag_coefficient",
    "uniform_knot_spec",
    "type1_error",
    "power_curve",
    "calibration_csv",
]

_FAMILIES = {1: "normal", 2: "t3_std", 3: "chisq1_std",
             4: "normal", 5: "t3_std", 6: "chisq1_std"}


@dataclass(frozen=True)
class SimModelSpec:
    """One simulation design: id 1-6 plus size and lag coefficient."""

    model_id: int
    n_subjects: int = 200
    m_per_subject: int = 10
    b: float = 0.0

    def __post_init__(self):
        if self.model_id not in _FAMILIES:
            raise InputError("model_id must be one of 1..6")
        if self.n_subjects < 1 or self.m_per_subject < 1:
            raise InputError("need at least one subject and one measurement")
        object.__setattr__(self, "b", float(self.b))

    @property
    def error_family(self):
        return _FAMILIES[self.model_id]

    @property
    def heteroscedastic(self):
        return self.model_id >= 4


def intercept_curve(t):
    """Time trend shared by all designs: 40 t / (1 + 4 t)."""
    t = np.asarray(t, dtype=float)
    out = 40.0 * t / (1.0 + 4.0 * t)
    return float(out) if out.ndim == 0 else out


def generate(spec, stream):
    """Draw one dataset from the design.

    Consumption order from the stream is pinned: the (n, m) uniform
    block for times, then n normals for the covariate, then the
    (n, m) error block.  Fixed (seed, stream) reproduces the dataset
    bit for bit.
    """
    n, m = spec.n_subjects, spec.m_per_subject
    times = np.sort(np.atleast_2d(stream.uniform((n, m))), axis=1)
    x = 10.0 + np.atleast_1d(stream.normal(n))
    draw = getattr(stream, spec.error_family)
    e = np.atleast_2d(draw((n, m)))

    y = np.empty((n, m))
    y[:, 0] = intercept_curve(times[:, 0]) + x + e[:, 0]
    for j in range(1, m):
        prev = y[:, j - 1]
        scale = 0.5 + prev / 25.0 if spec.heteroscedastic else 1.0
        y[:, j] = intercept_curve(times[:, j]) + spec.b * prev + x + scale * e[:, j]

    width = max(4, len(str(n)))
    covs = np.broadcast_to(x[:, None, None], (n, m, 1))
    subjects = tuple(
        Subject.unchecked(f"s{i + 1:0{width}d}", times[i], y[i], covs[i])
        for i in range(n))
    return Dataset.unchecked(subjects, 1)


def null_lag_coefficient(model_id, tau):
    """Simulation lag coefficient that makes the tested null true.

    Designs 1-3 are null at b = 0.  Designs 4-6 have effective lag
    coefficient b + Q_tau(e)/25 at level tau, so the null needs
    b = -Q_tau(e)/25.
    """
    if model_id not in _FAMILIES:
        raise InputError("model_id must be one of 1..6")
    if model_id <= 3:
        return 0.0
    return -_error_quantile(_FAMILIES[model_id], tau) / 25.0


def _error_quantile(family, tau):
    import scipy.special
    import scipy.stats
    if family == "normal":
        return float(scipy.special.ndtri(tau))
    if family == "t3_std":
        return float(scipy.stats.t.ppf(tau, 3)) / math.sqrt(3.0)
    if family == "chisq1_std":
        return float(scipy.stats.chi2.ppf(tau, 1)) / math.sqrt(2.0)
    raise InputError(f"unknown error family {family!r}")


def uniform_knot_spec(n_interior_knots):
    """Cubic spec with k interior knots at i/(k+1) on [0, 1]."""
    if n_interior_knots < 0:
        raise InputError("knot count must be nonnegative")
    k = int(n_interior_knots)
    interior = tuple((i + 1) / (k + 1) for i in range(k))
    return KnotSpec(interior, 4, 0.0, 1.0)


@dataclass(frozen=True)
class CalibrationResult:
    """Rejection-rate estimate for one simulation cell."""

    model_id: int
    tau: float
    n_interior_knots: int
    b: float
    replicates: int
    rejection_rate: float
    mc_standard_error: float


def _replicate_rejects(args):
    (model_id, n_subjects, m, b_sim, tau, n_knots, seed, rep,
     tested, alpha) = args
    stream = RngStream(seed, rep)
    dataset = generate(
        SimModelSpec(model_id, n_subjects, m, b_sim), stream)
    design = build_design(dataset, 1, uniform_knot_spec(n_knots))
    result = rank_score_test(design, TestSpec(tested, tau))
    return result.p_value < alpha


def _rejection_rate(model_id, n_subjects, m, b_sim, tau, n_knots, seed,
                    replicates, tested, alpha, processes):
    jobs = [(model_id, n_subjects, m, b_sim, tau, n_knots, seed, rep,
             tested, alpha) for rep in range(replicates)]
    if processes > 1:
        chunk = max(1, replicates // (8 * processes))
        with ProcessPoolExecutor(max_workers=processes) as pool:
            flags = list(pool.map(_replicate_rejects, jobs, chunksize=chunk))
    else:
        flags = [_replicate_rejects(job) for job in jobs]
    rate = sum(flags) / replicates
    return rate, math.sqrt(rate * (1.0 - rate) / replicates)


def type1_error(spec, tau, n_interior_knots, replicates, seed,
                tested=(0,), alpha=0.05, processes=1):
    """Empirical Type I error of the rank score test on one design.

    Designs 1-3 require ``spec.b == 0``; designs 4-6 replace the lag
    coefficient with the value that makes the tau-level null true.
    By default the test targets the first lag column (q = 1); pass
    ``tested=(0, 1)`` to jointly test the lag and lag-distance columns.
    """
    if replicates < 1:
        raise InputError("need at least one replicate")
    if spec.model_id <= 3:
        if spec.b != 0.0:
            raise InputError("designs 1-3 are null only at b = 0")
        b_sim = 0.0
    else:
        b_sim = null_lag_coefficient(spec.model_id, tau)
    rate, se = _rejection_rate(
        spec.model_id, spec.n_subjects, spec.m_per_subject, b_sim, tau,
        n_interior_knots, seed, replicates, tuple(tested), alpha, processes)
    return CalibrationResult(spec.model_id, tau, n_interior_knots, b_sim,
                             replicates, rate, se)


def power_curve(spec, tau, b_values, replicates, seed,
                n_interior_knots=1, tested=(0,), alpha=0.05, processes=1):
    """Rejection rate per effective lag coefficient.

    ``b_values`` are effective lag coefficients at level tau (for
    designs 4-6 the simulated coefficient is shifted by -Q_tau(e)/25),
    so the entry at 0 reproduces :func:`type1_error` for equal seeds.
    """
    if replicates < 1:
        raise InputError("need at least one replicate")
    b_values = [float(b) for b in b_values]
    if any(not math.isfinite(b) for b in b_values):
        raise InputError("lag coefficients must be finite")
    shift = (null_lag_coefficient(spec.model_id, tau)
             if spec.model_id >= 4 else 0.0)
    out = []
    for b in b_values:
        rate, se = _rejection_rate(
            spec.model_id, spec.n_subjects, spec.m_per_subject, b + shift,
            tau, n_interior_knots, seed, replicates, tuple(tested), alpha,
            processes)
        out.append(CalibrationResult(spec.model_id, tau, n_interior_knots,
                                     b + shift, replicates, rate, se))
    return out


def calibration_csv(results, header_lines=()):
    """CSV text for calibration results, optionally with # comments."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    buf.write("model_id,tau,knots,replicates,rejection_rate,mc_se\n")
    for r in results:
        buf.write(f"{r.model_id},{r.tau!r},{r.n_interior_knots},"
                  f"{r.replicates},{r.rejection_rate!r},"
                  f"{r.mc_standard_error!r}\n")
    return buf.getvalue()
