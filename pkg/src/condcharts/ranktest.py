"""Rank score test for linear coefficients of the global model.

Tests whether a sub-vector of the lagged-design coefficients is zero
without estimating error densities.  The restricted model (spline
block plus the untested linear columns) is fit by quantile regression;
the score sums the check-loss subgradient of its residuals against the
least-squares residuals of the tested columns regressed on the
restricted design.  Under the null the statistic is asymptotically
chi-square with one degree of freedom per tested column.

The projection uses an orthogonal (QR) decomposition of the restricted
design, never an explicit normal-equation inverse.  The statistic is
invariant to whether the score normalization counts subjects or rows,
since the same constant enters the score and its variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import gammainc

from .errors import CollinearityError, InputError
from .quantreg import QrProblem, psi, solve

__all__ = ["TestSpec", "RankScoreResult", "rank_score_test", "chisq_cdf"]

_COND_LIMIT = 1e12
_DOF_MARGIN = 5


@dataclass(frozen=True)
class TestSpec:
    """Indices of the linear-block columns under test, and the level."""

    tested_columns: tuple
    tau: float

    def __post_init__(self):
        cols = tuple(int(c) for c in self.tested_columns)
        if len(cols) < 1:
            raise InputError("at least one tested column is required")
        if len(set(cols)) != len(cols):
            raise InputError("tested columns must be distinct")
        if any(c < 0 for c in cols):
            raise InputError("tested column indices must be nonnegative")
        if not (0.0 < self.tau < 1.0):
            raise InputError("tau must lie in (0, 1)")
        object.__setattr__(self, "tested_columns", cols)
        object.__setattr__(self, "tau", float(self.tau))


@dataclass(frozen=True)
class RankScoreResult:
    statistic: float
    dof: int
    p_value: float
    restricted_objective: float


def chisq_cdf(x, q):
    """Chi-square CDF via the regularized lower incomplete gamma."""
    if q < 1:
        raise InputError("degrees of freedom must be at least 1")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise InputError("chi-square CDF argument must be nonnegative")
    out = gammainc(q / 2.0, x / 2.0)
    return float(out) if out.ndim == 0 else out


def rank_score_test(design, spec, n_subjects=None):
    """Rank score test of ``H0: tested coefficients = 0``.

    ``design`` is a :class:`~condcharts.longdata.DesignSystem`; the
    tested columns index its linear block.  ``n_subjects`` defaults to
    the number of subjects contributing rows.
    """
    X_lin = design.linear_block
    n_rows, d_lin = X_lin.shape
    cols = spec.tested_columns
    if any(c >= d_lin for c in cols):
        raise InputError(
            f"tested columns {cols} exceed the linear block width {d_lin}")
    q = len(cols)
    untested = [c for c in range(d_lin) if c not in cols]
    W = np.hstack([design.spline_block, X_lin[:, untested]])
    if n_rows < W.shape[1] + q + _DOF_MARGIN:
        raise InputError(
            f"need at least {W.shape[1] + q + _DOF_MARGIN} rows to test, "
            f"have {n_rows}")
    X1 = X_lin[:, cols]
    n = design.n_subjects if n_subjects is None else int(n_subjects)
    if n < 1:
        raise InputError("subject count must be positive")
    tau = spec.tau

    Q, R, piv = scipy.linalg.qr(W, mode="economic", pivoting=True)
    rdiag = np.abs(np.diag(R))
    tol = max(W.shape) * np.finfo(float).eps * (rdiag[0] if rdiag.size else 0.0)
    rank = int(np.sum(rdiag > tol))
    if rank < W.shape[1]:
        dependent = sorted(int(c) for c in piv[rank:])
        raise CollinearityError(
            "restricted design is rank deficient; dependent pseudodesign "
            f"columns: {dependent}")

    restricted = solve(QrProblem(W, design.response, tau))
    resid = design.response - W @ restricted.coefficients

    V = X1 - Q @ (Q.T @ X1)
    score = V.T @ psi(resid, tau) / np.sqrt(n)
    Vn = tau * (1.0 - tau) / n * (V.T @ V)

    cond = np.linalg.cond(Vn)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        norms = np.linalg.norm(V, axis=0)
        ref = 1.0 + np.linalg.norm(X1, axis=0)
        offenders = [int(cols[k]) for k in range(q)
                     if norms[k] <= 1e-8 * ref[k]]
        raise CollinearityError(
            "test variance is numerically singular "
            f"(cond={cond:.3g}); tested linear columns collinear with the "
            f"restricted design: {offenders if offenders else list(cols)}")

    statistic = float(max(score @ np.linalg.solve(Vn, score), 0.0))
    p_value = float(min(max(1.0 - chisq_cdf(statistic, q), 0.0), 1.0))
    return RankScoreResult(statistic, q, p_value, restricted.objective)
