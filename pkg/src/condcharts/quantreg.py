"""Linear quantile regression by exact vertex descent.

Minimizes the check-loss objective ``sum_i rho_tau(y_i - x_i' beta)``
for an arbitrary full-column-rank design.  The objective is piecewise
linear and convex, and some minimizer interpolates exactly ``d`` data
points, so the solver walks vertices of the interpolation arrangement:
it keeps a basis of ``d`` rows (whose residuals are exactly zero),
tests the one-sided directional derivatives along the 2d basis edges,
and moves along the steepest descending edge with a full piecewise
line search that can pass many vertices per pivot.  Optimality is
certified by the subgradient box condition at the current basis, which
is valid even at degenerate vertices.  All tie-breaking is by lowest
index, so solutions are deterministic.

Rank-deficient designs are reduced to a maximal independent column
subset (pivoted QR); aliased columns receive zero coefficients and the
solution is flagged degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InputError, NumericalError

__all__ = ["QrProblem", "QrSolution", "check_loss", "psi", "solve"]

_OPT_TOL = 1e-9
_PIVOT_TOL = 1e-11


def check_loss(r, tau):
    """Check loss rho_tau(r) = r * (tau - [r < 0]); nonnegative."""
    _validate_tau(tau)
    r = np.asarray(r, dtype=float)
    out = r * (tau - (r < 0))
    return float(out) if out.ndim == 0 else out


def psi(r, tau):
    """Check-loss subgradient tau - I(r <= 0), closed at zero."""
    _validate_tau(tau)
    r = np.asarray(r, dtype=float)
    out = tau - (r <= 0).astype(float)
    return float(out) if out.ndim == 0 else out


def _validate_tau(tau):
    if not (0.0 < tau < 1.0):
        raise ValueError(f"tau must lie in (0, 1), got {tau}")


@dataclass(frozen=True)
class QrProblem:
    """One quantile-regression instance: design, response, level."""

    design: np.ndarray
    response: np.ndarray
    tau: float

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.design, dtype=float))
        y = np.asarray(self.response, dtype=float).ravel()
        if X.ndim != 2:
            raise InputError("design must be a 2-d matrix")
        n, d = X.shape
        if y.shape[0] != n:
            raise InputError("design and response row counts differ")
        if not (n >= d >= 1):
            raise InputError(f"need N >= d >= 1, got N={n}, d={d}")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise InputError("design and response must be finite")
        _validate_tau(self.tau)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "tau", float(self.tau))


@dataclass(frozen=True)
class QrSolution:
    """Solver output: coefficients at an optimal vertex plus residual
    sign counts used by the optimality invariants."""

    coefficients: np.ndarray
    objective: float
    n_neg: int
    n_zero: int
    degenerate: bool
    iterations: int


def solve(problem):
    """Minimize the check loss; deterministic exact vertex solution."""
    X, y, tau = problem.design, problem.response, problem.tau
    n, d = X.shape
    col_norms = np.linalg.norm(X, axis=0)
    if np.any(col_norms == 0.0):
        raise InputError("design contains an all-zero column")
    ztol = 1e-10 * (1.0 + float(np.max(np.abs(y))))

    r_qr = scipy.linalg.qr(X, mode="r", pivoting=True)
    rdiag = np.abs(np.diag(r_qr[0]))[:d]
    tol = max(n, d) * np.finfo(float).eps * (rdiag[0] if rdiag.size else 0.0)
    rank = int(np.sum(rdiag > tol))
    degenerate = rank < d

    if degenerate:
        keep = np.sort(r_qr[1][:rank])
        beta_red, obj, n_neg, n_zero, iters = _descend(X[:, keep], y, tau, ztol)
        beta = np.zeros(d)
        beta[keep] = beta_red
    else:
        beta, obj, n_neg, n_zero, iters = _descend(X, y, tau, ztol)

    beta.setflags(write=False)
    return QrSolution(beta, obj, n_neg, n_zero, degenerate, iters)


def _initial_basis(X, y, tau):
    """d independent rows near the tau-level of the least-squares fit,
    lowest shifted |residual| first; pivoted QR guards against a
    dependent candidate set."""
    n, d = X.shape
    try:
        beta_ls = np.linalg.solve(X.T @ X, X.T @ y)
    except np.linalg.LinAlgError:
        beta_ls = np.linalg.lstsq(X, y, rcond=None)[0]
    r_ls = y - X @ beta_ls
    shift = np.quantile(r_ls, tau) if n > d else 0.0
    order = np.argsort(np.abs(r_ls - shift), kind="stable")
    pool_size = min(n, max(4 * d, d + 8))
    while True:
        pool = order[:pool_size]
        rr, piv = scipy.linalg.qr(X[pool].T, mode="r", pivoting=True)
        rdiag = np.abs(np.diag(rr))
        tol = max(pool_size, d) * np.finfo(float).eps * rdiag[0]
        rank = int(np.sum(rdiag > tol))
        if rank == d:
            return np.sort(pool[piv[:d]])
        if pool_size == n:
            raise NumericalError("could not find d independent rows")
        pool_size = min(n, pool_size * 2)


def _rho_of_neg(u, tau):
    # rho_tau(-u) elementwise: cost rate of a zero residual pushed by u.
    return np.where(u > 0, u * (1.0 - tau), -u * tau)


def _descend(X, y, tau, ztol):
    """Vertex descent with product-form updates.

    Maintains U = X B^{-1} (so edge directions and reduced costs are
    single matvecs) and the residual vector, both updated rank-1 per
    pivot; the state is rebuilt from a fresh factorization periodically
    and before accepting the optimality certificate, so accumulated
    update error cannot produce a false stop.
    """
    n, d = X.shape
    h = _initial_basis(X, y, tau)
    max_iter = 50 * (n + d) + 200
    # bases visited since the last material objective decrease; a
    # repeat means the walk is cycling inside floating-point noise
    # around a degenerate cluster, i.e. numerically converged
    visited = set()
    best_objective = np.inf
    in_basis = np.zeros(n, dtype=bool)
    in_basis[h] = True
    need_refresh = True
    since_refresh = 0

    for iteration in range(max_iter):
        if need_refresh or since_refresh >= 48:
            try:
                b_inv = np.linalg.inv(X[h])
            except np.linalg.LinAlgError:
                raise NumericalError("quantile regression basis became singular")
            U = X @ b_inv
            r = y - X @ (b_inv @ y[h])
            r[h] = 0.0
            fresh = True
            need_refresh = False
            since_refresh = 0
        zero = np.abs(r) <= ztol
        w = np.where(zero, 0.0, tau - (r < 0.0))
        objective = float(np.sum(r * w))
        if objective < best_objective - _OPT_TOL * (1.0 + abs(best_objective)):
            best_objective = objective
            visited.clear()
        basis_key = frozenset(h)
        if basis_key in visited:
            break
        visited.add(basis_key)

        c = U.T @ w
        boxed = (-tau - _OPT_TOL <= c.min()) and (c.max() <= 1.0 - tau + _OPT_TOL)

        extra = np.flatnonzero(zero & ~in_basis)
        g_plus = (1.0 - tau) - c
        g_minus = tau + c
        if extra.size:
            u_extra = U[extra]
            g_plus = g_plus + _rho_of_neg(u_extra, tau).sum(axis=0)
            g_minus = g_minus + _rho_of_neg(-u_extra, tau).sum(axis=0)

        derivs = np.concatenate([g_plus, g_minus])
        pick = int(np.argmin(derivs))
        if derivs[pick] >= -_OPT_TOL:
            # No edge of this basis descends.  That certifies a global
            # minimum when c sits in the subgradient box [-tau, 1-tau]
            # (zero is a valid subgradient pick for every extra zero
            # row), and also when all extra zero rows are duplicates of
            # basis rows (they share the basis hyperplanes, so edge
            # derivatives determine every direction).  Certify only
            # from a freshly factorized state.
            if not fresh:
                need_refresh = True
                continue
            if boxed or extra.size == 0 or _all_basis_duplicates(u_extra):
                break
            # Rare truly degenerate geometry: swap an extra zero row in
            # (zero-step pivot) and retest from the new basis.
            move = _pick_zero_step(h, extra, u_extra, visited)
            if move is None:
                break
            row, kappa = move
            in_basis[h[kappa]] = False
            in_basis[row] = True
            h[kappa] = row
            r[row] = 0.0
            need_refresh = not _update_u(U, row, kappa)
        else:
            kappa, sign = (pick, 1.0) if pick < d else (pick - d, -1.0)
            u = sign * U[:, kappa]
            # rows with a negligible rate along this edge would make a
            # near-singular basis if they entered; keep them out
            u_floor = 1e-10 * (1.0 + float(np.max(np.abs(u))))
            cand = np.flatnonzero((np.abs(r) > ztol) & (r * u > 0)
                                  & (np.abs(u) > u_floor))
            if cand.size == 0:
                raise NumericalError("quantile objective line search failed")
            t_cand = r[cand] / u[cand]
            order = np.lexsort((cand, t_cand))
            cum = derivs[pick] + np.cumsum(np.abs(u[cand][order]))
            stop = np.flatnonzero(cum >= 0.0)
            if stop.size == 0:
                raise NumericalError("quantile objective unbounded along edge")
            enter = int(cand[order[stop[0]]])
            t_star = float(t_cand[order[stop[0]]])
            in_basis[h[kappa]] = False
            in_basis[enter] = True
            h[kappa] = enter
            r = r - t_star * u
            r[enter] = 0.0
            need_refresh = not _update_u(U, enter, kappa)
        fresh = False
        since_refresh += 1
    else:
        raise NumericalError("quantile regression did not converge")

    beta = np.linalg.solve(X[h], y[h])
    r = y - X @ beta
    r[h] = 0.0
    objective = float(np.sum(check_loss(r, tau)))
    n_zero = int(np.sum(np.abs(r) <= ztol))
    n_neg = int(np.sum(r < -ztol))
    return beta, objective, n_neg, n_zero, iteration + 1


def _update_u(U, enter, kappa):
    """Rank-1 update of U = X B^{-1} after basis row kappa is replaced
    by data row ``enter``; returns False on a pivot too small to trust,
    signalling a full refresh."""
    pivot = U[enter, kappa]
    if abs(pivot) < 1e-8:
        return False
    row = U[enter].copy()
    row[kappa] -= 1.0
    U -= np.outer(U[:, kappa], row / pivot)
    U[enter] = 0.0
    U[enter, kappa] = 1.0
    return True


def _all_basis_duplicates(u_extra):
    """True when every extra zero row equals some basis row (its U row
    is a unit vector), the typical degeneracy under cluster resampling."""
    near_one = np.abs(u_extra - 1.0) < 1e-7
    near_zero = np.abs(u_extra) < 1e-7
    return bool(np.all(near_one.sum(axis=1) == 1)
                and np.all((near_one | near_zero).all(axis=1)))


def _pick_zero_step(h, extra, u_extra, visited):
    visited.add(frozenset(h))
    for i, row in enumerate(extra):
        for kappa in range(h.size):
            if abs(u_extra[i, kappa]) <= _PIVOT_TOL:
                continue
            trial = frozenset(h) - {h[kappa]} | {int(row)}
            if trial in visited:
                continue
            return int(row), kappa
    return None
