"""Global conditional-quantile model over a grid of levels.

Each quantile level is fit independently by quantile regression on the
shared lagged design; crossing between levels is repaired only at
prediction time by monotone rearrangement.  Prediction conditions on a
subject's own recent history: given the ``p`` most recent measurements
before the query time, the level-``tau`` conditional quantile is

    g_tau(t) + sum_k (a_k + b_k D_k) Y_{-k} + gamma' X,

with ``D_k`` the distance from the query time to the k-th most recent
measurement.  Confidence bands come from resampling whole subjects
with replacement (cluster bootstrap) and refitting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FitError, InputError, NumericalError
from .longdata import Dataset, Subject, build_design
from .numstat import RngStream, empirical_quantile
from .quantreg import QrProblem, solve
from .splines import KnotSpec, basis_dimension, spline_value

__all__ = [
    "DEFAULT_TAU_GRID",
    "ModelConfig",
    "TauFit",
    "FittedChartModel",
    "ScreeningQuery",
    "ConditionalCentiles",
    "ScreeningReport",
    "fit",
    "predict",
    "monotone_repair",
    "screen",
    "bootstrap_bands",
    "BootstrapBands",
    "save_model",
    "load_model",
    "model_to_json",
    "model_from_json",
]

DEFAULT_TAU_GRID = (0.03, 0.1, 0.25, 0.5, 0.75, 0.9, 0.97)

MODEL_FORMAT = "centile-model/1"


@dataclass(frozen=True)
class ModelConfig:
    """Lag order, knot layout and quantile grid of one model family.

    ``p = 0`` is allowed and describes the unconditional model (spline
    trend plus covariates, no autoregression).
    """

    p: int
    knots: KnotSpec
    tau_grid: tuple = DEFAULT_TAU_GRID

    def __post_init__(self):
        if self.p < 0:
            raise InputError("lag order must be nonnegative")
        taus = tuple(float(t) for t in self.tau_grid)
        if not taus:
            raise InputError("tau grid must be nonempty")
        if any(not (0.0 < t < 1.0) for t in taus):
            raise InputError("tau grid levels must lie in (0, 1)")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise InputError("tau grid must be strictly increasing")
        object.__setattr__(self, "tau_grid", taus)
        object.__setattr__(self, "p", int(self.p))


@dataclass(frozen=True)
class TauFit:
    """Coefficients of one quantile level: spline block then linear."""

    tau: float
    alpha: np.ndarray
    beta: np.ndarray
    objective: float
    degenerate: bool

    def __post_init__(self):
        for name in ("alpha", "beta"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class FittedChartModel:
    """Per-level coefficient vectors plus the configuration that made them."""

    config: ModelConfig
    l: int
    tau_fits: tuple
    n_rows: int
    n_subjects_used: int
    n_subjects_skipped: int

    def __post_init__(self):
        kn = basis_dimension(self.config.knots)
        d_lin = 2 * self.config.p + self.l
        if len(self.tau_fits) != len(self.config.tau_grid):
            raise InputError("one fit per tau level required")
        for tf in self.tau_fits:
            if tf.alpha.shape != (kn,) or tf.beta.shape != (d_lin,):
                raise InputError("coefficient lengths do not match the config")

    @property
    def tau_grid(self):
        return self.config.tau_grid


@dataclass(frozen=True)
class ScreeningQuery:
    """A subject's recent history and the current measurement to assess."""

    history: tuple
    covariates: tuple
    t_query: float
    y_query: float = None

    def __post_init__(self):
        hist = tuple((float(t), float(v)) for t, v in self.history)
        if any(b[0] <= a[0] for a, b in zip(hist, hist[1:])):
            raise InputError("history times must be strictly increasing")
        if hist and hist[-1][0] >= float(self.t_query):
            raise InputError("history must precede the query time")
        object.__setattr__(self, "history", hist)
        object.__setattr__(self, "covariates",
                           tuple(float(c) for c in self.covariates))
        object.__setattr__(self, "t_query", float(self.t_query))
        if self.y_query is not None:
            object.__setattr__(self, "y_query", float(self.y_query))


@dataclass(frozen=True)
class ConditionalCentiles:
    """Conditional quantiles at the query, nondecreasing after repair."""

    tau_grid: tuple
    values: np.ndarray
    monotonicity_repaired: bool

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "tau_grid",
                           tuple(float(t) for t in self.tau_grid))


@dataclass(frozen=True)
class ScreeningReport:
    """Which centile band the current measurement falls into."""

    centiles: ConditionalCentiles
    y_query: float
    band_lower: float
    band_upper: float
    label: str


def fit(dataset, config, processes=1):
    """Fit every grid level on the shared lagged design.

    Deterministic for fixed input; levels may be fit in parallel
    worker processes without changing the result.
    """
    design = build_design(dataset, config.p, config.knots)
    if design.n_rows == 0:
        raise FitError("no usable rows: every subject is shorter than p+1")
    X = np.hstack([design.spline_block, design.linear_block])
    kn = basis_dimension(config.knots)
    y = design.response

    if processes > 1 and len(config.tau_grid) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=processes) as pool:
            sols = list(pool.map(
                _fit_one, [(X, y, tau) for tau in config.tau_grid]))
    else:
        sols = [_fit_one((X, y, tau)) for tau in config.tau_grid]

    tau_fits = tuple(
        TauFit(tau, sol.coefficients[:kn], sol.coefficients[kn:],
               sol.objective, sol.degenerate)
        for tau, sol in zip(config.tau_grid, sols))
    skipped = sum(1 for s in dataset.subjects
                  if s.n_measurements <= config.p)
    return FittedChartModel(
        config, dataset.l, tau_fits, design.n_rows,
        design.n_subjects, skipped)


def _fit_one(args):
    X, y, tau = args
    return solve(QrProblem(X, y, tau))


def monotone_repair(values):
    """Monotone rearrangement: sort the level predictions ascending.

    Idempotent and multiset-preserving; assigns the ascending values
    back to the ascending levels.
    """
    vals = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(vals)):
        raise InputError("cannot repair non-finite quantile values")
    return np.sort(vals)


def predict(model, query):
    """Conditional centiles at the query time, crossing-repaired."""
    p = model.config.p
    if len(query.history) < p:
        raise InputError(f"need at least p={p} history measurements")
    if len(query.covariates) != model.l:
        raise InputError(
            f"expected {model.l} covariates, got {len(query.covariates)}")
    knots = model.config.knots
    if not knots.contains(query.t_query):
        raise DomainError(
            f"query time {query.t_query!r} outside the fitted domain "
            f"[{knots.t_lower!r}, {knots.t_upper!r}]")

    lagged = np.empty(2 * p + model.l)
    for k in range(1, p + 1):
        t_prev, y_prev = query.history[-k]
        lagged[2 * (k - 1)] = y_prev
        lagged[2 * (k - 1) + 1] = (query.t_query - t_prev) * y_prev
    lagged[2 * p:] = query.covariates

    raw = np.array([
        spline_value(knots, tf.alpha, query.t_query) + float(tf.beta @ lagged)
        for tf in model.tau_fits])
    repaired = monotone_repair(raw)
    crossed = bool(np.any(raw[:-1] > raw[1:]))
    return ConditionalCentiles(model.tau_grid, repaired, crossed)


def screen(model, query):
    """Locate the current measurement among the conditional centiles.

    A measurement equal to a predicted quantile is assigned to the band
    above it.
    """
    if query.y_query is None:
        raise InputError("screening requires the current measurement y_query")
    centiles = predict(model, query)
    taus = centiles.tau_grid
    idx = int(np.searchsorted(centiles.values, query.y_query, side="right"))
    if idx == 0:
        lower, upper = None, taus[0]
        label = f"below {taus[0]:g}"
    elif idx == len(taus):
        lower, upper = taus[-1], None
        label = f"above {taus[-1]:g}"
    else:
        lower, upper = taus[idx - 1], taus[idx]
        label = f"[{lower:g}, {upper:g})"
    return ScreeningReport(centiles, query.y_query, lower, upper, label)


@dataclass(frozen=True)
class BootstrapBands:
    """Pointwise bootstrap intervals for the conditional centiles."""

    tau_grid: tuple
    lower: np.ndarray
    upper: np.ndarray
    level: float
    n_replicates: int
    samples: np.ndarray = None


def bootstrap_bands(dataset, config, query, n_replicates, level=0.90,
                    seed=0, keep_samples=False, processes=1):
    """Subject-resampling bootstrap intervals at one query.

    Draws ``n_replicates`` resamples of whole subjects with
    replacement, refits, and predicts at the query; per level the
    interval spans the ((1-level)/2, (1+level)/2) empirical quantiles
    of the replicate predictions.  Attempt ``b`` owns the stream
    ``(seed, b)``; degenerate resamples are redrawn from subsequent
    stream ids, up to ``10 * n_replicates`` attempts in total.
    Replicates may run in worker processes; results are identical to a
    serial run because attempts are accepted in stream order.
    """
    if n_replicates < 2:
        raise InputError("need at least 2 bootstrap replicates")
    if not (0.0 < level < 1.0):
        raise InputError("confidence level must lie in (0, 1)")
    n = dataset.n_subjects
    if n == 0:
        raise InputError("cannot bootstrap an empty dataset")

    max_attempts = 10 * n_replicates
    rows = []
    if processes > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=processes) as pool:
            next_attempt = 0
            while len(rows) < n_replicates and next_attempt < max_attempts:
                wave = range(next_attempt,
                             min(next_attempt + max(4 * processes,
                                                    n_replicates - len(rows)),
                                 max_attempts))
                next_attempt = wave.stop
                jobs = [(dataset, config, query, seed, b) for b in wave]
                for values in pool.map(_bootstrap_attempt, jobs):
                    if values is not None and len(rows) < n_replicates:
                        rows.append(values)
    else:
        attempt = 0
        while len(rows) < n_replicates and attempt < max_attempts:
            values = _bootstrap_attempt((dataset, config, query, seed, attempt))
            attempt += 1
            if values is not None:
                rows.append(values)
    if len(rows) < n_replicates:
        raise NumericalError(
            f"{max_attempts} bootstrap attempts kept producing degenerate fits")

    samples = np.array(rows)
    lo = (1.0 - level) / 2.0
    lower = np.array([empirical_quantile(samples[:, k], lo)
                      for k in range(samples.shape[1])])
    upper = np.array([empirical_quantile(samples[:, k], 1.0 - lo)
                      for k in range(samples.shape[1])])
    return BootstrapBands(config.tau_grid, lower, upper, level, n_replicates,
                          samples if keep_samples else None)


def _bootstrap_attempt(args):
    dataset, config, query, seed, attempt = args
    resampled = _resample_subjects(dataset, RngStream(seed, attempt))
    try:
        model = fit(resampled, config)
    except FitError:
        return None
    if any(tf.degenerate for tf in model.tau_fits):
        return None
    return predict(model, query).values


def _resample_subjects(dataset, stream):
    n = dataset.n_subjects
    idx = stream.integers(0, n, size=n)
    subjects = []
    for k, i in enumerate(idx):
        s = dataset.subjects[int(i)]
        subjects.append(Subject.unchecked(
            f"{s.id}#{k}", s.times, s.values, s.covariates))
    return Dataset.unchecked(tuple(subjects), dataset.l)


def model_to_json(model):
    """Serialize a fitted model to the versioned JSON document."""
    knots = model.config.knots
    doc = {
        "format": MODEL_FORMAT,
        "p": model.config.p,
        "order": knots.order,
        "interior_knots": list(knots.interior_knots),
        "t_lower": knots.t_lower,
        "t_upper": knots.t_upper,
        "tau_grid": list(model.config.tau_grid),
        "l": model.l,
        "n_rows": model.n_rows,
        "n_subjects_used": model.n_subjects_used,
        "n_subjects_skipped": model.n_subjects_skipped,
        "per_tau": [
            {
                "tau": tf.tau,
                "alpha": [float(a) for a in tf.alpha],
                "beta": [float(b) for b in tf.beta],
                "objective": tf.objective,
                "degenerate": tf.degenerate,
            }
            for tf in model.tau_fits
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def model_from_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"model file is not valid JSON: {exc}") from None
    if doc.get("format") != MODEL_FORMAT:
        raise InputError(
            f"unsupported model format {doc.get('format')!r}, "
            f"expected {MODEL_FORMAT!r}")
    knots = KnotSpec(tuple(doc["interior_knots"]), int(doc["order"]),
                     doc["t_lower"], doc["t_upper"])
    config = ModelConfig(int(doc["p"]), knots, tuple(doc["tau_grid"]))
    tau_fits = tuple(
        TauFit(float(entry["tau"]), np.array(entry["alpha"]),
               np.array(entry["beta"]), float(entry["objective"]),
               bool(entry["degenerate"]))
        for entry in doc["per_tau"])
    return FittedChartModel(config, int(doc["l"]), tau_fits,
                            int(doc["n_rows"]),
                            int(doc["n_subjects_used"]),
                            int(doc["n_subjects_skipped"]))


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(fh.read())
