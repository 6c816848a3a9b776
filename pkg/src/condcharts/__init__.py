"""Conditional growth charts from longitudinal reference data.

Fits a global semiparametric quantile-regression model in which the
current measurement's conditional quantile combines a B-spline trend
in time, an autoregressive part whose coefficients are linear in the
measurement time spacings, and a linear covariate part.  On top of the
fitted model the package provides subject-conditional centile
prediction and screening, rank score tests on the linear coefficients,
cluster-bootstrap confidence bands, simulation-based goodness-of-fit
diagnosis, and a Monte Carlo calibration lab.
"""

from . import simlab
from .chartmodel import (
    DEFAULT_TAU_GRID,
    BootstrapBands,
    ConditionalCentiles,
    FittedChartModel,
    ModelConfig,
    ScreeningQuery,
    ScreeningReport,
    TauFit,
    bootstrap_bands,
    fit,
    load_model,
    model_from_json,
    model_to_json,
    monotone_repair,
    predict,
    save_model,
    screen,
)
from .diagnosis import (
    DiagnosticsReport,
    SubgroupRule,
    diagnose,
    observed_jth,
    qq_points,
    simulate_jth,
    subgroup,
    tau_hat_stats,
)
from .errors import (
    CollinearityError,
    CondchartsError,
    ConfigError,
    DomainError,
    FitError,
    InputError,
    NumericalError,
    ParseError,
)
from .longdata import (
    Dataset,
    DesignSystem,
    Subject,
    build_design,
    drop_covariates,
    load_csv,
    save_csv,
    time_distances,
)
from .numstat import RngStream, empirical_quantile
from .quantreg import QrProblem, QrSolution, check_loss, psi, solve
from .ranktest import RankScoreResult, TestSpec, chisq_cdf, rank_score_test
from .simlab import (
    CalibrationResult,
    SimModelSpec,
    calibration_csv,
    generate,
    null_lag_coefficient,
    power_curve,
    type1_error,
)
from .splines import (
    KnotSpec,
    basis_dimension,
    basis_eval,
    basis_matrix,
    greville_abscissae,
    spline_value,
)

__version__ = "0.1.0"
