"""Sparse Gaussian graphical model estimation under additive measurement error.

The library recovers a sparse precision matrix from noisy observations by
alternating exact Gaussian imputation of the latent clean data with a
spike-and-slab Lasso EM fit, then averaging the post-burn-in iterates.
Plain (uncorrected) fits, simulation generators, evaluation metrics, and a
replicate-based ingestion pipeline round out the toolkit; the ``precis``
command line exposes the whole pipeline.
"""

__version__ = "0.1.0"

from .bagus import (
    FitInput,
    TuneResult,
    bic,
    estep,
    fit_bagus,
    make_hyperparams,
    mstep,
    objective,
    slab_inclusion_prob,
    tune,
)
from .core import (
    BagusHyperparams,
    MeasurementErrorModel,
    PrecisionEstimate,
    as_dataset,
    cholesky_lower,
    contaminated_precision,
    naive_moment_correction,
    sample_covariance,
    spd_inverse,
    spd_logdet,
    spd_solve,
    sym_matrix,
)
from .errors import (
    AllCellsFailed,
    DimensionMismatch,
    EmptyAverage,
    MissingRawIntensities,
    NotPositiveDefinite,
    PrecisError,
    SingleClass,
    ZeroVarianceFeature,
)
from .experiment import CellSummary, run_cell
from .ingest import (
    ExpressionTable,
    FilterConfig,
    apply_filters,
    estimate_sigma_u,
    prepare,
    standardize,
)
from .iro import (
    IroConfig,
    IroTrace,
    average_estimates,
    impute_latent,
    run_iro,
    select_edges,
    tune_corrected,
)
from .metrics import (
    ClassificationMetrics,
    ConfusionCounts,
    auc,
    classification_metrics,
    confusion,
    frobenius_error,
)
from .simulate import GraphSpec, SimCell, contaminate, gen_precision, sample_mvn

__all__ = [
    "__version__",
    "AllCellsFailed",
    "BagusHyperparams",
    "CellSummary",
    "ClassificationMetrics",
    "ConfusionCounts",
    "DimensionMismatch",
    "EmptyAverage",
    "ExpressionTable",
    "FilterConfig",
    "FitInput",
    "GraphSpec",
    "IroConfig",
    "IroTrace",
    "MeasurementErrorModel",
    "MissingRawIntensities",
    "NotPositiveDefinite",
    "PrecisError",
    "PrecisionEstimate",
    "SimCell",
    "SingleClass",
    "TuneResult",
    "ZeroVarianceFeature",
    "apply_filters",
    "as_dataset",
    "auc",
    "average_estimates",
    "bic",
    "cholesky_lower",
    "classification_metrics",
    "confusion",
    "contaminate",
    "contaminated_precision",
    "estep",
    "estimate_sigma_u",
    "fit_bagus",
    "frobenius_error",
    "gen_precision",
    "impute_latent",
    "make_hyperparams",
    "mstep",
    "naive_moment_correction",
    "objective",
    "prepare",
    "run_cell",
    "run_iro",
    "sample_covariance",
    "sample_mvn",
    "select_edges",
    "slab_inclusion_prob",
    "spd_inverse",
    "spd_logdet",
    "spd_solve",
    "standardize",
    "sym_matrix",
    "tune",
    "tune_corrected",
]
