"""Covariance estimation and PCA evaluation for n << p data.

The package centers on a family of pairwise-difference covariance
estimators (PDC and four scaled variants) evaluated against the MLE
and Ledoit-Wolf shrinkage in seeded Monte Carlo sweeps and on a
bundled expression fixture.
"""

from .core import (
    CovarianceEstimate,
    DataMatrix,
    EigenSystem,
    METHOD_ORDER,
    condition_number,
    frobenius_distance,
    numerical_rank,
    sym_eigen,
    symmetrize,
)
from .errors import HdpcaError, InputError, NumericalError, SweepError
from .estimators import (
    EstimatorSpec,
    estimate,
    estimate_ledoit_wolf,
    estimate_mle,
    estimate_pdc_family,
)
from .ingest import ExpressionTable, load_expression_table, subsample_rows
from .metrics import (
    cosine_similarity_error,
    explained_variance_proportions,
    overdispersion,
)
from .pairdiff import (
    AccumulatedE,
    IndexPairPlan,
    PairwiseDifferenceSet,
    ScalerSpec,
    ScalerState,
    accumulate_E,
    apply_scaler,
    fit_scaler,
    index_pair_plan,
    pairwise_differences,
)
from .simlab import (
    ExperimentConfig,
    SweepResult,
    generate_population_sigma,
    run_sweep,
    sample_mvn,
)
from .stats_tests import LeveneResult, levene_test, matrix_element_groups

__version__ = "0.1.0"

__all__ = [
    "AccumulatedE",
    "CovarianceEstimate",
    "DataMatrix",
    "EigenSystem",
    "EstimatorSpec",
    "ExperimentConfig",
    "ExpressionTable",
    "HdpcaError",
    "IndexPairPlan",
    "InputError",
    "LeveneResult",
    "METHOD_ORDER",
    "NumericalError",
    "PairwiseDifferenceSet",
    "ScalerSpec",
    "ScalerState",
    "SweepError",
    "SweepResult",
    "accumulate_E",
    "apply_scaler",
    "condition_number",
    "cosine_similarity_error",
    "estimate",
    "estimate_ledoit_wolf",
    "estimate_mle",
    "estimate_pdc_family",
    "explained_variance_proportions",
    "fit_scaler",
    "frobenius_distance",
    "generate_population_sigma",
    "index_pair_plan",
    "load_expression_table",
    "matrix_element_groups",
    "numerical_rank",
    "overdispersion",
    "pairwise_differences",
    "run_sweep",
    "sample_mvn",
    "subsample_rows",
    "sym_eigen",
    "symmetrize",
    "levene_test",
]
