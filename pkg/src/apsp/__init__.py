"""Variable selection for small-sample regression with adaptive external borrowing."""

from .apsp import ApspPriorSpec, build_apsp_prior, fit_apsp, two_step_fit
from .baselines import (
    BaselineConfig,
    fit_commensurate,
    fit_horseshoe,
    fit_lasso,
    fit_map,
    fit_modified_power_prior,
    fit_power_prior,
)
from .data import (
    Dataset,
    StandardizationMap,
    apply_standardization,
    fit_standardization,
    ingest_csv,
    invert_standardization,
)
from .empirical_null import NullThresholds, calibrate_null, select
from .errors import ApspError, ChainDivergenceError, SchemaError, UserInputError
from .mcmc import (
    ChainDiagnostics,
    ChainSpec,
    CoefficientPosterior,
    FitResult,
    derive_rng,
    derive_seed,
    effective_sample_size,
    split_rhat,
    summarize,
)
from .multi import MixtureWeightState, SourcePosterior, fit_apsp_multi
from .simulate import (
    BenchmarkConfig,
    MetricsRow,
    ScenarioSpec,
    generate_scenario,
    run_benchmark,
    score_rmse,
    score_selection,
    summarize_benchmark,
)
from .ssp import ExternalSummary, SspPriorSpec, fit_ssp, summarize_external

__version__ = "0.1.0"

__all__ = [
    "ApspError",
    "ApspPriorSpec",
    "BaselineConfig",
    "BenchmarkConfig",
    "ChainDiagnostics",
    "ChainSpec",
    "ChainDivergenceError",
    "CoefficientPosterior",
    "Dataset",
    "ExternalSummary",
    "FitResult",
    "MetricsRow",
    "MixtureWeightState",
    "NullThresholds",
    "ScenarioSpec",
    "SchemaError",
    "SourcePosterior",
    "SspPriorSpec",
    "StandardizationMap",
    "UserInputError",
    "apply_standardization",
    "build_apsp_prior",
    "calibrate_null",
    "derive_rng",
    "derive_seed",
    "effective_sample_size",
    "fit_apsp",
    "fit_apsp_multi",
    "fit_commensurate",
    "fit_horseshoe",
    "fit_lasso",
    "fit_map",
    "fit_modified_power_prior",
    "fit_power_prior",
    "fit_ssp",
    "fit_standardization",
    "generate_scenario",
    "ingest_csv",
    "invert_standardization",
    "run_benchmark",
    "score_rmse",
    "score_selection",
    "select",
    "split_rhat",
    "summarize",
    "summarize_benchmark",
    "summarize_external",
    "two_step_fit",
]
