"""Age-happiness curves from weighted survey cross-sections.

The package covers the full pipeline: loading and filtering survey
microdata, building labeled design matrices with period and cohort
controls, deterministic weighted least squares, a battery of named
model specifications, u-shape detection rules, and a Monte Carlo
engine for three known sources of estimator bias (mediator controls,
age-range truncation, selective attrition).
"""

from .dataset import (
    SurveyRecord,
    FilterSpec,
    LoadReport,
    FilterReport,
    DataError,
    EmptySampleError,
    load_csv,
    save_csv,
    apply_filter,
    cohort_bin,
)
from .design import (
    TermSpec,
    DesignMatrix,
    DesignError,
    COARSE_BINS,
    FINE_BINS,
    age_bin_label,
    scheme_bin_labels,
    encode_categorical,
    build_design,
)
from .wls import FitResult, RankReport, RankDeficientError, fit_wls, rank_check
from .models import (
    ModelSpec,
    CountryResult,
    AgeCurve,
    TooFewPeriodsWarning,
    PRESETS,
    get_spec,
    fit_spec,
    batch_fit,
    predict_curve,
    quad_vertex,
    adjusted_means,
)
from .shape import (
    ShapeVerdict,
    CoefficientChange,
    ReductionReport,
    DepthReport,
    detect_quad,
    detect_quad_values,
    detect_ranges,
    detect_ranges_values,
    reduction,
    reduction_values,
    depth,
    classify_curve,
)
from .simulate import (
    AgeEffect,
    S_SHAPE,
    MediatorConfig,
    AttritionConfig,
    DgpConfig,
    HypothesisCheck,
    SimResult,
    derive_replicate_seed,
    generate,
    default_mediator_config,
    default_truncation_config,
    default_attrition_config,
    experiment_mediator,
    experiment_truncation,
    experiment_attrition,
)

__version__ = "0.1.0"

__all__ = [
    "SurveyRecord",
    "FilterSpec",
    "LoadReport",
    "FilterReport",
    "DataError",
    "EmptySampleError",
    "load_csv",
    "save_csv",
    "apply_filter",
    "cohort_bin",
    "TermSpec",
    "DesignMatrix",
    "DesignError",
    "COARSE_BINS",
    "FINE_BINS",
    "age_bin_label",
    "scheme_bin_labels",
    "encode_categorical",
    "build_design",
    "FitResult",
    "RankReport",
    "RankDeficientError",
    "fit_wls",
    "rank_check",
    "ModelSpec",
    "CountryResult",
    "AgeCurve",
    "TooFewPeriodsWarning",
    "PRESETS",
    "get_spec",
    "fit_spec",
    "batch_fit",
    "predict_curve",
    "quad_vertex",
    "adjusted_means",
    "ShapeVerdict",
    "CoefficientChange",
    "ReductionReport",
    "DepthReport",
    "detect_quad",
    "detect_quad_values",
    "detect_ranges",
    "detect_ranges_values",
    "reduction",
    "reduction_values",
    "depth",
    "classify_curve",
    "AgeEffect",
    "S_SHAPE",
    "MediatorConfig",
    "AttritionConfig",
    "DgpConfig",
    "HypothesisCheck",
    "SimResult",
    "derive_replicate_seed",
    "generate",
    "default_mediator_config",
    "default_truncation_config",
    "default_attrition_config",
    "experiment_mediator",
    "experiment_truncation",
    "experiment_attrition",
]
