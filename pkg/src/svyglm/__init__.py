"""Survey-weighted generalized linear models.

Fits GLMs to complex-survey data (weights, strata, clusters, finite
population correction) by weighted maximum likelihood, estimates the
coefficient covariance by Taylor linearization, and provides Wald F tests
on coefficient groups.
"""

from . import errors
from ._kernels import BACKEND as kernel_backend
from .design import (
    DesignColumns,
    DesignSummary,
    SurveyDataset,
    dataset_to_csv,
    design_summary,
    load_dataset,
    summary_from_arrays,
)
from .families import (
    Family,
    Link,
    default_link,
    estimate_dispersion,
    family,
    link,
    link_apply,
    link_derivs,
    link_invert,
    variance_fn,
)
from .fit import (
    FitConfig,
    FitResult,
    fit_pseudo_mle,
    hessian_matrix,
    score_vector,
    weighted_loglik,
)
from .formula import parse_formula
from .frame import (
    CategoricalTerm,
    CenteredTerm,
    ModelFrame,
    ModelSpec,
    NumericTerm,
    build_model_frame,
)
from .inference import (
    CoefficientRow,
    ContrastMatrix,
    WaldResult,
    coefficient_table,
    contrast_from_names,
    f_survival,
    regularized_incomplete_beta,
    t_quantile,
    t_two_sided_p,
    wald_test,
)
from .simulate import SimulationConfig, simulate_dataset
from .variance import (
    VarianceComponents,
    VarianceOptions,
    psu_score_sums,
    sandwich_variance,
)

__version__ = "0.1.0"

__all__ = [
    "CategoricalTerm",
    "CenteredTerm",
    "CoefficientRow",
    "ContrastMatrix",
    "DesignColumns",
    "DesignSummary",
    "Family",
    "FitConfig",
    "FitResult",
    "Link",
    "ModelFrame",
    "ModelSpec",
    "NumericTerm",
    "SimulationConfig",
    "SurveyDataset",
    "VarianceComponents",
    "VarianceOptions",
    "WaldResult",
    "build_model_frame",
    "coefficient_table",
    "contrast_from_names",
    "dataset_to_csv",
    "default_link",
    "design_summary",
    "errors",
    "estimate_dispersion",
    "f_survival",
    "family",
    "fit_pseudo_mle",
    "hessian_matrix",
    "kernel_backend",
    "link",
    "link_apply",
    "link_derivs",
    "link_invert",
    "load_dataset",
    "parse_formula",
    "psu_score_sums",
    "regularized_incomplete_beta",
    "sandwich_variance",
    "score_vector",
    "simulate_dataset",
    "summary_from_arrays",
    "t_quantile",
    "t_two_sided_p",
    "variance_fn",
    "wald_test",
    "weighted_loglik",
]
