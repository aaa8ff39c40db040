"""Out-of-core GLM fitting over a relational database.

Fit the maximum likelihood estimator on a small random subsample in
memory, then apply one Fisher-scoring update whose score comes from a
single SQL aggregation query over all rows. The result is first-order
efficient: asymptotically equivalent to the full-data MLE at a fraction
of the cost.
"""

__version__ = "0.1.0"

from .db import Database, count_rows, enumerate_levels, resolve_spec, sample_rows
from .errors import (
    ConfigError,
    DatabaseError,
    RankDeficiencyError,
    SampleTooSmallError,
    SeparationError,
    StatisticalError,
    StepGlmError,
)
from .families import get_family, get_link, mean_from_eta, score_weights
from .glm import deviance, irls_fit, score_and_info
from .model import (
    Categorical,
    Intercept,
    Interaction,
    ModelSpec,
    Numeric,
    ParamVector,
    ScoreInfo,
    SubsampleData,
    make_spec,
)
from .onestep import FitOptions, FitResult, fit_onestep, one_step_update, report
from .sampler import SampleSpec, choose_subsample_size
from .simbench import (
    CategoricalDesign,
    SimDesign,
    efficiency_experiment,
    full_mle_oracle,
    generate_table,
)
from .sqlgen import build_score_query

__all__ = [
    "Database",
    "ModelSpec",
    "ParamVector",
    "ScoreInfo",
    "SubsampleData",
    "FitOptions",
    "FitResult",
    "SampleSpec",
    "SimDesign",
    "CategoricalDesign",
    "Intercept",
    "Numeric",
    "Categorical",
    "Interaction",
    "make_spec",
    "fit_onestep",
    "one_step_update",
    "report",
    "irls_fit",
    "score_and_info",
    "deviance",
    "build_score_query",
    "count_rows",
    "enumerate_levels",
    "resolve_spec",
    "sample_rows",
    "choose_subsample_size",
    "generate_table",
    "full_mle_oracle",
    "efficiency_experiment",
    "get_family",
    "get_link",
    "mean_from_eta",
    "score_weights",
    "StepGlmError",
    "ConfigError",
    "DatabaseError",
    "StatisticalError",
    "RankDeficiencyError",
    "SeparationError",
    "SampleTooSmallError",
]
