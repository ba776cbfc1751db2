"""epgauge: percentile-based research performance indicators.

Counts how a publication cohort distributes across the global citation
percentiles of its (year, field) stratum, fits the one-parameter power law
that distribution follows (the e_p index), fits lognormal citation models
by maximum likelihood, and renders assessment and comparison reports.
"""

from .corpus import (
    CohortSelector,
    Corpus,
    Format,
    FundingClass,
    PaperRecord,
    classify_funding,
    cohort_counts,
    export_records,
    load_records,
    select_cohort,
)
from .epfit import (
    EpFitReport,
    EpIndex,
    expected_frequency,
    fit_ep,
    prob_ratio,
    probability_top,
)
from .errors import (
    ConfigError,
    DegenerateFitError,
    DomainError,
    DuplicateIdError,
    EmptyCohortError,
    EpgaugeError,
    InfeasibleSpecError,
    InputError,
    SchemaError,
)
from .lognormal import (
    LognormalFit,
    ZeroPolicy,
    fit_mle,
    pdf,
    tail_probability,
    tail_ratio,
    threshold_schedule,
    upper_tail,
)
from .percentile import (
    GRID_EXT,
    GRID_STD,
    PercentileBaseline,
    PercentileLevel,
    ShareTable,
    build_baseline,
    citation_threshold,
    fraction_in_top,
    share_table,
    top_weight,
)
from .report import (
    AssessOptions,
    CohortAssessment,
    DualMethodComparison,
    assess_cohort,
    compare_dual,
    dual_from_params,
    render,
)
from .synth import SynthSpec, gen_global, gen_local_with_ep, merge_cohort

__version__ = "0.1.0"

__all__ = [
    "AssessOptions",
    "CohortAssessment",
    "CohortSelector",
    "ConfigError",
    "Corpus",
    "DegenerateFitError",
    "DomainError",
    "DualMethodComparison",
    "DuplicateIdError",
    "EmptyCohortError",
    "EpFitReport",
    "EpIndex",
    "EpgaugeError",
    "Format",
    "FundingClass",
    "GRID_EXT",
    "GRID_STD",
    "InfeasibleSpecError",
    "InputError",
    "LognormalFit",
    "PaperRecord",
    "PercentileBaseline",
    "PercentileLevel",
    "SchemaError",
    "ShareTable",
    "SynthSpec",
    "ZeroPolicy",
    "assess_cohort",
    "build_baseline",
    "citation_threshold",
    "classify_funding",
    "cohort_counts",
    "compare_dual",
    "dual_from_params",
    "expected_frequency",
    "export_records",
    "fit_ep",
    "fit_mle",
    "fraction_in_top",
    "gen_global",
    "gen_local_with_ep",
    "load_records",
    "merge_cohort",
    "pdf",
    "prob_ratio",
    "probability_top",
    "render",
    "select_cohort",
    "share_table",
    "tail_probability",
    "tail_ratio",
    "threshold_schedule",
    "top_weight",
    "upper_tail",
]
