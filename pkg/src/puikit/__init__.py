"""puikit: sequential prediction-under-intervention survival models.

Counting-process proportional-hazards fitting, treatment-timeline
offsets, counterfactual survival-time transforms, causal-DAG effect
resolution, calibration/discrimination metrics, and a synthetic cohort
simulator with closed-form ground truth.
"""

from .counterfactual import HazardPath, cf_cumhaz_at_event, cf_survival_time
from .cox import (
    CohortRow,
    CoxFit,
    FormulaSpec,
    StepCumHaz,
    breslow_cumhaz,
    fit_cox,
    predict_survival,
)
from .dag import (
    CausalDag,
    Edge,
    InterventionSpec,
    KnownTotal,
    Node,
    default_cvd_dag,
    intervention_log_effect,
    knock_on,
    resolve_direct_effects,
    total_effect,
)
from .errors import (
    AnchorError,
    ConvergenceError,
    DesignError,
    DomainError,
    InconsistentSystemError,
    InvalidSpecError,
    PuiError,
    RankDeficiencyError,
    TimelineError,
    UnderdeterminedError,
    UnresolvedEffectError,
    VariantError,
)
from .metrics import (
    CURRENT_STRATEGY,
    NEVER_TREATED,
    CalibrationReport,
    EvalPair,
    bootstrap_ci,
    c_index,
    calibration_smooth,
    counterfactual_times,
    evaluate_under_strategy,
)
from .models import (
    VARIANTS,
    Anchor,
    AnchorStore,
    InterventionScenario,
    PuiModel,
    RiskEstimate,
    SubjectRecord,
    VisitRecord,
    clipped_covariates,
    default_formula,
    fit_variant,
    predict,
    predict_mrf,
    predict_noncausal,
    predict_treatment_offset,
    predict_two_component,
    predict_unexposed_mediator,
    sequential_consistency_gap,
    spline_formula,
    two_component_combine,
)
from .simulate import SimConfig, oracle_cf_time, simulate_cohort
from .splines import SplineSpec, default_knots, rcs_basis
from .timeline import (
    EffectConstants,
    StatusSegment,
    TreatmentInterval,
    layer_intervals,
    mrf_offset,
    relative_status,
    rows_from_segments,
    segment_offset,
)

__version__ = "0.1.0"
