"""The five prediction-under-intervention model variants.

Each variant is a counting-process Cox fit plus a policy for how
treatment status and the modifiable risk factors enter prediction:

* non-causal: everything fitted freely, antihypertensive use a covariate;
* treatment offset: antihypertensive effect enters as a fixed offset;
* unexposed mediator: as treatment offset, but SBP is read from its
  unexposed-to-treatment value;
* modifiable risk factor (MRF): mediator effects fixed to causal values
  via clipped offsets, drop-in adjusted relative to baseline status;
* two-component: a free baseline model anchored at the first visit,
  multiplied by an intervention component on the odds scale.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .cox import CohortRow, CoxFit, FormulaSpec, fit_cox, predict_survival
from .dag import CausalDag, InterventionSpec, default_cvd_dag, knock_on
from .errors import AnchorError, InvalidSpecError, VariantError
from .splines import SplineSpec
from .timeline import EffectConstants, StatusSegment

MEDIATORS = ("sbp", "bmi", "nonhdl")
DEFAULT_HORIZON = 3653.0  # 10 years in days


@dataclass(frozen=True)
class VariantConfig:
    name: str
    ah_offset: str = "none"  # none | absolute | relative
    stat_offset: str = "none"
    fixed_mediators: tuple = ()
    use_unexposed_sbp: bool = False
    ah_covariate: bool = False

    @property
    def free_mediators(self) -> tuple:
        return tuple(m for m in MEDIATORS if m not in self.fixed_mediators)


VARIANTS = {
    c.name: c
    for c in [
        VariantConfig("noncausal", ah_covariate=True),
        VariantConfig("treatment_offset", ah_offset="absolute"),
        VariantConfig("unexposed_mediator", ah_offset="absolute", use_unexposed_sbp=True),
        VariantConfig("mrf", ah_offset="relative", stat_offset="relative",
                      fixed_mediators=MEDIATORS),
        VariantConfig("two_component", ah_offset="relative", stat_offset="relative"),
        VariantConfig("mrf_fix_sbp", ah_offset="relative", stat_offset="relative",
                      fixed_mediators=("sbp",)),
        VariantConfig("mrf_fix_bmi", ah_offset="relative", stat_offset="relative",
                      fixed_mediators=("bmi",)),
        VariantConfig("mrf_fix_nonhdl", ah_offset="relative", stat_offset="relative",
                      fixed_mediators=("nonhdl",)),
    ]
}


@dataclass(frozen=True)
class VisitRecord:
    patient_id: str
    t: float
    m: dict  # sbp, bmi, nonhdl, optionally sbp_unexposed
    z: dict  # non-modifiable covariates (age, ...)
    a: dict  # statin / antihypertensive -> 0/1

    def __post_init__(self):
        for k, v in self.m.items():
            if not np.isfinite(v):
                raise InvalidSpecError(f"non-finite risk factor {k}={v}")


@dataclass(frozen=True)
class Anchor:
    patient_id: str
    t: float
    m: dict
    a: dict


@dataclass(frozen=True)
class InterventionScenario:
    """A hypothetical or achieved change in risk factors and treatment.

    ``statin`` / ``antihypertensive`` are target statuses (None keeps the
    visit's current status).
    """

    label: str = "factual"
    spec: InterventionSpec = field(default_factory=lambda: InterventionSpec("none"))
    achieved: bool = False
    statin: int | None = None
    antihypertensive: int | None = None


FACTUAL = InterventionScenario()


@dataclass(frozen=True)
class RiskEstimate:
    risk: float
    horizon: float
    variant: str
    scenario: str
    baseline_risk: float
    intervention_log_multiplier: float
    combination: str  # hazard | odds

    def to_dict(self):
        return {
            "risk": self.risk,
            "horizon": self.horizon,
            "variant": self.variant,
            "scenario": self.scenario,
            "baseline_risk": self.baseline_risk,
            "intervention_log_multiplier": self.intervention_log_multiplier,
            "combination": self.combination,
        }


@dataclass
class PuiModel:
    variant: str
    fit: CoxFit
    constants: EffectConstants
    dag: CausalDag
    horizon: float = DEFAULT_HORIZON
    combine_scale: str = "odds"  # two-component combination scale

    @property
    def config(self) -> VariantConfig:
        return VARIANTS[self.variant]


# ---------------------------------------------------------------------------
# Fitting pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubjectRecord:
    """One subject prepared for fitting: baseline state plus follow-up."""

    subject_id: str
    covariates: dict  # age, sex, ..., sbp, sbp_unexposed, bmi, nonhdl
    a_stat0: int
    a_ah0: int
    segments: tuple  # StatusSegment with relative fields filled
    t_end: float
    event: bool


def clipped_covariates(covariates: dict, constants: EffectConstants) -> dict:
    """Add the target-clipped mediator columns used by the default formulas."""
    out = dict(covariates)
    for m in MEDIATORS:
        if m in out:
            out[f"{m}_adj"] = max(0.0, out[m] - constants.targets[m])
    if "sbp_unexposed" in out:
        out["sbp_unexposed_adj"] = max(0.0, out["sbp_unexposed"] - constants.sbp_target)
    return out


def _sbp_term(config: VariantConfig) -> str:
    return "sbp_unexposed_adj" if config.use_unexposed_sbp else "sbp_adj"


def default_formula(variant: str, z_terms=("age", "sex", "diabetes")) -> FormulaSpec:
    """Linear formula over non-modifiable terms plus the variant's free
    mediators (clipped); matches the synthetic generating process."""
    config = VARIANTS[variant]
    linear = list(z_terms)
    for m in config.free_mediators:
        if m == "sbp":
            linear.append(_sbp_term(config))
        else:
            linear.append(f"{m}_adj")
    if config.ah_covariate:
        linear.append("antihypertensive")
    return FormulaSpec(linear=tuple(linear))


def spline_formula(variant: str, z_terms=("sex", "diabetes"), n_knots: int = 4) -> FormulaSpec:
    """Spline formula: free mediators as restricted cubic splines, all
    terms interacted with linear age."""
    config = VARIANTS[variant]
    spline_vars = []
    for m in config.free_mediators:
        spline_vars.append("sbp_unexposed" if (m == "sbp" and config.use_unexposed_sbp) else m)
    linear = ["age"] + list(z_terms)
    if config.ah_covariate:
        linear.append("antihypertensive")
    splines = tuple(SplineSpec(v, n_knots=n_knots) for v in spline_vars)
    interactions = tuple(("age", t) for t in list(z_terms) + spline_vars)
    return FormulaSpec(linear=tuple(linear), splines=splines, interactions=interactions)


def _segment_offset_for(config: VariantConfig, seg: StatusSegment, constants: EffectConstants) -> float:
    total = 0.0
    if config.ah_offset == "absolute":
        total += seg.a_ah * constants.b_ah
    elif config.ah_offset == "relative":
        total += seg.ar_ah * constants.b_ah
    if config.stat_offset == "absolute":
        total += seg.a_stat * constants.b_stat
    elif config.stat_offset == "relative":
        total += seg.ar_stat * constants.b_stat
    return total


def build_fit_rows(subjects, variant: str, constants: EffectConstants):
    """Expand subjects into counting-process rows with the variant's offsets."""
    config = VARIANTS[variant]
    rows = []
    for s in subjects:
        cov = clipped_covariates(s.covariates, constants)
        cov["statin"] = s.a_stat0
        cov["antihypertensive"] = s.a_ah0
        fixed = 0.0
        for m in config.fixed_mediators:
            key = "sbp_unexposed" if (m == "sbp" and config.use_unexposed_sbp) else m
            fixed += max(0.0, cov[key] - constants.targets[m]) * constants.mediator_effects[m]
        first = len(rows)
        for seg in s.segments:
            if seg.start >= s.t_end:
                break
            rows.append(
                CohortRow(
                    subject_id=s.subject_id,
                    tstart=seg.start,
                    tstop=min(seg.end, s.t_end),
                    event=False,
                    covariates=cov,
                    offset=_segment_offset_for(config, seg, constants) + fixed,
                )
            )
        if len(rows) == first:
            raise InvalidSpecError(f"subject {s.subject_id}: no follow-up before t_end")
        rows[-1] = replace(rows[-1], event=bool(s.event))
    return rows


def fit_variant(
    subjects,
    variant: str,
    constants: EffectConstants | None = None,
    formula: FormulaSpec | None = None,
    dag: CausalDag | None = None,
    tolerance: float = 1e-8,
    max_iter: int = 50,
    horizon: float = DEFAULT_HORIZON,
) -> PuiModel:
    if variant not in VARIANTS:
        raise VariantError(f"unknown variant {variant!r}")
    constants = constants or EffectConstants()
    formula = formula or default_formula(variant)
    rows = build_fit_rows(subjects, variant, constants)
    fit = fit_cox(rows, formula, tolerance=tolerance, max_iter=max_iter)
    return PuiModel(variant, fit, constants, dag or default_cvd_dag(constants), horizon=horizon)


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------

def _require(model: PuiModel, variant: str):
    if model.variant != variant:
        raise VariantError(f"model is {model.variant!r}, expected {variant!r}")


def _visit_covariates(model: PuiModel, visit: VisitRecord, mediators: dict | None = None) -> dict:
    cov = dict(visit.z)
    cov.update(mediators if mediators is not None else visit.m)
    cov["statin"] = visit.a.get("statin", 0)
    cov["antihypertensive"] = visit.a.get("antihypertensive", 0)
    return clipped_covariates(cov, model.constants)


def _hazard_estimate(model, base_risk, log_mult, scenario_label, horizon) -> RiskEstimate:
    risk = 1.0 - (1.0 - base_risk) ** np.exp(log_mult)
    return RiskEstimate(float(risk), horizon, model.variant, scenario_label,
                        float(base_risk), float(log_mult), "hazard")


def predict_noncausal(model: PuiModel, visit: VisitRecord, a_hyp: int,
                      horizon: float | None = None) -> RiskEstimate:
    """Plug covariates and a hypothetical antihypertensive status into the
    unconstrained model. Not causally interpretable; kept as the foil."""
    _require(model, "noncausal")
    horizon = horizon or model.horizon
    cov = _visit_covariates(model, visit)
    cov["antihypertensive"] = a_hyp
    risk = predict_survival(model.fit, cov, 0.0, horizon)
    return RiskEstimate(risk, horizon, model.variant, f"ah={a_hyp}", risk, 0.0, "hazard")


def _offset_variant_predict(model, visit, a_hyp, horizon, variant):
    _require(model, variant)
    horizon = horizon or model.horizon
    config = model.config
    m = dict(visit.m)
    if config.use_unexposed_sbp:
        if "sbp_unexposed" not in m:
            raise InvalidSpecError("visit lacks sbp_unexposed, required by this variant")
        m["sbp"] = m["sbp_unexposed"]
    cov = _visit_covariates(model, visit, mediators=m)
    base = predict_survival(model.fit, cov, 0.0, horizon)
    log_mult = a_hyp * model.constants.b_ah
    return _hazard_estimate(model, base, log_mult, f"ah={a_hyp}", horizon)


def predict_treatment_offset(model, visit, a_hyp, horizon=None) -> RiskEstimate:
    """Risk under the strategy of antihypertensive status fixed at a_hyp
    over the whole horizon, using the current SBP value."""
    return _offset_variant_predict(model, visit, a_hyp, horizon, "treatment_offset")


def predict_unexposed_mediator(model, visit, a_hyp, horizon=None) -> RiskEstimate:
    """As the treatment-offset prediction, but SBP is read from the value
    unexposed to antihypertensive treatment."""
    return _offset_variant_predict(model, visit, a_hyp, horizon, "unexposed_mediator")


def _scenario_toggle_offset(model, visit, scenario) -> float:
    total = 0.0
    if scenario.statin is not None:
        total += (scenario.statin - visit.a.get("statin", 0)) * model.constants.b_stat
    if scenario.antihypertensive is not None:
        total += (scenario.antihypertensive - visit.a.get("antihypertensive", 0)) * model.constants.b_ah
    return total


def predict_mrf(model: PuiModel, visit: VisitRecord,
                scenario: InterventionScenario = FACTUAL,
                horizon: float | None = None) -> RiskEstimate:
    """Risk under current strategy with the scenario's risk-factor shifts.

    Fixed mediators enter through the clipped causal offset evaluated at
    their post-scenario values; free mediators (partial-fixing variants)
    are re-read at the shifted values.
    """
    if not model.variant.startswith("mrf"):
        raise VariantError(f"model is {model.variant!r}, expected an mrf variant")
    horizon = horizon or model.horizon
    constants = model.constants
    deltas = knock_on(model.dag, scenario.spec)
    m_new = {k: visit.m[k] + deltas.get(k, 0.0) for k in visit.m}
    cov = _visit_covariates(model, visit, mediators=m_new)
    base_cov = _visit_covariates(model, visit)

    def fixed_offset(mediators):
        return sum(
            max(0.0, mediators[m] - constants.targets[m]) * constants.mediator_effects[m]
            for m in model.config.fixed_mediators
        )

    base = predict_survival(model.fit, base_cov, fixed_offset(visit.m), horizon)
    # free mediators respond through the fitted coefficients, fixed ones
    # through the offset; both land in the log multiplier
    log_mult = (
        model.fit.linear_predictor(cov) - model.fit.linear_predictor(base_cov)
        + fixed_offset(m_new) - fixed_offset(visit.m)
        + _scenario_toggle_offset(model, visit, scenario)
        + scenario.spec.direct_outcome_effect
    )
    return _hazard_estimate(model, base, log_mult, scenario.label, horizon)


def two_component_combine(p: float, delta_m: dict, beta_int: dict, direct: float = 0.0) -> float:
    """Apply the intervention component to a baseline risk on the odds scale."""
    if not 0.0 <= p <= 1.0:
        raise InvalidSpecError(f"baseline risk {p} outside [0, 1]")
    if p == 1.0:
        raise InvalidSpecError("baseline risk of 1 has degenerate odds")
    if p == 0.0:
        return 0.0
    shift = direct + sum(beta_int[k] * delta_m.get(k, 0.0) for k in beta_int)
    odds = p / (1.0 - p) * np.exp(shift)
    return float(odds / (1.0 + odds))


def _clipped_deltas(anchor_m: dict, new_m: dict, constants: EffectConstants) -> dict:
    """Change in the above-target part of each mediator, anchor -> new."""
    out = {}
    for m in MEDIATORS:
        if m in anchor_m and m in new_m:
            t = constants.targets[m]
            out[m] = max(0.0, new_m[m] - t) - max(0.0, anchor_m[m] - t)
    return out


def _anchor_toggle_offset(model, anchor: Anchor, visit: VisitRecord,
                          scenario: InterventionScenario) -> float:
    """Treatment change relative to the anchored baseline strategy.

    The visit's achieved status stands in when the scenario leaves a drug
    alone, so an achieved change and the scenario that hypothesized it
    shift the intervention component identically.
    """
    total = 0.0
    for drug, b in (("statin", model.constants.b_stat),
                    ("antihypertensive", model.constants.b_ah)):
        target = getattr(scenario, drug)
        if target is None:
            target = visit.a.get(drug, 0)
        total += (target - anchor.a.get(drug, 0)) * b
    return total


def predict_two_component(model: PuiModel, anchor: Anchor, visit: VisitRecord,
                          scenario: InterventionScenario = FACTUAL,
                          horizon: float | None = None) -> RiskEstimate:
    """Baseline component at the anchored first-visit risk factors (with
    current non-modifiable values), times the intervention component for
    the change from the anchor to the (post-scenario) current values."""
    _require(model, "two_component")
    if anchor is None:
        raise AnchorError(f"no anchor recorded for patient {visit.patient_id}")
    horizon = horizon or model.horizon
    base_cov = _visit_covariates(model, visit, mediators=anchor.m)
    p = predict_survival(model.fit, base_cov, 0.0, horizon)

    deltas = knock_on(model.dag, scenario.spec)
    m_new = {k: visit.m[k] + deltas.get(k, 0.0) for k in visit.m}
    delta_m = _clipped_deltas(anchor.m, m_new, model.constants)
    direct = scenario.spec.direct_outcome_effect + _anchor_toggle_offset(model, anchor, visit, scenario)
    beta_int = {m: model.constants.mediator_effects[m] for m in delta_m}

    if model.combine_scale == "odds":
        risk = two_component_combine(p, delta_m, beta_int, direct)
    else:
        log_mult = direct + sum(beta_int[k] * delta_m[k] for k in beta_int)
        risk = 1.0 - (1.0 - p) ** np.exp(log_mult)
    shift = direct + sum(beta_int[k] * delta_m[k] for k in beta_int)
    return RiskEstimate(float(risk), horizon, model.variant, scenario.label,
                        float(p), float(shift), model.combine_scale)


def predict(model: PuiModel, visit: VisitRecord,
            scenario: InterventionScenario | None = None,
            anchor: Anchor | None = None,
            horizon: float | None = None) -> RiskEstimate:
    """Variant-dispatching prediction; scenario None means factual
    (current status, no risk-factor changes)."""
    scenario = scenario or FACTUAL
    if model.variant in ("noncausal", "treatment_offset", "unexposed_mediator"):
        a_hyp = scenario.antihypertensive
        if a_hyp is None:
            a_hyp = visit.a.get("antihypertensive", 0)
        fn = {
            "noncausal": predict_noncausal,
            "treatment_offset": predict_treatment_offset,
            "unexposed_mediator": predict_unexposed_mediator,
        }[model.variant]
        return fn(model, visit, a_hyp, horizon=horizon)
    if model.variant.startswith("mrf"):
        return predict_mrf(model, visit, scenario, horizon=horizon)
    if model.variant == "two_component":
        return predict_two_component(model, anchor, visit, scenario, horizon=horizon)
    raise VariantError(f"unknown variant {model.variant!r}")


def sequential_consistency_gap(model: PuiModel, visit_k: VisitRecord,
                               visit_k1: VisitRecord,
                               scenario: InterventionScenario,
                               anchor: Anchor | None = None) -> float:
    """|PUI at t_k under the scenario - factual risk at t_{k+1}|.

    Zero (up to rounding) for variants satisfying sequential consistency
    when the follow-up visit realizes exactly the scenario's mediator
    response with non-modifiable factors unchanged.
    """
    pui = predict(model, visit_k, scenario, anchor=anchor).risk
    factual = predict(model, visit_k1, None, anchor=anchor).risk
    return abs(pui - factual)


# ---------------------------------------------------------------------------
# Anchor persistence
# ---------------------------------------------------------------------------

class AnchorStore:
    """Append-only JSON-lines store of first-visit anchors.

    The first write per patient is final; later writes are ignored unless
    an explicit re-anchor is requested.
    """

    def __init__(self, path: str | None = None):
        self.path = path
        self._anchors: dict[str, Anchor] = {}
        if path and os.path.exists(path):
            with open(path) as fh:
                for line in fh:
                    rec = json.loads(line)
                    a = Anchor(rec["patient_id"], rec["t"], rec["m"], rec["a"])
                    if rec.get("re_anchor") or a.patient_id not in self._anchors:
                        self._anchors[a.patient_id] = a

    def get(self, patient_id: str) -> Anchor | None:
        return self._anchors.get(patient_id)

    def record(self, visit: VisitRecord) -> Anchor:
        """Create the anchor from a first visit; later visits are no-ops."""
        existing = self._anchors.get(visit.patient_id)
        if existing is not None:
            return existing
        anchor = Anchor(visit.patient_id, visit.t, dict(visit.m), dict(visit.a))
        self._anchors[visit.patient_id] = anchor
        self._append(anchor, re_anchor=False)
        return anchor

    def re_anchor(self, visit: VisitRecord) -> Anchor:
        """Explicitly replace the anchor; audit trail kept on disk."""
        anchor = Anchor(visit.patient_id, visit.t, dict(visit.m), dict(visit.a))
        self._anchors[visit.patient_id] = anchor
        self._append(anchor, re_anchor=True)
        return anchor

    def _append(self, anchor: Anchor, re_anchor: bool):
        if not self.path:
            return
        rec = {"patient_id": anchor.patient_id, "t": anchor.t, "m": anchor.m,
               "a": anchor.a, "re_anchor": re_anchor}
        with open(self.path, "a") as fh:
            fh.write(json.dumps(rec) + "\n")
