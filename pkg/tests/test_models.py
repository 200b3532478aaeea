import math

import numpy as np
import pytest

from puikit.dag import InterventionSpec
from puikit.errors import AnchorError, InvalidSpecError, VariantError
from puikit.models import (
    VARIANTS,
    Anchor,
    AnchorStore,
    InterventionScenario,
    build_fit_rows,
    fit_variant,
    predict,
    predict_mrf,
    predict_noncausal,
    predict_treatment_offset,
    predict_two_component,
    predict_unexposed_mediator,
    sequential_consistency_gap,
    two_component_combine,
)
from puikit.simulate import SimConfig, simulate_cohort
from puikit.timeline import EffectConstants

from conftest import make_visit

B_AH = EffectConstants().b_ah
B_SBP = EffectConstants().b_sbp


def scenario(label="s", deltas=None, direct=0.0, statin=None, antihypertensive=None):
    return InterventionScenario(
        label=label,
        spec=InterventionSpec(label, deltas=deltas or {}, direct_outcome_effect=direct),
        statin=statin,
        antihypertensive=antihypertensive,
    )


class TestTwoComponentCombine:
    def test_identity(self):
        assert two_component_combine(0.2, {}, {}) == 0.2

    def test_zero_baseline_stays_zero(self):
        assert two_component_combine(0.0, {"sbp": -20.0}, {"sbp": B_SBP}) == 0.0

    def test_degenerate_odds_rejected(self):
        with pytest.raises(InvalidSpecError):
            two_component_combine(1.0, {}, {})

    def test_frozen_value(self):
        got = two_component_combine(0.20, {"sbp": -20.0}, {"sbp": 0.02433163})
        assert got == pytest.approx(0.1332034118641317, abs=1e-12)
        assert got == pytest.approx(0.1332, abs=1e-4)

    def test_monotone_in_positive_beta_deltas(self):
        risks = [
            two_component_combine(0.3, {"sbp": d}, {"sbp": B_SBP}) for d in (-30, -10, 0, 10, 30)
        ]
        assert all(b > a for a, b in zip(risks, risks[1:]))


class TestVariantDispatch:
    def test_unknown_variant(self, plain_subjects):
        with pytest.raises(VariantError):
            fit_variant(plain_subjects[:50], "mystery")

    def test_mismatched_prediction_calls(self, to_model):
        v = make_visit()
        with pytest.raises(VariantError):
            predict_noncausal(to_model, v, 1)
        with pytest.raises(VariantError):
            predict_mrf(to_model, v)
        with pytest.raises(VariantError):
            predict_two_component(to_model, Anchor("p1", 0, v.m, v.a), v)

    def test_determinism(self, to_model):
        v = make_visit()
        a = predict_treatment_offset(to_model, v, 1)
        b = predict_treatment_offset(to_model, v, 1)
        assert a == b

    def test_risks_in_unit_interval(self, to_model, mrf_model):
        rng = np.random.default_rng(31)
        for _ in range(25):
            v = make_visit(sbp=float(rng.uniform(100, 200)), bmi=float(rng.uniform(18, 40)),
                           nonhdl=float(rng.uniform(1.5, 7)), age=float(rng.uniform(40, 75)))
            assert 0.0 <= predict_treatment_offset(to_model, v, 1).risk <= 1.0
            assert 0.0 <= predict_mrf(mrf_model, v).risk <= 1.0


class TestTreatmentOffset:
    def test_on_off_hazard_ratio(self, to_model):
        v = make_visit()
        off = predict_treatment_offset(to_model, v, 0)
        on = predict_treatment_offset(to_model, v, 1)
        # survival raised to exp(b_ah) on the cumulative-hazard scale
        assert 1 - on.risk == pytest.approx((1 - off.risk) ** math.exp(B_AH), abs=1e-12)
        assert on.risk < off.risk  # protective

    def test_zero_effect_constant_makes_on_off_equal(self, plain_subjects):
        model = fit_variant(plain_subjects[:400], "treatment_offset",
                            constants=EffectConstants(b_ah=0.0))
        v = make_visit()
        assert predict_treatment_offset(model, v, 0).risk == predict_treatment_offset(model, v, 1).risk

    def test_components_reproduce_risk(self, to_model):
        est = predict_treatment_offset(to_model, make_visit(), 1)
        assert est.risk == pytest.approx(
            1 - (1 - est.baseline_risk) ** math.exp(est.intervention_log_multiplier), abs=1e-15
        )


class TestUnexposedMediator:
    def test_equal_unexposed_sbp_gives_equal_pui(self, um_model):
        v1 = make_visit(sbp=150.0, sbp_unexposed=150.0, antihypertensive=0)
        # on treatment later: measured SBP fell, unexposed SBP unchanged
        v2 = make_visit(sbp=140.0, sbp_unexposed=150.0, antihypertensive=1)
        for a_hyp in (0, 1):
            r1 = predict_unexposed_mediator(um_model, v1, a_hyp).risk
            r2 = predict_unexposed_mediator(um_model, v2, a_hyp).risk
            assert r1 == r2

    def test_missing_unexposed_sbp_rejected(self, um_model):
        v = make_visit()
        v = v.__class__(v.patient_id, v.t, {"sbp": 150.0, "bmi": 29.0, "nonhdl": 4.2}, v.z, v.a)
        with pytest.raises(InvalidSpecError):
            predict_unexposed_mediator(um_model, v, 1)

    def test_never_treated_cohort_equals_treatment_offset(self):
        # nobody ever initiates, so sbp == sbp_unexposed everywhere and the
        # two variants collapse to the same model
        config = SimConfig(n=500, seed=3, init_intercept=-99.0)
        subjects = [s.record() for s in simulate_cohort(config)]
        to = fit_variant(subjects, "treatment_offset")
        um = fit_variant(subjects, "unexposed_mediator")
        for a_hyp in (0, 1):
            v = make_visit(sbp=155.0)
            assert predict_unexposed_mediator(um, v, a_hyp).risk == pytest.approx(
                predict_treatment_offset(to, v, a_hyp).risk, abs=1e-12
            )


class TestSequentialConsistency:
    """The harness builds visit_k1 as the exact mediator response to the
    scenario with non-modifiable covariates unchanged."""

    def test_unexposed_mediator_gap_zero(self, um_model):
        v_k = make_visit(sbp=160.0, sbp_unexposed=160.0, antihypertensive=0)
        sc = scenario("start_ah", antihypertensive=1)
        v_k1 = make_visit(sbp=150.0, sbp_unexposed=160.0, antihypertensive=1)
        assert sequential_consistency_gap(um_model, v_k, v_k1, sc) <= 1e-12

    def test_two_component_gap_zero(self, tc_model):
        anchor = Anchor("p1", 0.0, {"sbp": 160.0, "bmi": 29.0, "nonhdl": 4.2},
                        {"statin": 0, "antihypertensive": 0})
        v_k = make_visit(sbp=160.0, antihypertensive=0)
        sc = scenario("treat", deltas={"sbp": -10.0}, antihypertensive=1)
        v_k1 = make_visit(sbp=150.0, antihypertensive=1)
        assert sequential_consistency_gap(tc_model, v_k, v_k1, sc, anchor=anchor) <= 1e-12

    def test_treatment_offset_gap_positive(self, to_model):
        # double counting: the model sees both the offset and the fallen SBP
        v_k = make_visit(sbp=160.0, antihypertensive=0)
        sc = scenario("start_ah", antihypertensive=1)
        v_k1 = make_visit(sbp=150.0, antihypertensive=1)
        assert to_model.fit.coefficients["sbp_adj"] != 0.0
        assert sequential_consistency_gap(to_model, v_k, v_k1, sc) > 1e-6

    def test_treatment_offset_gap_zero_without_mediator_response(self, to_model):
        v_k = make_visit(sbp=160.0, antihypertensive=0)
        sc = scenario("start_ah", antihypertensive=1)
        v_k1 = make_visit(sbp=160.0, antihypertensive=1)
        assert sequential_consistency_gap(to_model, v_k, v_k1, sc) <= 1e-12


class TestMrf:
    def test_zero_scenario_is_factual(self, mrf_model):
        v = make_visit()
        est = predict_mrf(mrf_model, v, scenario("none"))
        assert est.risk == pytest.approx(est.baseline_risk, abs=1e-15)
        assert est.intervention_log_multiplier == 0.0

    def test_sbp_reduction_arithmetic(self, mrf_model):
        v = make_visit(sbp=140.0)
        est = predict_mrf(mrf_model, v, scenario("lower", deltas={"sbp": -20.0}))
        assert est.intervention_log_multiplier == pytest.approx(-20.0 * B_SBP, abs=1e-12)

    def test_below_target_clipping(self, mrf_model):
        v = make_visit(sbp=120.0)
        est = predict_mrf(mrf_model, v, scenario("lower", deltas={"sbp": -20.0}))
        factual = predict_mrf(mrf_model, v, scenario("none"))
        assert est.risk == factual.risk

    def test_crossing_target_partial_credit(self, mrf_model):
        v = make_visit(sbp=130.0)
        est = predict_mrf(mrf_model, v, scenario("lower", deltas={"sbp": -20.0}))
        assert est.intervention_log_multiplier == pytest.approx(-10.0 * B_SBP, abs=1e-12)

    def test_knock_on_effects_enter(self, mrf_model):
        v = make_visit(sbp=150.0, bmi=30.0, nonhdl=4.2)
        est = predict_mrf(mrf_model, v, scenario("weight", deltas={"bmi": -5.0}))
        c = mrf_model.constants
        expected = -5.0 * c.b_bmi - 3.5 * c.b_sbp - 0.522 * c.b_nonhdl
        assert est.intervention_log_multiplier == pytest.approx(expected, abs=1e-12)

    def test_components_reproduce_risk(self, mrf_model):
        est = predict_mrf(mrf_model, make_visit(), scenario("x", deltas={"sbp": -15.0}))
        assert est.risk == pytest.approx(
            1 - (1 - est.baseline_risk) ** math.exp(est.intervention_log_multiplier), abs=1e-15
        )

    def test_per_factor_fixing_structure(self, plain_subjects):
        model = fit_variant(plain_subjects[:500], "mrf_fix_sbp")
        assert "sbp_adj" not in model.fit.columns
        assert "bmi_adj" in model.fit.columns and "nonhdl_adj" in model.fit.columns
        full = fit_variant(plain_subjects[:500], "mrf")
        assert all(m not in full.fit.columns for m in ("sbp_adj", "bmi_adj", "nonhdl_adj"))


class TestTwoComponentModel:
    ANCHOR_M = {"sbp": 160.0, "bmi": 30.0, "nonhdl": 4.5}

    def anchor(self, a=None):
        return Anchor("p1", 0.0, dict(self.ANCHOR_M), a or {"statin": 0, "antihypertensive": 0})

    def test_missing_anchor_rejected(self, tc_model):
        with pytest.raises(AnchorError):
            predict_two_component(tc_model, None, make_visit())

    def test_first_visit_empty_scenario_is_baseline(self, tc_model):
        v = make_visit(sbp=160.0, bmi=30.0, nonhdl=4.5)
        est = predict_two_component(tc_model, self.anchor(), v)
        assert est.risk == est.baseline_risk
        assert est.intervention_log_multiplier == 0.0

    def test_anchor_invariance(self, tc_model):
        # the baseline component never reads the later visit's mediators
        v1 = make_visit(sbp=160.0, bmi=30.0, nonhdl=4.5)
        v2 = make_visit(sbp=120.0, bmi=24.0, nonhdl=2.0)
        e1 = predict_two_component(tc_model, self.anchor(), v1)
        e2 = predict_two_component(tc_model, self.anchor(), v2)
        assert e1.baseline_risk == e2.baseline_risk

    def test_achieved_change_equals_earlier_pui(self, tc_model):
        sc = scenario("normalize", deltas={"sbp": -25.0, "nonhdl": -1.5})
        v0 = make_visit(sbp=160.0, bmi=30.0, nonhdl=4.5, t=0.0)
        pui = predict_two_component(tc_model, self.anchor(), v0, sc)
        v1 = make_visit(sbp=135.0, bmi=30.0, nonhdl=3.0, t=365.0)
        factual = predict_two_component(tc_model, self.anchor(), v1)
        assert factual.risk == pui.risk

    def test_partial_achievement_ordering(self, tc_model):
        v0 = make_visit(sbp=160.0, bmi=30.0, nonhdl=4.5)
        none = predict_two_component(tc_model, self.anchor(), v0).risk
        full = predict_two_component(
            tc_model, self.anchor(), v0,
            scenario("full", deltas={"sbp": -40.0, "bmi": -5.0, "nonhdl": -1.9})).risk
        partial = predict_two_component(
            tc_model, self.anchor(), v0,
            scenario("partial", deltas={"sbp": -20.0, "nonhdl": -0.8})).risk
        assert full < partial < none

    def test_odds_scale_combination(self, tc_model):
        assert tc_model.combine_scale == "odds"
        v = make_visit(sbp=160.0, bmi=30.0, nonhdl=4.5)
        est = predict_two_component(tc_model, self.anchor(), v,
                                    scenario("x", deltas={"sbp": -20.0}))
        p = est.baseline_risk
        odds = p / (1 - p) * math.exp(est.intervention_log_multiplier)
        assert est.risk == pytest.approx(odds / (1 + odds), abs=1e-15)

    def test_treatment_toggle_relative_to_anchor(self, tc_model):
        v = make_visit(sbp=160.0, bmi=30.0, nonhdl=4.5, antihypertensive=1)
        anchored_off = self.anchor()
        # the achieved start of treatment already shifts the intervention
        # component, so re-stating it in the scenario changes nothing
        factual = predict_two_component(tc_model, anchored_off, v)
        explicit = predict_two_component(tc_model, anchored_off, v,
                                         scenario("on", antihypertensive=1))
        assert factual.risk == explicit.risk
        assert factual.intervention_log_multiplier == pytest.approx(B_AH, abs=1e-15)


class TestNonCausal:
    def test_determinism_and_range(self, nc_model):
        v = make_visit(antihypertensive=1)
        a = predict_noncausal(nc_model, v, 1)
        assert a == predict_noncausal(nc_model, v, 1)
        assert 0.0 <= a.risk <= 1.0

    def test_uses_fitted_treatment_coefficient(self, nc_model):
        v = make_visit()
        on = predict_noncausal(nc_model, v, 1).risk
        off = predict_noncausal(nc_model, v, 0).risk
        beta = nc_model.fit.coefficients["antihypertensive"]
        assert 1 - on == pytest.approx((1 - off) ** math.exp(beta), abs=1e-12)


class TestPredictDispatcher:
    def test_none_scenario_is_factual(self, to_model):
        v = make_visit(antihypertensive=1)
        assert predict(to_model, v, None).risk == predict_treatment_offset(to_model, v, 1).risk

    def test_scenario_toggle_overrides_visit_status(self, to_model):
        v = make_visit(antihypertensive=1)
        est = predict(to_model, v, scenario("stop", antihypertensive=0))
        assert est.risk == predict_treatment_offset(to_model, v, 0).risk


class TestBuildFitRows:
    def test_event_on_last_row_only(self, plain_subjects):
        subject = next(s for s in plain_subjects if s.event and len(s.segments) > 1)
        rows = build_fit_rows([subject], "treatment_offset", EffectConstants())
        assert [r.event for r in rows[:-1]] == [False] * (len(rows) - 1)
        assert rows[-1].event is True
        assert rows[-1].tstop == subject.t_end

    def test_mrf_rows_carry_fixed_mediator_offset(self, plain_subjects):
        c = EffectConstants()
        subject = plain_subjects[0]
        rows = build_fit_rows([subject], "mrf", c)
        cov = subject.covariates
        fixed = (max(0.0, cov["sbp"] - 120) * c.b_sbp + max(0.0, cov["bmi"] - 25) * c.b_bmi
                 + max(0.0, cov["nonhdl"] - 2.6) * c.b_nonhdl)
        rel = [seg.ar_ah * c.b_ah + seg.ar_stat * c.b_stat
               for seg in subject.segments if seg.start < subject.t_end]
        for row, r in zip(rows, rel):
            assert row.offset == pytest.approx(fixed + r, abs=1e-12)


class TestAnchorStore:
    def test_first_write_is_final(self, tmp_path):
        store = AnchorStore(str(tmp_path / "anchors.jsonl"))
        v1 = make_visit(sbp=160.0, t=0.0)
        v2 = make_visit(sbp=140.0, t=365.0)
        a1 = store.record(v1)
        a2 = store.record(v2)
        assert a2 is a1
        assert store.get("p1").m["sbp"] == 160.0

    def test_explicit_re_anchor(self, tmp_path):
        store = AnchorStore(str(tmp_path / "anchors.jsonl"))
        store.record(make_visit(sbp=160.0, t=0.0))
        store.re_anchor(make_visit(sbp=140.0, t=365.0))
        assert store.get("p1").m["sbp"] == 140.0

    def test_append_only_persistence(self, tmp_path):
        path = str(tmp_path / "anchors.jsonl")
        store = AnchorStore(path)
        store.record(make_visit(sbp=160.0))
        store.re_anchor(make_visit(sbp=140.0))
        lines = open(path).read().strip().splitlines()
        assert len(lines) == 2  # audit trail kept
        reloaded = AnchorStore(path)
        assert reloaded.get("p1").m["sbp"] == 140.0

    def test_memory_only_store(self):
        store = AnchorStore()
        assert store.get("p1") is None
        store.record(make_visit())
        assert store.get("p1") is not None


def test_all_variants_registered():
    assert set(VARIANTS) == {
        "noncausal", "treatment_offset", "unexposed_mediator", "mrf", "two_component",
        "mrf_fix_sbp", "mrf_fix_bmi", "mrf_fix_nonhdl",
    }
