"""End-to-end acceptance gate.

Each test covers one release criterion at its stated tolerance and runtime
budget and prints a single pass/fail line so the whole gate can be read at
a glance from the test log.
"""

import math
import time

import numpy as np
import pytest

from puikit.counterfactual import HazardPath, cf_survival_time
from puikit.cox import (
    CohortRow,
    FormulaSpec,
    _loglik_parts,
    _RiskSums,
    _score_info,
    fit_cox,
    partial_loglik,
)
from puikit.dag import (
    InterventionSpec,
    KnownTotal,
    default_cvd_dag,
    knock_on,
    resolve_direct_effects,
)
from puikit.metrics import (
    CURRENT_STRATEGY,
    NEVER_TREATED,
    EvalPair,
    c_index,
    evaluate_under_strategy,
)
from puikit.models import Anchor, InterventionScenario, fit_variant, sequential_consistency_gap
from puikit.simulate import SimConfig, reference_cumhaz, simulate_cohort
from puikit.timeline import EffectConstants

from conftest import make_visit
from oracles import c_index_enumeration, nelson_aalen, random_counting_rows

from test_dag import single_path_dag


def _report(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def recovery_fit():
    """Large seeded cohort plus a timed correctly-specified fit, shared by
    the coefficient-recovery and strategy-calibration criteria."""
    config = SimConfig(n=20000, seed=7)
    subjects = [s.record() for s in simulate_cohort(config)]
    start = time.perf_counter()
    model = fit_variant(subjects, "treatment_offset")
    elapsed = time.perf_counter() - start
    return config, subjects, model, elapsed


def test_01_gradient_check(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(50):
        rows = random_counting_rows(rng, int(rng.integers(20, 200)), p=3)
        tstart = np.array([r[0] for r in rows])
        tstop = np.array([r[1] for r in rows])
        event = np.array([r[2] for r in rows])
        X = np.array([r[3] for r in rows])
        offset = rng.normal(scale=0.2, size=len(rows))
        beta = rng.normal(scale=0.3, size=3)
        sums = _RiskSums(tstart, tstop, event)
        _, w, s0, _ = _loglik_parts(X, offset, event, sums, beta)
        score, _ = _score_info(X, event, sums, w, s0)
        h = 1e-5
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (partial_loglik(X, offset, tstart, tstop, event, beta + e)
                  - partial_loglik(X, offset, tstart, tstop, event, beta - e)) / (2 * h)
            worst = max(worst, abs(score[j] - fd) / max(1.0, abs(fd)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 10.0
    _report(capsys, "gradient check",
            ok, f"max rel. score error {worst:.2e} on 50 datasets in {elapsed:.1f}s")


def test_02_breslow_equals_nelson_aalen(capsys):
    rng = np.random.default_rng(1)
    t = np.round(rng.exponential(20.0, 1000), 1) + 0.1  # rounding induces ties
    event = rng.random(1000) < 0.6
    rows = [CohortRow(f"s{i}", 0.0, float(ti), bool(ei), {}, 0.0)
            for i, (ti, ei) in enumerate(zip(t, event))]
    start = time.perf_counter()
    fit = fit_cox(rows, FormulaSpec())
    elapsed = time.perf_counter() - start
    expected = nelson_aalen(t.tolist(), event.tolist())
    H = fit.baseline_cumhaz
    ok = all(H(tt) == hh for tt, hh in expected) and elapsed < 1.0  # exact float equality
    _report(capsys, "breslow = nelson-aalen",
            ok, f"exact equality at {len(expected)} event times (n=1000) in {elapsed:.2f}s")


def test_03_counterfactual_oracle(capsys):
    start = time.perf_counter()
    config = SimConfig(n=10000, seed=2024, ah0_intercept=-1.0, statins_enabled=True)
    worst = 0.0
    for s in simulate_cohort(config):
        for regime, stored in (("never_treated", s.t_cf_never),
                               ("current_strategy", s.t_cf_current)):
            H = reference_cumhaz(s, regime, config)
            changes, offsets = [], []
            for seg in s.segments:
                if seg.start >= s.t_end:
                    break
                changes.append(seg.start)
                if regime == "never_treated":
                    offsets.append(seg.a_stat * config.b_stat + seg.a_ah * config.b_ah)
                else:
                    offsets.append(seg.ar_stat * config.b_stat + seg.ar_ah * config.b_ah)
            path = HazardPath(H, changes, offsets, t_event=s.t_end, event=s.event)
            t_cf, ev = cf_survival_time(path, max_followup=config.followup)
            worst = max(worst, abs(t_cf - stored))
            assert ev == s.event
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 30.0
    _report(capsys, "counterfactual oracle",
            ok, f"max |Δt| {worst:.2e} days over 10,000 subjects x 2 regimes in {elapsed:.1f}s")


def test_04_coefficient_recovery(capsys, recovery_fit):
    config, _, model, elapsed = recovery_fit
    truth = {"age": config.beta_age, "sex": config.beta_sex, "diabetes": config.beta_diabetes,
             "sbp_adj": config.constants.b_sbp, "bmi_adj": config.constants.b_bmi,
             "nonhdl_adj": config.constants.b_nonhdl}
    se = np.sqrt(np.diag(model.fit.vcov))
    worst = max(abs(model.fit.coefficients[col] - truth[col]) / s
                for col, s in zip(model.fit.columns, se))
    ok = worst <= 3.0 and elapsed < 60.0
    _report(capsys, "coefficient recovery",
            ok, f"max |z| {worst:.2f} over {len(truth)} coefficients (n=20,000), fit {elapsed:.1f}s")


def test_05_strategy_calibration(capsys, recovery_fit):
    _, subjects, model, _ = recovery_fit
    report, c, _ = evaluate_under_strategy(model, subjects, NEVER_TREATED)
    ok = report.ici <= 0.01
    _report(capsys, "strategy calibration",
            ok, f"never-treated ICI {report.ici:.4f} (c-index {c:.3f}) at the 10-year horizon")


def test_06_variant_ordering(capsys):
    base = EffectConstants()
    coarse = EffectConstants(b_sbp=2 * base.b_sbp, b_bmi=2 * base.b_bmi,
                             b_nonhdl=2 * base.b_nonhdl)
    wins, details = 0, []
    for seed in range(5):
        config = SimConfig(n=3000, seed=100 + seed, frailty_sd=0.4, ah0_intercept=-0.8)
        subjects = [s.record() for s in simulate_cohort(config)]
        mrf = fit_variant(subjects, "mrf", constants=coarse)
        tc = fit_variant(subjects, "two_component")
        r_mrf, c_mrf, _ = evaluate_under_strategy(mrf, subjects, CURRENT_STRATEGY)
        r_tc, c_tc, _ = evaluate_under_strategy(tc, subjects, CURRENT_STRATEGY)
        wins += r_mrf.ici > r_tc.ici and c_tc >= c_mrf - 0.005
        details.append(f"{r_mrf.ici:.3f}>{r_tc.ici:.3f}")
    ok = wins == 5
    _report(capsys, "variant ordering",
            ok, f"ICI(fixed-mediator) > ICI(two-component) with c-index within 0.005 "
                f"on {wins}/5 seeds ({', '.join(details)})")


def test_07_sequential_consistency(capsys, um_model, tc_model, to_model):
    v_k = make_visit(sbp=160.0, sbp_unexposed=160.0, antihypertensive=0)
    v_k1 = make_visit(sbp=150.0, sbp_unexposed=160.0, antihypertensive=1)
    sc = InterventionScenario(label="start_ah",
                              spec=InterventionSpec("start_ah", deltas={"sbp": -10.0}),
                              antihypertensive=1)
    anchor = Anchor("p1", 0.0, dict(v_k.m), dict(v_k.a))
    gap_um = sequential_consistency_gap(um_model, v_k, v_k1, sc)
    gap_tc = sequential_consistency_gap(tc_model, v_k, v_k1, sc, anchor=anchor)
    gap_to = sequential_consistency_gap(to_model, v_k, v_k1, sc)
    ok = gap_um <= 1e-12 and gap_tc <= 1e-12 and gap_to > 0
    _report(capsys, "sequential consistency",
            ok, f"gap unexposed-mediator {gap_um:.1e}, two-component {gap_tc:.1e}, "
                f"treatment-offset {gap_to:.1e} (> 0 expected)")


def test_08_noncausal_reversal(capsys):
    reversed_sign = 0
    coefs = []
    for seed in range(5):
        config = SimConfig(n=2000, seed=seed, frailty_sd=0.8, ah0_intercept=-0.5)
        subjects = [s.record() for s in simulate_cohort(config)]
        model = fit_variant(subjects, "noncausal")
        b = model.fit.coefficients["antihypertensive"]
        reversed_sign += b > 0
        coefs.append(f"{b:+.2f}")
    ok = reversed_sign >= 4
    _report(capsys, "non-causal reversal",
            ok, f"confounded antihypertensive coefficient positive on {reversed_sign}/5 seeds "
                f"({', '.join(coefs)}; true effect {EffectConstants().b_ah:+.2f})")


def test_09_dag_resolution(capsys):
    resolved = resolve_direct_effects(single_path_dag(effect=None),
                                      [KnownTotal("aht", math.log(0.8))])
    per_mmhg = resolved.edge("sbp", "cvd").effect
    err = abs(per_mmhg - math.log(0.8) / (-10.0))
    deltas = knock_on(default_cvd_dag(), InterventionSpec("weight", deltas={"bmi": -5.0}))
    exact = deltas == {"bmi": -5.0, "sbp": -3.5, "nonhdl": -0.522}
    ok = err <= 1e-12 and exact
    _report(capsys, "dag resolution",
            ok, f"per-mmHg effect error {err:.1e}; knock-on of ΔBMI=-5 exact: {exact}")


def test_10_c_index_oracle(capsys):
    rng = np.random.default_rng(9)
    checked = 0
    while checked < 100:
        n = int(rng.integers(4, 51))
        pairs = [EvalPair(float(p), float(t), bool(e))
                 for p, t, e in zip(rng.random(n).round(2),
                                    rng.integers(1, 20, n), rng.random(n) < 0.6)]
        try:
            expected = c_index_enumeration(pairs)
        except ValueError:
            continue
        assert c_index(pairs) == expected
        checked += 1
    _report(capsys, "c-index oracle",
            True, f"exact match with pair enumeration on {checked} random datasets")
