"""Synthetic cohorts with known ground truth.

Event times come from a piecewise-exponential baseline with multiplicative
treatment effects, inverted in closed form, so exact counterfactual times
are available for any treatment regime. Treatment drop-in is confounded by
indication: initiation probability rises with current SBP (and optionally
with an unobserved frailty term that also raises the hazard).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, InvalidSpecError
from .models import SubjectRecord
from .timeline import (
    DEFAULT_B_AH,
    DEFAULT_B_STAT,
    EffectConstants,
    TreatmentInterval,
    layer_intervals,
    relative_status,
)


def _expit(x):
    return 1.0 / (1.0 + np.exp(-x))


@dataclass(frozen=True)
class SimConfig:
    n: int = 1000
    seed: int = 0
    # piecewise-constant baseline hazard: (start_day, rate/day)
    rates: tuple = ((0.0, 1.2e-5), (1826.0, 1.8e-5))
    followup: float = 3653.0
    decision_interval: float = 365.0
    # true treatment effects (log-hazard ratios)
    b_stat: float = DEFAULT_B_STAT
    b_ah: float = DEFAULT_B_AH
    # true covariate effects; mediators act through their clipped values
    beta_age: float = 0.06
    beta_sex: float = 0.35
    beta_diabetes: float = 0.5
    constants: EffectConstants = field(default_factory=EffectConstants)
    # unobserved frailty (confounds treatment and outcome when sd > 0)
    frailty_sd: float = 0.0
    # baseline antihypertensive status: logit intercept of None disables
    ah0_intercept: float | None = None
    ah0_sbp_slope: float = 0.08
    ah0_frailty_slope: float = 2.0
    # drop-in at scheduled decision times
    init_intercept: float = -2.2
    init_sbp_slope: float = 0.06
    init_frailty_slope: float = 1.0
    discontinue_prob: float = 0.10
    statins_enabled: bool = False
    statin_init_intercept: float = -2.5
    statin_init_nonhdl_slope: float = 0.8
    sbp_treatment_shift: float = -10.0

    def __post_init__(self):
        if any(r <= 0 for _, r in self.rates):
            raise InvalidSpecError("baseline rates must be positive")
        if self.n <= 0 or self.followup <= 0:
            raise InvalidSpecError("n and followup must be positive")


class PiecewiseExpCumHaz:
    """Closed-form cumulative hazard for piecewise-constant rates."""

    def __init__(self, breaks, rates):
        self.breaks = np.asarray(breaks, float)  # segment start times, breaks[0] = 0
        self.rates = np.asarray(rates, float)
        if self.breaks[0] != 0 or np.any(np.diff(self.breaks) <= 0):
            raise InvalidSpecError("breaks must start at 0 and ascend")
        widths = np.diff(self.breaks)
        self._cum = np.concatenate([[0.0], np.cumsum(widths * self.rates[:-1])])

    def __call__(self, t):
        t = np.asarray(t, float)
        idx = np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, len(self.breaks) - 1)
        out = self._cum[idx] + self.rates[idx] * (t - self.breaks[idx])
        return float(out) if out.ndim == 0 else out

    def inverse(self, h: float) -> float:
        """Exact min{t : H(t) >= h} (H is continuous and strictly increasing)."""
        if h <= 0:
            return 0.0
        idx = int(np.searchsorted(self._cum, h, side="right") - 1)
        idx = min(idx, len(self.breaks) - 1)
        return float(self.breaks[idx] + (h - self._cum[idx]) / self.rates[idx])


@dataclass
class SimSubject:
    subject_id: str
    covariates: dict
    a_stat0: int
    a_ah0: int
    statin_intervals: list
    ah_intervals: list
    segments: list
    t_end: float
    event: bool
    latent: float  # Exp(1) draw behind the factual time
    t_cf_never: float
    event_cf_never: bool
    t_cf_current: float
    event_cf_current: bool
    frailty: float

    def record(self) -> SubjectRecord:
        return SubjectRecord(
            subject_id=self.subject_id,
            covariates=self.covariates,
            a_stat0=self.a_stat0,
            a_ah0=self.a_ah0,
            segments=tuple(self.segments),
            t_end=self.t_end,
            event=self.event,
        )


def _true_lp(config: SimConfig, cov: dict, frailty: float) -> float:
    c = config.constants
    return (
        config.beta_age * (cov["age"] - 60.0)
        + config.beta_sex * cov["sex"]
        + config.beta_diabetes * cov["diabetes"]
        + max(0.0, cov["sbp_unexposed"] - c.sbp_target) * c.b_sbp
        + max(0.0, cov["bmi"] - c.bmi_target) * c.b_bmi
        + max(0.0, cov["nonhdl"] - c.nonhdl_target) * c.b_nonhdl
        + frailty
    )


def _regime_pieces(config: SimConfig, lp: float, segments):
    """(start, end, hazard) pieces over [0, followup] for a status path."""
    cuts = sorted({b for b, _ in config.rates} | {s.start for s in segments} | {config.followup})
    cuts = [c for c in cuts if c < config.followup] + [config.followup]
    rate_breaks = [b for b, _ in config.rates]
    pieces = []
    for a, b in zip(cuts, cuts[1:]):
        rate = config.rates[np.searchsorted(rate_breaks, a, side="right") - 1][1]
        seg = next(s for s in segments if s.start <= a < s.end)
        mult = np.exp(lp + config.b_stat * seg.a_stat + config.b_ah * seg.a_ah)
        pieces.append((a, b, rate * mult))
    return pieces


def _pieces_cumhaz(pieces, t: float) -> float:
    total = 0.0
    for a, b, h in pieces:
        if t <= a:
            break
        total += h * (min(t, b) - a)
    return total


def _pieces_invert(pieces, target: float):
    """Time at which accumulated hazard reaches target; None if never."""
    total = 0.0
    for a, b, h in pieces:
        inc = h * (b - a)
        if total + inc >= target:
            return a + (target - total) / h
        total += inc
    return None


def _constant_status_segments(followup, a_stat, a_ah):
    from .timeline import StatusSegment

    return [StatusSegment(0.0, followup, a_stat, a_ah)]


def _simulate_timeline(rng, config, a0, p_init, p_stop):
    """On/off intervals for one drug from scheduled decision draws."""
    times = np.arange(config.decision_interval, config.followup, config.decision_interval)
    status, start = a0, 0.0
    intervals = []
    for t in times:
        if status == 0:
            switch = rng.random() < p_init(t)
        else:
            switch = rng.random() < p_stop
        if switch:
            intervals.append((start, float(t), status))
            status, start = 1 - status, float(t)
    intervals.append((start, config.followup, status))
    return intervals


def simulate_subject(rng, config: SimConfig, subject_id: str) -> SimSubject:
    cov = {
        "age": float(rng.uniform(40, 75)),
        "sex": int(rng.random() < 0.5),
        "diabetes": int(rng.random() < 0.08),
        "sbp_unexposed": float(rng.normal(135, 15)),
        "bmi": float(rng.normal(27, 4)),
        "nonhdl": float(rng.normal(3.8, 1.0)),
    }
    frailty = float(rng.normal(0, config.frailty_sd)) if config.frailty_sd > 0 else 0.0

    if config.ah0_intercept is None:
        a_ah0 = 0
    else:
        p = _expit(config.ah0_intercept
                   + config.ah0_sbp_slope * (cov["sbp_unexposed"] - 135.0)
                   + config.ah0_frailty_slope * frailty)
        a_ah0 = int(rng.random() < p)
    a_stat0 = 0
    if config.statins_enabled:
        a_stat0 = int(rng.random() < _expit(config.statin_init_intercept
                                            + config.statin_init_nonhdl_slope
                                            * (cov["nonhdl"] - 3.8)))

    # measured SBP reflects any current antihypertensive exposure
    cov["sbp"] = cov["sbp_unexposed"] + config.sbp_treatment_shift * a_ah0

    def p_init_ah(t):
        # initiation is only considered while off treatment, so the
        # decision sees the unexposed SBP
        return _expit(config.init_intercept
                      + config.init_sbp_slope * (cov["sbp_unexposed"] - 135.0)
                      + config.init_frailty_slope * frailty)

    ah_raw = _simulate_timeline(rng, config, a_ah0, p_init_ah, config.discontinue_prob)
    if config.statins_enabled:
        stat_raw = _simulate_timeline(
            rng, config, a_stat0,
            lambda t: _expit(config.statin_init_intercept
                             + config.statin_init_nonhdl_slope * (cov["nonhdl"] - 3.8)),
            config.discontinue_prob,
        )
    else:
        stat_raw = [(0.0, config.followup, 0)]

    statin_iv = [TreatmentInterval(subject_id, "statin", a, b, s) for a, b, s in stat_raw]
    ah_iv = [TreatmentInterval(subject_id, "antihypertensive", a, b, s) for a, b, s in ah_raw]
    segments = relative_status(layer_intervals(statin_iv, ah_iv, config.followup),
                               a_stat0, a_ah0)

    lp = _true_lp(config, cov, frailty)
    latent = float(rng.exponential(1.0))

    factual = _regime_pieces(config, lp, segments)
    t_event = _pieces_invert(factual, latent)
    if t_event is None or t_event > config.followup:
        t_end, event = config.followup, False
    else:
        t_end, event = t_event, True

    target = _pieces_cumhaz(factual, t_end)
    never = _regime_pieces(config, lp, _constant_status_segments(config.followup, 0, 0))
    current = _regime_pieces(config, lp,
                             _constant_status_segments(config.followup, a_stat0, a_ah0))
    t_never = _pieces_invert(never, target)
    t_current = _pieces_invert(current, target)
    t_never = config.followup if t_never is None else min(t_never, config.followup)
    t_current = config.followup if t_current is None else min(t_current, config.followup)

    return SimSubject(
        subject_id=subject_id,
        covariates=cov,
        a_stat0=a_stat0,
        a_ah0=a_ah0,
        statin_intervals=statin_iv,
        ah_intervals=ah_iv,
        segments=segments,
        t_end=t_end,
        event=event,
        latent=latent,
        t_cf_never=t_never,
        event_cf_never=event,
        t_cf_current=t_current,
        event_cf_current=event,
        frailty=frailty,
    )


def simulate_cohort(config: SimConfig) -> list:
    """Deterministic cohort: each subject gets its own seeded substream."""
    return [
        simulate_subject(np.random.default_rng([config.seed, i]), config, f"s{i:06d}")
        for i in range(config.n)
    ]


def oracle_cf_time(subject: SimSubject, regime: str, config: SimConfig):
    """Closed-form counterfactual (time, event) under the named regime.

    Integrates the factual hazard path to the observed time, then inverts
    the regime's hazard path at that value; independent of the
    counterfactual engine's interval-offset formula.
    """
    lp = _true_lp(config, subject.covariates, subject.frailty)
    factual = _regime_pieces(config, lp, subject.segments)
    target = _pieces_cumhaz(factual, subject.t_end)
    if regime == "never_treated":
        status = _constant_status_segments(config.followup, 0, 0)
    elif regime == "current_strategy":
        status = _constant_status_segments(config.followup, subject.a_stat0, subject.a_ah0)
    else:
        raise DomainError(f"unknown regime {regime!r}")
    pieces = _regime_pieces(config, lp, status)
    t = _pieces_invert(pieces, target)
    t = config.followup if t is None else min(t, config.followup)
    return t, subject.event


def reference_cumhaz(subject: SimSubject, regime: str, config: SimConfig) -> PiecewiseExpCumHaz:
    """True reference-scale cumulative hazard for the engine to invert."""
    lp = _true_lp(config, subject.covariates, subject.frailty)
    if regime == "never_treated":
        status = _constant_status_segments(config.followup, 0, 0)
    elif regime == "current_strategy":
        status = _constant_status_segments(config.followup, subject.a_stat0, subject.a_ah0)
    else:
        raise DomainError(f"unknown regime {regime!r}")
    pieces = _regime_pieces(config, lp, status)
    breaks = [a for a, _, _ in pieces]
    rates = [h for _, _, h in pieces]
    return PiecewiseExpCumHaz(breaks, rates)


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

COHORT_FIELDS = ["subject_id", "tstart", "tstop", "event", "age", "sex", "diabetes",
                 "sbp", "sbp_unexposed", "bmi", "nonhdl", "statin", "antihypertensive"]


def write_cohort_csv(subjects, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COHORT_FIELDS)
        for s in subjects:
            w.writerow([s.subject_id, 0.0, s.t_end, int(s.event),
                        s.covariates["age"], s.covariates["sex"], s.covariates["diabetes"],
                        s.covariates["sbp"], s.covariates["sbp_unexposed"],
                        s.covariates["bmi"], s.covariates["nonhdl"],
                        s.a_stat0, s.a_ah0])


def write_timeline_csv(subjects, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subject_id", "drug", "start", "end", "status"])
        for s in subjects:
            for iv in s.statin_intervals + s.ah_intervals:
                w.writerow([iv.subject_id, iv.drug, iv.start, iv.end, iv.status])


def write_truth_csv(subjects, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subject_id", "t_factual", "event", "t_cf_never", "t_cf_current"])
        for s in subjects:
            w.writerow([s.subject_id, s.t_end, int(s.event), s.t_cf_never, s.t_cf_current])
