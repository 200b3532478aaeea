"""Per-subject treatment timelines and log-hazard offsets.

Treatment status is binary on/off per drug. Two offset modes exist:
absolute (status times the drug's total log-hazard effect) and relative
(status minus its baseline value, times the effect). Relative offsets are
identically zero while a subject stays on their baseline strategy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .cox import CohortRow
from .errors import InvalidSpecError, TimelineError

DRUGS = ("statin", "antihypertensive")

# Total log-hazard ratios for the two drug classes and direct per-unit
# log-hazard effects of the modifiable risk factors, with the targets
# below which further reduction yields no benefit.
DEFAULT_B_STAT = -0.3102413
DEFAULT_B_AH = -0.3245535
DEFAULT_B_SBP = 0.02433163
DEFAULT_B_BMI = 0.02173449
DEFAULT_B_NONHDL = 0.1936187


@dataclass(frozen=True)
class EffectConstants:
    b_stat: float = DEFAULT_B_STAT
    b_ah: float = DEFAULT_B_AH
    b_sbp: float = DEFAULT_B_SBP
    b_bmi: float = DEFAULT_B_BMI
    b_nonhdl: float = DEFAULT_B_NONHDL
    sbp_target: float = 120.0
    bmi_target: float = 25.0
    nonhdl_target: float = 2.6

    def __post_init__(self):
        vals = [self.b_stat, self.b_ah, self.b_sbp, self.b_bmi, self.b_nonhdl]
        if not all(np.isfinite(vals)):
            raise InvalidSpecError("effect constants must be finite")
        if min(self.sbp_target, self.bmi_target, self.nonhdl_target) <= 0:
            raise InvalidSpecError("targets must be positive")

    @property
    def mediator_effects(self) -> dict:
        return {"sbp": self.b_sbp, "bmi": self.b_bmi, "nonhdl": self.b_nonhdl}

    @property
    def targets(self) -> dict:
        return {"sbp": self.sbp_target, "bmi": self.bmi_target, "nonhdl": self.nonhdl_target}

    def to_dict(self) -> dict:
        return {
            "b_stat": self.b_stat, "b_ah": self.b_ah,
            "b_sbp": self.b_sbp, "b_bmi": self.b_bmi, "b_nonhdl": self.b_nonhdl,
            "sbp_target": self.sbp_target, "bmi_target": self.bmi_target,
            "nonhdl_target": self.nonhdl_target,
        }


@dataclass(frozen=True)
class TreatmentInterval:
    subject_id: str
    drug: str
    start: float
    end: float  # exclusive
    status: int

    def __post_init__(self):
        if self.drug not in DRUGS:
            raise InvalidSpecError(f"unknown drug {self.drug!r}")
        if not self.end > self.start:
            raise InvalidSpecError(f"interval end {self.end} <= start {self.start}")
        if self.status not in (0, 1):
            raise InvalidSpecError(f"status must be 0/1, got {self.status}")


@dataclass(frozen=True)
class StatusSegment:
    """A maximal span of constant joint statin/antihypertensive status."""

    start: float
    end: float
    a_stat: int
    a_ah: int
    ar_stat: int = 0
    ar_ah: int = 0


def _check_partition(intervals, followup_end, drug):
    ordered = sorted(intervals, key=lambda iv: iv.start)
    if not ordered:
        raise TimelineError(f"no {drug} intervals supplied")
    if ordered[0].start != 0:
        raise TimelineError(f"{drug} intervals start at {ordered[0].start}, not 0")
    for a, b in zip(ordered, ordered[1:]):
        if b.start < a.end - 1e-9:
            raise TimelineError(f"overlapping {drug} intervals at {b.start}")
        if b.start > a.end + 1e-9:
            raise TimelineError(f"gap in {drug} intervals at {a.end}")
    if abs(ordered[-1].end - followup_end) > 1e-9:
        raise TimelineError(
            f"{drug} intervals end at {ordered[-1].end}, expected {followup_end}"
        )
    return ordered


def _status_at(ordered, t):
    for iv in ordered:
        if iv.start <= t < iv.end:
            return iv.status
    return ordered[-1].status


def layer_intervals(statin, antihypertensive, followup_end) -> list[StatusSegment]:
    """Overlay the two drugs' interval sets into joint status segments.

    The result is the coarsest common refinement: adjacent segments always
    differ in at least one status field.
    """
    stat = _check_partition(statin, followup_end, "statin")
    ah = _check_partition(antihypertensive, followup_end, "antihypertensive")
    cuts = sorted({iv.start for iv in stat + ah} | {followup_end})
    segments = []
    for a, b in zip(cuts, cuts[1:]):
        seg = StatusSegment(a, b, _status_at(stat, a), _status_at(ah, a))
        if segments and (segments[-1].a_stat, segments[-1].a_ah) == (seg.a_stat, seg.a_ah):
            segments[-1] = replace(segments[-1], end=b)
        else:
            segments.append(seg)
    return segments


def relative_status(segments, a_stat0: int, a_ah0: int) -> list[StatusSegment]:
    """Fill in status-relative-to-baseline fields: ar = a(t) - a(baseline)."""
    if a_stat0 not in (0, 1) or a_ah0 not in (0, 1):
        raise InvalidSpecError("baseline statuses must be 0/1")
    return [
        replace(s, ar_stat=s.a_stat - a_stat0, ar_ah=s.a_ah - a_ah0) for s in segments
    ]


def segment_offset(segment: StatusSegment, constants: EffectConstants, mode: str) -> float:
    """Log-hazard offset contributed by treatment status over one segment."""
    if mode == "absolute":
        return segment.a_stat * constants.b_stat + segment.a_ah * constants.b_ah
    if mode == "relative":
        return segment.ar_stat * constants.b_stat + segment.ar_ah * constants.b_ah
    raise InvalidSpecError(f"mode must be 'absolute' or 'relative', got {mode!r}")


def mrf_offset(sbp: float, bmi: float, nonhdl: float, constants: EffectConstants) -> float:
    """Fixed-coefficient contribution of the modifiable risk factors.

    Each factor is clipped at its target before the linear term, so values
    at or below target contribute nothing.
    """
    if not all(np.isfinite([sbp, bmi, nonhdl])):
        raise InvalidSpecError("risk factor values must be finite")
    return (
        max(0.0, sbp - constants.sbp_target) * constants.b_sbp
        + max(0.0, bmi - constants.bmi_target) * constants.b_bmi
        + max(0.0, nonhdl - constants.nonhdl_target) * constants.b_nonhdl
    )


def rows_from_segments(
    subject_id,
    covariates: dict,
    segments,
    t_end: float,
    event: bool,
    constants: EffectConstants,
    mode: str,
    extra_offset: float = 0.0,
) -> list[CohortRow]:
    """Convert status segments into counting-process cohort rows.

    Segments are truncated at the event/censoring time `t_end`; the event
    flag is attached to the final row only.
    """
    if not segments or segments[0].start != 0:
        raise TimelineError("segments must start at 0")
    if t_end <= 0 or t_end > segments[-1].end + 1e-9:
        raise TimelineError(f"event time {t_end} outside follow-up")
    rows = []
    for seg in segments:
        if seg.start >= t_end:
            break
        stop = min(seg.end, t_end)
        rows.append(
            CohortRow(
                subject_id=subject_id,
                tstart=seg.start,
                tstop=stop,
                event=False,
                covariates=covariates,
                offset=segment_offset(seg, constants, mode) + extra_offset,
            )
        )
    rows[-1] = replace(rows[-1], event=bool(event))
    return rows
