"""Model artifact and bulk-data serialization.

Artifacts are self-describing JSON: everything needed to predict except
the anchor store. Cohort and timeline data travel as CSV.
"""

from __future__ import annotations

import csv
import datetime
import json

import numpy as np

from .cox import CoxFit, FormulaSpec, StepCumHaz
from .dag import CausalDag, default_cvd_dag
from .errors import InvalidSpecError
from .models import PuiModel, SubjectRecord, VARIANTS
from .splines import SplineSpec
from .timeline import EffectConstants, TreatmentInterval, layer_intervals, relative_status


def _formula_to_dict(f: FormulaSpec) -> dict:
    return {
        "linear": list(f.linear),
        "splines": [{"variable": s.variable, "knots": list(s.knots or [])} for s in f.splines],
        "interactions": [list(p) for p in f.interactions],
        "offsets": list(f.offsets),
    }


def _formula_from_dict(d: dict) -> FormulaSpec:
    return FormulaSpec(
        linear=tuple(d["linear"]),
        splines=tuple(SplineSpec(s["variable"], knots=tuple(s["knots"]) or None)
                      for s in d["splines"]),
        interactions=tuple(tuple(p) for p in d["interactions"]),
        offsets=tuple(d["offsets"]),
    )


def model_to_dict(model: PuiModel) -> dict:
    fit = model.fit
    return {
        "variant": model.variant,
        "columns": list(fit.columns),
        "coefficients": dict(fit.coefficients),
        "knots": {s.variable: list(s.knots) for s in fit.formula.splines},
        "baseline_cumhaz": fit.baseline_cumhaz.pairs(),
        "offsets_config": {
            "ah_offset": model.config.ah_offset,
            "stat_offset": model.config.stat_offset,
            "fixed_mediators": list(model.config.fixed_mediators),
        },
        "meta": {
            "tolerance": fit.gradient_norm,
            "iterations": fit.iterations,
            "log_likelihood": fit.log_likelihood,
            "t_max": fit.t_max,
            "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        },
        "formula": _formula_to_dict(fit.formula),
        "vcov": np.asarray(fit.vcov).tolist(),
        "constants": model.constants.to_dict(),
        "dag": model.dag.to_dict(),
        "horizon": model.horizon,
        "combine_scale": model.combine_scale,
    }


def model_from_dict(data: dict) -> PuiModel:
    if data["variant"] not in VARIANTS:
        raise InvalidSpecError(f"unknown variant {data['variant']!r} in artifact")
    pairs = data["baseline_cumhaz"]
    baseline = StepCumHaz([t for t, _ in pairs], [h for _, h in pairs])
    fit = CoxFit(
        coefficients=dict(data["coefficients"]),
        columns=list(data["columns"]),
        vcov=np.array(data["vcov"], float),
        baseline_cumhaz=baseline,
        formula=_formula_from_dict(data["formula"]),
        iterations=data["meta"]["iterations"],
        gradient_norm=data["meta"]["tolerance"],
        log_likelihood=data["meta"]["log_likelihood"],
        t_max=data["meta"]["t_max"],
    )
    constants = EffectConstants(**data["constants"])
    dag = CausalDag.from_dict(data["dag"]) if data.get("dag") else default_cvd_dag(constants)
    return PuiModel(data["variant"], fit, constants, dag,
                    horizon=data.get("horizon", 3653.0),
                    combine_scale=data.get("combine_scale", "odds"))


def save_model(model: PuiModel, path: str):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1)


def load_model(path: str) -> PuiModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Cohort / timeline CSV
# ---------------------------------------------------------------------------

_META = ("subject_id", "tstart", "tstop", "event", "statin", "antihypertensive")


def load_subjects(cohort_csv: str, timeline_csv: str) -> list[SubjectRecord]:
    """Join a baseline cohort CSV with a treatment-interval CSV."""
    timelines: dict[str, dict[str, list]] = {}
    with open(timeline_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            iv = TreatmentInterval(row["subject_id"], row["drug"],
                                   float(row["start"]), float(row["end"]), int(row["status"]))
            timelines.setdefault(iv.subject_id, {}).setdefault(iv.drug, []).append(iv)

    subjects = []
    with open(cohort_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            sid = row["subject_id"]
            if sid not in timelines:
                raise InvalidSpecError(f"no timeline for subject {sid}")
            cov = {k: float(v) for k, v in row.items() if k not in _META}
            a_stat0 = int(float(row.get("statin", 0)))
            a_ah0 = int(float(row.get("antihypertensive", 0)))
            drugs = timelines[sid]
            followup = max(iv.end for ivs in drugs.values() for iv in ivs)
            segments = relative_status(
                layer_intervals(drugs.get("statin", []), drugs.get("antihypertensive", []),
                                followup),
                a_stat0, a_ah0)
            subjects.append(SubjectRecord(
                subject_id=sid,
                covariates=cov,
                a_stat0=a_stat0,
                a_ah0=a_ah0,
                segments=tuple(segments),
                t_end=float(row["tstop"]),
                event=bool(int(float(row["event"]))),
            ))
    return subjects
