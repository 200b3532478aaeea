"""HTTP/JSON what-if service over fitted model artifacts.

Stateless prediction over immutable artifacts; the anchor store is the
only mutable state and is append-only (first visit wins unless an
explicit re-anchor is requested).
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from .dag import InterventionSpec, knock_on
from .errors import PuiError
from .models import (
    AnchorStore,
    InterventionScenario,
    PuiModel,
    VisitRecord,
    predict,
    sequential_consistency_gap,
)


def parse_visit(data: dict) -> VisitRecord:
    try:
        return VisitRecord(
            patient_id=str(data["patient_id"]),
            t=float(data.get("t", 0.0)),
            m={k: float(v) for k, v in data["m"].items()},
            z={k: float(v) for k, v in data["z"].items()},
            a={k: int(v) for k, v in data.get("a", {}).items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise PuiError(f"malformed visit: {exc}") from exc


def parse_scenario(data: dict | None) -> InterventionScenario:
    if not data:
        return InterventionScenario()
    try:
        spec = InterventionSpec(
            name=data.get("label", "scenario"),
            deltas={k: float(v) for k, v in data.get("deltas", {}).items()},
            direct_outcome_effect=float(data.get("direct_outcome_effect", 0.0)),
        )
        return InterventionScenario(
            label=data.get("label", "scenario"),
            spec=spec,
            achieved=bool(data.get("achieved", False)),
            statin=data.get("statin"),
            antihypertensive=data.get("antihypertensive"),
        )
    except (TypeError, ValueError) as exc:
        raise PuiError(f"malformed scenario: {exc}") from exc


def _response_visit(model: PuiModel, visit: VisitRecord, scenario: InterventionScenario):
    """The synthetic follow-up visit realizing the scenario's response."""
    deltas = knock_on(model.dag, scenario.spec)
    m = dict(visit.m)
    for k in m:
        m[k] = m[k] + deltas.get(k, 0.0)
    a = dict(visit.a)
    if scenario.statin is not None:
        a["statin"] = scenario.statin
    if scenario.antihypertensive is not None:
        a["antihypertensive"] = scenario.antihypertensive
    return VisitRecord(visit.patient_id, visit.t + 1.0, m, visit.z, a)


def create_app(models: dict[str, PuiModel], anchor_store: AnchorStore | None = None) -> FastAPI:
    app = FastAPI(title="prediction-under-intervention service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    anchors = anchor_store or AnchorStore()
    visits: dict[str, list[VisitRecord]] = {}
    lock = threading.Lock()

    def get_model(name: str) -> PuiModel:
        if name not in models:
            raise HTTPException(404, f"unknown model {name!r}")
        return models[name]

    @app.get("/models")
    def list_models():
        return [
            {"name": name, "variant": m.variant, "horizon": m.horizon,
             "columns": m.fit.columns}
            for name, m in sorted(models.items())
        ]

    @app.get("/dag")
    def get_dag():
        first = next(iter(models.values()))
        return first.dag.to_dict()

    @app.post("/knock-on")
    def knock_on_preview(body: dict):
        model = get_model(body.get("model", next(iter(sorted(models)))))
        try:
            scenario = parse_scenario(body.get("scenario"))
            return knock_on(model.dag, scenario.spec)
        except PuiError as exc:
            raise HTTPException(400, str(exc))

    @app.post("/predict")
    def predict_endpoint(body: dict):
        model = get_model(str(body.get("model")))
        try:
            visit = parse_visit(body["visit"])
            scenario = parse_scenario(body.get("scenario"))
            anchor = anchors.get(visit.patient_id) or anchors.record(visit)
            est = predict(model, visit, scenario, anchor=anchor,
                          horizon=body.get("horizon"))
            return est.to_dict()
        except KeyError as exc:
            raise HTTPException(400, f"missing field {exc}")
        except PuiError as exc:
            raise HTTPException(400, str(exc))

    @app.post("/visits")
    def record_visit(body: dict):
        try:
            visit = parse_visit(body)
        except PuiError as exc:
            raise HTTPException(400, str(exc))
        with lock:
            existing = anchors.get(visit.patient_id)
            if body.get("re_anchor"):
                if existing is not None and not body.get("force"):
                    raise HTTPException(
                        409, f"patient {visit.patient_id} already anchored; pass force=true")
                anchor = anchors.re_anchor(visit)
            else:
                anchor = anchors.record(visit)
            visits.setdefault(visit.patient_id, []).append(visit)
        return {"patient_id": visit.patient_id, "n_visits": len(visits[visit.patient_id]),
                "anchor": {"t": anchor.t, "m": anchor.m, "a": anchor.a},
                "is_anchor_visit": anchor.t == visit.t and anchor.m == visit.m}

    @app.get("/patients/{patient_id}/history")
    def history(patient_id: str, model: str | None = None):
        if patient_id not in visits:
            raise HTTPException(404, f"unknown patient {patient_id!r}")
        mdl = get_model(model) if model else models[sorted(models)[0]]
        anchor = anchors.get(patient_id)
        out = []
        for v in visits[patient_id]:
            est = predict(mdl, v, None, anchor=anchor)
            out.append({"t": v.t, "m": v.m, "z": v.z, "a": v.a, "risk": est.risk})
        return {"patient_id": patient_id, "model": mdl.variant,
                "anchor": {"t": anchor.t, "m": anchor.m, "a": anchor.a},
                "trajectory": out}

    @app.post("/whatif")
    def whatif(body: dict):
        model = get_model(str(body.get("model")))
        patient_id = body.get("patient_id")
        try:
            if patient_id and patient_id in visits:
                visit = visits[patient_id][-1]
            elif "visit" in body:
                visit = parse_visit(body["visit"])
            else:
                raise HTTPException(404, f"unknown patient {patient_id!r} and no visit given")
            anchor = anchors.get(visit.patient_id) or anchors.record(visit)
            scenarios = [parse_scenario(s) for s in body.get("scenarios", [])]
            factual = predict(model, visit, None, anchor=anchor)
            results = []
            for sc in sorted(scenarios, key=lambda s: s.label):
                est = predict(model, visit, sc, anchor=anchor)
                follow = _response_visit(model, visit, sc)
                gap = sequential_consistency_gap(model, visit, follow, sc, anchor=anchor)
                results.append({
                    "scenario": sc.label,
                    "estimate": est.to_dict(),
                    "knock_on": knock_on(model.dag, sc.spec),
                    "consistency_gap": gap,
                    "consistent": gap <= 1e-9,
                })
            return {"factual": factual.to_dict(), "scenarios": results}
        except PuiError as exc:
            raise HTTPException(400, str(exc))

    return app
