"""Command-line entry point.

Subcommands: simulate, fit, predict, cf-times, evaluate, anchor, serve.
Exit codes: 0 success, 1 invalid input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .artifacts import load_model, load_subjects, save_model
from .errors import (
    AnchorError,
    DesignError,
    DomainError,
    InvalidSpecError,
    PuiError,
    TimelineError,
    VariantError,
)
from .metrics import evaluate_under_strategy
from .models import (
    VARIANTS,
    AnchorStore,
    default_formula,
    fit_variant,
    predict,
    spline_formula,
)
from .simulate import (
    SimConfig,
    simulate_cohort,
    write_cohort_csv,
    write_timeline_csv,
    write_truth_csv,
)

ANCHOR_ENV = "PUIKIT_ANCHORS"

_INPUT_ERRORS = (InvalidSpecError, DesignError, TimelineError, VariantError,
                 AnchorError, DomainError, FileNotFoundError,
                 json.JSONDecodeError, KeyError, ValueError)


def _read_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def cmd_simulate(args) -> int:
    config = SimConfig(
        n=args.n,
        seed=args.seed,
        frailty_sd=args.frailty_sd,
        ah0_intercept=args.baseline_treated_intercept,
        statins_enabled=args.statins,
    )
    subjects = simulate_cohort(config)
    os.makedirs(args.out_dir, exist_ok=True)
    write_cohort_csv(subjects, os.path.join(args.out_dir, "cohort.csv"))
    write_timeline_csv(subjects, os.path.join(args.out_dir, "timelines.csv"))
    write_truth_csv(subjects, os.path.join(args.out_dir, "truth.csv"))
    n_events = sum(s.event for s in subjects)
    print(f"wrote {len(subjects)} subjects ({n_events} events) to {args.out_dir}")
    return 0


def cmd_fit(args) -> int:
    subjects = load_subjects(args.cohort, args.timelines)
    formula = spline_formula(args.variant) if args.formula == "spline" else default_formula(args.variant)
    model = fit_variant(subjects, args.variant, formula=formula, horizon=args.horizon)
    save_model(model, args.out)
    print(f"fit {args.variant}: {model.fit.iterations} iterations, "
          f"loglik {model.fit.log_likelihood:.4f}, wrote {args.out}")
    return 0


def cmd_predict(args) -> int:
    from .service import parse_scenario, parse_visit

    model = load_model(args.model)
    visit = parse_visit(_read_json(args.visit))
    scenario = parse_scenario(_read_json(args.scenario)) if args.scenario else None
    store = AnchorStore(args.anchors or os.environ.get(ANCHOR_ENV))
    anchor = store.get(visit.patient_id) or store.record(visit)
    est = predict(model, visit, scenario, anchor=anchor, horizon=args.horizon)
    print(json.dumps(est.to_dict()))
    return 0


def cmd_cf_times(args) -> int:
    from .metrics import counterfactual_times

    model = load_model(args.model)
    subjects = load_subjects(args.cohort, args.timelines)
    results = counterfactual_times(model, subjects, args.strategy,
                                   max_followup=model.fit.t_max)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subject_id", "t_cf", "event"])
        for s, (t_cf, event) in zip(subjects, results):
            w.writerow([s.subject_id, t_cf, int(event)])
    print(f"wrote {len(results)} counterfactual times to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    subjects = load_subjects(args.cohort, args.timelines)
    report, c, _ = evaluate_under_strategy(model, subjects, args.strategy)
    metrics = dict(report.to_dict(), c_index=c, strategy=args.strategy,
                   variant=model.variant)
    with open(args.metrics, "w") as fh:
        json.dump(metrics, fh, indent=1)
    if args.curve:
        with open(args.curve, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["predicted", "smoothed"])
            w.writerows(report.curve)
    print(f"c_index {c:.4f}  ici {report.ici:.5f}  e50 {report.e50:.5f}  "
          f"e90 {report.e90:.5f}")
    return 0


def cmd_anchor(args) -> int:
    from .service import parse_visit

    store = AnchorStore(args.store or os.environ.get(ANCHOR_ENV))
    if args.anchor_cmd == "show":
        anchor = store.get(args.patient)
        if anchor is None:
            raise AnchorError(f"no anchor for patient {args.patient!r}")
        print(json.dumps({"patient_id": anchor.patient_id, "t": anchor.t,
                          "m": anchor.m, "a": anchor.a}))
        return 0
    visit = parse_visit(_read_json(args.visit))
    if args.anchor_cmd == "record":
        anchor = store.record(visit)
        kept = anchor.t == visit.t and anchor.m == visit.m
        print(f"anchor for {visit.patient_id} at t={anchor.t}"
              + ("" if kept else " (existing anchor kept)"))
    else:  # re-anchor
        anchor = store.re_anchor(visit)
        print(f"re-anchored {visit.patient_id} at t={anchor.t}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    models = {}
    for spec in args.model:
        if "=" not in spec:
            raise InvalidSpecError(f"--model expects NAME=PATH, got {spec!r}")
        name, path = spec.split("=", 1)
        models[name] = load_model(path)
    if not models:
        raise InvalidSpecError("at least one --model NAME=PATH is required")
    store = AnchorStore(args.anchors or os.environ.get(ANCHOR_ENV))
    app = create_app(models, store)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="puikit",
                                description="Sequential prediction-under-intervention toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic cohort with known truth")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--frailty-sd", type=float, default=0.0)
    s.add_argument("--baseline-treated-intercept", type=float, default=None,
                   help="logit intercept for baseline antihypertensive use (omit to disable)")
    s.add_argument("--statins", action="store_true")
    s.set_defaults(fn=cmd_simulate)

    s = sub.add_parser("fit", help="fit a model variant from cohort + timeline CSVs")
    s.add_argument("--variant", required=True, choices=sorted(VARIANTS))
    s.add_argument("--cohort", required=True)
    s.add_argument("--timelines", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--formula", choices=["default", "spline"], default="default")
    s.add_argument("--horizon", type=float, default=3653.0)
    s.set_defaults(fn=cmd_fit)

    s = sub.add_parser("predict", help="risk estimate for a visit JSON under a scenario")
    s.add_argument("--model", required=True)
    s.add_argument("--visit", required=True)
    s.add_argument("--scenario", default=None)
    s.add_argument("--anchors", default=None)
    s.add_argument("--horizon", type=float, default=None)
    s.set_defaults(fn=cmd_predict)

    s = sub.add_parser("cf-times", help="counterfactual survival times under a strategy")
    s.add_argument("--model", required=True)
    s.add_argument("--cohort", required=True)
    s.add_argument("--timelines", required=True)
    s.add_argument("--strategy", required=True,
                   choices=["never_treated", "current_strategy"])
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_cf_times)

    s = sub.add_parser("evaluate", help="discrimination and calibration under a strategy")
    s.add_argument("--model", required=True)
    s.add_argument("--cohort", required=True)
    s.add_argument("--timelines", required=True)
    s.add_argument("--strategy", required=True,
                   choices=["never_treated", "current_strategy"])
    s.add_argument("--metrics", required=True)
    s.add_argument("--curve", default=None)
    s.set_defaults(fn=cmd_evaluate)

    s = sub.add_parser("anchor", help="inspect or maintain the first-visit anchor store")
    s.add_argument("--store", default=None)
    anchor_sub = s.add_subparsers(dest="anchor_cmd", required=True)
    a = anchor_sub.add_parser("record", help="record a first visit (no-op if anchored)")
    a.add_argument("--visit", required=True)
    a = anchor_sub.add_parser("re-anchor", help="explicitly replace an anchor")
    a.add_argument("--visit", required=True)
    a = anchor_sub.add_parser("show")
    a.add_argument("--patient", required=True)
    s.set_defaults(fn=cmd_anchor)

    s = sub.add_parser("serve", help="run the what-if HTTP service")
    s.add_argument("--model", action="append", default=[], metavar="NAME=PATH")
    s.add_argument("--anchors", default=None)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8321)
    s.set_defaults(fn=cmd_serve)
    return p


def cli_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PuiError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
