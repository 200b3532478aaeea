"""Compare intervention scenarios for one patient across model variants.

Fits three variants on a synthetic cohort, then asks for the 10-year risk
of a 65-year-old woman with type 2 diabetes under several what-ifs:
starting an antihypertensive, a weight-loss program (with knock-on effects
on SBP and non-HDL), and doing nothing.
"""

from puikit import (
    Anchor,
    InterventionScenario,
    InterventionSpec,
    SimConfig,
    VisitRecord,
    fit_variant,
    knock_on,
    predict,
    simulate_cohort,
)

jane = VisitRecord(
    patient_id="jane",
    t=0.0,
    m={"sbp": 155.0, "sbp_unexposed": 155.0, "bmi": 31.0, "nonhdl": 4.5},
    z={"age": 65.0, "sex": 0.0, "diabetes": 1.0},
    a={"statin": 0, "antihypertensive": 0},
)

scenarios = [
    InterventionScenario("do nothing"),
    InterventionScenario(
        "start antihypertensive",
        spec=InterventionSpec("aht", deltas={"sbp": -10.0}),
        antihypertensive=1,
    ),
    InterventionScenario(
        "lose 5 BMI units",
        spec=InterventionSpec("weight", deltas={"bmi": -5.0}),
    ),
]


def main():
    print("simulating a 4,000-subject cohort...")
    subjects = [s.record() for s in simulate_cohort(SimConfig(n=4000, seed=1))]

    models = {v: fit_variant(subjects, v)
              for v in ("treatment_offset", "unexposed_mediator", "two_component")}
    anchor = Anchor(jane.patient_id, jane.t, dict(jane.m), dict(jane.a))

    print(f"\npatient: {jane.m} {jane.z}\n")
    header = f"{'scenario':<26}" + "".join(f"{v:>20}" for v in models)
    print(header)
    for sc in scenarios:
        row = f"{sc.label:<26}"
        for model in models.values():
            est = predict(model, jane, sc, anchor=anchor)
            row += f"{est.risk:>19.1%} "
        print(row)

    deltas = knock_on(models["treatment_offset"].dag, scenarios[2].spec)
    print("\nknock-on effects of the weight-loss scenario:",
          {k: round(v, 3) for k, v in deltas.items()})
    print("note: the offset variants only model treatment-status scenarios, so the")
    print("weight-loss row matches 'do nothing' for them; the two-component variant")
    print("propagates risk-factor changes (and their knock-on effects) explicitly.")


if __name__ == "__main__":
    main()
