import pytest

from puikit.models import VisitRecord, fit_variant
from puikit.simulate import SimConfig, simulate_cohort


@pytest.fixture(scope="session")
def plain_config():
    """Unconfounded cohort matching the default model formulas."""
    return SimConfig(n=1200, seed=7)


@pytest.fixture(scope="session")
def plain_sim(plain_config):
    return simulate_cohort(plain_config)


@pytest.fixture(scope="session")
def plain_subjects(plain_sim):
    return [s.record() for s in plain_sim]


@pytest.fixture(scope="session")
def to_model(plain_subjects):
    return fit_variant(plain_subjects, "treatment_offset")


@pytest.fixture(scope="session")
def um_model(plain_subjects):
    return fit_variant(plain_subjects, "unexposed_mediator")


@pytest.fixture(scope="session")
def mrf_model(plain_subjects):
    return fit_variant(plain_subjects, "mrf")


@pytest.fixture(scope="session")
def tc_model(plain_subjects):
    return fit_variant(plain_subjects, "two_component")


@pytest.fixture(scope="session")
def confounded_config():
    """Frailty-confounded cohort with treated-at-baseline patients."""
    return SimConfig(n=1500, seed=11, frailty_sd=0.8, ah0_intercept=-0.5)


@pytest.fixture(scope="session")
def confounded_subjects(confounded_config):
    return [s.record() for s in simulate_cohort(confounded_config)]


@pytest.fixture(scope="session")
def nc_model(confounded_subjects):
    return fit_variant(confounded_subjects, "noncausal")


def make_visit(patient_id="p1", sbp=150.0, sbp_unexposed=None, bmi=29.0, nonhdl=4.2,
               age=62.0, sex=1.0, diabetes=0.0, statin=0, antihypertensive=0, t=0.0):
    return VisitRecord(
        patient_id=patient_id,
        t=t,
        m={"sbp": sbp, "sbp_unexposed": sbp if sbp_unexposed is None else sbp_unexposed,
           "bmi": bmi, "nonhdl": nonhdl},
        z={"age": age, "sex": sex, "diabetes": diabetes},
        a={"statin": statin, "antihypertensive": antihypertensive},
    )


@pytest.fixture
def visit_factory():
    return make_visit
