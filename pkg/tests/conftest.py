import pytest

from gonogo.design import DesignSpec, calibrate
from gonogo.state import EndpointDef, PatientRecord

WORKED_AT = 325.0  # snapshot day for the bundled 20-patient example


def example1_spec(**overrides) -> DesignSpec:
    """Single-endpoint design: null 0.2 vs alt 0.4, N=40, four equal looks."""
    base = dict(
        structure="single",
        endpoints=(EndpointDef("ORR", window_days=120, phi=0.2),),
        null_rates=(0.2,),
        alt_rates=(0.4,),
        max_n=40,
        looks=(10, 20, 30, 40),
        alpha=0.1,
        name="example-1",
    )
    base.update(overrides)
    return DesignSpec(**base)


@pytest.fixture(scope="session")
def spec_n40() -> DesignSpec:
    return example1_spec()


@pytest.fixture(scope="session")
def params_n40(spec_n40):
    return calibrate(spec_n40)


def worked_records():
    """The bundled 20-patient cohort: 11 resolved (3 responses), 9 pending."""
    records = []
    arrivals = [0, 12, 25, 36, 50, 61, 75, 88, 100, 112, 124]
    responders = {2: 64.0, 4: 70.0, 11: 45.0}
    for pid, arr in zip(range(1, 12), arrivals):
        records.append(PatientRecord(pid, arr, {"ORR": responders.get(pid)}))
    follow_ups = [85, 78, 66, 48, 32, 28, 10, 8, 5]
    for pid, fu in zip(range(12, 21), follow_ups):
        records.append(PatientRecord(pid, WORKED_AT - fu, {"ORR": None}))
    return records


@pytest.fixture
def worked_cohort():
    return worked_records()


@pytest.fixture
def orr_endpoint():
    return EndpointDef("ORR", window_days=120, phi=0.2)
