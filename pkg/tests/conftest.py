import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from gddc.model import DataCenterSpec, NodeTypeSpec
from gddc.scenario import Scenario, WorkloadSpec, default_scenario, load_scenario

settings.register_profile("gddc", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("gddc")

DATA = Path(__file__).parent / "data"


def make_site(id="s", nodes=((3, 0.1, (0.3,), (1.0,)),), cop=4.0, ewif=2.0, cf=500.0,
              conc=5.0, tou=0.1, premium=None, contract=None, free=False,
              temperature=80.0, dew=70.0) -> DataCenterSpec:
    """Small site builder; ``nodes`` holds (count, idle, active[], exec[]) tuples."""
    return DataCenterSpec(
        id=id,
        nodes=tuple(NodeTypeSpec(id=f"{id}-n{k}", count=c, idle_power=ip, active_power=ap,
                                 exec_time=et) for k, (c, ip, ap, et) in enumerate(nodes)),
        cop=cop, ewif=ewif, cf=cf, concentration_cycle=conc,
        tou=(tou,) * 24 if isinstance(tou, float) else tuple(tou),
        premium_available=premium is not None, premium_price=premium or 0.0,
        annual_contract=contract is not None, contract_price=contract or 0.0,
        free_cooling_available=free,
        temperature=(temperature,) * 24 if isinstance(temperature, float) else tuple(temperature),
        dew_point=(dew,) * 24 if isinstance(dew, float) else tuple(dew),
    )


def make_scenario(sites, gar) -> Scenario:
    """``gar`` is one constant rate per workload type."""
    workloads = tuple(WorkloadSpec(id=f"w{j}", gar=(float(g),) * 24) for j, g in enumerate(gar))
    return Scenario(label="test", datacenters=tuple(sites), workloads=workloads)


@pytest.fixture(scope="session")
def oracle_scenario():
    return load_scenario(DATA / "oracle_scenario.json")


@pytest.fixture(scope="session")
def small():
    return default_scenario(4, 3, 3)


@pytest.fixture(scope="session")
def bundled():
    from gddc.scenario import bundled_scenario
    return bundled_scenario()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
