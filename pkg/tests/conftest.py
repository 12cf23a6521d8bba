import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gridexp.data_model import (
    Bus, ForecastSet, Line, Load, RenewableGen, System, ThermalGen, TimeSeries,
)
from gridexp.formulations import SystemState

REPO = Path(__file__).resolve().parents[1]
CASE5 = REPO / "cases" / "case5"


@pytest.fixture(scope="session")
def case5_dir() -> Path:
    return CASE5


@pytest.fixture
def one_gen_system() -> System:
    """Single bus, single generator: p in [10, 50], 20 $/MWh, 5 $/h no-load."""
    return System(
        buses=(Bus("b1", True),),
        lines=(),
        thermal_gens=(ThermalGen("g1", "b1", 10.0, 50.0, 100.0, 100.0, 1, 1,
                                 0.0, 5.0, ((50.0, 20.0),)),),
        renewable_gens=(),
        loads=(Load("l1", "b1", 30.0, ""),),
    )


@pytest.fixture
def two_bus_system() -> System:
    """Two buses, two thermal units, one wind site, one load."""
    return System(
        buses=(Bus("a", True), Bus("b")),
        lines=(Line("ab", "a", "b", 10.0, 300.0),),
        thermal_gens=(
            ThermalGen("g1", "a", 20.0, 100.0, 60.0, 60.0, 2, 2, 200.0, 10.0,
                       ((60.0, 18.0), (100.0, 25.0))),
            ThermalGen("g2", "b", 10.0, 80.0, 80.0, 80.0, 1, 1, 100.0, 6.0,
                       ((80.0, 32.0),)),
        ),
        renewable_gens=(RenewableGen("w1", "b", 50.0, "wp"),),
        loads=(Load("l1", "b", 120.0, "lp"),),
    )


def point_forecast(values, start=0, label="test") -> TimeSeries:
    return TimeSeries(start=start, resolution=3600,
                      values=np.asarray(values, dtype=float),
                      provenance=f"forecast:{label}")


def forecast_set(owner, values, start=0) -> ForecastSet:
    ts = point_forecast(values, start, owner)
    return ForecastSet(owner, len(ts), point=ts)
