import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridexp.data_model import (
    ForecastSet, RealizationSeries, TimeSeries,
    parse_system, parse_timeseries, resample_stepwise, serialize_system,
    validate_system,
)
from gridexp.errors import (
    EmptySeries, ForecastLeakage, MalformedFile, NonDivisibleResolution,
    NonUniformSpacing, ReferentialIntegrity,
)
from gridexp.scenario_gen import Prng


MINI_SYSTEM = {
    "base_power": 100.0,
    "buses": [{"id": "b1", "reference": True}, {"id": "b2"}],
    "lines": [{"id": "l12", "from_bus": "b1", "to_bus": "b2",
               "susceptance": 10.0, "flow_limit": 50.0}],
    "thermal_gens": [{"id": "g1", "bus": "b1", "p_min": 5.0, "p_max": 40.0,
                      "marginal_cost": 25.0}],
    "renewable_gens": [],
    "loads": [],
}


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return path


def test_parse_two_bus_counts(tmp_path):
    sys = parse_system(write_json(tmp_path / "s.json", MINI_SYSTEM))
    counts = (len(sys.buses), len(sys.lines), len(sys.thermal_gens),
              len(sys.renewable_gens), len(sys.loads))
    assert counts == (2, 1, 1, 0, 0)
    # optional UC fields take the documented defaults
    g = sys.thermal_gens[0]
    assert g.startup_cost == 0.0 and g.min_up == 1 and g.ramp_up == g.p_max
    assert g.cost_curve == ((40.0, 25.0),)


def test_parse_shipped_case5(case5_dir):
    sys = parse_system(case5_dir / "system.json")
    assert len(sys.buses) == 5
    assert validate_system(sys) == []


def test_parse_dangling_bus_reference(tmp_path):
    doc = json.loads(json.dumps(MINI_SYSTEM))
    doc["lines"][0]["to_bus"] = "b9"
    with pytest.raises(ReferentialIntegrity, match="b9"):
        parse_system(write_json(tmp_path / "s.json", doc))


def test_parse_missing_field(tmp_path):
    doc = json.loads(json.dumps(MINI_SYSTEM))
    del doc["thermal_gens"][0]["p_min"]
    with pytest.raises(MalformedFile, match="p_min"):
        parse_system(write_json(tmp_path / "s.json", doc))


def test_serialize_round_trip(case5_dir, tmp_path):
    sys = parse_system(case5_dir / "system.json")
    (tmp_path / "rt.json").write_text(serialize_system(sys))
    again = parse_system(tmp_path / "rt.json")
    assert again == sys


def test_parse_timeseries_basic(tmp_path):
    p = tmp_path / "ts.csv"
    p.write_text("timestamp,value\n0,1\n3600,2\n7200,3\n")
    ts = parse_timeseries(p)
    assert ts.resolution == 3600
    assert list(ts.values) == [1.0, 2.0, 3.0]


def test_parse_timeseries_nonuniform(tmp_path):
    p = tmp_path / "ts.csv"
    p.write_text("timestamp,value\n0,1\n3600,2\n5400,3\n")
    with pytest.raises(NonUniformSpacing):
        parse_timeseries(p)


def test_parse_timeseries_year(tmp_path):
    p = tmp_path / "ts.csv"
    rows = "\n".join(f"{h * 3600},{1.0}" for h in range(8760))
    p.write_text("timestamp,value\n" + rows + "\n")
    ts = parse_timeseries(p)
    assert len(ts) == 8760
    assert len(ts) == 365 * 24


def test_parse_timeseries_negative_load(tmp_path):
    p = tmp_path / "ts.csv"
    p.write_text("timestamp,value\n0,1\n3600,-2\n")
    from gridexp.errors import NegativeValue
    with pytest.raises(NegativeValue):
        parse_timeseries(p, role="load")
    parse_timeseries(p)  # no role: negative allowed


def test_parse_timeseries_empty(tmp_path):
    p = tmp_path / "ts.csv"
    p.write_text("timestamp,value\n")
    with pytest.raises(EmptySeries):
        parse_timeseries(p)


def test_resample_stepwise_expansion():
    ts = TimeSeries(0, 3600, [10.0, 20.0])
    out = resample_stepwise(ts, 300)
    assert out.resolution == 300
    assert len(out) == 24
    assert np.all(out.values[:12] == 10.0)
    assert np.all(out.values[12:] == 20.0)


def test_resample_identity():
    ts = TimeSeries(0, 3600, [10.0, 20.0])
    assert resample_stepwise(ts, 3600) is ts


def test_resample_nondivisible():
    ts = TimeSeries(0, 3600, [10.0])
    with pytest.raises(NonDivisibleResolution):
        resample_stepwise(ts, 1000)


def test_resample_energy_preserved_1000_random():
    # Oracle: direct summation of MW*h before and after.
    prng = Prng(13)
    for _ in range(1000):
        n = 1 + prng.next_u64() % 48
        res = [3600, 1800, 900][prng.next_u64() % 3]
        new = [300, 60, 150][prng.next_u64() % 3]
        if res % new != 0:
            new = 300 if res % 300 == 0 else 60
        vals = [prng.next_uniform() * 500 for _ in range(n)]
        ts = TimeSeries(0, res, vals)
        out = resample_stepwise(ts, new)
        e_in = sum(vals) * res / 3600.0
        e_out = float(out.values.sum()) * new / 3600.0
        assert abs(e_in - e_out) <= 1e-9 * max(1.0, abs(e_in))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 1e4, allow_nan=False), min_size=1, max_size=50),
       st.sampled_from([(3600, 300), (3600, 600), (1800, 300), (900, 300)]))
def test_resample_energy_property(values, resolutions):
    old, new = resolutions
    ts = TimeSeries(0, old, values)
    out = resample_stepwise(ts, new)
    assert abs(ts.energy_mwh() - out.energy_mwh()) <= 1e-9 * (1 + abs(ts.energy_mwh()))


def test_validate_catches_pmin_above_pmax(tmp_path):
    doc = json.loads(json.dumps(MINI_SYSTEM))
    doc["thermal_gens"][0]["p_min"] = 60.0
    sys = parse_system(write_json(tmp_path / "s.json", doc), strict=False)
    violations = validate_system(sys)
    assert any(v.device_id == "g1" and "p_min≤p_max" in v.rule for v in violations)


def test_validate_single_reference_bus(tmp_path):
    doc = json.loads(json.dumps(MINI_SYSTEM))
    doc["buses"][1]["reference"] = True
    sys = parse_system(write_json(tmp_path / "s.json", doc), strict=False)
    violations = validate_system(sys)
    assert any("single reference bus" in v.rule for v in violations)


def test_validate_disconnected_bus(tmp_path):
    doc = json.loads(json.dumps(MINI_SYSTEM))
    doc["buses"].append({"id": "b3"})
    sys = parse_system(write_json(tmp_path / "s.json", doc), strict=False)
    violations = validate_system(sys)
    assert any(v.device_id == "b3" and "connected" in v.rule for v in violations)


def test_forecast_and_realization_are_disjoint_types():
    real = TimeSeries(0, 300, [1.0] * 12, provenance="realization:w")
    fc = TimeSeries(0, 3600, [1.0], provenance="forecast:w")
    # realization-provenance data cannot enter a ForecastSet
    with pytest.raises(ForecastLeakage):
        ForecastSet("w", 1, point=real)
    # forecast-provenance data cannot pose as a realization
    with pytest.raises(ForecastLeakage):
        RealizationSeries("w", fc)
    # and the happy paths construct fine
    ForecastSet("w", 1, point=fc)
    RealizationSeries("w", real)


def test_scenario_probabilities_validated():
    mk = lambda i: TimeSeries(0, 3600, [1.0], provenance=f"forecast:s{i}")
    with pytest.raises(ValueError):
        ForecastSet("w", 1, scenarios=(mk(0), mk(1)), probabilities=(0.6, 0.5))
    fs = ForecastSet("w", 1, scenarios=(mk(0), mk(1)), probabilities=(0.5, 0.5))
    assert abs(sum(fs.probabilities) - 1.0) <= 1e-12
