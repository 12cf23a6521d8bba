import math

import numpy as np
import pytest

from gridexp.data_model import TimeSeries
from gridexp.errors import DegenerateInterval, InsufficientHistory
from gridexp.scenario_gen import (
    Prng, ScenarioSpec, gen_point_forecast, gen_scenario_set,
    persistence_from_prior_day, prng_next_uniform, sample_truncated_normal,
)


def test_first_draw_matches_reference_vector():
    # splitmix64(seed=0) first output is 0xE220A8397B1DCDAF.
    assert prng_next_uniform(Prng(0)) == 0xE220A8397B1DCDAF * 2.0 ** -64


def test_identical_seeds_identical_streams():
    a, b = Prng(424242), Prng(424242)
    assert [a.next_uniform() for _ in range(1000)] == \
           [b.next_uniform() for _ in range(1000)]


def test_uniform_sample_mean():
    prng = Prng(2024)
    n = 10 ** 6
    total = 0.0
    for _ in range(n):
        total += prng.next_uniform()
    assert 0.499 <= total / n <= 0.501


def test_truncated_normal_degenerate_sd():
    assert sample_truncated_normal(Prng(1), 1.0, 0.0, 0.0, 2.0) == 1.0


def test_truncated_normal_respects_bounds():
    prng = Prng(7)
    for _ in range(5000):
        x = sample_truncated_normal(prng, 1.0, 0.5, 0.0, 2.0)
        assert 0.0 <= x <= 2.0


def test_truncated_normal_degenerate_interval():
    with pytest.raises(DegenerateInterval):
        sample_truncated_normal(Prng(1), 1.0, 0.3, 2.0, 2.0)


def test_scenario_set_probabilities():
    point = TimeSeries(0, 3600, [10.0] * 4, provenance="forecast:w")
    fs = gen_scenario_set(Prng(3), point, ScenarioSpec(100, 0.3))
    assert len(fs.scenarios) == 100
    assert all(p == 0.01 for p in fs.probabilities)
    assert abs(sum(fs.probabilities) - 1.0) <= 1e-12


def test_scenario_probability_sums_across_sizes():
    point = TimeSeries(0, 3600, [5.0], provenance="forecast:w")
    for n in range(1, 1001, 37):
        fs = gen_scenario_set(Prng(n), point, ScenarioSpec(n, 0.0))
        assert abs(sum(fs.probabilities) - 1.0) <= 1e-12


def test_scenario_zero_sd_copies_point():
    point = TimeSeries(0, 3600, [3.0, 7.0], provenance="forecast:w")
    fs = gen_scenario_set(Prng(3), point, ScenarioSpec(5, 0.0))
    for s in fs.scenarios:
        assert np.array_equal(s.values, point.values)


def test_scenario_zero_forecast_stays_zero():
    point = TimeSeries(0, 3600, [4.0, 0.0, 2.0], provenance="forecast:w")
    fs = gen_scenario_set(Prng(3), point, ScenarioSpec(20, 0.5))
    for s in fs.scenarios:
        assert s.values[1] == 0.0


def test_scenario_values_within_truncation():
    point = TimeSeries(0, 3600, [10.0, 20.0], provenance="forecast:w")
    spec = ScenarioSpec(50, 0.4, truncation=(0.0, 2.0))
    fs = gen_scenario_set(Prng(11), point, spec)
    for s in fs.scenarios:
        assert np.all(s.values >= 0.0)
        assert np.all(s.values <= 2.0 * point.values + 1e-12)


def test_scenario_generation_pure_function():
    point = TimeSeries(0, 3600, [10.0] * 6, provenance="forecast:w")
    spec = ScenarioSpec(10, 0.3)
    a = gen_scenario_set(Prng(55), point, spec)
    b = gen_scenario_set(Prng(55), point, spec)
    for sa, sb in zip(a.scenarios, b.scenarios):
        assert np.array_equal(sa.values, sb.values)


def test_point_forecast_persistence_of_constant():
    real = TimeSeries(0, 300, np.full(2 * 24 * 12, 100.0), provenance="realization:l")
    fc = gen_point_forecast(real)
    assert np.allclose(fc.values, 100.0)
    assert len(fc) == 24
    assert fc.provenance.startswith("forecast")


def test_point_forecast_shifts_one_day():
    vals = np.concatenate([np.full(24 * 12, 50.0), np.full(24 * 12, 80.0)])
    real = TimeSeries(0, 300, vals, provenance="realization:l")
    fc = gen_point_forecast(real)
    # Oracle: forecast for day 2 is day 1's hourly means, all 50.
    assert np.allclose(fc.values, 50.0)


def test_point_forecast_uses_hourly_means():
    # 5-minute sawtooth within each hour; hourly mean is the oracle.
    base = np.arange(12, dtype=float)
    day1 = np.concatenate([base + 10 * h for h in range(24)])
    day2 = np.zeros(24 * 12)
    real = TimeSeries(0, 300, np.concatenate([day1, day2]),
                      provenance="realization:l")
    fc = gen_point_forecast(real)
    expected = np.array([base.mean() + 10 * h for h in range(24)])
    assert np.allclose(fc.values, expected)


def test_point_forecast_insufficient_history():
    real = TimeSeries(0, 300, np.full(24 * 12, 1.0), provenance="realization:l")
    with pytest.raises(InsufficientHistory):
        gen_point_forecast(real)


def test_persistence_tiles_beyond_one_day():
    prior = TimeSeries(0, 3600, np.arange(24, dtype=float), provenance="history:l")
    fc = persistence_from_prior_day(prior, 36, start=24 * 3600)
    assert len(fc) == 36
    assert np.array_equal(fc.values[24:], np.arange(12, dtype=float))
