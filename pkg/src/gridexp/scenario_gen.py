"""Seeded generation of confounding forecast data.

All randomness in the package flows through Prng, a splitmix64 stream: tiny,
published, and reimplementable in any language from its test vectors, so a
trial is a pure function of its seed. Each trial owns a private Prng derived
from its trial seed; generators are never shared between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data_model import ForecastSet, TimeSeries
from .errors import DegenerateInterval, InsufficientHistory

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new_state, output)."""
    state = (state + _GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return state, z ^ (z >> 31)


@dataclass
class Prng:
    """Deterministic 64-bit generator; identical seeds give identical streams."""
    state: int

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state, out = splitmix64(self.state)
        return out

    def next_uniform(self) -> float:
        """Uniform in [0, 1): the next 64-bit output scaled by 2^-64."""
        return self.next_u64() * 2.0 ** -64


def prng_next_uniform(prng: Prng) -> float:
    return prng.next_uniform()


def sample_normal(prng: Prng, mean: float, sd: float) -> float:
    """One normal draw via Box-Muller (cosine branch, two uniforms per draw)."""
    u1 = prng.next_uniform()
    u2 = prng.next_uniform()
    # 1-u1 lies in (0, 1], keeping the log argument positive.
    r = math.sqrt(-2.0 * math.log(1.0 - u1))
    return mean + sd * r * math.cos(2.0 * math.pi * u2)


def sample_truncated_normal(prng: Prng, mean: float, sd: float, lo: float, hi: float) -> float:
    """Normal(mean, sd) conditioned on [lo, hi] by rejection.

    sd == 0 collapses to the mean (clamped into the interval so the rejection
    loop cannot spin forever on a degenerate request).
    """
    if lo >= hi:
        raise DegenerateInterval(f"truncation interval [{lo}, {hi}] is empty")
    if sd < 0:
        raise ValueError("sd must be >= 0")
    if sd == 0:
        return min(max(mean, lo), hi)
    while True:
        x = sample_normal(prng, mean, sd)
        if lo <= x <= hi:
            return x


@dataclass(frozen=True)
class ScenarioSpec:
    """How to spread scenarios around a point forecast."""
    n_scenarios: int
    relative_sd: float                     # sd = relative_sd * point value
    truncation: tuple[float, float] = (0.0, 2.0)  # multipliers of the point value

    def __post_init__(self):
        if self.n_scenarios < 1:
            raise ValueError("n_scenarios must be >= 1")
        if self.relative_sd < 0:
            raise ValueError("relative_sd must be >= 0")
        lo, hi = self.truncation
        if lo < 0 or lo >= hi:
            raise ValueError(f"truncation multipliers need 0 <= lo < hi, got [{lo}, {hi}]")


def gen_scenario_set(prng: Prng, point_forecast: TimeSeries, spec: ScenarioSpec) -> ForecastSet:
    """Draw N equiprobable scenarios around a point forecast.

    Each timestep is drawn independently from a truncated normal centred on
    the point value, with sd and bounds scaled by that value; zero-forecast
    steps stay exactly zero in every scenario. Draw order is scenario-major
    so the stream layout is part of the reproducibility contract.
    """
    lo_mult, hi_mult = spec.truncation
    scen_series = []
    for s in range(spec.n_scenarios):
        vals = np.empty(len(point_forecast))
        for t, f_t in enumerate(point_forecast.values):
            if f_t == 0.0:
                vals[t] = 0.0
            elif spec.relative_sd == 0.0:
                vals[t] = f_t
            else:
                vals[t] = sample_truncated_normal(
                    prng, f_t, spec.relative_sd * f_t, lo_mult * f_t, hi_mult * f_t)
        scen_series.append(TimeSeries(
            start=point_forecast.start,
            resolution=point_forecast.resolution,
            values=vals,
            provenance=f"forecast:scenario{s}:{point_forecast.provenance}",
        ))
    prob = 1.0 / spec.n_scenarios
    return ForecastSet(
        owner=point_forecast.provenance,
        horizon_h=len(point_forecast) * point_forecast.resolution // 3600,
        scenarios=tuple(scen_series),
        probabilities=tuple(prob for _ in range(spec.n_scenarios)),
    )


def hourly_means(ts: TimeSeries) -> np.ndarray:
    """Mean MW per whole hour of the series (length must be whole hours)."""
    per_hour = 3600 // ts.resolution
    if 3600 % ts.resolution != 0 or len(ts) % per_hour != 0:
        raise ValueError("series must cover whole hours at an hour-dividing resolution")
    return ts.values.reshape(-1, per_hour).mean(axis=1)


def persistence_from_prior_day(prior_day: TimeSeries, horizon_h: int, start: int,
                               label: str = "") -> TimeSeries:
    """Tile the prior day's hourly means across the forecast horizon.

    This is the day-ahead persistence forecast: only information from before
    the decision time enters, so the output can never alias the simulated
    window's realization values. Horizons beyond 24 h repeat the daily shape.
    """
    means = hourly_means(prior_day)
    if len(means) != 24:
        raise InsufficientHistory(f"prior day must cover 24 h, got {len(means)}")
    reps = -(-horizon_h // 24)  # ceil
    vals = np.tile(means, reps)[:horizon_h]
    return TimeSeries(start=start, resolution=3600, values=vals,
                      provenance=f"forecast:persistence24h:{label}")


def gen_point_forecast(realization: TimeSeries, method: str = "persistence_24h") -> TimeSeries:
    """Day-ahead persistence forecast over a multi-day realization window.

    Forecast hour h of day d equals the hourly mean of the realization at
    hour h of day d-1; the output therefore starts one day after the input
    and is one day shorter. A single day of input has no prior day to shift
    from and raises InsufficientHistory.
    """
    if method != "persistence_24h":
        raise ValueError(f"unknown forecast method '{method}'")
    per_hour = 3600 // realization.resolution
    if 3600 % realization.resolution != 0 or len(realization) % (24 * per_hour) != 0:
        raise ValueError("realization must cover whole days")
    n_days = len(realization) // (24 * per_hour)
    if n_days < 2:
        raise InsufficientHistory("need at least one prior day of realization data")
    means = hourly_means(realization)  # one value per hour, n_days * 24 long
    shifted = means[: (n_days - 1) * 24]
    return TimeSeries(
        start=realization.start + 24 * 3600,
        resolution=3600,
        values=shifted.copy(),
        provenance=f"forecast:persistence24h:{realization.provenance}",
    )
