"""Analytical data model: grid topology, devices, and time series.

Raw inputs are a JSON system file and two-column CSV time series (grammar
documented in the README). Parsing is total: every field is either read or
defaulted, and the result always passes validate_system before it is
returned. All types are immutable after construction so they can be shared
read-only across parallel case executions.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import (
    EmptySeries,
    ForecastLeakage,
    MalformedFile,
    NegativeValue,
    NonDivisibleResolution,
    NonUniformSpacing,
    ReferentialIntegrity,
)

# Documented defaults for optional generator fields (power-flow-origin data
# sets usually lack commitment fields).
DEFAULT_STARTUP_COST = 0.0
DEFAULT_NO_LOAD_COST = 0.0
DEFAULT_MIN_UP = 1
DEFAULT_MIN_DOWN = 1


@dataclass(frozen=True)
class Bus:
    id: str
    reference_flag: bool = False


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    susceptance: float  # per unit on system base
    flow_limit: float   # MW


@dataclass(frozen=True)
class ThermalGen:
    id: str
    bus: str
    p_min: float
    p_max: float
    ramp_up: float      # MW per hour
    ramp_down: float    # MW per hour
    min_up: int         # hours
    min_down: int       # hours
    startup_cost: float
    no_load_cost: float # $ per committed hour
    # Ordered (upper breakpoint MW, marginal cost $/MWh) pairs. Segment k
    # spans [breakpoint[k-1], breakpoint[k]] with the implicit first lower
    # edge at p_min; the final breakpoint equals p_max. Output below p_min
    # is priced at the first segment's marginal cost (committed units always
    # run at >= p_min, so the curve is continuous from zero).
    cost_curve: tuple[tuple[float, float], ...]

    def segment_widths(self) -> list[float]:
        widths = []
        prev = self.p_min
        for bp, _ in self.cost_curve:
            widths.append(bp - prev)
            prev = bp
        return widths


@dataclass(frozen=True)
class RenewableGen:
    id: str
    bus: str
    installed_capacity: float  # MW
    profile: str = ""          # normalized series name in the timeseries dir


@dataclass(frozen=True)
class Load:
    id: str
    bus: str
    peak: float      # MW
    profile: str = ""  # normalized series name, values in [0, 1]


@dataclass(frozen=True)
class System:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    thermal_gens: tuple[ThermalGen, ...]
    renewable_gens: tuple[RenewableGen, ...]
    loads: tuple[Load, ...]
    base_power: float = 100.0  # MVA

    def bus_ids(self) -> list[str]:
        return [b.id for b in self.buses]

    def reference_bus(self) -> str:
        for b in self.buses:
            if b.reference_flag:
                return b.id
        raise ReferentialIntegrity("system has no reference bus")


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly spaced series of MW values.

    ``start`` is an abstract tick in seconds (calendar semantics are out of
    model); ``provenance`` records how the series was constructed and is the
    hook for the forecast/realization isolation guard.
    """
    start: int
    resolution: int  # seconds
    values: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 1:
            raise MalformedFile("time series values must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise MalformedFile("time series contains non-finite values")

    def __len__(self) -> int:
        return len(self.values)

    def end(self) -> int:
        return self.start + len(self.values) * self.resolution

    def energy_mwh(self) -> float:
        return float(np.sum(self.values) * self.resolution / 3600.0)

    def slice(self, start_index: int, count: int) -> "TimeSeries":
        if start_index < 0 or start_index + count > len(self.values):
            raise IndexError(
                f"slice [{start_index}, {start_index + count}) outside series of length {len(self.values)}"
            )
        return TimeSeries(
            start=self.start + start_index * self.resolution,
            resolution=self.resolution,
            values=self.values[start_index:start_index + count].copy(),
            provenance=self.provenance,
        )

    def equals(self, other: "TimeSeries") -> bool:
        return (
            self.start == other.start
            and self.resolution == other.resolution
            and len(self.values) == len(other.values)
            and bool(np.array_equal(self.values, other.values))
        )


@dataclass(frozen=True)
class ForecastSet:
    """Forecast data for one device: a point series or weighted scenarios.

    Deliberately not interchangeable with RealizationSeries; decision-model
    builders accept only this type.
    """
    owner: str
    horizon_h: int
    point: TimeSeries | None = None
    scenarios: tuple[TimeSeries, ...] = ()
    probabilities: tuple[float, ...] = ()

    def __post_init__(self):
        if (self.point is None) == (len(self.scenarios) == 0):
            raise ValueError("ForecastSet needs exactly one of point or scenarios")
        if self.scenarios:
            if len(self.scenarios) != len(self.probabilities):
                raise ValueError("one probability per scenario required")
            if any(p <= 0 for p in self.probabilities):
                raise ValueError("scenario probabilities must be > 0")
            if abs(sum(self.probabilities) - 1.0) > 1e-12:
                raise ValueError("scenario probabilities must sum to 1 within 1e-12")
            res = {s.resolution for s in self.scenarios}
            starts = {s.start for s in self.scenarios}
            lengths = {len(s) for s in self.scenarios}
            if len(res) != 1 or len(starts) != 1 or len(lengths) != 1:
                raise ValueError("scenarios must share timestamps and resolution")
        for ts in self.all_series():
            if ts.provenance.startswith("realization"):
                raise ForecastLeakage(
                    f"series with provenance '{ts.provenance}' cannot enter a ForecastSet"
                )

    def all_series(self) -> tuple[TimeSeries, ...]:
        return (self.point,) + self.scenarios if self.point is not None else self.scenarios


@dataclass(frozen=True)
class RealizationSeries:
    """Emulator-side series. Distinct type from ForecastSet by design."""
    owner: str
    series: TimeSeries

    def __post_init__(self):
        if not self.series.provenance.startswith("realization"):
            raise ForecastLeakage(
                f"RealizationSeries requires realization provenance, got '{self.series.provenance}'"
            )


# -- parsing ----------------------------------------------------------------

_REQUIRED_TOP_KEYS = ("buses", "lines", "thermal_gens", "renewable_gens", "loads")


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise MalformedFile(f"{where}: missing field '{key}'")
    return obj[key]


def parse_system(path: str | Path, strict: bool = True) -> System:
    """Parse a system JSON file into a validated System.

    strict=False skips the final invariant check (referential integrity is
    always enforced) so callers can collect violations as data.
    """
    path = Path(path)
    if not path.exists():
        raise MalformedFile(f"system file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise MalformedFile(f"{path}: top level must be an object")
    for key in _REQUIRED_TOP_KEYS:
        if key not in raw:
            raise MalformedFile(f"{path}: missing top-level key '{key}'")

    buses = tuple(
        Bus(id=str(_need(b, "id", f"{path}:buses[{i}]")),
            reference_flag=bool(b.get("reference", False)))
        for i, b in enumerate(raw["buses"])
    )
    lines = tuple(
        Line(
            id=str(_need(l, "id", f"{path}:lines[{i}]")),
            from_bus=str(_need(l, "from_bus", f"{path}:lines[{i}]")),
            to_bus=str(_need(l, "to_bus", f"{path}:lines[{i}]")),
            susceptance=float(_need(l, "susceptance", f"{path}:lines[{i}]")),
            flow_limit=float(_need(l, "flow_limit", f"{path}:lines[{i}]")),
        )
        for i, l in enumerate(raw["lines"])
    )
    thermal = []
    for i, g in enumerate(raw["thermal_gens"]):
        where = f"{path}:thermal_gens[{i}]"
        p_max = float(_need(g, "p_max", where))
        curve = g.get("cost_curve")
        if curve is None:
            # Single-segment default from a plain marginal cost.
            mc = float(_need(g, "marginal_cost", where))
            curve = [[p_max, mc]]
        thermal.append(ThermalGen(
            id=str(_need(g, "id", where)),
            bus=str(_need(g, "bus", where)),
            p_min=float(_need(g, "p_min", where)),
            p_max=p_max,
            ramp_up=float(g.get("ramp_up", p_max)),
            ramp_down=float(g.get("ramp_down", p_max)),
            min_up=int(g.get("min_up", DEFAULT_MIN_UP)),
            min_down=int(g.get("min_down", DEFAULT_MIN_DOWN)),
            startup_cost=float(g.get("startup_cost", DEFAULT_STARTUP_COST)),
            no_load_cost=float(g.get("no_load_cost", DEFAULT_NO_LOAD_COST)),
            cost_curve=tuple((float(bp), float(mc)) for bp, mc in curve),
        ))
    renewable = tuple(
        RenewableGen(
            id=str(_need(g, "id", f"{path}:renewable_gens[{i}]")),
            bus=str(_need(g, "bus", f"{path}:renewable_gens[{i}]")),
            installed_capacity=float(_need(g, "installed_capacity", f"{path}:renewable_gens[{i}]")),
            profile=str(g.get("profile", "")),
        )
        for i, g in enumerate(raw["renewable_gens"])
    )
    loads = tuple(
        Load(
            id=str(_need(l, "id", f"{path}:loads[{i}]")),
            bus=str(_need(l, "bus", f"{path}:loads[{i}]")),
            peak=float(_need(l, "peak", f"{path}:loads[{i}]")),
            profile=str(l.get("profile", "")),
        )
        for i, l in enumerate(raw["loads"])
    )
    sys = System(
        buses=buses,
        lines=lines,
        thermal_gens=tuple(thermal),
        renewable_gens=renewable,
        loads=loads,
        base_power=float(raw.get("base_power", 100.0)),
    )
    _check_referential_integrity(sys)
    if strict:
        violations = validate_system(sys)
        if violations:
            raise MalformedFile(
                f"{path}: system fails validation: " + "; ".join(str(v) for v in violations)
            )
    return sys


def _check_referential_integrity(sys: System) -> None:
    known = set(sys.bus_ids())
    for line in sys.lines:
        for end in (line.from_bus, line.to_bus):
            if end not in known:
                raise ReferentialIntegrity(f"line '{line.id}' references unknown bus '{end}'")
    for dev in sys.thermal_gens + sys.renewable_gens + sys.loads:
        if dev.bus not in known:
            raise ReferentialIntegrity(f"device '{dev.id}' references unknown bus '{dev.bus}'")


def serialize_system(sys: System) -> str:
    """Inverse of parse_system: JSON text that re-parses field-for-field."""
    doc = {
        "base_power": sys.base_power,
        "buses": [{"id": b.id, "reference": b.reference_flag} for b in sys.buses],
        "lines": [
            {"id": l.id, "from_bus": l.from_bus, "to_bus": l.to_bus,
             "susceptance": l.susceptance, "flow_limit": l.flow_limit}
            for l in sys.lines
        ],
        "thermal_gens": [
            {"id": g.id, "bus": g.bus, "p_min": g.p_min, "p_max": g.p_max,
             "ramp_up": g.ramp_up, "ramp_down": g.ramp_down,
             "min_up": g.min_up, "min_down": g.min_down,
             "startup_cost": g.startup_cost, "no_load_cost": g.no_load_cost,
             "cost_curve": [[bp, mc] for bp, mc in g.cost_curve]}
            for g in sys.thermal_gens
        ],
        "renewable_gens": [
            {"id": g.id, "bus": g.bus, "installed_capacity": g.installed_capacity,
             "profile": g.profile}
            for g in sys.renewable_gens
        ],
        "loads": [
            {"id": l.id, "bus": l.bus, "peak": l.peak, "profile": l.profile}
            for l in sys.loads
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def _parse_timestamp(token: str, lineno: int, path: Path) -> float:
    token = token.strip()
    try:
        return float(int(token))
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(token).timestamp()
    except ValueError as exc:
        raise MalformedFile(
            f"{path}: line {lineno}: timestamp '{token}' is neither an integer tick nor ISO-8601"
        ) from exc


def parse_timeseries(path: str | Path, role: str = "") -> TimeSeries:
    """Parse a two-column CSV (header 'timestamp,value') into a TimeSeries.

    ``role`` of 'load' or 'wind' enforces non-negative values. Resolution is
    inferred from the first two timestamps and uniform spacing is verified
    across the whole file.
    """
    path = Path(path)
    if not path.exists():
        raise MalformedFile(f"time series file not found: {path}")
    stamps: list[float] = []
    values: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptySeries(f"{path}: empty file")
        if [h.strip().lower() for h in header[:2]] != ["timestamp", "value"]:
            raise MalformedFile(f"{path}: header must be 'timestamp,value'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise MalformedFile(f"{path}: line {lineno}: expected two columns")
            stamps.append(_parse_timestamp(row[0], lineno, path))
            try:
                values.append(float(row[1]))
            except ValueError as exc:
                raise MalformedFile(f"{path}: line {lineno}: bad value '{row[1]}'") from exc
    if not values:
        raise EmptySeries(f"{path}: no data rows")
    if len(values) >= 2:
        res = stamps[1] - stamps[0]
        if res <= 0:
            raise NonUniformSpacing(f"{path}: timestamps must be strictly increasing")
        for i in range(1, len(stamps)):
            if abs((stamps[i] - stamps[i - 1]) - res) > 1e-6:
                raise NonUniformSpacing(
                    f"{path}: spacing {stamps[i] - stamps[i - 1]:.0f}s at row {i + 1} != {res:.0f}s"
                )
        resolution = int(round(res))
    else:
        resolution = 3600
    if role in ("load", "wind"):
        for i, v in enumerate(values):
            if v < 0:
                raise NegativeValue(f"{path}: row {i + 2}: negative {role} value {v}")
    return TimeSeries(start=int(round(stamps[0])), resolution=resolution,
                      values=np.array(values), provenance=f"file:{path.name}")


def resample_stepwise(ts: TimeSeries, new_resolution: int) -> TimeSeries:
    """Stepwise-constant expansion to a finer resolution.

    Total energy is preserved exactly because every source value is repeated
    over sub-intervals that cover the original interval exactly.
    """
    if new_resolution == ts.resolution:
        return ts
    if new_resolution <= 0 or ts.resolution % new_resolution != 0:
        raise NonDivisibleResolution(
            f"{new_resolution}s does not divide source resolution {ts.resolution}s"
        )
    factor = ts.resolution // new_resolution
    return TimeSeries(
        start=ts.start,
        resolution=new_resolution,
        values=np.repeat(ts.values, factor),
        provenance=ts.provenance,
    )


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    device_id: str
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        msg = f"{self.device_id}: {self.rule}"
        return f"{msg} ({self.detail})" if self.detail else msg


def validate_system(sys: System) -> list[Violation]:
    """Check every type invariant; violations are data, not errors."""
    out: list[Violation] = []
    seen: set[str] = set()
    for dev_list in (sys.buses, sys.lines, sys.thermal_gens, sys.renewable_gens, sys.loads):
        for dev in dev_list:
            if dev.id in seen:
                out.append(Violation(dev.id, "unique ids", "duplicate id"))
            seen.add(dev.id)

    refs = [b.id for b in sys.buses if b.reference_flag]
    if len(refs) != 1:
        out.append(Violation("system", "single reference bus", f"found {len(refs)}"))

    known = set(sys.bus_ids())
    adjacency: dict[str, set[str]] = {b: set() for b in known}
    for line in sys.lines:
        if line.from_bus == line.to_bus:
            out.append(Violation(line.id, "from_bus≠to_bus"))
        if line.flow_limit <= 0:
            out.append(Violation(line.id, "flow_limit>0", f"got {line.flow_limit}"))
        if line.from_bus in known and line.to_bus in known:
            adjacency[line.from_bus].add(line.to_bus)
            adjacency[line.to_bus].add(line.from_bus)

    if known and len(known) > 1:
        start = sys.buses[0].id
        reached = {start}
        frontier = [start]
        while frontier:
            nxt = frontier.pop()
            for nb in adjacency[nxt]:
                if nb not in reached:
                    reached.add(nb)
                    frontier.append(nb)
        for missing in sorted(known - reached):
            out.append(Violation(missing, "connected network", "bus unreachable"))

    for g in sys.thermal_gens:
        if not (0 <= g.p_min <= g.p_max):
            out.append(Violation(g.id, "p_min≤p_max", f"p_min={g.p_min}, p_max={g.p_max}"))
        if g.ramp_up <= 0 or g.ramp_down <= 0:
            out.append(Violation(g.id, "ramp>0"))
        if g.min_up < 1 or g.min_down < 1:
            out.append(Violation(g.id, "min up/down ≥1 h"))
        if not g.cost_curve:
            out.append(Violation(g.id, "cost_curve nonempty"))
        else:
            bps = [bp for bp, _ in g.cost_curve]
            mcs = [mc for _, mc in g.cost_curve]
            if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
                out.append(Violation(g.id, "breakpoints strictly increasing"))
            if bps[0] < g.p_min - 1e-9 or abs(bps[-1] - g.p_max) > 1e-9:
                out.append(Violation(
                    g.id, "breakpoints span p_min..p_max",
                    f"first={bps[0]}, last={bps[-1]}"))
            if any(m2 < m1 - 1e-12 for m1, m2 in zip(mcs, mcs[1:])):
                out.append(Violation(g.id, "marginal costs non-decreasing"))
    for g in sys.renewable_gens:
        if g.installed_capacity <= 0:
            out.append(Violation(g.id, "installed_capacity>0"))
    for l in sys.loads:
        if l.peak <= 0:
            out.append(Violation(l.id, "peak>0"))
    return out
