#!/usr/bin/env python3
"""Generate the annual load and wind profiles shipped with the 5-bus case.

Both series are synthetic, normalized to [0, 1], hourly for 365 days, and
fully determined by the seeds below; the committed CSVs in
cases/case5/timeseries/ are the verbatim output of this script. Load
combines seasonal, weekly, and double-peak diurnal structure; wind follows
multi-day weather systems with a mild diurnal component, deliberately
volatile day over day so persistence forecasts carry realistic error.

Usage: python tools/make_case5_profiles.py [out_dir]
"""

import csv
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gridexp.scenario_gen import Prng, sample_normal  # noqa: E402

HOURS = 365 * 24
LOAD_SEED = 20240501
WIND_SEED = 20240502


def make_load() -> list[float]:
    prng = Prng(LOAD_SEED)
    vals = []
    for h in range(HOURS):
        day = h // 24
        hod = h % 24
        dow = day % 7
        # Two seasonal peaks (winter + summer), normalized around 1.
        season = 1.0 + 0.16 * math.cos(2 * math.pi * (day - 15) / 365) \
            + 0.10 * math.cos(4 * math.pi * (day - 15) / 365)
        # Morning and evening peaks.
        diurnal = (0.72
                   + 0.16 * math.exp(-((hod - 8.5) ** 2) / 8.0)
                   + 0.24 * math.exp(-((hod - 18.5) ** 2) / 10.0))
        weekly = 1.0 if dow < 5 else 0.93
        noise = 1.0 + 0.015 * sample_normal(prng, 0.0, 1.0)
        vals.append(max(season * diurnal * weekly * noise, 0.05))
    peak = max(vals)
    return [v / peak for v in vals]


def make_wind() -> list[float]:
    prng = Prng(WIND_SEED)
    # Weather systems: sum of slow sinusoids with seeded phases plus an
    # AR(1) walk, squashed into capacity-factor range.
    phases = [prng.next_uniform() * 2 * math.pi for _ in range(4)]
    periods_h = [55.0, 113.0, 247.0, 17.0]
    amps = [0.9, 0.7, 0.5, 0.25]
    walk = 0.0
    vals = []
    for h in range(HOURS):
        systems = sum(a * math.sin(2 * math.pi * h / p + ph)
                      for a, p, ph in zip(amps, periods_h, phases))
        walk = 0.985 * walk + sample_normal(prng, 0.0, 0.12)
        hod = h % 24
        diurnal = 0.12 * math.sin(2 * math.pi * (hod - 14) / 24)
        raw = 0.05 + systems * 0.35 + walk + diurnal
        cf = 1.0 / (1.0 + math.exp(-1.4 * raw))  # squash to (0, 1)
        vals.append(min(max(cf, 0.0), 1.0))
    return vals


def write_series(path: Path, values: list[float]) -> None:
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "value"])
        for h, v in enumerate(values):
            w.writerow([h * 3600, repr(round(v, 6))])


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else \
        Path(__file__).resolve().parents[1] / "cases" / "case5" / "timeseries"
    out.mkdir(parents=True, exist_ok=True)
    write_series(out / "load_profile.csv", make_load())
    write_series(out / "wind_profile.csv", make_wind())
    print(f"wrote profiles to {out}")


if __name__ == "__main__":
    main()
