"""Net sector emissions after tree sequestration, year by year."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ArgumentError
from .planner import GrowthTimeline

KG_PER_TONNE = 1000.0


@dataclass(frozen=True)
class OffsetRow:
    year: int
    forecast_t: float
    o2_t: float
    co2_seq_t: float
    yield_t: float
    net_t: float
    offset_fraction: float | None  # None when the forecast is not positive

    def as_dict(self) -> dict:
        return {
            "year": self.year, "forecast_t": self.forecast_t, "o2_t": self.o2_t,
            "co2_seq_t": self.co2_seq_t, "yield_t": self.yield_t, "net_t": self.net_t,
            "offset_fraction": self.offset_fraction,
        }


@dataclass(frozen=True)
class OffsetProjection:
    rows: tuple[OffsetRow, ...]

    @property
    def undefined_years(self) -> list[int]:
        return [r.year for r in self.rows if r.offset_fraction is None]

    def as_dict(self) -> dict:
        return {"rows": [r.as_dict() for r in self.rows],
                "undefined_fraction_years": self.undefined_years}


def _unique_years(years: Sequence[int], what: str) -> None:
    seen = set()
    for y in years:
        if y in seen:
            raise ArgumentError(f"duplicate year {y} in {what}")
        seen.add(y)


def project_offset(
    forecast: Sequence[tuple[int, float]], timelines: Sequence[GrowthTimeline] = ()
) -> OffsetProjection:
    """Join a sector forecast (tonnes) with sequestration timelines (kg).

    Rows follow the forecast years; timeline years outside them are dropped
    and forecast years without timeline rows sequester nothing.  O2 is
    reported but never netted against CO2.
    """
    _unique_years([y for y, _ in forecast], "forecast")
    o2, co2, crop = {}, {}, {}
    for tl in timelines:
        _unique_years([r.year for r in tl.rows], f"timeline {tl.species!r}")
        for r in tl.rows:
            o2.setdefault(r.year, []).append(r.o2_kg)
            co2.setdefault(r.year, []).append(r.co2_kg)
            crop.setdefault(r.year, []).append(r.yield_kg)

    rows = []
    for year, emitted in forecast:
        emitted = float(emitted)
        seq = math.fsum(co2.get(year, ())) / KG_PER_TONNE
        rows.append(OffsetRow(
            year=year,
            forecast_t=emitted,
            o2_t=math.fsum(o2.get(year, ())) / KG_PER_TONNE,
            co2_seq_t=seq,
            yield_t=math.fsum(crop.get(year, ())) / KG_PER_TONNE,
            net_t=emitted - seq,
            offset_fraction=seq / emitted if emitted > 0 else None,
        ))
    return OffsetProjection(tuple(rows))


def crossover_year(projection: OffsetProjection) -> int | None:
    """First year in which sequestration meets or exceeds the forecast."""
    for r in projection.rows:
        if r.offset_fraction is not None and r.offset_fraction >= 1.0:
            return r.year
    return None


def first_sequestration_year(projection: OffsetProjection) -> int | None:
    return next((r.year for r in projection.rows if r.co2_seq_t > 0), None)


def projection_csv(projection: OffsetProjection) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["year", "forecast_t", "o2_t", "co2_seq_t", "yield_t", "net_t", "offset_fraction"])
    for r in projection.rows:
        frac = "" if r.offset_fraction is None else f"{r.offset_fraction:.6g}"
        writer.writerow([r.year, f"{r.forecast_t:.6g}", f"{r.o2_t:.6g}", f"{r.co2_seq_t:.6g}",
                         f"{r.yield_t:.6g}", f"{r.net_t:.6g}", frac])
    return buf.getvalue()
