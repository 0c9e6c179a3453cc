"""Tree counts, labor force and per-year growth timelines for a planting area."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import ArgumentError
from .species import SpeciesProfile

M2_PER_KM2 = 1_000_000
# km² -> m² results are snapped to this many decimals so pixel-scale float
# noise (0.09 km² -> 90000.00000000001 m²) cannot move an integer floor.
AREA_DECIMALS = 6


@dataclass(frozen=True)
class LaborPolicy:
    """Trees one worker plants over a planting campaign."""

    trees_per_worker: int = 50
    campaign_note: str = "three-month season"

    def __post_init__(self):
        if not isinstance(self.trees_per_worker, int) or self.trees_per_worker < 1:
            raise ArgumentError("trees_per_worker must be a positive integer")


def km2_to_m2(area_km2: float) -> float:
    return round(area_km2 * M2_PER_KM2, AREA_DECIMALS)


def _exact(x: float) -> Fraction:
    # floats are read as the decimal they print as, so 0.3 / 0.1 is exactly 3
    return Fraction(repr(float(x)))


def tree_count(area_m2: float, spacing_m2: float) -> int:
    """Whole trees that fit: floor(area / spacing), computed exactly."""
    if not spacing_m2 > 0:
        raise ArgumentError(f"spacing must be positive, got {spacing_m2!r}")
    if not (area_m2 >= 0 and math.isfinite(area_m2) and math.isfinite(spacing_m2)):
        raise ArgumentError(f"area must be finite and non-negative, got {area_m2!r}")
    return math.floor(_exact(area_m2) / _exact(spacing_m2))


def labor_force(trees: int, policy: LaborPolicy | None = None) -> int:
    policy = policy or LaborPolicy()
    if trees < 0:
        raise ArgumentError("tree count must be non-negative")
    return trees // policy.trees_per_worker


@dataclass(frozen=True)
class PlanEntry:
    species: str
    area_m2: float
    tree_count: int
    labor: int
    spacing_m2: float

    def as_dict(self) -> dict:
        return {
            "tree_type": self.species,
            "number_of_trees": self.tree_count,
            "labor_force": self.labor,
            "space_needed_per_tree_m2": self.spacing_m2,
            "area_m2": self.area_m2,
        }


@dataclass(frozen=True)
class PlantingPlan:
    """Per-species plan.

    In ``whole-area`` mode each entry is an alternative using the full area,
    so entry areas are not additive; in ``fractional`` mode they partition
    (part of) the area.
    """

    total_area_m2: float
    mode: str
    entries: tuple[PlanEntry, ...]
    policy: LaborPolicy

    def __getitem__(self, species: str) -> PlanEntry:
        for e in self.entries:
            if e.species == species:
                return e
        raise KeyError(species)

    def as_dict(self) -> dict:
        return {
            "total_area_m2": self.total_area_m2,
            "mode": self.mode,
            "trees_per_worker": self.policy.trees_per_worker,
            "rows": [e.as_dict() for e in self.entries],
        }


def plan_for_area(
    total_area_km2: float,
    species: Sequence[SpeciesProfile],
    allocation: Mapping[str, float] | None = None,
    policy: LaborPolicy | None = None,
) -> PlantingPlan:
    """Plan planting for ``species`` over an area.

    Without ``allocation`` every species is sized against the whole area.
    With it, ``allocation`` maps a species label (or name/alias) to its
    fraction of the area; fractions must sum to at most 1.
    """
    policy = policy or LaborPolicy()
    if not total_area_km2 >= 0:
        raise ArgumentError(f"area must be non-negative, got {total_area_km2!r}")
    total_m2 = km2_to_m2(total_area_km2)

    if allocation is None:
        shares = [(p, None) for p in species]
        mode = "whole-area"
    else:
        remaining = dict(allocation)
        shares = []
        for p in species:
            key = next((k for k in remaining if k.casefold() in p.names()), None)
            if key is not None:
                shares.append((p, float(remaining.pop(key))))
        if remaining:
            raise ArgumentError(f"allocation names unknown species: {sorted(remaining)}")
        fractions = [f for _, f in shares]
        if any(not 0.0 <= f <= 1.0 for f in fractions):
            raise ArgumentError("allocation fractions must lie in [0, 1]")
        if math.fsum(fractions) > 1.0 + 1e-9:
            raise ArgumentError(f"allocation fractions sum to {math.fsum(fractions):.6g} > 1")
        mode = "fractional"

    entries = []
    for profile, fraction in shares:
        area = total_m2 if fraction is None else round(total_m2 * fraction, AREA_DECIMALS)
        trees = tree_count(area, profile.spacing_m2)
        entries.append(PlanEntry(profile.label, area, trees, labor_force(trees, policy),
                                 profile.spacing_m2))
    return PlantingPlan(total_m2, mode, tuple(entries), policy)


def plan_csv(plan: PlantingPlan) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["tree_type", "number_of_trees", "labor_force", "space_needed_per_tree_m2", "area_m2"])
    for e in plan.entries:
        writer.writerow([e.species, e.tree_count, e.labor, f"{e.spacing_m2:g}", f"{e.area_m2:.6f}"])
    return buf.getvalue()


@dataclass(frozen=True)
class TimelineRow:
    year: int
    stage: str | None
    o2_kg: float
    co2_kg: float
    yield_kg: float


@dataclass(frozen=True)
class GrowthTimeline:
    species: str
    plant_year: int
    tree_count: int
    rows: tuple[TimelineRow, ...]

    def as_dict(self) -> dict:
        return {
            "species": self.species,
            "plant_year": self.plant_year,
            "tree_count": self.tree_count,
            "rows": [
                {"year": r.year, "stage": r.stage, "o2_kg": r.o2_kg,
                 "co2_kg": r.co2_kg, "yield_kg": r.yield_kg}
                for r in self.rows
            ],
        }


def growth_timeline(
    profile: SpeciesProfile, trees: int, plant_year: int, horizon_years: int
) -> GrowthTimeline:
    """Yearly O2, CO2 and yield of ``trees`` trees planted in ``plant_year``.

    Rates are per tree per year of the stage covering the tree's age; trees
    younger than five years produce nothing.
    """
    if horizon_years < 1:
        raise ArgumentError("horizon must be at least 1 year")
    if trees < 0:
        raise ArgumentError("tree count must be non-negative")
    rows = []
    for year in range(plant_year, plant_year + horizon_years):
        stage = profile.stage_at(year - plant_year)
        if stage is None:
            rows.append(TimelineRow(year, None, 0.0, 0.0, 0.0))
        else:
            rows.append(TimelineRow(year, stage.stage, stage.o2_kg * trees,
                                    stage.co2_kg * trees, stage.yield_kg * trees))
    return GrowthTimeline(profile.label, plant_year, trees, tuple(rows))


def timeline_csv(timeline: GrowthTimeline) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["year", "stage", "o2_kg", "co2_kg", "yield_kg"])
    for r in timeline.rows:
        writer.writerow([r.year, r.stage or "pre-productive",
                         f"{r.o2_kg:.6g}", f"{r.co2_kg:.6g}", f"{r.yield_kg:.6g}"])
    return buf.getvalue()
