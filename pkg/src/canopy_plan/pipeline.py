"""End-to-end scenario stages: ingest, backtest, forecast, detect-area,
recommend, plan, offset, and the combined report.

Each stage returns a JSON-ready section plus its CSV artifacts.  The report
is exactly the union of the stage sections, so running stages one by one
and joining their JSON gives the same content.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from typing import Any, Callable

from .config import ScenarioConfig
from .detection import area_csv, image_level_metrics, load_regions
from .emissions import parse_emissions_table, series_to_csv
from .errors import ConfigError
from .forecast import (
    OptimizerConfig,
    backtest,
    fit_params,
    hw_forecast,
    negative_forecast_warnings,
)
from .gateway import TextGateway, generate_via_gateway
from .offset import crossover_year, first_sequestration_year, project_offset, projection_csv
from .planner import LaborPolicy, growth_timeline, plan_csv, plan_for_area, timeline_csv
from .species import (
    find_profile,
    load_kb,
    load_profiles,
    match_profiles,
    recommend_species,
)

STAGES = ("ingest", "backtest", "forecast", "detect-area", "recommend", "plan", "offset")
SIG_DIGITS = 6


def round_floats(obj: Any) -> Any:
    """Round every float to six significant digits for stable serialisation."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(format(obj, f".{SIG_DIGITS}g"))
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(round_floats(obj), indent=2, ensure_ascii=False) + "\n"


def _pairs_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v:.6g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()


class Scenario:
    """Lazily computed stage results for one configuration."""

    def __init__(self, config: ScenarioConfig, gateway: TextGateway | None = None):
        self.config = config
        self.gateway = gateway

    @property
    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(grid_steps=self.config.grid_steps,
                               seasonal_period=self.config.seasonal_period)

    @cached_property
    def dataset(self):
        text = self.config.emissions_path.read_text(encoding="utf-8")
        return parse_emissions_table(text)

    @cached_property
    def series(self):
        return self.dataset[self.config.sector]

    @cached_property
    def backtests(self):
        sectors = self.config.backtest_sectors or (self.config.sector,)
        series = [self.dataset[s] for s in sectors]
        with ThreadPoolExecutor() as pool:
            reports = list(pool.map(
                lambda s: backtest(s, self.config.holdout, self.optimizer), series))
        return reports

    @cached_property
    def fitted(self):
        params, state, sse = fit_params(self.series, self.optimizer)
        return params, sse, hw_forecast(state, self.config.horizon)

    @cached_property
    def regions(self):
        return load_regions(self.config.labels_dir,
                            self.config.manifest_path.read_text(encoding="utf-8"))

    @cached_property
    def area_km2(self) -> float:
        return math.fsum(self.regions.image_areas(self.config.merge_overlaps).values())

    @cached_property
    def kb(self):
        return load_kb(self.config.kb_dir)

    @cached_property
    def recommendation(self):
        return recommend_species(self.config.key, self.kb)

    @cached_property
    def profiles(self):
        return load_profiles(self.config.species_csv.read_text(encoding="utf-8"))

    @cached_property
    def plan(self):
        chosen = match_profiles(self.recommendation, self.profiles)
        return plan_for_area(self.area_km2, chosen, self.config.allocation_map,
                             LaborPolicy(self.config.trees_per_worker))

    # -- stage sections ------------------------------------------------------

    def ingest(self):
        ds = self.dataset
        section = {
            "source_note": ds.source_note,
            "sectors": {
                name: {"first_year": s.first_year, "last_year": s.last_year,
                       "observations": len(s)}
                for name, s in ds.series.items()
            },
        }
        artifacts = {f"emissions_{name}.csv": series_to_csv(s) for name, s in ds.series.items()}
        return section, artifacts

    def backtest(self):
        reports = self.backtests
        section = {
            "holdout": self.config.holdout,
            "sectors": {r.sector: r.as_dict() for r in reports},
            "table": [
                {"sector": r.sector,
                 "error_rate_pct": r.error_rate * 100,
                 "error_stddev_t": r.error_stddev_abs,
                 "error_stddev_pct_of_mean_actual": r.error_stddev_relative * 100}
                for r in reports
            ],
        }
        artifacts = {
            f"backtest_{r.sector}.csv": _pairs_csv(
                ["year", "actual", "predicted"],
                [(y, a, p) for (y, a), (_, p) in zip(r.actual, r.predicted)])
            for r in reports
        }
        return section, artifacts

    def forecast(self):
        params, sse, path = self.fitted
        section = {
            "sector": self.series.sector,
            "params": params.as_dict(),
            "sse": sse,
            "history": [{"year": y, "actual_t": v} for y, v in self.series.items()],
            "forecast": [{"year": y, "forecast_t": v} for y, v in path],
            "warnings": negative_forecast_warnings(path),
        }
        rows = [(y, v, "") for y, v in self.series.items()] + [(y, "", v) for y, v in path]
        artifacts = {"forecast.csv": _pairs_csv(["year", "actual", "predicted"], rows)}
        return section, artifacts

    def detect_area(self):
        regions = self.regions
        merge = self.config.merge_overlaps
        section = {
            "merge_overlaps": merge,
            "images": {k: {"boxes": len(regions.boxes.get(k, [])), "area_km2": v}
                       for k, v in regions.image_areas(merge).items()},
            "total_area_km2": self.area_km2,
            "clamped_boxes": regions.clamped_count,
        }
        if self.config.truth_positive_images is not None:
            metrics = image_level_metrics(regions.positive_images(),
                                          set(self.config.truth_positive_images),
                                          set(regions.metas))
            section["metrics"] = metrics.as_dict()
        return section, {"areas.csv": area_csv(regions, merge)}

    def recommend(self):
        rec = self.recommendation
        result = generate_via_gateway(rec, self.kb[rec.source_chunk_id], self.gateway)
        section = rec.as_dict()
        section.update(generated=result.generated, text=result.text)
        if result.warning:
            section["warning"] = result.warning
        return section, {"recommendation.txt": result.text}

    def plan_stage(self):
        return self.plan.as_dict(), {"plan.csv": plan_csv(self.plan)}

    def offset(self):
        params, sse, path = self.fitted
        if not path:
            raise ConfigError("empty forecast", "horizon")
        plant_year = self.config.plant_year
        if plant_year < path[0][0] - 50:
            raise ConfigError(f"plant_year {plant_year} is implausibly early", "plant_year")
        names = self.config.offset_species or (self.plan.entries[0].species,)
        horizon = max(1, path[-1][0] - plant_year + 1)
        timelines = []
        for name in names:
            profile = find_profile(name, self.profiles)
            trees = self.plan[profile.label].tree_count
            timelines.append(growth_timeline(profile, trees, plant_year, horizon))
        projection = project_offset(path, timelines)
        section = {
            "sector": self.series.sector,
            "plant_year": plant_year,
            "timelines": [t.as_dict() for t in timelines],
            "projection": projection.as_dict(),
            "first_sequestration_year": first_sequestration_year(projection),
            "crossover_year": crossover_year(projection),
        }
        artifacts = {"projection.csv": projection_csv(projection)}
        for i, t in enumerate(timelines):
            artifacts[f"timeline_{i}.csv"] = timeline_csv(t)
        return section, artifacts

    def run_stage(self, name: str):
        handlers: dict[str, Callable] = {
            "ingest": self.ingest,
            "backtest": self.backtest,
            "forecast": self.forecast,
            "detect-area": self.detect_area,
            "recommend": self.recommend,
            "plan": self.plan_stage,
            "offset": self.offset,
        }
        return handlers[name]()

    def report(self):
        summary, artifacts = {}, {}
        for name in STAGES:
            section, files = self.run_stage(name)
            summary[name] = section
            artifacts.update(files)
        return summary, artifacts
