"""Scenario configuration (YAML), validated before any stage runs."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError
from .species import SoilClimateKey

BUNDLED = "bundled"

_PATH_FIELDS = ("emissions_path", "labels_dir", "manifest_path", "kb_dir", "species_csv")
_REQUIRED = (*_PATH_FIELDS, "sector", "key")


def bundled_scenario_path() -> Path:
    return Path(str(resources.files("canopy_plan") / "data" / "scenario.yaml"))


@dataclass(frozen=True)
class ScenarioConfig:
    emissions_path: Path
    sector: str
    labels_dir: Path
    manifest_path: Path
    kb_dir: Path
    species_csv: Path
    key: SoilClimateKey
    holdout: int = 6
    horizon: int = 10
    grid_steps: int = 21
    seasonal_period: int | None = None
    backtest_sectors: tuple[str, ...] | None = None
    plant_year: int = 2025
    allocation: str | dict[str, float] = "whole-area"
    offset_species: tuple[str, ...] | None = None
    trees_per_worker: int = 50
    merge_overlaps: bool = False
    truth_positive_images: tuple[str, ...] | None = None
    output_dir: Path = field(default_factory=lambda: Path("canopy-out"))

    @property
    def allocation_map(self) -> dict[str, float] | None:
        return None if self.allocation == "whole-area" else dict(self.allocation)


def _int(raw: Mapping[str, Any], name: str, default, minimum: int | None = None, optional=False):
    value = raw.get(name, default)
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}", name)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be at least {minimum}, got {value}", name)
    return value


def _str_list(raw: Mapping[str, Any], name: str) -> tuple[str, ...] | None:
    value = raw.get(name)
    if value is None:
        return None
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ConfigError(f"{name} must be a list of strings", name)
    return tuple(value)


def parse_config(raw: Mapping[str, Any], base_dir: Path, overrides: Mapping[str, Any] | None = None) -> ScenarioConfig:
    """Validate a config mapping.

    Input paths resolve against ``base_dir`` (the config file's directory);
    ``output_dir`` resolves against the working directory.  ``overrides``
    replace top-level keys; ``None`` values are ignored.
    """
    if not isinstance(raw, Mapping):
        raise ConfigError("config must be a mapping", "config")
    raw = dict(raw)
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    for name in _REQUIRED:
        if raw.get(name) in (None, ""):
            raise ConfigError(f"missing required field {name!r}", name)

    paths = {}
    for name in _PATH_FIELDS:
        p = Path(raw[name])
        p = p if p.is_absolute() else base_dir / p
        if not p.exists():
            raise ConfigError(f"{name}: path does not exist: {p}", name)
        paths[name] = p

    key_raw = raw["key"]
    if not isinstance(key_raw, Mapping) or "humidity_mm" not in key_raw or "soil_type" not in key_raw:
        raise ConfigError("key needs humidity_mm and soil_type", "key")
    try:
        key = SoilClimateKey(float(key_raw["humidity_mm"]), str(key_raw["soil_type"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key: {exc}", "key") from None

    allocation = raw.get("allocation", "whole-area")
    if allocation != "whole-area":
        if not isinstance(allocation, Mapping) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in allocation.values()
        ):
            raise ConfigError("allocation must be 'whole-area' or a species -> fraction mapping",
                              "allocation")
        allocation = {str(k): float(v) for k, v in allocation.items()}

    merge = raw.get("merge_overlaps", False)
    if not isinstance(merge, bool):
        raise ConfigError("merge_overlaps must be true or false", "merge_overlaps")

    return ScenarioConfig(
        key=key,
        sector=str(raw["sector"]),
        holdout=_int(raw, "holdout", 6, 1),
        horizon=_int(raw, "horizon", 10, 1),
        grid_steps=_int(raw, "grid_steps", 21, 2),
        seasonal_period=_int(raw, "seasonal_period", None, 2, optional=True),
        backtest_sectors=_str_list(raw, "backtest_sectors"),
        plant_year=_int(raw, "plant_year", 2025),
        allocation=allocation,
        offset_species=_str_list(raw, "offset_species"),
        trees_per_worker=_int(raw, "trees_per_worker", 50, 1),
        merge_overlaps=merge,
        truth_positive_images=_str_list(raw, "truth_positive_images"),
        output_dir=Path(raw.get("output_dir") or "canopy-out"),
        **paths,
    )


def load_config(path: str | Path, overrides: Mapping[str, Any] | None = None) -> ScenarioConfig:
    """Read a YAML scenario file; ``"bundled"`` selects the packaged example."""
    path = bundled_scenario_path() if str(path) == BUNDLED else Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", "config")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}", "config") from None
    return parse_config(raw or {}, path.parent, overrides)


def with_output_dir(config: ScenarioConfig, output_dir: Path) -> ScenarioConfig:
    return replace(config, output_dir=output_dir)
