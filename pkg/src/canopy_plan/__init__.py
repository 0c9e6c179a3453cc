"""Reforestation planning and carbon-offset forecasting toolkit."""

from .detection import (
    DetectionBox,
    ImageMeta,
    RegionSet,
    aggregate_area,
    box_area_km2,
    image_level_metrics,
    parse_label_file,
)
from .emissions import EmissionsDataset, SectorSeries, parse_emissions_table, split_train_test
from .errors import CanopyError
from .forecast import (
    BacktestReport,
    OptimizerConfig,
    SmoothingParams,
    SmoothingState,
    backtest,
    error_rate,
    error_stddev,
    fit_params,
    hw_fit_filter,
    hw_forecast,
)
from .offset import OffsetProjection, crossover_year, project_offset
from .planner import LaborPolicy, PlantingPlan, growth_timeline, labor_force, plan_for_area, tree_count
from .species import (
    KnowledgeBase,
    SoilClimateKey,
    SpeciesProfile,
    load_kb,
    load_profiles,
    recommend_species,
    recommendation_metrics,
    retrieve_chunks,
)

__version__ = "0.1.0"
