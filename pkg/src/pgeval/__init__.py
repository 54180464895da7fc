"""Quantitative evaluation of road networks against recorded multi-vehicle driving scenarios."""

from .bench import (
    CategoryResult,
    EffectivenessReport,
    baseline_effectiveness,
    geojson_placements,
    land_efficiency,
    render_report_json,
    scenario_coverage,
    scenario_seed,
)
from .dtw import DtwResult, WarpPath, dtw_distance, dtw_exact, dtw_fast
from .errors import MapParseError, ParameterError, PgevalError, ScenarioFormatError
from .geo import (
    BBox,
    Pose,
    apply_pose,
    make_transform,
    pose_inverse,
    polyline_length,
    project_sinusoidal,
    resample_polyline,
)
from .placement import (
    FilterParams,
    ParticleSet,
    PlacementResult,
    TracePoint,
    compute_single_scenario,
    decay_factor,
    diffuse,
    dtw_feasibility,
    likelihood,
    likelihood_many,
    matching_segment,
    partial_resample,
)
from .roadnet import (
    GridSpec,
    NearestRoadIndex,
    OccupancyGrid,
    RoadStructure,
    bounding_box,
    build_index_from_cells,
    build_road_index,
    grid_for_map,
    nearest_road_cell,
    parse_map_metadata,
    parse_osm,
    rasterize,
)
from .scenario import (
    ClusteredScenarioSet,
    Scenario,
    Trajectory,
    load_scenarios,
    save_scenarios,
    synthesize_scenario,
    validate_scenario,
)

__version__ = "0.1.0"
