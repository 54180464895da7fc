"""Whole-set evaluation: per-category effectiveness, coverage, land efficiency."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError
from .geo import apply_pose
from .placement import FilterParams, PlacementResult, RoadIndex, compute_single_scenario
from .roadnet import rasterize
from .scenario import ClusteredScenarioSet

MAX_SEED = (1 << 63) - 1


@dataclass
class CategoryResult:
    effectiveness: float | None  # None for empty categories, never 0
    results: list[PlacementResult]


@dataclass
class EffectivenessReport:
    map_name: str
    per_category: dict[int, CategoryResult]
    coverage: float
    coverage_by_category_mean: float
    land_efficiency: float | None
    area_acres: float | None
    params_used: FilterParams

    def all_results(self) -> list[PlacementResult]:
        return [r for k in sorted(self.per_category) for r in self.per_category[k].results]


def scenario_seed(master_seed: int, scenario_id: str) -> int:
    """Stable per-scenario seed; adding scenarios never perturbs existing ones."""
    digest = hashlib.sha256(f"{master_seed}\x1f{scenario_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & MAX_SEED


def baseline_effectiveness(
    scenario_set: ClusteredScenarioSet,
    road: RoadIndex,
    params: FilterParams,
    map_name: str = "",
    area_acres: float | None = None,
    jobs: int = 1,
) -> EffectivenessReport:
    """Place every scenario on the map and aggregate per-category means.

    Scenario runs are independent (each gets a seed derived from the master
    seed and its id), so results are deterministic regardless of `jobs`.
    """
    ordered = sorted(scenario_set.all_scenarios(), key=lambda z: z.id)
    if not ordered:
        raise ParameterError("scenario set is empty")

    def run(z):
        return compute_single_scenario(z, road, replace(params, seed=scenario_seed(params.seed, z.id)))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, ordered))
    else:
        results = [run(z) for z in ordered]
    by_id = {r.scenario_id: r for r in results}

    per_category: dict[int, CategoryResult] = {}
    for k in range(1, scenario_set.n_categories + 1):
        members = sorted(scenario_set.clusters.get(k, []), key=lambda z: z.id)
        cat_results = [by_id[z.id] for z in members]
        eff = float(np.mean([r.compatibility for r in cat_results])) if cat_results else None
        per_category[k] = CategoryResult(eff, cat_results)

    coverage = float(np.mean([r.compatibility for r in results]))
    cat_means = [c.effectiveness for c in per_category.values() if c.effectiveness is not None]
    return EffectivenessReport(
        map_name=map_name,
        per_category=per_category,
        coverage=coverage,
        coverage_by_category_mean=float(np.mean(cat_means)),
        land_efficiency=None,
        area_acres=area_acres,
        params_used=params,
    )


def scenario_coverage(report: EffectivenessReport) -> float:
    """Mean compatibility over all scenarios, each weighted equally."""
    results = report.all_results()
    if not results:
        raise ParameterError("report contains no scenarios")
    return float(np.mean([r.compatibility for r in results]))


def land_efficiency(coverage: float, area_acres: float, reference: tuple[float, float]) -> float:
    """Coverage per acre, normalized by a reference facility's coverage per acre."""
    ref_coverage, ref_area = reference
    if area_acres <= 0.0 or ref_area <= 0.0:
        raise ParameterError("areas must be positive")
    return (coverage / area_acres) / (ref_coverage / ref_area)


def _pose_dict(pose) -> dict:
    return {"tx": pose.tx, "ty": pose.ty, "theta": pose.theta}


def _result_dict(r: PlacementResult) -> dict:
    return {
        "scenario_id": r.scenario_id,
        "best_pose": _pose_dict(r.best_pose),
        "compatibility": r.compatibility,
        "iterations": r.iterations,
        "termination": r.termination,
    }


def report_to_dict(report: EffectivenessReport, config: dict | None = None) -> dict:
    doc = {
        "map_name": report.map_name,
        "area_acres": report.area_acres,
        "coverage": report.coverage,
        "coverage_by_category_mean": report.coverage_by_category_mean,
        "land_efficiency": report.land_efficiency,
        "params_used": {
            "n_particles": report.params_used.n_particles,
            "sigma_xy": report.params_used.sigma_xy,
            "sigma_theta": report.params_used.sigma_theta,
            "rho_r": report.params_used.rho_r,
            "rho_c": report.params_used.rho_c,
            "q_tilde": report.params_used.q_tilde,
            "t_max": report.params_used.t_max,
            "q_d": report.params_used.q_d,
            "lambda0": report.params_used.lambda0,
            "alpha_decay": report.params_used.alpha_decay,
            "seed": report.params_used.seed,
        },
        "per_category": {
            str(k): {
                "effectiveness": cat.effectiveness,
                "count": len(cat.results),
                "scenarios": [_result_dict(r) for r in cat.results],
            }
            for k, cat in report.per_category.items()
        },
    }
    if config is not None:
        doc["config"] = config
    return doc


def render_report_json(report: EffectivenessReport, config: dict | None = None) -> str:
    """Deterministic JSON: same inputs and master seed give identical bytes."""
    return json.dumps(report_to_dict(report, config), sort_keys=True, indent=2) + "\n"


def geojson_placements(report: EffectivenessReport, scenario_set: ClusteredScenarioSet, road: RoadIndex) -> dict:
    """Best placements as LineString features (trajectories + matched road cells)."""
    grid, index = road
    spec = grid.spec
    features = []
    for result in report.all_results():
        z = scenario_set.find(result.scenario_id)
        if z is None:
            continue
        for traj in z.vehicles:
            placed = apply_pose(traj.points, result.best_pose)
            base = {
                "scenario": z.id,
                "category": z.category,
                "vehicle": traj.vehicle_id,
                "compatibility": result.compatibility,
            }
            features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "LineString", "coordinates": [[float(x), float(y)] for x, y in placed]},
                    "properties": {**base, "role": "trajectory"},
                }
            )
            matched = index.query_many(rasterize(placed, spec))
            centers_x = spec.origin[0] + (matched[:, 0] + 0.5) * spec.lambda_x
            centers_y = spec.origin[1] + (matched[:, 1] + 0.5) * spec.lambda_y
            features.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "LineString",
                        "coordinates": [[float(x), float(y)] for x, y in zip(centers_x, centers_y)],
                    },
                    "properties": {**base, "role": "matching_segment"},
                }
            )
    return {"type": "FeatureCollection", "features": features}
