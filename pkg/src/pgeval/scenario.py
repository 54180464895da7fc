"""Scenario ingestion, validation, and synthetic scenario fixtures.

Scenarios are multi-vehicle trajectory bundles treated downstream as rigid
bodies. Files arrive either in GPS degrees (projected per scenario around its
own mean longitude) or already in local meters; either way trajectories are
resampled to 1 m resolution and re-centered so the pooled centroid sits at the
local origin.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ScenarioFormatError
from .geo import TWO_PI, Pose, polyline_length, project_sinusoidal, resample_polyline
from .roadnet import RoadStructure

logger = logging.getLogger(__name__)

# A scenario is kept only if at least one vehicle path is longer than this.
MIN_TRAJECTORY_SPAN_M = 5.0

SCENARIO_KINDS = ("on-road-path", "two-crossing", "two-parallel")


@dataclass
class Trajectory:
    vehicle_id: str
    points: np.ndarray  # (T, 2) float64, scenario-local meters


@dataclass
class Scenario:
    id: str
    category: int
    vehicles: list[Trajectory]
    # Ground-truth placement recorded by the synthesizer; never serialized
    # into scenario files (cmd_synth writes it to a sidecar).
    planted_pose: Pose | None = None

    def all_points(self) -> np.ndarray:
        if not self.vehicles:
            return np.empty((0, 2))
        return np.concatenate([t.points for t in self.vehicles])


@dataclass
class ClusteredScenarioSet:
    clusters: dict[int, list[Scenario]]
    n_categories: int
    diagnostics: list[str] = field(default_factory=list)

    def all_scenarios(self) -> list[Scenario]:
        return [z for k in sorted(self.clusters) for z in self.clusters[k]]

    def find(self, scenario_id: str) -> Scenario | None:
        for z in self.all_scenarios():
            if z.id == scenario_id:
                return z
        return None


def validate_scenario(z: Scenario) -> list[str]:
    """Check scenario invariants; returns one diagnostic per violation."""
    diags: list[str] = []
    if not z.vehicles:
        diags.append("empty vehicle list")
        return diags
    if isinstance(z.category, bool) or not isinstance(z.category, int) or z.category < 1:
        diags.append(f"category must be an integer >= 1, got {z.category!r}")
    any_long = False
    for traj in z.vehicles:
        pts = np.asarray(traj.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            diags.append(f"vehicle {traj.vehicle_id}: fewer than 2 points")
            continue
        finite = np.isfinite(pts).all(axis=1)
        if not finite.all():
            i = int(np.argmin(finite))
            diags.append(f"non-finite point at vehicle {traj.vehicle_id}, index {i}")
            continue
        if polyline_length(pts) > MIN_TRAJECTORY_SPAN_M:
            any_long = True
    if not any_long:
        diags.append(f"min-length: no vehicle trajectory longer than {MIN_TRAJECTORY_SPAN_M:g} m")
    return diags


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ScenarioFormatError(f"{path}: {message}")


def _center_scenario(vehicles: list[Trajectory]) -> None:
    pooled = np.concatenate([t.points for t in vehicles])
    centroid = pooled.mean(axis=0)
    for t in vehicles:
        t.points = t.points - centroid


def load_scenarios(document: bytes | str, resample_m: float = 1.0) -> ClusteredScenarioSet:
    """Parse, project, resample, and validate a clustered scenario file.

    Structural problems raise ScenarioFormatError naming the JSON path;
    scenarios that merely violate content invariants are dropped and reported
    through the returned set's diagnostics.
    """
    if isinstance(document, (bytes, bytearray)):
        document = document.decode("utf-8")
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"invalid JSON: {exc}") from exc
    _require(isinstance(data, dict), "$", "document must be an object")
    crs = data.get("crs")
    _require(crs in ("gps", "local_meters"), "$.crs", f"expected 'gps' or 'local_meters', got {crs!r}")
    raw = data.get("scenarios")
    _require(isinstance(raw, list) and len(raw) > 0, "$.scenarios", "expected a non-empty array")

    scenarios: list[Scenario] = []
    diagnostics: list[str] = []
    seen_ids: set[str] = set()
    for si, obj in enumerate(raw):
        path = f"$.scenarios[{si}]"
        _require(isinstance(obj, dict), path, "expected an object")
        sid = obj.get("id")
        _require(isinstance(sid, str) and sid != "", f"{path}.id", "expected a non-empty string")
        _require(sid not in seen_ids, f"{path}.id", f"duplicate scenario id {sid!r}")
        seen_ids.add(sid)
        category = obj.get("category")
        _require(
            isinstance(category, int) and not isinstance(category, bool),
            f"{path}.category", f"expected an integer, got {category!r}",
        )
        _require(category >= 1, f"{path}.category", f"must be >= 1, got {category}")
        vehicles_raw = obj.get("vehicles")
        _require(isinstance(vehicles_raw, list) and len(vehicles_raw) > 0, f"{path}.vehicles", "expected a non-empty array")

        parsed: list[tuple[str, np.ndarray]] = []
        for vi, vobj in enumerate(vehicles_raw):
            vpath = f"{path}.vehicles[{vi}]"
            _require(isinstance(vobj, dict), vpath, "expected an object")
            vid = vobj.get("id")
            _require(isinstance(vid, str) and vid != "", f"{vpath}.id", "expected a non-empty string")
            tr = vobj.get("trajectory")
            _require(isinstance(tr, list) and len(tr) > 0, f"{vpath}.trajectory", "expected a non-empty array")
            for pi, pair in enumerate(tr):
                ok = (
                    isinstance(pair, list)
                    and len(pair) == 2
                    and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in pair)
                )
                _require(ok, f"{vpath}.trajectory[{pi}]", f"expected an [x, y] number pair, got {pair!r}")
            parsed.append((vid, np.asarray(tr, dtype=np.float64)))

        try:
            vehicles = _ingest_vehicles(parsed, crs, resample_m)
        except ParameterError as exc:
            diagnostics.append(f"{path} (id={sid}): {exc}")
            logger.warning("rejected scenario %s: %s", sid, exc)
            continue
        z = Scenario(id=sid, category=category, vehicles=vehicles)
        diags = validate_scenario(z)
        if diags:
            for d in diags:
                diagnostics.append(f"{path} (id={sid}): {d}")
            logger.warning("rejected scenario %s: %s", sid, "; ".join(diags))
            continue
        scenarios.append(z)

    if not scenarios:
        raise ScenarioFormatError("no valid scenarios in document: " + "; ".join(diagnostics))
    n_categories = max(z.category for z in scenarios)
    clusters: dict[int, list[Scenario]] = {k: [] for k in range(1, n_categories + 1)}
    for z in scenarios:
        clusters[z.category].append(z)
    for k in range(1, n_categories + 1):
        if not clusters[k]:
            diagnostics.append(f"warning: category {k} has no scenarios")
            logger.warning("category %d has no scenarios", k)
    return ClusteredScenarioSet(clusters, n_categories, diagnostics)


def _ingest_vehicles(parsed, crs: str, resample_m: float) -> list[Trajectory]:
    if crs == "gps":
        pooled = np.concatenate([pts for _, pts in parsed])
        mean_lon = float(pooled[:, 1].mean())
        parsed = [(vid, project_sinusoidal(pts, central_meridian=mean_lon)) for vid, pts in parsed]
    vehicles = [Trajectory(vid, resample_polyline(pts, resample_m)) for vid, pts in parsed]
    _center_scenario(vehicles)
    return vehicles


def save_scenarios(scenarios: list[Scenario]) -> str:
    """Serialize scenarios to the JSON scenario-file format (local meters)."""
    doc = {
        "crs": "local_meters",
        "scenarios": [
            {
                "id": z.id,
                "category": z.category,
                "vehicles": [
                    {"id": t.vehicle_id, "trajectory": [[float(x), float(y)] for x, y in t.points]}
                    for t in z.vehicles
                ],
            }
            for z in scenarios
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def _rotated(dx: np.ndarray, dy: np.ndarray, phi: float) -> tuple[np.ndarray, np.ndarray]:
    """Rotate offsets by -phi (inverse of the pose rotation convention)."""
    c, s = math.cos(phi), math.sin(phi)
    return dx * c + dy * s, -dx * s + dy * c


def synthesize_scenario(
    road_map: RoadStructure,
    kind: str,
    length_m: float,
    seed: int,
    offset_m: float = 4.0,
) -> Scenario:
    """Build a deterministic synthetic scenario.

    `on-road-path` carves a contiguous 1 m-knot slice out of a random road and
    re-expresses it in a random local frame, recording the ground-truth pose in
    `planted_pose`; placing it back there reproduces the source road cells.
    `two-crossing` and `two-parallel` are analytic two-vehicle pairs (crossing
    paths / constant-gap parallel paths).
    """
    if length_m < MIN_TRAJECTORY_SPAN_M:
        raise ParameterError(f"length_m must be >= {MIN_TRAJECTORY_SPAN_M:g} m, got {length_m}")
    if kind not in SCENARIO_KINDS:
        raise ParameterError(f"unknown scenario kind {kind!r}; expected one of {SCENARIO_KINDS}")
    rng = np.random.default_rng(seed)
    if kind == "on-road-path":
        return _synth_on_road(road_map, float(length_m), seed, rng)
    if kind == "two-crossing":
        return _synth_crossing(float(length_m), seed, rng)
    return _synth_parallel(float(length_m), float(offset_m), seed, rng)


def _synth_on_road(road_map: RoadStructure, length_m: float, seed: int, rng) -> Scenario:
    n = int(round(length_m)) + 1
    knotted = [resample_polyline(r, 1.0) for r in road_map.roads]
    eligible = [k for k in knotted if k.shape[0] >= n]
    if not eligible:
        raise ParameterError(f"requested length {length_m:g} m exceeds every road")
    road = eligible[int(rng.integers(len(eligible)))]
    start = int(rng.integers(0, road.shape[0] - n + 1))
    pts = road[start : start + n]
    phi = float(rng.uniform(0.0, TWO_PI))
    anchor = pts.mean(axis=0)
    lx, ly = _rotated(pts[:, 0] - anchor[0], pts[:, 1] - anchor[1], phi)
    local = np.column_stack([lx, ly])
    return Scenario(
        id=f"onroad-{seed}",
        category=1,
        vehicles=[Trajectory("a", local)],
        planted_pose=Pose(float(anchor[0]), float(anchor[1]), phi),
    )


def _line_points(length_m: float) -> np.ndarray:
    n = math.ceil(length_m) + 1
    return np.linspace(-length_m / 2.0, length_m / 2.0, n)


def _synth_crossing(length_m: float, seed: int, rng) -> Scenario:
    s = _line_points(length_m)
    heading = float(rng.uniform(0.0, TWO_PI))
    psi = float(rng.uniform(math.pi / 3.0, 2.0 * math.pi / 3.0))
    a = np.column_stack([s * math.cos(heading), s * math.sin(heading)])
    b = np.column_stack([s * math.cos(heading + psi), s * math.sin(heading + psi)])
    vehicles = [Trajectory("a", a), Trajectory("b", b)]
    _center_scenario(vehicles)
    return Scenario(id=f"crossing-{seed}", category=1, vehicles=vehicles)


def _synth_parallel(length_m: float, offset_m: float, seed: int, rng) -> Scenario:
    s = _line_points(length_m)
    heading = float(rng.uniform(0.0, TWO_PI))
    dx, dy = math.cos(heading), math.sin(heading)
    nx, ny = -dy, dx
    half = offset_m / 2.0
    a = np.column_stack([s * dx - half * nx, s * dy - half * ny])
    b = np.column_stack([s * dx + half * nx, s * dy + half * ny])
    vehicles = [Trajectory("a", a), Trajectory("b", b)]
    _center_scenario(vehicles)
    return Scenario(id=f"parallel-{seed}", category=4, vehicles=vehicles)
