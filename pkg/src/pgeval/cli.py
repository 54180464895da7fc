"""Command-line front-end: evaluate, place, sweep, synth."""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .bench import (
    baseline_effectiveness,
    geojson_placements,
    land_efficiency,
    render_report_json,
    scenario_seed,
)
from .errors import ParameterError, PgevalError
from .placement import FilterParams, compute_single_scenario
from .roadnet import RoadStructure, build_road_index, grid_for_map, parse_map_metadata, parse_osm
from .scenario import (
    SCENARIO_KINDS,
    ClusteredScenarioSet,
    load_scenarios,
    save_scenarios,
    synthesize_scenario,
)


@dataclasses.dataclass
class RunConfig:
    """Effective run configuration: defaults < config file < command-line flags."""

    n_particles: int = 500
    sigma_xy: float = 8.0
    sigma_theta: float = math.pi / 2.0
    rho_r: float = 0.6
    rho_c: float = 0.8
    q_tilde: float = 0.9
    t_max: int = 300
    q_d: float = 0.5
    lambda0: float = 1e-3
    alpha_decay: float = 5e-6
    master_seed: int = 0
    grid_m: float = 2.0
    resample_m: float = 1.0
    jobs: int = 1
    report_path: str | None = None
    geojson_path: str | None = None
    trace_path: str | None = None

    def filter_params(self) -> FilterParams:
        return FilterParams(
            n_particles=self.n_particles,
            sigma_xy=self.sigma_xy,
            sigma_theta=self.sigma_theta,
            rho_r=self.rho_r,
            rho_c=self.rho_c,
            q_tilde=self.q_tilde,
            t_max=self.t_max,
            q_d=self.q_d,
            lambda0=self.lambda0,
            alpha_decay=self.alpha_decay,
            seed=self.master_seed,
        )

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_CONFIG_CASTS = {
    "n_particles": int,
    "sigma_xy": float,
    "sigma_theta": float,
    "rho_r": float,
    "rho_c": float,
    "q_tilde": float,
    "t_max": int,
    "q_d": float,
    "lambda0": float,
    "alpha_decay": float,
    "master_seed": int,
    "grid_m": float,
    "resample_m": float,
    "jobs": int,
    "report_path": str,
    "geojson_path": str,
    "trace_path": str,
}


def load_config_file(path: str | Path) -> dict:
    """Parse a flat `key = value` config file; unknown keys are rejected."""
    values: dict = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_CASTS:
            raise ParameterError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _CONFIG_CASTS[key](value)
        except ValueError as exc:
            raise ParameterError(f"{path}:{lineno}: invalid value for {key}: {value!r}") from exc
    return values


def effective_config(args: argparse.Namespace) -> RunConfig:
    values = dataclasses.asdict(RunConfig())
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for key in _CONFIG_CASTS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return RunConfig(**values)


def _write_text_atomic(path: str | Path, text: str):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def load_road_structure(map_path: str | Path, resample_m: float = 1.0) -> RoadStructure:
    """Parse an OSM file plus its optional `<file>.meta` sidecar."""
    map_path = Path(map_path)
    document = map_path.read_bytes()
    road_map = parse_osm(document, resample_m)
    road_map.name = map_path.stem
    sidecar = Path(str(map_path) + ".meta")
    if sidecar.exists():
        meta = parse_map_metadata(sidecar.read_text(encoding="utf-8"))
        road_map.name = meta.get("name", road_map.name)
        road_map.area_acres = meta.get("area_acres")
    return road_map


def _load_inputs(args, cfg: RunConfig):
    road_map = load_road_structure(args.map, cfg.resample_m)
    scenario_set = load_scenarios(Path(args.scenarios).read_bytes(), cfg.resample_m)
    for line in scenario_set.diagnostics:
        print(f"note: {line}", file=sys.stderr)
    road = build_road_index(road_map, grid_for_map(road_map, cfg.grid_m))
    return road_map, scenario_set, road


def cmd_evaluate(args) -> int:
    cfg = effective_config(args)
    road_map, scenario_set, road = _load_inputs(args, cfg)
    params = cfg.filter_params()
    report = baseline_effectiveness(
        scenario_set, road, params,
        map_name=road_map.name, area_acres=road_map.area_acres, jobs=cfg.jobs,
    )
    if args.reference_coverage is not None and args.reference_area_acres is not None:
        if road_map.area_acres is None:
            print("note: map has no area_acres metadata; land efficiency omitted", file=sys.stderr)
        else:
            report.land_efficiency = land_efficiency(
                report.coverage, road_map.area_acres,
                (args.reference_coverage, args.reference_area_acres),
            )

    report_path = cfg.report_path or "report.json"
    _write_text_atomic(report_path, render_report_json(report, cfg.as_dict()))
    if cfg.geojson_path:
        doc = geojson_placements(report, scenario_set, road)
        _write_text_atomic(cfg.geojson_path, json.dumps(doc, sort_keys=True, indent=2) + "\n")

    print(f"map: {report.map_name}")
    print("category  count  effectiveness")
    for k in sorted(report.per_category):
        cat = report.per_category[k]
        eff = "absent" if cat.effectiveness is None else f"{cat.effectiveness:.4f}"
        print(f"{k:>8}  {len(cat.results):>5}  {eff}")
    print(f"scenario coverage: {report.coverage:.4f}")
    if report.land_efficiency is not None:
        print(f"land efficiency: {report.land_efficiency:.4f}")
    print(f"report written to {report_path}")
    return 0


def cmd_place(args) -> int:
    cfg = effective_config(args)
    _, scenario_set, road = _load_inputs(args, cfg)
    z = scenario_set.find(args.scenario_id)
    if z is None:
        available = ", ".join(s.id for s in scenario_set.all_scenarios())
        print(f"error: unknown scenario id {args.scenario_id!r}; available: {available}", file=sys.stderr)
        return 1
    params = dataclasses.replace(
        cfg.filter_params(), seed=scenario_seed(cfg.master_seed, z.id)
    )
    result = compute_single_scenario(z, road, params)
    print(f"scenario: {z.id}")
    print(
        "best pose: tx={:.3f} ty={:.3f} theta={:.5f}".format(
            result.best_pose.tx, result.best_pose.ty, result.best_pose.theta
        )
    )
    print(f"compatibility: {result.compatibility:.4f}")
    print(f"iterations: {result.iterations}  termination: {result.termination}")
    trace_path = cfg.trace_path or f"trace_{z.id}.csv"
    lines = ["t,q_star,q_mean,gamma"]
    for pt in result.trace:
        lines.append(f"{pt.t},{pt.q_star!r},{pt.q_mean!r},{pt.gamma!r}")
    _write_text_atomic(trace_path, "\n".join(lines) + "\n")
    print(f"trace written to {trace_path}")
    return 0


def _subset(scenario_set: ClusteredScenarioSet, size: int, seed: int) -> ClusteredScenarioSet:
    ordered = sorted(scenario_set.all_scenarios(), key=lambda z: z.id)
    if size >= len(ordered):
        return scenario_set
    rng = np.random.default_rng(seed)
    keep = sorted(rng.choice(len(ordered), size=size, replace=False).tolist())
    chosen = [ordered[i] for i in keep]
    n_categories = max(z.category for z in chosen)
    clusters = {k: [z for z in chosen if z.category == k] for k in range(1, n_categories + 1)}
    return ClusteredScenarioSet(clusters, n_categories)


def cmd_sweep(args) -> int:
    if len(args.counts) < 2:
        print("error: sweep needs at least 2 particle counts", file=sys.stderr)
        return 1
    cfg = effective_config(args)
    road_map, scenario_set, road = _load_inputs(args, cfg)
    subset = _subset(scenario_set, args.subset, cfg.master_seed)
    print(f"map: {road_map.name}  scenarios: {len(subset.all_scenarios())}")
    print("particles  coverage  rel_change")
    previous = None
    settled = None
    for count in args.counts:
        params = dataclasses.replace(cfg.filter_params(), n_particles=int(count))
        report = baseline_effectiveness(subset, road, params, map_name=road_map.name, jobs=cfg.jobs)
        if previous is None:
            change = ""
        else:
            rel = abs(report.coverage - previous) / previous if previous > 0 else float("inf")
            change = f"{rel:.4f}"
            if settled is None and rel < 0.01:
                settled = count
                change += "  <1%"
        print(f"{count:>9}  {report.coverage:.4f}  {change}")
        previous = report.coverage
    if settled is not None:
        print(f"first count with <1% change: {settled}")
    else:
        print("no count reached <1% change")
    return 0


def cmd_synth(args) -> int:
    cfg = effective_config(args)
    road_map = load_road_structure(args.map, cfg.resample_m)
    if len(args.length_m) not in (1, 2):
        print("error: --length-m takes one value or a min/max pair", file=sys.stderr)
        return 1
    rng = np.random.default_rng(args.seed)
    scenarios = []
    for i in range(args.count):
        if len(args.length_m) == 1:
            length = args.length_m[0]
        else:
            lo, hi = sorted(args.length_m)
            length = float(rng.integers(int(lo), int(hi) + 1))
        scenarios.append(synthesize_scenario(road_map, args.kind, length, seed=args.seed + i))
    _write_text_atomic(args.out, save_scenarios(scenarios))
    planted = {
        z.id: (None if z.planted_pose is None else
               {"tx": z.planted_pose.tx, "ty": z.planted_pose.ty, "theta": z.planted_pose.theta})
        for z in scenarios
    }
    _write_text_atomic(str(args.out) + ".planted.json", json.dumps(planted, sort_keys=True, indent=2) + "\n")
    print(f"wrote {len(scenarios)} {args.kind} scenarios to {args.out}")
    return 0


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--particles", dest="n_particles", type=int, help="number of particles N")
    p.add_argument("--sigma-xy", dest="sigma_xy", type=float, help="translation diffusion std (m)")
    p.add_argument("--sigma-theta", dest="sigma_theta", type=float, help="rotation diffusion std (rad)")
    p.add_argument("--rho-r", dest="rho_r", type=float, help="fraction of particles resampled per iteration")
    p.add_argument("--rho-c", dest="rho_c", type=float, help="mean/best weight ratio treated as converged")
    p.add_argument("--q-tilde", dest="q_tilde", type=float, help="best-weight early-stop threshold")
    p.add_argument("--t-max", dest="t_max", type=int, help="maximum iterations per scenario")
    p.add_argument("--q-d", dest="q_d", type=float, help="best weight that triggers exponential decay")
    p.add_argument("--lambda0", dest="lambda0", type=float, help="polynomial decay rate")
    p.add_argument("--alpha-decay", dest="alpha_decay", type=float, help="exponential decay base")
    p.add_argument("--master-seed", dest="master_seed", type=int, help="master RNG seed")
    p.add_argument("--grid-m", dest="grid_m", type=float, help="occupancy grid cell size (m)")
    p.add_argument("--resample-m", dest="resample_m", type=float, help="polyline resampling resolution (m)")
    p.add_argument("--jobs", dest="jobs", type=int, help="parallel scenario evaluations")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pgeval", description="Evaluate how well a road network hosts recorded driving scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="score a scenario set against a map")
    p_eval.add_argument("map", help="OSM XML road map")
    p_eval.add_argument("scenarios", help="scenario JSON file")
    p_eval.add_argument("--report", dest="report_path", help="output report JSON path")
    p_eval.add_argument("--geojson", dest="geojson_path", help="optional GeoJSON of best placements")
    p_eval.add_argument("--reference-coverage", type=float, help="reference facility coverage for land efficiency")
    p_eval.add_argument("--reference-area-acres", type=float, help="reference facility area for land efficiency")
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_place = sub.add_parser("place", help="place a single scenario and dump its trace")
    p_place.add_argument("map")
    p_place.add_argument("scenarios")
    p_place.add_argument("scenario_id")
    p_place.add_argument("--trace", dest="trace_path", help="output trace CSV path")
    _add_config_flags(p_place)
    p_place.set_defaults(func=cmd_place)

    p_sweep = sub.add_parser("sweep", help="coverage as a function of particle count")
    p_sweep.add_argument("map")
    p_sweep.add_argument("scenarios")
    p_sweep.add_argument("--counts", type=int, nargs="+", required=True, help="particle counts to try")
    p_sweep.add_argument("--subset", type=int, default=20, help="random scenario subset size")
    _add_config_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_synth = sub.add_parser("synth", help="generate synthetic scenarios from a map")
    p_synth.add_argument("map")
    p_synth.add_argument("kind", choices=SCENARIO_KINDS)
    p_synth.add_argument("count", type=int)
    p_synth.add_argument("seed", type=int)
    p_synth.add_argument("out", help="output scenario JSON path")
    p_synth.add_argument("--length-m", dest="length_m", type=float, nargs="+", default=[40.0],
                         help="scenario length, or a min/max pair sampled per scenario")
    _add_config_flags(p_synth)
    p_synth.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        name = exc.filename or exc
        print(f"error: cannot open {name}", file=sys.stderr)
        return 2
    except (PgevalError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
