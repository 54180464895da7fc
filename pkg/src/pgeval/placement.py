"""Scenario placement: road-compatibility likelihood and the search filter.

A placement hypothesis is a rigid pose applied to a whole scenario. Each
transformed vehicle trajectory is rasterized onto the road occupancy grid,
matched cell-by-cell to its nearest road cells, and scored by a DTW
feasibility ratio in [0, 1]; the scenario likelihood is the mean over
vehicles. The filter searches poses with a bootstrap particle scheme whose
resampling step replaces only the lowest-likelihood fraction of particles,
while diffusion noise shrinks over iterations and once a good pose is known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .dtw import _dp_distance
from .errors import ParameterError
from .geo import TWO_PI, Pose
from .roadnet import NearestRoadIndex, OccupancyGrid
from .scenario import Scenario, Trajectory, validate_scenario

RoadIndex = tuple[OccupancyGrid, NearestRoadIndex]


@dataclass(frozen=True)
class FilterParams:
    """Tuning knobs for the placement filter.

    Defaults: diffusion sigmas of 8 m translation / pi/2 rad rotation, 60% of
    particles resampled per iteration (best 40% preserved), convergence when
    the mean weight reaches 80% of the best, early stop at best weight 0.9,
    at most 300 iterations, and exponential sigma decay (base 5e-6) once the
    best weight exceeds 0.5 on top of a 1/(1 + 1e-3 t^2) schedule.
    """

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
    seed: int = 0

    def __post_init__(self):
        checks = [
            (isinstance(self.n_particles, int) and self.n_particles >= 2, "n_particles must be an integer >= 2"),
            (self.sigma_xy > 0.0, "sigma_xy must be positive"),
            (self.sigma_theta > 0.0, "sigma_theta must be positive"),
            (0.0 < self.rho_r < 1.0, "rho_r must lie in (0, 1)"),
            (0.0 < self.rho_c < 1.0, "rho_c must lie in (0, 1)"),
            (0.0 < self.q_tilde <= 1.0, "q_tilde must lie in (0, 1]"),
            (isinstance(self.t_max, int) and self.t_max >= 1, "t_max must be an integer >= 1"),
            (0.0 < self.q_d < 1.0, "q_d must lie in (0, 1)"),
            (self.lambda0 >= 0.0, "lambda0 must be non-negative"),
            (self.alpha_decay > 0.0, "alpha_decay must be positive"),
            (isinstance(self.seed, int) and self.seed >= 0, "seed must be a non-negative integer"),
        ]
        for ok, message in checks:
            if not ok:
                raise ParameterError(message)


@dataclass(frozen=True)
class TracePoint:
    t: int
    q_star: float
    q_mean: float
    gamma: float


@dataclass
class ParticleSet:
    poses: np.ndarray  # (N, 3) columns tx, ty, theta
    weights: np.ndarray  # (N,) likelihood values (not normalized)
    best: tuple[Pose, float]
    mean_weight: float
    iteration: int


@dataclass
class PlacementResult:
    scenario_id: str
    best_pose: Pose
    compatibility: float
    iterations: int
    termination: str  # max_iters | weight_threshold | converged
    trace: list[TracePoint] | None = None


@njit(cache=True, nogil=True)
def _batch_feasibility(cx, cy, x0, y0, near_ix, near_iy, occ, out):
    """Per-particle DTW feasibility of one rasterized trajectory.

    cx/cy hold the trajectory cells for each particle; matched cells come from
    the nearest-road table, falling back to a scan over `occ` (sorted
    lexicographically, so the first minimum is the tie-break winner).
    """
    n_particles, t_len = cx.shape
    h, w = near_ix.shape
    m = occ.shape[0]
    for p in range(n_particles):
        xs = np.empty(t_len, np.float64)
        ys = np.empty(t_len, np.float64)
        mx = np.empty(t_len, np.float64)
        my = np.empty(t_len, np.float64)
        for t in range(t_len):
            gx = cx[p, t]
            gy = cy[p, t]
            u = gx - x0
            v = gy - y0
            if u >= 0 and u < w and v >= 0 and v < h:
                mx[t] = near_ix[v, u]
                my[t] = near_iy[v, u]
            else:
                bd = np.int64(1) << 62
                bi = 0
                for i in range(m):
                    dx = occ[i, 0] - gx
                    dy = occ[i, 1] - gy
                    d2 = dx * dx + dy * dy
                    if d2 < bd:
                        bd = d2
                        bi = i
                mx[t] = occ[bi, 0]
                my[t] = occ[bi, 1]
            xs[t] = gx
            ys[t] = gy
        dist = _dp_distance(xs, ys, mx, my)
        ratio = 1.0 - dist / t_len
        out[p] = ratio if ratio > 0.0 else 0.0


def _feasibility_many(road: RoadIndex, poses: np.ndarray, points: np.ndarray) -> np.ndarray:
    """DTW feasibility of one trajectory under each pose in `poses`."""
    grid, index = road
    if points.shape[0] < 1:
        raise ParameterError("trajectory must contain at least one point")
    spec = grid.spec
    c = np.cos(poses[:, 2])[:, None]
    s = np.sin(poses[:, 2])[:, None]
    px = points[:, 0][None, :]
    py = points[:, 1][None, :]
    x = px * c - py * s + poses[:, 0][:, None]
    y = px * s + py * c + poses[:, 1][:, None]
    cx = np.floor((x - spec.origin[0]) / spec.lambda_x).astype(np.int64)
    cy = np.floor((y - spec.origin[1]) / spec.lambda_y).astype(np.int64)
    out = np.empty(poses.shape[0], dtype=np.float64)
    _batch_feasibility(
        np.ascontiguousarray(cx), np.ascontiguousarray(cy),
        index.x0, index.y0, index.near_ix, index.near_iy, index.cells, out,
    )
    return out


def matching_segment(traj_cells, index: NearestRoadIndex) -> np.ndarray:
    """Nearest road cell for every trajectory cell (same sequence length)."""
    return index.query_many(traj_cells)


def dtw_feasibility(traj: Trajectory, pose: Pose, road: RoadIndex) -> float:
    """Feasibility ratio in [0, 1]: 1 - DTW(cells, matched road cells) / length, clamped at 0."""
    return float(_feasibility_many(road, pose.as_array()[None, :], np.asarray(traj.points, np.float64))[0])


def likelihood(road: RoadIndex, pose: Pose, z: Scenario) -> float:
    """Mean DTW feasibility over the scenario's vehicles at a common pose."""
    return float(likelihood_many(road, pose.as_array()[None, :], z)[0])


def likelihood_many(road: RoadIndex, poses: np.ndarray, z: Scenario) -> np.ndarray:
    """Vectorized likelihood over an (N, 3) pose array."""
    poses = np.asarray(poses, dtype=np.float64).reshape(-1, 3)
    acc = np.zeros(poses.shape[0], dtype=np.float64)
    for traj in z.vehicles:
        acc += _feasibility_many(road, poses, np.asarray(traj.points, np.float64))
    return acc / len(z.vehicles)


def decay_factor(t: int, q_star: float, params: FilterParams) -> float:
    """Diffusion shrink factor: polynomial decay in t, exponential once q_star >= q_d."""
    value = 1.0 / (1.0 + params.lambda0 * t * t)
    if q_star >= params.q_d:
        value *= params.alpha_decay ** (q_star - params.q_d)
    return value


def diffuse(particles, gamma: float, params: FilterParams, rng: np.random.Generator) -> np.ndarray:
    """Gaussian diffusion: add zero-mean noise with stds (gamma*sigma_xy, gamma*sigma_xy, gamma*sigma_theta).

    Proposals are not clamped to the map bounds; off-map poses simply score a
    low likelihood. Headings are re-normalized to [0, 2*pi).
    """
    if not (0.0 < gamma <= 1.0):
        raise ParameterError(f"gamma must lie in (0, 1], got {gamma}")
    poses = particles.poses if isinstance(particles, ParticleSet) else np.asarray(particles, dtype=np.float64)
    noise = rng.standard_normal(poses.shape)
    scale = np.array([gamma * params.sigma_xy, gamma * params.sigma_xy, gamma * params.sigma_theta])
    proposals = poses + noise * scale
    proposals[:, 2] %= TWO_PI
    return proposals


def partial_resample(
    proposals,
    weights,
    params: FilterParams,
    rng: np.random.Generator,
    iteration: int = 0,
) -> ParticleSet:
    """Resample only the lowest-weight floor(rho_r * N) slots.

    Proposals are sorted ascending by weight (ties by original index); the low
    slots are redrawn from the full proposal set with probability proportional
    to normalized weight, and the top ceil((1 - rho_r) * N) proposals are
    carried over unchanged. All-zero weights fall back to uniform draws.
    """
    props = np.asarray(proposals, dtype=np.float64).reshape(-1, 3)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if props.shape[0] != w.shape[0]:
        raise ParameterError(f"{props.shape[0]} proposals vs {w.shape[0]} weights")
    if (w < 0).any():
        raise ParameterError("weights must be non-negative")
    n = props.shape[0]
    order = np.argsort(w, kind="stable")
    sp = props[order]
    sw = w[order]
    n_resample = int(math.floor(params.rho_r * n))
    total = float(sw.sum())
    probs = sw / total if total > 0.0 else np.full(n, 1.0 / n)
    chosen = rng.choice(n, size=n_resample, replace=True, p=probs)
    new_poses = np.concatenate([sp[chosen], sp[n_resample:]])
    new_weights = np.concatenate([sw[chosen], sw[n_resample:]])
    bi = int(np.argmax(new_weights))
    best = (Pose(*new_poses[bi]), float(new_weights[bi]))
    return ParticleSet(new_poses, new_weights, best, float(new_weights.mean()), iteration)


def compute_single_scenario(z: Scenario, road: RoadIndex, params: FilterParams) -> PlacementResult:
    """Maximize a scenario's placement likelihood over the map bounding box.

    N poses start uniform over the box (heading uniform over [0, 2*pi)); each
    iteration diffuses all particles, weights them by likelihood, and
    partially resamples. The best pose ever seen is tracked and returned, so
    the reported compatibility never regresses. Terminates at t_max
    iterations, at best weight >= q_tilde, or when the mean weight reaches
    rho_c of a positive best weight (population collapsed onto one optimum).
    """
    grid, index = road
    diags = validate_scenario(z)
    if diags:
        raise ParameterError(f"invalid scenario {z.id!r}: " + "; ".join(diags))
    if index.map_bbox is None:
        raise ParameterError("road index carries no map bounding box to sample poses from")
    rng = np.random.default_rng(params.seed)
    bb = index.map_bbox
    n = params.n_particles
    poses = np.empty((n, 3), dtype=np.float64)
    poses[:, 0] = rng.uniform(bb.min[0], bb.max[0], n)
    poses[:, 1] = rng.uniform(bb.min[1], bb.max[1], n)
    poses[:, 2] = rng.uniform(0.0, TWO_PI, n)

    q_star = 0.0
    best_pose: Pose | None = None
    trace: list[TracePoint] = []
    t = 0
    while True:
        gamma = decay_factor(t, q_star, params)
        proposals = diffuse(poses, gamma, params, rng)
        weights = likelihood_many(road, proposals, z)
        pset = partial_resample(proposals, weights, params, rng, iteration=t + 1)
        poses = pset.poses
        if best_pose is None or pset.best[1] > q_star:
            best_pose = pset.best[0]
            q_star = pset.best[1]
        trace.append(TracePoint(t, q_star, pset.mean_weight, gamma))
        t += 1
        if t >= params.t_max:
            termination = "max_iters"
            break
        if q_star >= params.q_tilde:
            termination = "weight_threshold"
            break
        if q_star > 0.0 and pset.mean_weight >= params.rho_c * q_star:
            termination = "converged"
            break
    return PlacementResult(z.id, best_pose, q_star, t, termination, trace)
