"""Planar geometry: GPS projection, rigid 2-D transforms, polyline resampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

EARTH_RADIUS_M = 6_371_000.0
TWO_PI = 2.0 * math.pi


def as_points(points) -> np.ndarray:
    """Coerce a point sequence to a float64 array of shape (N, 2)."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim == 1 and arr.shape[0] == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ParameterError(f"expected an (N, 2) point sequence, got shape {arr.shape}")
    return arr


def _normalize_angle(theta: float) -> float:
    r = math.fmod(theta, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    if r >= TWO_PI:  # fmod can land exactly on 2*pi after the shift
        r = 0.0
    return r


@dataclass(frozen=True)
class Pose:
    """Rigid 2-D placement: translation (tx, ty) in meters, rotation theta in radians.

    theta is normalized to [0, 2*pi) on construction.
    """

    tx: float
    ty: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.tx) and math.isfinite(self.ty) and math.isfinite(self.theta)):
            raise ParameterError(f"pose components must be finite, got {(self.tx, self.ty, self.theta)}")
        object.__setattr__(self, "tx", float(self.tx))
        object.__setattr__(self, "ty", float(self.ty))
        object.__setattr__(self, "theta", _normalize_angle(float(self.theta)))

    def as_array(self) -> np.ndarray:
        return np.array([self.tx, self.ty, self.theta], dtype=np.float64)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned bounding box with (x, y) corner tuples."""

    min: tuple[float, float]
    max: tuple[float, float]

    def __post_init__(self):
        if self.min[0] > self.max[0] or self.min[1] > self.max[1]:
            raise ParameterError(f"bbox min corner {self.min} exceeds max corner {self.max}")

    @property
    def width(self) -> float:
        return self.max[0] - self.min[0]

    @property
    def height(self) -> float:
        return self.max[1] - self.min[1]


def project_sinusoidal(points, central_meridian: float | None = None) -> np.ndarray:
    """Project (lat, lon) degree pairs to planar meters with a sinusoidal projection.

    x = R * radians(lon - central_meridian) * cos(radians(lat)),
    y = R * radians(lat), on a spherical Earth of radius 6,371,000 m.

    Args:
        points: sequence of (latitude, longitude) pairs in degrees.
        central_meridian: reference longitude in degrees; defaults to the mean
            longitude of the input, which keeps distortion low near the data.

    Returns:
        (N, 2) array of projected (x, y) coordinates in meters.
    """
    arr = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if arr.shape[0] == 0:
        return arr.reshape(0, 2)
    lat, lon = arr[:, 0], arr[:, 1]
    bad = ~np.isfinite(lat) | (lat < -90.0) | (lat > 90.0)
    if bad.any():
        i = int(np.argmax(bad))
        raise ParameterError(f"latitude out of range [-90, 90] at index {i}: {lat[i]}")
    bad = ~np.isfinite(lon) | (lon < -180.0) | (lon > 180.0)
    if bad.any():
        i = int(np.argmax(bad))
        raise ParameterError(f"longitude out of range [-180, 180] at index {i}: {lon[i]}")
    cm = float(np.mean(lon)) if central_meridian is None else float(central_meridian)
    x = EARTH_RADIUS_M * np.deg2rad(lon - cm) * np.cos(np.deg2rad(lat))
    y = EARTH_RADIUS_M * np.deg2rad(lat)
    return np.column_stack([x, y])


def make_transform(pose: Pose) -> np.ndarray:
    """Build the 3x3 homogeneous rigid-body matrix for a pose."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return np.array(
        [
            [c, -s, pose.tx],
            [s, c, pose.ty],
            [0.0, 0.0, 1.0],
        ],
        dtype=np.float64,
    )


def apply_pose(points, pose: Pose) -> np.ndarray:
    """Rigidly transform a point sequence by a pose (rotation then translation)."""
    pts = as_points(points)
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    # Elementwise form kept identical to the vectorized filter path so both
    # produce bit-equal coordinates.
    x = pts[:, 0] * c - pts[:, 1] * s + pose.tx
    y = pts[:, 0] * s + pts[:, 1] * c + pose.ty
    return np.column_stack([x, y])


def pose_inverse(pose: Pose) -> Pose:
    """Return the pose that undoes `pose`."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    # R(-theta) @ -t
    tx = -(c * pose.tx + s * pose.ty)
    ty = -(-s * pose.tx + c * pose.ty)
    return Pose(tx, ty, -pose.theta)


def polyline_length(points) -> float:
    """Total arc length of a polyline."""
    pts = as_points(points)
    if pts.shape[0] < 2:
        return 0.0
    return float(np.sum(np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))))


def resample_polyline(points, spacing: float) -> np.ndarray:
    """Subdivide polyline segments so consecutive points are at most `spacing` apart.

    Original vertices are retained; each segment longer than `spacing` is split
    uniformly. A single input point is returned unchanged.
    """
    if spacing <= 0.0 or not math.isfinite(spacing):
        raise ParameterError(f"spacing must be positive, got {spacing}")
    pts = as_points(points)
    if pts.shape[0] <= 1:
        return pts.copy()
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        seg = math.hypot(b[0] - a[0], b[1] - a[1])
        if seg > spacing:
            k = math.ceil(seg / spacing)
            for step in range(1, k):
                f = step / k
                out.append(a + (b - a) * f)
        out.append(b)
    return np.array(out, dtype=np.float64)
