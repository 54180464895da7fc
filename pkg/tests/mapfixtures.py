"""Synthetic OSM documents and road structures shared across tests."""

from __future__ import annotations

import math

import numpy as np

from pgeval.geo import EARTH_RADIUS_M

_DEG = math.pi / 180.0


def _to_latlon(x: float, y: float, lon0: float = 0.0) -> tuple[float, float]:
    """Invert the sinusoidal projection around (0, lon0) for small extents."""
    lat = y / (EARTH_RADIUS_M * _DEG)
    lon = lon0 + x / (EARTH_RADIUS_M * _DEG * math.cos(lat * _DEG))
    return lat, lon


def osm_from_polylines(polylines, tag: str = "highway", tag_value: str = "residential") -> bytes:
    """Wrap planar polylines (meters) into a minimal OSM XML document."""
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6">']
    node_id = 0
    ways = []
    for poly in polylines:
        refs = []
        for x, y in poly:
            node_id += 1
            lat, lon = _to_latlon(float(x), float(y))
            lines.append(f'  <node id="{node_id}" lat="{lat!r}" lon="{lon!r}"/>')
            refs.append(node_id)
        ways.append(refs)
    for wi, refs in enumerate(ways, start=1):
        lines.append(f'  <way id="{wi}">')
        for ref in refs:
            lines.append(f'    <nd ref="{ref}"/>')
        if tag:
            lines.append(f'    <tag k="{tag}" v="{tag_value}"/>')
        lines.append("  </way>")
    lines.append("</osm>")
    return "\n".join(lines).encode("utf-8")


def grid_city_polylines(blocks: int = 10, block_m: float = 80.0, seed: int = 7):
    """Street grid of `blocks` x `blocks` square blocks with jittered offsets.

    The sub-meter per-road jitter keeps knot coordinates away from occupancy
    cell boundaries, so planted scenarios overlap their source cells exactly.
    """
    rng = np.random.default_rng(seed)
    span = blocks * block_m
    polylines = []
    for j in range(blocks + 1):
        y = j * block_m + rng.uniform(-0.45, 0.45)
        polylines.append([(0.0, y), (span, y)])
    for i in range(blocks + 1):
        x = i * block_m + rng.uniform(-0.45, 0.45)
        polylines.append([(x, 0.0), (x, span)])
    return polylines


def grid_city_osm(blocks: int = 10, block_m: float = 80.0, seed: int = 7) -> bytes:
    return osm_from_polylines(grid_city_polylines(blocks, block_m, seed))


def parallel_roads_polylines(n_roads: int = 6, spacing_m: float = 60.0, length_m: float = 400.0, seed: int = 3):
    """Disjoint parallel horizontal roads (no intersections anywhere)."""
    rng = np.random.default_rng(seed)
    polylines = []
    for j in range(n_roads):
        y = j * spacing_m + rng.uniform(-0.45, 0.45)
        polylines.append([(0.0, y), (length_m, y)])
    return polylines


def parallel_roads_osm(n_roads: int = 6, spacing_m: float = 60.0, length_m: float = 400.0, seed: int = 3) -> bytes:
    return osm_from_polylines(parallel_roads_polylines(n_roads, spacing_m, length_m, seed))


def slanted_road_osm(length_m: float = 80.0, angle_deg: float = 25.0, seed: int = 11) -> bytes:
    """A single straight road at a generic angle (non-degenerate bounding box)."""
    rng = np.random.default_rng(seed)
    x0, y0 = rng.uniform(0.2, 0.8, size=2)
    a = math.radians(angle_deg)
    return osm_from_polylines([[(x0, y0), (x0 + length_m * math.cos(a), y0 + length_m * math.sin(a))]])
