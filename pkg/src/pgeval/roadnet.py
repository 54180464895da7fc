"""Road-network ingestion and occupancy-grid indexing.

Parses an OSM XML export into planar road polylines, registers them with a
binary occupancy grid, and answers exact nearest-road-cell queries from a
precomputed table (exhaustive fallback for queries outside the table).
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import MapParseError, ParameterError
from .geo import BBox, as_points, project_sinusoidal, resample_polyline


@dataclass
class RoadStructure:
    """A set of road polylines (knot sequences) in planar meters."""

    roads: list[np.ndarray]
    name: str = ""
    area_acres: float | None = None


@dataclass(frozen=True)
class GridSpec:
    """Occupancy-grid geometry: cell sizes in meters and the grid origin."""

    lambda_x: float
    lambda_y: float
    origin: tuple[float, float]

    def __post_init__(self):
        if self.lambda_x <= 0.0 or self.lambda_y <= 0.0:
            raise ParameterError(f"grid cell sizes must be positive, got {(self.lambda_x, self.lambda_y)}")


@dataclass(frozen=True)
class OccupancyGrid:
    spec: GridSpec
    occupied: frozenset[tuple[int, int]]


def parse_osm(document: bytes | str, resample_m: float = 1.0) -> RoadStructure:
    """Extract road polylines from an OSM XML document.

    Keeps every way carrying a `highway` tag (any value) except `area=yes`
    ways, resolves its node references in order, projects the knots with the
    map's mean longitude as central meridian, and resamples each polyline at
    `resample_m` meters. Ways with fewer than two resolved nodes carry no
    geometry and are dropped.
    """
    if isinstance(document, str):
        document = document.encode("utf-8")
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        line, col = exc.position
        lines = document.split(b"\n")
        offset = sum(len(ln) + 1 for ln in lines[: line - 1]) + col
        raise MapParseError(f"malformed OSM XML at byte {offset} (line {line}, column {col}): {exc}") from exc

    nodes: dict[str, tuple[float, float]] = {}
    for el in root.iter("node"):
        nid, lat, lon = el.get("id"), el.get("lat"), el.get("lon")
        if nid is None or lat is None or lon is None:
            raise MapParseError("node element missing id/lat/lon attributes")
        nodes[nid] = (float(lat), float(lon))

    raw_ways: list[tuple[str, list[tuple[float, float]]]] = []
    for el in root.iter("way"):
        wid = el.get("id") or "?"
        tags = {t.get("k"): t.get("v") for t in el.findall("tag")}
        if "highway" not in tags or tags.get("area") == "yes":
            continue
        coords = []
        for nd in el.findall("nd"):
            ref = nd.get("ref")
            if ref not in nodes:
                raise MapParseError(f"way {wid} references missing node {ref}")
            coords.append(nodes[ref])
        if len(coords) < 2:
            continue
        raw_ways.append((wid, coords))
    if not raw_ways:
        raise MapParseError("no usable highway-tagged ways in document")

    mean_lon = float(np.mean([lon for _, coords in raw_ways for _, lon in coords]))
    roads = []
    for wid, coords in raw_ways:
        try:
            xy = project_sinusoidal(coords, central_meridian=mean_lon)
        except ParameterError as exc:
            raise MapParseError(f"way {wid}: {exc}") from exc
        roads.append(resample_polyline(xy, resample_m))
    return RoadStructure(roads=roads)


_METADATA_KEYS = {"name", "area_acres"}


def parse_map_metadata(text: str) -> dict:
    """Parse the optional `key = value` metadata sidecar for a map."""
    meta: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise MapParseError(f"metadata line {lineno} is not 'key = value': {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _METADATA_KEYS:
            raise MapParseError(f"unknown metadata key on line {lineno}: {key!r}")
        if key == "area_acres":
            area = float(value)
            if not area > 0.0:
                raise MapParseError(f"area_acres must be positive, got {value!r}")
            meta[key] = area
        else:
            meta[key] = value
    return meta


def bounding_box(road_map: RoadStructure) -> BBox:
    """Smallest axis-aligned box containing every knot of every road."""
    if not road_map.roads:
        raise ParameterError("empty road map has no bounding box")
    knots = np.concatenate([as_points(r) for r in road_map.roads])
    return BBox(
        (float(knots[:, 0].min()), float(knots[:, 1].min())),
        (float(knots[:, 0].max()), float(knots[:, 1].max())),
    )


def grid_for_map(road_map: RoadStructure, cell_m: float = 2.0) -> GridSpec:
    """Grid spec anchored at the map's bounding-box min corner."""
    return GridSpec(cell_m, cell_m, bounding_box(road_map).min)


def rasterize(points, spec: GridSpec) -> np.ndarray:
    """Map each point to its integer grid cell: floor((p - origin) / cell size).

    The output has one cell per input point; consecutive duplicates are kept
    so the sequence length is preserved.
    """
    pts = as_points(points)
    ix = np.floor((pts[:, 0] - spec.origin[0]) / spec.lambda_x).astype(np.int64)
    iy = np.floor((pts[:, 1] - spec.origin[1]) / spec.lambda_y).astype(np.int64)
    return np.column_stack([ix, iy])


@njit(cache=True, nogil=True)
def _rows_lower_envelope(g2, nu):
    """Per-row argmin over columns q of (u - q)^2 + g2[row, q].

    Lower-envelope sweep over parabolas; ties resolve to the smallest column
    index (a new parabola only claims cells where it is strictly better).
    """
    n_rows, n_cols = g2.shape
    site = np.empty(n_cols + 1, np.int64)
    bnd = np.empty(n_cols + 1, np.int64)
    for v in range(n_rows):
        k = 0
        site[0] = 0
        bnd[0] = -(1 << 40)
        for q in range(1, n_cols):
            b = 0
            while True:
                p = site[k]
                s_num = (g2[v, q] + q * q) - (g2[v, p] + p * p)
                s_den = 2 * (q - p)
                b = s_num // s_den + 1
                if k > 0 and b <= bnd[k]:
                    k -= 1
                else:
                    break
            k += 1
            site[k] = q
            bnd[k] = b
        j = 0
        for u in range(n_cols):
            while j < k and bnd[j + 1] <= u:
                j += 1
            nu[v, u] = site[j]


def _build_tables(cells: np.ndarray, margin: int):
    """Precompute nearest-occupied-cell tables over the padded cell extent."""
    x0 = int(cells[:, 0].min()) - margin
    x1 = int(cells[:, 0].max()) + margin
    y0 = int(cells[:, 1].min()) - margin
    y1 = int(cells[:, 1].max()) + margin
    w = x1 - x0 + 1
    h = y1 - y0 + 1
    occ = np.zeros((h, w), dtype=bool)
    occ[cells[:, 1] - y0, cells[:, 0] - x0] = True

    # Nearest occupied row within each column, ties to the smaller row.
    cap = w + h + 1
    vgrid = np.broadcast_to(np.arange(h, dtype=np.int64)[:, None], (h, w))
    up = np.maximum.accumulate(np.where(occ, vgrid, -cap), axis=0)
    dn = np.minimum.accumulate(np.where(occ, vgrid, 2 * cap)[::-1], axis=0)[::-1]
    d_up = vgrid - up
    d_dn = dn - vgrid
    vsrc = np.where(d_up <= d_dn, up, dn)
    g = np.minimum(np.minimum(d_up, d_dn), cap)

    g2 = g * g
    nu = np.empty((h, w), dtype=np.int64)
    _rows_lower_envelope(g2, nu)
    near_ix = (nu + x0).astype(np.int32)
    near_iy = (np.take_along_axis(vsrc, nu, axis=1) + y0).astype(np.int32)
    return x0, y0, near_ix, near_iy


@dataclass
class NearestRoadIndex:
    """Exact nearest-occupied-cell lookups over integer cell coordinates.

    Ties on distance break lexicographically on (ix, iy). Queries inside the
    precomputed table are O(1); anything outside falls back to a scan over
    the occupied cells.
    """

    cells: np.ndarray  # (M, 2) int64, lexicographically sorted
    x0: int
    y0: int
    near_ix: np.ndarray  # (H, W) int32, indexed [iy - y0, ix - x0]
    near_iy: np.ndarray
    map_bbox: BBox | None
    margin: int

    def _scan(self, cx: int, cy: int) -> tuple[int, int]:
        dx = self.cells[:, 0] - cx
        dy = self.cells[:, 1] - cy
        i = int(np.argmin(dx * dx + dy * dy))  # first min = lexicographic winner
        return int(self.cells[i, 0]), int(self.cells[i, 1])

    def query(self, cell) -> tuple[int, int]:
        out = self.query_many(np.asarray(cell, dtype=np.int64).reshape(1, 2))
        return int(out[0, 0]), int(out[0, 1])

    def query_many(self, cells) -> np.ndarray:
        q = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
        h, w = self.near_ix.shape
        u = q[:, 0] - self.x0
        v = q[:, 1] - self.y0
        inside = (u >= 0) & (u < w) & (v >= 0) & (v < h)
        out = np.empty_like(q)
        if inside.any():
            out[inside, 0] = self.near_ix[v[inside], u[inside]]
            out[inside, 1] = self.near_iy[v[inside], u[inside]]
        for i in np.nonzero(~inside)[0]:
            out[i] = self._scan(int(q[i, 0]), int(q[i, 1]))
        return out


def build_index_from_cells(cells, map_bbox: BBox | None = None, margin: int = 64) -> NearestRoadIndex:
    """Build a NearestRoadIndex directly from occupied cell coordinates."""
    arr = np.unique(np.asarray(cells, dtype=np.int64).reshape(-1, 2), axis=0)
    if arr.shape[0] == 0:
        raise ParameterError("cannot index an empty occupied set")
    x0, y0, near_ix, near_iy = _build_tables(arr, margin)
    return NearestRoadIndex(arr, x0, y0, near_ix, near_iy, map_bbox, margin)


def build_road_index(
    road_map: RoadStructure, spec: GridSpec, margin: int = 64
) -> tuple[OccupancyGrid, NearestRoadIndex]:
    """Rasterize all roads into an occupancy grid and index it for NN queries."""
    if not road_map.roads:
        raise ParameterError("cannot build an index for an empty road map")
    cells = np.unique(np.concatenate([rasterize(r, spec) for r in road_map.roads]), axis=0)
    grid = OccupancyGrid(spec, frozenset((int(a), int(b)) for a, b in cells))
    index = build_index_from_cells(cells, bounding_box(road_map), margin)
    return grid, index


def nearest_road_cell(index: NearestRoadIndex, cell) -> tuple[int, int]:
    """Nearest occupied cell to `cell` in cell-index Euclidean distance."""
    return index.query(cell)
