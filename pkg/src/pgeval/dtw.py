"""Dynamic time warping between 2-D point sequences.

`dtw_exact` runs the full O(n*m) dynamic program. `dtw_fast` implements the
coarsen-project-refine recursion; left unconstrained (the default) its search
window covers the whole cost matrix and it returns the exact distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ParameterError
from .geo import as_points


@dataclass(frozen=True)
class WarpPath:
    """Monotone alignment path as 1-based (i, j) index pairs.

    Starts at (1, 1), ends at (len(X), len(Y)); every step advances i, j, or
    both by exactly one.
    """

    steps: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class DtwResult:
    distance: float
    path: WarpPath


@njit(cache=True, nogil=True)
def _dp_matrix(xa, ya, xb, yb):
    """Full accumulated-cost matrix with an inf border row/column."""
    n, m = xa.shape[0], xb.shape[0]
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            dx = xa[i - 1] - xb[j - 1]
            dy = ya[i - 1] - yb[j - 1]
            cost = math.sqrt(dx * dx + dy * dy)
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = cost + best
    return acc


@njit(cache=True, nogil=True)
def _dp_distance(xa, ya, xb, yb):
    """Distance-only variant of _dp_matrix using two rolling rows."""
    n, m = xa.shape[0], xb.shape[0]
    prev = np.full(m + 1, np.inf)
    curr = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        curr[0] = np.inf
        for j in range(1, m + 1):
            dx = xa[i - 1] - xb[j - 1]
            dy = ya[i - 1] - yb[j - 1]
            cost = math.sqrt(dx * dx + dy * dy)
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if curr[j - 1] < best:
                best = curr[j - 1]
            curr[j] = cost + best
        prev, curr = curr, prev
    return prev[m]


def _backtrack(acc: np.ndarray) -> WarpPath:
    """Recover a warp path from an accumulated-cost matrix.

    Ties prefer the diagonal move, then the i-advance, for deterministic paths.
    """
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    steps = [(i, j)]
    while i > 1 or j > 1:
        diag, up, left = acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1]
        best = min(diag, up, left)
        if diag == best:
            i, j = i - 1, j - 1
        elif up == best:
            i = i - 1
        else:
            j = j - 1
        steps.append((i, j))
    steps.reverse()
    return WarpPath(tuple(steps))


def _validated(X, Y) -> tuple[np.ndarray, np.ndarray]:
    xa = as_points(X)
    ya = as_points(Y)
    if xa.shape[0] == 0 or ya.shape[0] == 0:
        raise ParameterError("DTW requires non-empty sequences")
    return xa, ya


def dtw_exact(X, Y) -> DtwResult:
    """Exact DTW distance and warp path between two point sequences."""
    xa, ya = _validated(X, Y)
    acc = _dp_matrix(
        np.ascontiguousarray(xa[:, 0]), np.ascontiguousarray(xa[:, 1]),
        np.ascontiguousarray(ya[:, 0]), np.ascontiguousarray(ya[:, 1]),
    )
    return DtwResult(float(acc[-1, -1]), _backtrack(acc))


def dtw_distance(X, Y) -> float:
    """Exact DTW distance without path reconstruction (cheaper inner loops)."""
    xa, ya = _validated(X, Y)
    return float(
        _dp_distance(
            np.ascontiguousarray(xa[:, 0]), np.ascontiguousarray(xa[:, 1]),
            np.ascontiguousarray(ya[:, 0]), np.ascontiguousarray(ya[:, 1]),
        )
    )


def _reduce_by_half(pts: np.ndarray) -> np.ndarray:
    n = pts.shape[0] - (pts.shape[0] % 2)
    return (pts[0:n:2] + pts[1:n:2]) / 2.0


def _expand_window(path: WarpPath, n: int, m: int, radius: int):
    """Per-row column ranges for the refined search window.

    Each coarse path cell (ci, cj) covers fine rows {2ci-1, 2ci} and columns
    {2cj-1, 2cj}; ranges are then widened by `radius` in both directions.
    Rows left uncovered by the upscaling (odd-length tails) inherit the last
    covered range so the window always reaches (n, m).
    """
    lo = np.full(n + 1, np.iinfo(np.int64).max, dtype=np.int64)
    hi = np.zeros(n + 1, dtype=np.int64)
    for ci, cj in path.steps:
        for i in (2 * ci - 1, 2 * ci):
            if i > n:
                continue
            jlo, jhi = 2 * cj - 1, 2 * cj
            lo[i] = min(lo[i], jlo)
            hi[i] = max(hi[i], jhi)
    for i in range(1, n + 1):
        if hi[i] == 0:  # uncovered tail row
            lo[i], hi[i] = lo[i - 1], m
    out_lo = np.empty(n + 1, dtype=np.int64)
    out_hi = np.empty(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        a = max(1, i - radius)
        b = min(n, i + radius)
        out_lo[i] = max(1, int(lo[a:b + 1].min()) - radius)
        out_hi[i] = min(m, int(hi[a:b + 1].max()) + radius)
    return out_lo, out_hi


def _windowed_dtw(xa: np.ndarray, ya: np.ndarray, lo, hi) -> DtwResult:
    n, m = xa.shape[0], ya.shape[0]
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        a, b = int(lo[i]), int(hi[i])
        for j in range(a, b + 1):
            dx = xa[i - 1, 0] - ya[j - 1, 0]
            dy = xa[i - 1, 1] - ya[j - 1, 1]
            cost = math.hypot(dx, dy)
            best = min(acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
            acc[i, j] = cost + best
    return DtwResult(float(acc[n, m]), _backtrack(acc))


def _fastdtw(xa: np.ndarray, ya: np.ndarray, radius: int) -> DtwResult:
    min_size = radius + 2
    if xa.shape[0] <= min_size or ya.shape[0] <= min_size:
        acc = _dp_matrix(
            np.ascontiguousarray(xa[:, 0]), np.ascontiguousarray(xa[:, 1]),
            np.ascontiguousarray(ya[:, 0]), np.ascontiguousarray(ya[:, 1]),
        )
        return DtwResult(float(acc[-1, -1]), _backtrack(acc))
    coarse = _fastdtw(_reduce_by_half(xa), _reduce_by_half(ya), radius)
    lo, hi = _expand_window(coarse.path, xa.shape[0], ya.shape[0], radius)
    return _windowed_dtw(xa, ya, lo, hi)


def dtw_fast(X, Y, radius: int | None = None) -> DtwResult:
    """Coarsen-project-refine DTW.

    Args:
        X, Y: point sequences.
        radius: window half-width around the projected coarse path. The
            default (None) leaves the window unconstrained, which degenerates
            to the exact dynamic program; any radius >= max(len(X), len(Y))
            behaves the same way.
    """
    xa, ya = _validated(X, Y)
    if radius is None:
        radius = max(xa.shape[0], ya.shape[0])
    radius = int(radius)
    if radius < 0:
        raise ParameterError(f"radius must be >= 0, got {radius}")
    return _fastdtw(xa, ya, radius)
