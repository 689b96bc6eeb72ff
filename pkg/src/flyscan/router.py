"""Approximate shortest traversal of an anchor set.

The production route is the greedy nearest-neighbor chain; an exhaustive
permutation search is included as a small-instance oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .objective import AnchorSet
from .scanner import ScanPath

__all__ = ["RouteParams", "nn_route", "exact_tsp", "path_length"]

_EXHAUSTIVE_LIMIT = 12
_PERM_BATCH = 500_000


@dataclass(frozen=True)
class RouteParams:
    """Routing knobs.

    The first anchor visited is the one nearest ``start_near`` (the previous
    path's endpoint during iterative scanning, the image origin otherwise).
    ``candidate_subset_size`` bounds how many unvisited anchors are ranked
    per step; the closest of that subset is chosen, so any bound >= 1 yields
    the same chain as the unbounded greedy walk.
    """

    candidate_subset_size: int | None = None
    start_near: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.candidate_subset_size is not None and self.candidate_subset_size < 1:
            raise ValueError("candidate_subset_size must be at least 1 when bounded")


def _start_index(points: np.ndarray, params: RouteParams) -> int:
    ref = np.asarray(params.start_near, dtype=np.float64)
    d = np.hypot(points[:, 0] - ref[0], points[:, 1] - ref[1])
    return int(np.argmin(d))


def nn_route(anchors: AnchorSet, params: RouteParams | None = None) -> ScanPath:
    """Open greedy nearest-neighbor path visiting every anchor exactly once.

    Each step moves to the closest unvisited anchor; distance ties break
    toward the lowest anchor index so the chain is deterministic.
    """
    params = params or RouteParams()
    pts = anchors.points
    n = len(pts)
    if n < 2:
        raise ValueError("routing needs at least 2 anchors")
    order = np.empty(n, dtype=np.intp)
    order[0] = _start_index(pts, params)
    visited = np.zeros(n, dtype=bool)
    visited[order[0]] = True
    cur = pts[order[0]]
    k = params.candidate_subset_size
    for step in range(1, n):
        d = np.hypot(pts[:, 0] - cur[0], pts[:, 1] - cur[1])
        d[visited] = np.inf
        if k is not None and k < n - step:
            subset = np.argpartition(d, k - 1)[:k]
            best = d[subset].min()
            nxt = int(subset[d[subset] == best].min())
        else:
            nxt = int(np.argmin(d))
        order[step] = nxt
        visited[nxt] = True
        cur = pts[nxt]
    return ScanPath(pts[order])


@lru_cache(maxsize=None)
def _tail_perm_array(n_tail: int) -> np.ndarray:
    # only cached for small tails; larger instances stream lazily
    return np.array(list(itertools.permutations(range(n_tail))), dtype=np.intp)


def _tail_perm_batches(n_tail: int):
    if n_tail <= 8:
        yield _tail_perm_array(n_tail)
        return
    stream = itertools.permutations(range(n_tail))
    while True:
        batch = list(itertools.islice(stream, _PERM_BATCH))
        if not batch:
            return
        yield np.asarray(batch, dtype=np.intp)


def exact_tsp(anchors: AnchorSet, params: RouteParams | None = None) -> ScanPath:
    """Minimal-length open path by exhaustive search, fixing the start anchor.

    The start is picked by the same rule as nn_route so the two are directly
    comparable. Restricted to small instances (factorial cost); intended as
    a test oracle, not a production router.
    """
    params = params or RouteParams()
    pts = anchors.points
    n = len(pts)
    if n < 2:
        raise ValueError("routing needs at least 2 anchors")
    if n > _EXHAUSTIVE_LIMIT:
        raise ValueError(
            f"exhaustive search capped at {_EXHAUSTIVE_LIMIT} anchors, got {n}"
        )
    start = _start_index(pts, params)
    rest = np.array([i for i in range(n) if i != start], dtype=np.intp)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])

    best_len = np.inf
    best_order: np.ndarray | None = None
    for batch in _tail_perm_batches(n - 1):
        orders = np.empty((batch.shape[0], n), dtype=np.intp)
        orders[:, 0] = start
        orders[:, 1:] = rest[batch]
        lengths = dist[orders[:, :-1], orders[:, 1:]].sum(axis=1)
        i = int(np.argmin(lengths))
        if lengths[i] < best_len:
            best_len = float(lengths[i])
            best_order = orders[i]
    assert best_order is not None
    return ScanPath(pts[best_order])


def path_length(path: ScanPath) -> float:
    """Total Euclidean length of a polyline; 0 for a single vertex."""
    return path.total_length
