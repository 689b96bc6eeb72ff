"""Image completion from scattered readouts by inverse-distance weighting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .grid import ImageGrid
from .scanner import ReadoutLog

__all__ = ["IdwParams", "idw_complete", "merge_logs"]


@dataclass(frozen=True)
class IdwParams:
    """Interpolation knobs: neighbor truncation, exact-hit radius, and the
    exponent on distance in the weight (2 gives inverse-square weighting)."""

    k_idw: int = 8
    exact_hit_tol: float = 1e-6
    power: float = 2.0

    def __post_init__(self) -> None:
        if self.k_idw < 1:
            raise ValueError("k_idw must be at least 1")
        if not self.exact_hit_tol > 0:
            raise ValueError("exact_hit_tol must be positive")
        if not self.power > 0:
            raise ValueError("power must be positive")


def idw_complete(
    log: ReadoutLog, width: int, height: int, params: IdwParams | None = None
) -> ImageGrid:
    """Fill a width x height grid from readouts.

    Every pixel center takes the inverse-distance-weighted mean of its
    ``k_idw`` nearest readouts, w_j = 1 / |pixel - p_j|^power. A pixel lying
    within ``exact_hit_tol`` of a readout copies the nearest readout's value
    verbatim, which also resolves the 1/0 weight singularity.
    """
    params = params or IdwParams()
    if len(log) == 0:
        raise ValueError("cannot complete an image from an empty readout log")
    if width < 1 or height < 1:
        raise ValueError("target grid must have positive dimensions")
    tree = cKDTree(log.positions)
    cols, rows = np.meshgrid(np.arange(width), np.arange(height))
    queries = np.column_stack([cols.ravel(), rows.ravel()]).astype(np.float64)
    k = min(params.k_idw, len(log))
    dist, idx = tree.query(queries, k=k)
    if k == 1:
        dist = dist[:, None]
        idx = idx[:, None]
    vals = log.values[idx]
    out = np.empty(len(queries))
    hit = dist[:, 0] <= params.exact_hit_tol
    out[hit] = vals[hit, 0]
    miss = ~hit
    w = dist[miss] ** (-params.power)
    out[miss] = (w * vals[miss]).sum(axis=1) / w.sum(axis=1)
    return ImageGrid(out.reshape(height, width))


def merge_logs(
    previous: ReadoutLog, new: ReadoutLog, tol: float = 1e-6
) -> ReadoutLog:
    """Concatenate two logs; where positions coincide within ``tol`` the
    newest value wins (the older entry is dropped).

    Timestamps are expected to continue across logs; if the new log starts
    at or before the retained history it is shifted forward by one readout
    gap to keep times strictly increasing.
    """
    if len(previous) == 0:
        return new
    if len(new) == 0:
        return previous
    d, _ = cKDTree(new.positions).query(previous.positions, k=1)
    keep = d > tol
    t_prev = previous.times[keep]
    t_new = new.times
    if len(t_prev) and t_new[0] <= t_prev[-1]:
        if len(t_new) > 1:
            gap = float(t_new[1] - t_new[0])
        elif len(t_prev) > 1:
            gap = float(t_prev[-1] - t_prev[-2])
        else:
            gap = 1.0
        t_new = t_new + (t_prev[-1] - t_new[0] + gap)
    return ReadoutLog(
        np.concatenate([t_prev, t_new]),
        np.concatenate([previous.xs[keep], new.xs]),
        np.concatenate([previous.ys[keep], new.ys]),
        np.concatenate([previous.values[keep], new.values]),
    )
