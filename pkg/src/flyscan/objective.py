"""Anchor-point selection machinery.

Candidate anchors are seeded proportionally to the reconstruction's gradient
magnitude, then refined with ADAM against a loss that trades exploration (an
uncertainty term that saturates far from scanned points) against
exploitation (interpolated gradient magnitude at the candidates).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import NumericalError
from .grid import GradientField, ImageGrid, central_gradient, sample_field_with_grad

__all__ = [
    "AnchorSet",
    "ObjectiveParams",
    "score_sample",
    "ewuf",
    "loss",
    "loss_gradient",
    "adam_optimize",
]

# anchors closer than this are considered the same point
DEDUPE_TOL = 1e-9


@dataclass(frozen=True)
class AnchorSet:
    """Ordered continuous (x, y) anchor coordinates with the iteration that
    added each one.

    Construction drops points within DEDUPE_TOL of an earlier point, keeping
    first occurrences, so a set never holds effective duplicates.
    """

    points: np.ndarray
    generation: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("anchor points must form an (n, 2) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("anchor points must be finite")
        gen = self.generation
        if gen is None:
            gen = np.zeros(len(pts), dtype=np.int64)
        gen = np.array(gen, dtype=np.int64)
        if gen.shape != (len(pts),):
            raise ValueError("generation must hold one entry per anchor")
        if len(pts) > 1:
            drop = set()
            for i, j in cKDTree(pts).query_pairs(DEDUPE_TOL):
                drop.add(max(i, j))
            if drop:
                keep = np.array([i for i in range(len(pts)) if i not in drop])
                pts = pts[keep]
                gen = gen[keep]
        pts.setflags(write=False)
        gen.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "generation", gen)

    def __len__(self) -> int:
        return len(self.points)

    def union(self, other: "AnchorSet") -> "AnchorSet":
        """Append ``other``'s anchors, keeping this set's point on collisions."""
        if len(other) == 0:
            return self
        if len(self) == 0:
            return other
        d, _ = cKDTree(self.points).query(other.points, k=1)
        fresh = d > DEDUPE_TOL
        return AnchorSet(
            np.vstack([self.points, other.points[fresh]]),
            np.concatenate([self.generation, other.generation[fresh]]),
        )


@dataclass(frozen=True)
class ObjectiveParams:
    """Hyperparameters of the anchor objective and its ADAM loop.

    alpha scales the uncertainty term against the gradient term, ell is the
    characteristic length (pixels) normalizing squared distances, sigma the
    assumed noise standard deviation bounding the uncertainty, and beta the
    ADAM learning rate in pixels.
    """

    alpha: float = 10.0
    ell: float = 4.0
    sigma: float = 1.0
    m_neighbors: int = 8
    epsilon_log: float = 1e-8
    beta: float = 0.5
    adam_b1: float = 0.9
    adam_b2: float = 0.999
    adam_eps: float = 1e-8
    s_steps: int = 50

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not self.ell > 0:
            raise ValueError("ell must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.m_neighbors < 1:
            raise ValueError("m_neighbors must be at least 1")
        if not self.epsilon_log > 0:
            raise ValueError("epsilon_log must be positive")
        if self.s_steps < 0:
            raise ValueError("s_steps must be non-negative")
        if not (0 <= self.adam_b1 < 1 and 0 <= self.adam_b2 < 1):
            raise ValueError("ADAM decay rates must lie in [0, 1)")


def score_sample(
    recon: ImageGrid,
    n: int,
    rng,
    grad: GradientField | None = None,
    generation: int = 0,
) -> AnchorSet:
    """Draw ``n`` distinct pixels with probability proportional to gradient
    magnitude, placed at pixel-cell centers (+0.5 in each axis, clamped).

    When the magnitude vanishes everywhere the draw falls back to uniform;
    when it vanishes on part of the image and the support is smaller than
    ``n``, the remainder is drawn uniformly from the zero-probability pixels.
    ``rng`` accepts a seed or a numpy Generator.
    """
    rng = np.random.default_rng(rng)
    if grad is None:
        grad = central_gradient(recon)
    h, w = recon.shape
    n_pixels = w * h
    if n < 1:
        raise ValueError("anchor count must be at least 1")
    if n > n_pixels:
        raise ValueError(f"cannot draw {n} distinct pixels from {n_pixels}")
    weights = grad.magnitude.ravel()
    total = weights.sum()
    if total > 0:
        p = weights / total
        support = int(np.count_nonzero(p))
        take = min(n, support)
        idx = rng.choice(n_pixels, size=take, replace=False, p=p)
        if take < n:
            pool = np.flatnonzero(p == 0)
            extra = rng.choice(pool, size=n - take, replace=False)
            idx = np.concatenate([idx, extra])
    else:
        idx = rng.choice(n_pixels, size=n, replace=False)
    x = np.minimum((idx % w) + 0.5, w - 1.0)
    y = np.minimum((idx // w) + 0.5, h - 1.0)
    return AnchorSet(
        np.column_stack([x, y]), np.full(len(idx), generation, dtype=np.int64)
    )


def _neighbor_terms(qpts: np.ndarray, tree: cKDTree, m: int, ell: float):
    """Per-query softmax-weighted normalized squared distances.

    Returns (d, lam, e, idx): d the squared distances over ell^2 to the m
    nearest scanned points, lam the per-query softmax of -d (rows sum to 1),
    e the weighted sums sum_j lam_ij d_ij, idx the neighbor indices.
    """
    dist, idx = tree.query(qpts, k=m)
    if m == 1:
        dist = dist[:, None]
        idx = idx[:, None]
    d = (dist * dist) / (ell * ell)
    z = -d
    z = z - z.max(axis=1, keepdims=True)  # shift so the softmax never underflows
    wgt = np.exp(z)
    lam = wgt / wgt.sum(axis=1, keepdims=True)
    e = (lam * d).sum(axis=1)
    return d, lam, e, idx


def ewuf(query: AnchorSet, scanned: AnchorSet, params: ObjectiveParams) -> float:
    """Mean exponentially weighted uncertainty of the query points.

    Each query contributes sigma^2 * (1 - exp(-sum_j lam_ij d_ij)) over its
    min(m_neighbors, |scanned|) nearest scanned points: zero when it sits on
    a scanned point, saturating toward sigma^2 far from all of them.
    """
    if len(query) == 0:
        raise ValueError("query set must not be empty")
    if len(scanned) == 0:
        raise ValueError("scanned set must not be empty")
    tree = cKDTree(scanned.points)
    m = min(params.m_neighbors, len(scanned))
    _, _, e, _ = _neighbor_terms(query.points, tree, m, params.ell)
    u = params.sigma**2 * (1.0 - np.exp(-e))
    return float(u.mean())


def _loss_and_grad(
    magnitude: np.ndarray,
    qpts: np.ndarray,
    scanned_pts: np.ndarray,
    tree: cKDTree,
    params: ObjectiveParams,
):
    """Loss value and its analytic gradient w.r.t. each candidate coordinate.

    The neighbor assignment is held fixed while differentiating; both the
    uncertainty and the interpolated-magnitude terms are otherwise exact.
    """
    n = len(qpts)
    m = min(params.m_neighbors, len(scanned_pts))
    d, lam, e, idx = _neighbor_terms(qpts, tree, m, params.ell)
    sig2 = params.sigma**2
    exp_e = np.exp(-e)
    u = float((sig2 * (1.0 - exp_e)).mean())

    bval, bdx, bdy = sample_field_with_grad(magnitude, qpts[:, 0], qpts[:, 1])
    g_norm = float(np.sqrt((bval * bval).sum()))

    eps = params.epsilon_log
    value = -(params.alpha * np.log(u + eps) + np.log(g_norm + eps))

    # d(sum_j lam_j d_j)/dd_m = lam_m (1 + e - d_m), chained through
    # d_m(xi) = |xi - p_m|^2 / ell^2
    diff = qpts[:, None, :] - scanned_pts[idx]
    coeff = lam * (1.0 + e[:, None] - d)
    ge = (2.0 / params.ell**2) * (coeff[:, :, None] * diff).sum(axis=1)
    du = (sig2 / n) * exp_e[:, None] * ge
    out = -(params.alpha / (u + eps)) * du
    if g_norm > 0:
        bgrad = np.column_stack([bdx, bdy])
        out -= (bval / g_norm)[:, None] * bgrad / (g_norm + eps)
    return float(value), out


def loss(
    grad: GradientField,
    candidate: AnchorSet,
    scanned: AnchorSet,
    params: ObjectiveParams,
) -> float:
    """Anchor-set objective: lower is better.

    -(alpha * log(uncertainty + eps) + log(G + eps)) where G is the
    Euclidean norm of the interpolated gradient magnitude at the candidates.
    """
    if len(candidate) == 0:
        raise ValueError("candidate set must not be empty")
    if len(scanned) == 0:
        raise ValueError("scanned set must not be empty")
    tree = cKDTree(scanned.points)
    value, _ = _loss_and_grad(
        grad.magnitude, candidate.points, scanned.points, tree, params
    )
    return value


def loss_gradient(
    grad: GradientField,
    candidate: AnchorSet,
    scanned: AnchorSet,
    params: ObjectiveParams,
) -> np.ndarray:
    """Analytic d(loss)/d(candidate coordinates), shape (n, 2)."""
    if len(candidate) == 0:
        raise ValueError("candidate set must not be empty")
    if len(scanned) == 0:
        raise ValueError("scanned set must not be empty")
    tree = cKDTree(scanned.points)
    _, g = _loss_and_grad(
        grad.magnitude, candidate.points, scanned.points, tree, params
    )
    return g


def adam_optimize(
    grad: GradientField,
    initial: AnchorSet,
    scanned: AnchorSet,
    params: ObjectiveParams,
    return_trace: bool = False,
):
    """Refine candidate anchors with ADAM; previously scanned anchors stay fixed.

    Coordinates are clamped to the image bounds after every step and the
    best iterate (by loss, including the starting set) is returned, so the
    result never scores worse than the input. With ``return_trace`` the
    (step, loss) history comes back alongside the anchors.
    """
    if len(scanned) == 0:
        raise ValueError("scanned set must not be empty")
    if len(initial) == 0:
        raise ValueError("candidate set must not be empty")
    if params.s_steps == 0:
        return (initial, []) if return_trace else initial

    h, w = grad.shape
    tree = cKDTree(scanned.points)
    x = initial.points.copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    b1, b2 = params.adam_b1, params.adam_b2

    value, g = _loss_and_grad(grad.magnitude, x, scanned.points, tree, params)
    best_value, best_x = value, x.copy()
    trace = [(0, value)]
    for s in range(1, params.s_steps + 1):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m / (1.0 - b1**s)
        v_hat = v / (1.0 - b2**s)
        x = x - params.beta * m_hat / (np.sqrt(v_hat) + params.adam_eps)
        np.clip(x[:, 0], 0.0, w - 1.0, out=x[:, 0])
        np.clip(x[:, 1], 0.0, h - 1.0, out=x[:, 1])
        value, g = _loss_and_grad(grad.magnitude, x, scanned.points, tree, params)
        if not np.isfinite(value):
            raise NumericalError(f"anchor optimization diverged at step {s}")
        trace.append((s, value))
        if value < best_value:
            best_value, best_x = value, x.copy()
    result = AnchorSet(best_x, initial.generation)
    return (result, trace) if return_trace else result
