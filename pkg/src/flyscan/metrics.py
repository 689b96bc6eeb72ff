"""Image quality metrics for normalized grids (dynamic range MAX = 1)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import ImageGrid

__all__ = ["MetricReport", "mse", "psnr", "ssim", "report"]

_C1 = 0.01**2
_C2 = 0.03**2


@dataclass(frozen=True)
class MetricReport:
    """MSE, PSNR in decibels (+inf iff MSE is zero), and global SSIM."""

    mse: float
    psnr_db: float
    ssim: float


def _check_shapes(a: ImageGrid, b: ImageGrid) -> None:
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")


def mse(a: ImageGrid, b: ImageGrid) -> float:
    """Mean squared error between two images of identical dimensions."""
    _check_shapes(a, b)
    diff = a.values - b.values
    return float(np.mean(diff * diff))


def psnr(a: ImageGrid, b: ImageGrid) -> float:
    """Peak signal-to-noise ratio in dB, 10*log10(1/MSE) for unit range."""
    m = mse(a, b)
    if m == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / m)


def ssim(a: ImageGrid, b: ImageGrid) -> float:
    """Structural similarity from global means, variances, and covariance.

    Single-window form: no sliding window, one statistic per image. The
    stabilizing constants use the conventional 0.01 and 0.03 of the unit
    dynamic range.
    """
    _check_shapes(a, b)
    av = a.values
    bv = b.values
    mu_a = float(av.mean())
    mu_b = float(bv.mean())
    var_a = float(np.mean(av * av)) - mu_a * mu_a
    var_b = float(np.mean(bv * bv)) - mu_b * mu_b
    cov = float(np.mean(av * bv)) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + _C1) * (2.0 * cov + _C2)
    den = (mu_a * mu_a + mu_b * mu_b + _C1) * (var_a + var_b + _C2)
    return num / den


def report(recon: ImageGrid, reference: ImageGrid) -> MetricReport:
    """Bundle all three metrics of a reconstruction against its reference."""
    return MetricReport(
        mse=mse(recon, reference),
        psnr_db=psnr(recon, reference),
        ssim=ssim(recon, reference),
    )
