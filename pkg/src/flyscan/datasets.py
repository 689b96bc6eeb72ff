"""Bundled test images: a procedurally generated shapes target and the
standard camera test photograph (via scikit-image, when installed)."""

from __future__ import annotations

import numpy as np

from .grid import ImageGrid, normalize

__all__ = ["synthetic_shapes", "cameraman"]


def synthetic_shapes(size: int = 256) -> ImageGrid:
    """Four distinct shapes over a gently varying, lightly textured field.

    A filled rectangle, a disk, a ring, and a triangle at separated
    intensities, spread over the four quadrants so edge content is
    distributed across the field. The background carries a shallow ramp, a
    slow undulation, and a fixed band-limited texture so no region is
    perfectly featureless, much like a real specimen. Deterministic: the
    texture coefficients come from a fixed generator seed.
    """
    if size < 16:
        raise ValueError("shapes image needs size >= 16")
    s = float(size)
    cols, rows = np.meshgrid(np.arange(size, dtype=np.float64),
                             np.arange(size, dtype=np.float64))
    img = 0.08 + 0.14 * (cols + rows) / (2.0 * (s - 1.0))
    img += 0.05 * np.sin(2.0 * np.pi * cols / (0.16 * s)) * np.sin(
        2.0 * np.pi * rows / (0.16 * s)
    )
    coeff = np.random.default_rng(12345)
    n_modes = 16
    texture = np.zeros_like(img)
    for _ in range(n_modes):
        wavelength = coeff.uniform(6.0, 16.0) * (s / 256.0)
        angle = coeff.uniform(0.0, 2.0 * np.pi)
        phase = coeff.uniform(0.0, 2.0 * np.pi)
        fx = np.cos(angle) / wavelength
        fy = np.sin(angle) / wavelength
        texture += np.sin(2.0 * np.pi * (fx * cols + fy * rows) + phase)
    img += 0.04 * texture / np.sqrt(n_modes)

    # rectangle, upper left
    r0, r1 = 0.12 * s, 0.38 * s
    c0, c1 = 0.10 * s, 0.42 * s
    img[(rows >= r0) & (rows < r1) & (cols >= c0) & (cols < c1)] = 0.55

    # disk, upper right
    d2 = (cols - 0.72 * s) ** 2 + (rows - 0.26 * s) ** 2
    img[d2 <= (0.14 * s) ** 2] = 0.95

    # ring, lower left
    d2 = (cols - 0.28 * s) ** 2 + (rows - 0.72 * s) ** 2
    ring = (d2 <= (0.17 * s) ** 2) & (d2 >= (0.10 * s) ** 2)
    img[ring] = 0.75

    # triangle, lower right (vertices chosen so all edges are oblique)
    ax, ay = 0.58 * s, 0.88 * s
    bx, by = 0.92 * s, 0.80 * s
    cx, cy = 0.72 * s, 0.55 * s

    def half_plane(px, py, qx, qy):
        return (qx - px) * (rows - py) - (qy - py) * (cols - px)

    sa = half_plane(ax, ay, bx, by)
    sb = half_plane(bx, by, cx, cy)
    sc = half_plane(cx, cy, ax, ay)
    inside = ((sa >= 0) & (sb >= 0) & (sc >= 0)) | ((sa <= 0) & (sb <= 0) & (sc <= 0))
    img[inside] = 0.35

    return normalize(img)


def cameraman(size: int = 256) -> ImageGrid:
    """The standard 512x512 camera test photograph, block-averaged down.

    Requires scikit-image for the source data; ``size`` must divide 512.
    """
    try:
        from skimage import data
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise ImportError(
            "cameraman() needs scikit-image (pip install scikit-image)"
        ) from exc
    raw = data.camera().astype(np.float64)
    side = raw.shape[0]
    if size < 1 or side % size != 0:
        raise ValueError(f"size must divide {side}, got {size}")
    f = side // size
    pooled = raw.reshape(size, f, size, f).mean(axis=(1, 3))
    return ImageGrid(pooled / 255.0)
