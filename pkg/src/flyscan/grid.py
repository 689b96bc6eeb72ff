"""Dense grayscale image grids with gradient fields and bilinear sampling.

Coordinate convention used throughout the package: ``x`` runs along columns,
``y`` along rows, and integer coordinates sit on pixel centers, so the valid
continuous domain of a ``width x height`` image is ``[0, width-1] x
[0, height-1]``. One pixel spans ``pixel_pitch`` length units (1 nm default).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ImageGrid",
    "GradientField",
    "central_gradient",
    "bilinear_sample",
    "normalize",
    "sample_field",
    "sample_field_with_grad",
]


@dataclass(frozen=True)
class ImageGrid:
    """Normalized grayscale image on a regular pixel grid.

    ``values[row, col]`` holds intensity in [0, 1]. The array is copied on
    construction and frozen, so instances are safe to share across threads.
    """

    values: np.ndarray
    pixel_pitch: float = 1.0

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.size == 0:
            raise ValueError("image values must form a non-empty 2-D array")
        if not np.all(np.isfinite(vals)):
            raise ValueError("image values must all be finite")
        if vals.min() < -1e-9 or vals.max() > 1.0 + 1e-9:
            raise ValueError("image values must lie in [0, 1]; run normalize() first")
        np.clip(vals, 0.0, 1.0, out=vals)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if not self.pixel_pitch > 0:
            raise ValueError("pixel_pitch must be positive")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class GradientField:
    """Per-pixel spatial derivatives of an image plus their L2 magnitude."""

    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray

    def __post_init__(self) -> None:
        for name in ("gx", "gy", "magnitude"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.gx.shape == self.gy.shape == self.magnitude.shape):
            raise ValueError("gradient components must share one shape")

    @property
    def shape(self) -> tuple[int, int]:
        return self.magnitude.shape


def central_gradient(img: ImageGrid) -> GradientField:
    """Finite-difference gradient of an image.

    Interior pixels use the central difference (f[i, j+1] - f[i, j-1]) / 2.
    Border pixels keep the same /2 denominator over the one available
    neighbor so the field is defined everywhere, at half the interior weight.
    """
    if img.width < 3 or img.height < 3:
        raise ValueError(
            f"gradient needs at least a 3x3 image, got {img.height}x{img.width}"
        )
    f = img.values
    gx = np.empty_like(f)
    gy = np.empty_like(f)
    gx[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / 2.0
    gx[:, 0] = (f[:, 1] - f[:, 0]) / 2.0
    gx[:, -1] = (f[:, -1] - f[:, -2]) / 2.0
    gy[1:-1, :] = (f[2:, :] - f[:-2, :]) / 2.0
    gy[0, :] = (f[1, :] - f[0, :]) / 2.0
    gy[-1, :] = (f[-1, :] - f[-2, :]) / 2.0
    mag = np.sqrt(gx * gx + gy * gy)
    return GradientField(gx=gx, gy=gy, magnitude=mag)


def _cell_indices(field: np.ndarray, x, y):
    """Clamp coordinates and locate the bilinear cell for each query point."""
    h, w = field.shape
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, w - 1.0)
    y = np.clip(np.asarray(y, dtype=np.float64), 0.0, h - 1.0)
    x0 = np.minimum(np.floor(x), max(w - 2, 0)).astype(np.intp)
    y0 = np.minimum(np.floor(y), max(h - 2, 0)).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    return x - x0, y - y0, (y0, x0), (y0, x1), (y1, x0), (y1, x1)


def sample_field(field: np.ndarray, x, y) -> np.ndarray:
    """Clamped bilinear interpolation of a raw 2-D field at continuous (x, y).

    Exact at integer coordinates; output is a convex combination of the four
    surrounding pixels. Broadcasts over array-valued coordinates.
    """
    fx, fy, i00, i01, i10, i11 = _cell_indices(field, x, y)
    top = field[i00] * (1.0 - fx) + field[i01] * fx
    bot = field[i10] * (1.0 - fx) + field[i11] * fx
    return top * (1.0 - fy) + bot * fy


def sample_field_with_grad(field: np.ndarray, x, y):
    """Bilinear value plus its (d/dx, d/dy) within the interpolation cell.

    The derivative follows the cell-local bilinear surface, so it is exact
    away from pixel-cell boundaries and takes the lower-cell convention on
    them.
    """
    fx, fy, i00, i01, i10, i11 = _cell_indices(field, x, y)
    v00, v01, v10, v11 = field[i00], field[i01], field[i10], field[i11]
    top = v00 * (1.0 - fx) + v01 * fx
    bot = v10 * (1.0 - fx) + v11 * fx
    val = top * (1.0 - fy) + bot * fy
    dx = (v01 - v00) * (1.0 - fy) + (v11 - v10) * fy
    dy = bot - top
    return val, dx, dy


def bilinear_sample(img: ImageGrid, x, y):
    """Sample an image at continuous coordinates, clamped to the grid.

    Returns a float for scalar coordinates, an array otherwise.
    """
    out = sample_field(img.values, x, y)
    if np.isscalar(x) and np.isscalar(y):
        return float(out)
    return out


def normalize(raw, pixel_pitch: float = 1.0) -> ImageGrid:
    """Affinely map a raw image onto [0, 1].

    The input minimum maps to 0 and the maximum to 1; a constant input maps
    to all zeros rather than raising, so degenerate images stay usable.
    """
    arr = np.asarray(raw, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot normalize an empty image")
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got {arr.ndim} dimensions")
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot normalize an image with non-finite values")
    lo = float(arr.min())
    hi = float(arr.max())
    if hi > lo:
        out = (arr - lo) / (hi - lo)
    else:
        out = np.zeros_like(arr)
    return ImageGrid(out, pixel_pitch=pixel_pitch)
