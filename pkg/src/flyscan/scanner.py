"""Continuous-motion probe simulation.

A probe sweeps a polyline at constant speed, integrating signal during
exposure windows separated by dead time. Each completed window yields one
detector readout whose logged position is the arc-length midpoint of the
window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import ImageGrid, sample_field

__all__ = [
    "ProbeConfig",
    "ScanPath",
    "ReadoutLog",
    "fly_scan",
    "raster_path",
    "raster_reference_spacing",
    "expected_readout_count",
    "truncate_path",
    "sampling_fraction",
]

# windows per chunk when vectorizing dense scans, keeps peak memory modest
_CHUNK = 65536


@dataclass(frozen=True)
class ProbeConfig:
    """Physics of the scanning probe.

    speed is in length units per second, times in seconds, beam_radius in
    pixels. ``n_substeps`` point samples are averaged per exposure window and
    each sample averages ``n_footprint`` fixed offsets inside the beam disk.
    """

    speed: float = 1.0
    exposure_time: float = 0.5
    dead_time: float = 0.02
    beam_radius: float = 0.5
    n_substeps: int = 8
    n_footprint: int = 5

    def __post_init__(self) -> None:
        if not self.speed > 0:
            raise ValueError("speed must be positive")
        if not self.exposure_time > 0:
            raise ValueError("exposure_time must be positive")
        if self.dead_time < 0:
            raise ValueError("dead_time must be non-negative")
        if self.beam_radius < 0:
            raise ValueError("beam_radius must be non-negative")
        if self.n_substeps < 1 or self.n_footprint < 1:
            raise ValueError("n_substeps and n_footprint must be at least 1")

    @property
    def period(self) -> float:
        """Seconds between consecutive readouts (exposure + dead time)."""
        return self.exposure_time + self.dead_time

    def footprint_offsets(self) -> np.ndarray:
        """Fixed quadrature stencil over the beam disk, shape (n_footprint, 2).

        One sample at the beam center plus n_footprint - 1 points evenly
        spaced on the circle of radius beam_radius / sqrt(2).
        """
        n = self.n_footprint
        offsets = np.zeros((n, 2))
        if n > 1 and self.beam_radius > 0:
            ang = 2.0 * np.pi * np.arange(n - 1) / (n - 1)
            r = self.beam_radius / np.sqrt(2.0)
            offsets[1:, 0] = r * np.cos(ang)
            offsets[1:, 1] = r * np.sin(ang)
        return offsets


@dataclass(frozen=True)
class ScanPath:
    """Polyline through continuous (x, y) coordinates with arc-length metadata."""

    vertices: np.ndarray
    cumulative_length: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        verts = np.array(self.vertices, dtype=np.float64)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 1:
            raise ValueError("path vertices must form an (n, 2) array, n >= 1")
        if not np.all(np.isfinite(verts)):
            raise ValueError("path vertices must be finite")
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        seg = np.hypot(np.diff(verts[:, 0]), np.diff(verts[:, 1]))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        cum.setflags(write=False)
        object.__setattr__(self, "cumulative_length", cum)

    @property
    def total_length(self) -> float:
        return float(self.cumulative_length[-1])

    def position_at(self, s):
        """Point(s) on the polyline at arc length ``s``, clamped to the ends."""
        s = np.clip(np.asarray(s, dtype=np.float64), 0.0, self.total_length)
        x = np.interp(s, self.cumulative_length, self.vertices[:, 0])
        y = np.interp(s, self.cumulative_length, self.vertices[:, 1])
        return x, y


@dataclass(frozen=True)
class ReadoutLog:
    """Timestamped (position, value) samples from the simulated detector."""

    times: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        for name in ("times", "xs", "ys", "values"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be a 1-D array")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.times)
        if not (len(self.xs) == len(self.ys) == len(self.values) == n):
            raise ValueError("readout arrays must share one length")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("readout times must be strictly increasing")
        if n and (self.values.min() < -1e-9 or self.values.max() > 1.0 + 1e-9):
            raise ValueError("readout values must lie in [0, 1]")

    @classmethod
    def empty(cls) -> "ReadoutLog":
        z = np.empty(0)
        return cls(z, z, z, z)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def positions(self) -> np.ndarray:
        """(n, 2) array of readout coordinates."""
        return np.column_stack([self.xs, self.ys])


def expected_readout_count(path: ScanPath, probe: ProbeConfig) -> int:
    """Readouts a fly scan of ``path`` will emit; 0 if no exposure window fits.

    Window i integrates over arc time [i*period, i*period + t_e] and counts
    when its exposure fits within the traversal.
    """
    duration = path.total_length / probe.speed
    if duration + 1e-12 < probe.exposure_time:
        return 0
    return int(np.floor((duration - probe.exposure_time) / probe.period + 1e-9)) + 1


def fly_scan(
    img: ImageGrid, path: ScanPath, probe: ProbeConfig, t_start: float = 0.0
) -> ReadoutLog:
    """Simulate a continuous scan of ``img`` along ``path``.

    Readouts are emitted at period t_e + t_d. Each value is the mean of
    ``n_substeps`` equally spaced arc-length samples within the exposure
    window, each averaged over the beam-footprint stencil. The trailing
    window that does not complete its exposure is discarded. ``t_start``
    offsets the logged timestamps so successive scans stay chronological.
    """
    n = expected_readout_count(path, probe)
    if n == 0:
        raise ValueError(
            f"path too short for one exposure window: length {path.total_length:.6g} "
            f"< speed*t_e = {probe.speed * probe.exposure_time:.6g}"
        )
    span = probe.exposure_time * probe.speed
    starts = np.arange(n) * (probe.period * probe.speed)
    if probe.n_substeps == 1:
        frac = np.array([0.5])
    else:
        frac = np.linspace(0.0, 1.0, probe.n_substeps)
    offsets = probe.footprint_offsets()

    values = np.empty(n)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        s = starts[lo:hi, None] + span * frac[None, :]
        px, py = path.position_at(s)
        sx = px[:, :, None] + offsets[:, 0][None, None, :]
        sy = py[:, :, None] + offsets[:, 1][None, None, :]
        values[lo:hi] = sample_field(img.values, sx, sy).mean(axis=(1, 2))

    mx, my = path.position_at(starts + span / 2.0)
    times = t_start + np.arange(n) * probe.period + probe.exposure_time / 2.0
    return ReadoutLog(times, mx, my, values)


def raster_path(img: ImageGrid, line_spacing: float) -> ScanPath:
    """Serpentine path covering the full image extent at the given row spacing.

    Rows run along x; the final row is pinned to y = height - 1 so coverage
    is complete even when the spacing does not divide the extent evenly.
    """
    if not line_spacing > 0:
        raise ValueError("line_spacing must be positive")
    w, h = img.width, img.height
    y_extent = float(h - 1)
    ys = [i * line_spacing for i in range(int(y_extent / line_spacing + 1e-9) + 1)]
    if ys[-1] < y_extent - 1e-9:
        ys.append(y_extent)
    verts = []
    for i, y in enumerate(ys):
        if i % 2 == 0:
            verts.extend([(0.0, y), (float(w - 1), y)])
        else:
            verts.extend([(float(w - 1), y), (0.0, y)])
    return ScanPath(np.array(verts))


def raster_reference_spacing(
    img: ImageGrid, probe: ProbeConfig, readouts_per_pixel: float = 4.0
) -> float:
    """Row spacing for the dense reference raster.

    Chosen so the serpentine's readout count is close to
    ``readouts_per_pixel`` times the pixel count under the probe physics.
    """
    w, h = img.width, img.height
    if w < 2 or h < 2:
        raise ValueError("raster reference needs at least a 2x2 image")
    target_length = readouts_per_pixel * probe.speed * probe.period * w * h
    x_extent = float(w - 1)
    y_extent = float(h - 1)
    n_lines = max(2, round((target_length - y_extent) / x_extent))
    return y_extent / (n_lines - 1)


def truncate_path(path: ScanPath, max_readouts: int, probe: ProbeConfig) -> ScanPath:
    """Shorten a path so a fly scan emits at most ``max_readouts`` readouts."""
    if max_readouts < 1:
        raise ValueError("max_readouts must be at least 1")
    need = probe.speed * ((max_readouts - 1) * probe.period + probe.exposure_time)
    need += 1e-9
    if need >= path.total_length:
        return path
    cut = int(np.searchsorted(path.cumulative_length, need))
    px, py = path.position_at(need)
    verts = np.vstack([path.vertices[:cut], [px, py]])
    return ScanPath(verts)


def sampling_fraction(log: ReadoutLog, raster_reference: int) -> float:
    """Readout count of ``log`` relative to the dense raster readout count."""
    if raster_reference <= 0:
        raise ValueError("raster reference count must be positive")
    return len(log) / raster_reference
