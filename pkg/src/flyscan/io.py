"""File formats: 8-bit PGM images, headerless CSV images, and the CSV
serializations of readout logs, anchor sets, paths, and metric histories."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .grid import ImageGrid, normalize
from .objective import AnchorSet
from .scanner import ReadoutLog, ScanPath

__all__ = [
    "read_pgm",
    "write_pgm",
    "read_csv_image",
    "write_csv_image",
    "read_image",
    "write_image",
    "write_readouts_csv",
    "read_readouts_csv",
    "write_anchors_csv",
    "write_path_csv",
    "write_metrics_csv",
    "write_trace_csv",
]

_WS = b" \t\r\n"


def read_pgm(path) -> np.ndarray:
    """Read a plain (P2) or binary (P5) 8-bit PGM into floats in [0, 1].

    Values are divided by the file's maxval; no min-max stretching, so a
    write/read/write cycle is byte-identical.
    """
    path = Path(path)
    data = path.read_bytes()
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < 4:
        if i >= len(data):
            raise ValueError(f"truncated PGM header in {path}")
        c = data[i : i + 1]
        if c == b"#":
            nl = data.find(b"\n", i)
            i = len(data) if nl < 0 else nl + 1
        elif c in _WS:
            i += 1
        else:
            j = i
            while j < len(data) and data[j : j + 1] not in _WS and data[j : j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    magic = tokens[0]
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise ValueError(f"malformed PGM header in {path}") from exc
    if w < 1 or h < 1:
        raise ValueError(f"bad PGM dimensions {w}x{h} in {path}")
    if not 1 <= maxval <= 255:
        raise ValueError(f"only 8-bit PGM supported, maxval {maxval} in {path}")
    if magic == b"P5":
        raster = data[i + 1 : i + 1 + w * h]
        if len(raster) < w * h:
            raise ValueError(f"truncated P5 raster in {path}")
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    elif magic == b"P2":
        body = data[i:]
        # strip comments before splitting the ASCII samples
        lines = [ln.split(b"#", 1)[0] for ln in body.splitlines()]
        flat = b" ".join(lines).split()
        if len(flat) < w * h:
            raise ValueError(f"truncated P2 raster in {path}")
        values = np.array([int(t) for t in flat[: w * h]], dtype=np.float64)
    else:
        raise ValueError(f"unsupported PNM magic {magic!r} in {path}")
    if values.max(initial=0) > maxval:
        raise ValueError(f"PGM sample exceeds maxval in {path}")
    return values.reshape(h, w) / maxval


def write_pgm(path, img: ImageGrid, binary: bool = True) -> None:
    """Write an image as 8-bit PGM, quantizing values to round(v * 255)."""
    path = Path(path)
    q = np.round(img.values * 255.0).astype(np.uint8)
    header = f"{'P5' if binary else 'P2'}\n{img.width} {img.height}\n255\n"
    if binary:
        path.write_bytes(header.encode("ascii") + q.tobytes())
        return
    lines = []
    flat = q.ravel()
    for lo in range(0, len(flat), 16):  # keep plain-format lines short
        lines.append(" ".join(str(v) for v in flat[lo : lo + 16]))
    path.write_text(header + "\n".join(lines) + "\n", encoding="ascii")


def read_csv_image(path) -> np.ndarray:
    """Read a headerless CSV of floats, one image row per line."""
    arr = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    if arr.size == 0:
        raise ValueError(f"empty CSV image in {path}")
    return arr


def write_csv_image(path, img: ImageGrid) -> None:
    """Write image values as headerless CSV, full float precision."""
    _write_rows(path, None, img.values, "%.17g")


def read_image(path) -> ImageGrid:
    """Load a PGM or CSV image as a normalized grid.

    PGM is scaled by its maxval. CSV values already inside [0, 1] are kept
    as-is; anything else is min-max normalized.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return ImageGrid(read_pgm(path))
    if suffix == ".csv":
        raw = read_csv_image(path)
        if raw.min() >= 0.0 and raw.max() <= 1.0:
            return ImageGrid(raw)
        return normalize(raw)
    raise ValueError(f"unsupported image format {suffix!r} for {path}")


def write_image(path, img: ImageGrid) -> None:
    """Write an image; format chosen from the extension (.pgm or .csv)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        write_pgm(path, img)
    elif suffix == ".csv":
        write_csv_image(path, img)
    else:
        raise ValueError(f"unsupported image format {suffix!r} for {path}")


def _write_rows(path, header: str | None, rows, fmt: str) -> None:
    out = [] if header is None else [header]
    for row in rows:
        out.append(",".join(fmt % v for v in row))
    Path(path).write_text("\n".join(out) + "\n", encoding="ascii")


def write_readouts_csv(path, log: ReadoutLog) -> None:
    """Serialize a readout log with header t,x,y,value at 9 significant digits."""
    rows = zip(log.times, log.xs, log.ys, log.values)
    _write_rows(path, "t,x,y,value", rows, "%.9g")


def read_readouts_csv(path) -> ReadoutLog:
    path = Path(path)
    lines = path.read_text(encoding="ascii").splitlines()
    if not lines or lines[0] != "t,x,y,value":
        head = lines[0] if lines else ""
        raise ValueError(f"unexpected readout CSV header {head!r} in {path}")
    rows = [ln for ln in lines[1:] if ln.strip()]
    if not rows:
        return ReadoutLog.empty()
    body = np.array([[float(v) for v in ln.split(",")] for ln in rows])
    if body.shape[1] != 4:
        raise ValueError(f"readout CSV rows must have 4 columns in {path}")
    return ReadoutLog(body[:, 0], body[:, 1], body[:, 2], body[:, 3])


def write_anchors_csv(path, anchors: AnchorSet) -> None:
    """Serialize anchors with header iter,x,y (iter = generation added)."""
    rows = (
        (int(g), x, y)
        for g, (x, y) in zip(anchors.generation, anchors.points)
    )
    out = ["iter,x,y"]
    for g, x, y in rows:
        out.append(f"{g},{x:.9g},{y:.9g}")
    Path(path).write_text("\n".join(out) + "\n", encoding="ascii")


def write_path_csv(path, scan_path: ScanPath) -> None:
    """Serialize path vertices with header order,x,y."""
    out = ["order,x,y"]
    for i, (x, y) in enumerate(scan_path.vertices):
        out.append(f"{i},{x:.9g},{y:.9g}")
    Path(path).write_text("\n".join(out) + "\n", encoding="ascii")


def write_metrics_csv(path, rows) -> None:
    """Serialize per-iteration metric rows.

    ``rows`` holds objects with iteration, readouts, sampling_fraction,
    psnr_db, and ssim attributes; infinite PSNR is written as ``inf``.
    """
    out = ["iter,readouts,sampling_frac,psnr_db,ssim"]
    for r in rows:
        p = "inf" if math.isinf(r.psnr_db) else f"{r.psnr_db:.6f}"
        out.append(
            f"{r.iteration},{r.readouts},{r.sampling_fraction:.8f},{p},{r.ssim:.6f}"
        )
    Path(path).write_text("\n".join(out) + "\n", encoding="ascii")


def write_trace_csv(path, trace) -> None:
    """Serialize an optimizer (step, loss) trace."""
    out = ["step,loss"]
    for step, value in trace:
        out.append(f"{step},{value:.9g}")
    Path(path).write_text("\n".join(out) + "\n", encoding="ascii")
