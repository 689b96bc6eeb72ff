"""Adaptive continuous-scan simulation with anchor-point path planning and
inverse-distance-weighted image completion."""

from .completion import IdwParams, idw_complete, merge_logs
from .errors import ConfigError, FlyscanError, NumericalError
from .grid import (
    GradientField,
    ImageGrid,
    bilinear_sample,
    central_gradient,
    normalize,
)
from .metrics import MetricReport, mse, psnr, report, ssim
from .objective import (
    AnchorSet,
    ObjectiveParams,
    adam_optimize,
    ewuf,
    loss,
    loss_gradient,
    score_sample,
)
from .pipeline import (
    MetricRow,
    RunConfig,
    RunState,
    SweepRow,
    initial_scan,
    raster_reference,
    raster_reference_count,
    run_full,
    run_iteration,
    run_random_baseline,
    sweep,
)
from .router import RouteParams, exact_tsp, nn_route, path_length
from .scanner import (
    ProbeConfig,
    ReadoutLog,
    ScanPath,
    expected_readout_count,
    fly_scan,
    raster_path,
    raster_reference_spacing,
    sampling_fraction,
    truncate_path,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorSet",
    "ConfigError",
    "FlyscanError",
    "GradientField",
    "IdwParams",
    "ImageGrid",
    "MetricReport",
    "MetricRow",
    "NumericalError",
    "ObjectiveParams",
    "ProbeConfig",
    "ReadoutLog",
    "RouteParams",
    "RunConfig",
    "RunState",
    "ScanPath",
    "SweepRow",
    "adam_optimize",
    "bilinear_sample",
    "central_gradient",
    "ewuf",
    "exact_tsp",
    "expected_readout_count",
    "fly_scan",
    "idw_complete",
    "initial_scan",
    "loss",
    "loss_gradient",
    "merge_logs",
    "mse",
    "nn_route",
    "normalize",
    "path_length",
    "psnr",
    "raster_path",
    "raster_reference",
    "raster_reference_count",
    "raster_reference_spacing",
    "report",
    "run_full",
    "run_iteration",
    "run_random_baseline",
    "sampling_fraction",
    "score_sample",
    "ssim",
    "sweep",
    "truncate_path",
]
