"""Shared fixtures: small deterministic images and a fast run configuration."""

import numpy as np
import pytest

from flyscan import ImageGrid, ObjectiveParams, ProbeConfig, RunConfig
from flyscan.datasets import synthetic_shapes


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def smooth_image_64():
    """Band-limited random field, 64x64, values spanning [0, 1]."""
    gen = np.random.default_rng(7)
    cols, rows = np.meshgrid(np.arange(64.0), np.arange(64.0))
    field = np.zeros((64, 64))
    for _ in range(12):
        lam = gen.uniform(8.0, 30.0)
        ang = gen.uniform(0.0, 2.0 * np.pi)
        phase = gen.uniform(0.0, 2.0 * np.pi)
        field += gen.uniform(0.3, 1.0) * np.sin(
            2.0 * np.pi * (np.cos(ang) * cols + np.sin(ang) * rows) / lam + phase
        )
    field -= field.min()
    field /= field.max()
    return ImageGrid(field)


@pytest.fixture(scope="session")
def shapes_64():
    return synthetic_shapes(64)


@pytest.fixture
def fast_config():
    """Small-budget configuration for pipeline-level tests."""
    return RunConfig(
        n_anchors=40,
        n_iterations=2,
        n_initial_anchors=8,
        objective=ObjectiveParams(s_steps=8),
        probe=ProbeConfig(),
        seed=11,
        budget_cap=None,
    )
