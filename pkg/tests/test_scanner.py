"""Probe physics: exposure windows, readout placement, raster coverage."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from flyscan import (
    ImageGrid,
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


@pytest.fixture
def ramp_image():
    # f(x, y) = x / (w - 1) so the field is linear along every row
    w, h = 40, 8
    return ImageGrid(np.tile(np.arange(w) / (w - 1.0), (h, 1)))


def horizontal_path(y, x0, x1):
    return ScanPath([[x0, y], [x1, y]])


class TestProbeConfig:
    def test_default_physics_constants(self):
        p = ProbeConfig()
        assert (p.speed, p.exposure_time, p.dead_time) == (1.0, 0.5, 0.02)
        assert p.period == 0.52

    def test_validation(self):
        with pytest.raises(ValueError):
            ProbeConfig(speed=0.0)
        with pytest.raises(ValueError):
            ProbeConfig(dead_time=-0.1)
        with pytest.raises(ValueError):
            ProbeConfig(n_substeps=0)

    def test_footprint_stencil(self):
        offs = ProbeConfig(beam_radius=0.5, n_footprint=5).footprint_offsets()
        assert offs.shape == (5, 2)
        assert_allclose(offs[0], [0.0, 0.0])
        assert_allclose(np.hypot(offs[1:, 0], offs[1:, 1]), 0.5 / np.sqrt(2))
        assert_allclose(ProbeConfig(beam_radius=0.0).footprint_offsets(), 0.0)


class TestScanPath:
    def test_cumulative_length(self):
        p = ScanPath([[0, 0], [3, 4], [3, 10]])
        assert_allclose(p.cumulative_length, [0.0, 5.0, 11.0])
        assert p.total_length == 11.0

    def test_single_vertex(self):
        p = ScanPath([[2, 2]])
        assert p.total_length == 0.0

    def test_position_interpolation(self):
        p = ScanPath([[0, 0], [10, 0], [10, 5]])
        x, y = p.position_at([0.0, 5.0, 12.0, 15.0])
        assert_allclose(x, [0, 5, 10, 10])
        assert_allclose(y, [0, 0, 2, 5])


class TestFlyScan:
    def test_constant_image_constant_readouts(self):
        img = ImageGrid(np.full((6, 30), 0.4))
        log = fly_scan(img, horizontal_path(2.0, 0.0, 29.0), ProbeConfig())
        assert len(log) > 0
        assert_allclose(log.values, 0.4, atol=1e-12)

    def test_ramp_readout_is_window_midpoint_value(self, ramp_image):
        # mean of a linear field over a symmetric window equals its midpoint
        probe = ProbeConfig(beam_radius=0.0)
        log = fly_scan(ramp_image, horizontal_path(3.0, 0.0, 39.0), probe)
        expected_mid_x = np.arange(len(log)) * 0.52 + 0.25
        assert_allclose(log.xs, expected_mid_x, atol=1e-12)
        assert_allclose(log.values, expected_mid_x / 39.0, atol=1e-12)

    def test_consecutive_midpoints_spaced_at_period(self, ramp_image):
        log = fly_scan(ramp_image, horizontal_path(1.0, 0.0, 39.0), ProbeConfig())
        assert_allclose(np.diff(log.xs), 0.52, atol=1e-12)
        assert_allclose(np.diff(log.times), 0.52, atol=1e-12)

    def test_point_sampling_degenerate_mode(self, ramp_image):
        probe = ProbeConfig(beam_radius=0.0, n_substeps=1, n_footprint=1)
        log = fly_scan(ramp_image, horizontal_path(0.0, 0.0, 39.0), probe)
        mid_x = np.arange(len(log)) * 0.52 + 0.25
        assert_allclose(log.values, mid_x / 39.0, atol=1e-14)

    def test_count_matches_window_fit_formula(self, ramp_image):
        probe = ProbeConfig()
        for length in (0.5, 0.52, 1.0, 5.2, 17.3, 39.0):
            path = horizontal_path(0.0, 0.0, length)
            n = expected_readout_count(path, probe)
            assert n == int(np.floor((length - 0.5) / 0.52 + 1e-9)) + 1
            assert len(fly_scan(ramp_image, path, probe)) == n

    def test_count_matches_floor_formula_generically(self, ramp_image):
        # floor(T / period) whenever the tail is shorter than the exposure
        probe = ProbeConfig()
        gen = np.random.default_rng(2)
        for _ in range(200):
            length = gen.uniform(1.0, 39.0)
            if (length % probe.period) >= probe.exposure_time:
                continue
            n = expected_readout_count(horizontal_path(0, 0.0, length), probe)
            assert n == int(np.floor(length / probe.period))

    def test_doubling_speed_halves_count(self, ramp_image):
        path = horizontal_path(0.0, 0.0, 39.0)
        n1 = expected_readout_count(path, ProbeConfig(speed=1.0))
        n2 = expected_readout_count(path, ProbeConfig(speed=2.0))
        assert abs(n1 - 2 * n2) <= 1

    def test_too_short_path_raises(self, ramp_image):
        with pytest.raises(ValueError, match="too short"):
            fly_scan(ramp_image, horizontal_path(0.0, 0.0, 0.3), ProbeConfig())

    def test_values_within_image_range(self, ramp_image):
        log = fly_scan(ramp_image, ScanPath([[0, 0], [39, 7], [0, 7]]), ProbeConfig())
        assert log.values.min() >= ramp_image.values.min() - 1e-12
        assert log.values.max() <= ramp_image.values.max() + 1e-12

    def test_t_start_offsets_times(self, ramp_image):
        log = fly_scan(ramp_image, horizontal_path(0, 0, 10), ProbeConfig(), t_start=100.0)
        assert log.times[0] == pytest.approx(100.25)


class TestReadoutLog:
    def test_rejects_non_increasing_times(self):
        with pytest.raises(ValueError, match="increasing"):
            ReadoutLog([0.0, 0.0], [0, 1], [0, 1], [0.5, 0.5])

    def test_rejects_out_of_range_values(self):
        with pytest.raises(ValueError, match="0, 1"):
            ReadoutLog([0.0, 1.0], [0, 1], [0, 1], [0.5, 1.5])


class TestRaster:
    def test_two_by_two_hand_path(self):
        img = ImageGrid(np.zeros((2, 2)))
        path = raster_path(img, 1.0)
        assert_allclose(path.vertices, [[0, 0], [1, 0], [1, 1], [0, 1]])
        assert path.total_length == 3.0

    def test_appends_final_row_when_spacing_uneven(self):
        img = ImageGrid(np.zeros((4, 3)))
        path = raster_path(img, 2.0)
        ys = np.unique(path.vertices[:, 1])
        assert_allclose(ys, [0.0, 2.0, 3.0])

    def test_reference_count_256(self):
        img = ImageGrid(np.zeros((256, 256)))
        probe = ProbeConfig()
        spacing = raster_reference_spacing(img, probe)
        count = expected_readout_count(raster_path(img, spacing), probe)
        assert abs(count - 262_139) / 262_139 < 0.01

    def test_reference_count_401x81(self):
        img = ImageGrid(np.zeros((81, 401)))
        probe = ProbeConfig()
        spacing = raster_reference_spacing(img, probe)
        count = expected_readout_count(raster_path(img, spacing), probe)
        assert abs(count - 129_921) / 129_921 < 0.01


class TestSamplingFraction:
    def test_reference_count_ratio(self):
        log = ReadoutLog(
            np.arange(56_138) * 0.52 + 0.25,
            np.zeros(56_138),
            np.zeros(56_138),
            np.zeros(56_138),
        )
        assert sampling_fraction(log, 262_139) == pytest.approx(0.214, abs=2e-4)

    def test_empty_log_is_zero(self):
        assert sampling_fraction(ReadoutLog.empty(), 1000) == 0.0

    def test_self_reference_is_one(self):
        log = ReadoutLog([0.25], [0.0], [0.0], [0.5])
        assert sampling_fraction(log, 1) == 1.0

    def test_requires_positive_reference(self):
        with pytest.raises(ValueError):
            sampling_fraction(ReadoutLog.empty(), 0)


class TestTruncatePath:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 40), st.integers(0, 2**16))
    def test_truncation_hits_requested_count(self, max_readouts, seed):
        gen = np.random.default_rng(seed)
        verts = gen.uniform(0, 30, size=(5, 2))
        path = ScanPath(verts)
        probe = ProbeConfig()
        if expected_readout_count(path, probe) == 0:
            return
        cut = truncate_path(path, max_readouts, probe)
        expected = min(max_readouts, expected_readout_count(path, probe))
        assert expected_readout_count(cut, probe) == expected
        assert cut.total_length <= path.total_length + 1e-9
