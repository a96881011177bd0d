"""Spiking detector: accumulation, LIF dynamics, boxes, IoU."""

import numpy as np
import pytest

from gatenav.events import CameraModel, EventBatch, SceneGate
from gatenav.snn import (BoundingBox, LifConfig, MembraneGrid,
                         SpikingGateDetector, accumulate, bbox_center,
                         detect_bbox, iou, lif_step)
from gatenav.sim import detection_stream


class TestAccumulate:
    def test_empty_stream(self):
        grid = accumulate(EventBatch.empty(), 0, 100, 8, 8)
        assert grid.shape == (8, 8) and grid.sum() == 0

    def test_counts_only_in_window(self):
        batch = EventBatch([10, 20, 30, 150], [3, 3, 3, 3], [5, 5, 5, 5], [1, 1, -1, 1])
        grid = accumulate(batch, 0, 100, 8, 8)
        assert grid[5, 3] == 3
        assert grid.sum() == 3

    def test_polarity_ignored(self):
        batch = EventBatch([1, 2], [0, 0], [0, 0], [1, -1])
        assert accumulate(batch, 0, 10, 4, 4)[0, 0] == 2

    def test_out_of_bounds_rejected(self):
        batch = EventBatch([1], [9], [0], [1])
        with pytest.raises(ValueError):
            accumulate(batch, 0, 10, 4, 4)

    def test_total_matches_bruteforce(self):
        rng = np.random.default_rng(5)
        n = 500
        batch = EventBatch(rng.integers(0, 1000, n), rng.integers(0, 16, n),
                           rng.integers(0, 12, n), rng.choice([-1, 1], n))
        grid = accumulate(batch, 200, 700, 12, 16)
        expected = sum(1 for t in batch.t if 200 <= t < 700)
        assert grid.sum() == expected

    def test_accepts_event_iterables(self):
        batch = EventBatch([1, 2], [1, 2], [1, 2], [1, 1])
        grid = accumulate(list(batch), 0, 10, 4, 4)
        assert grid.sum() == 2

    def test_bad_window(self):
        with pytest.raises(ValueError):
            accumulate(EventBatch.empty(), 10, 10, 4, 4)


def ones_kernel(scale=1.0):
    return np.full((3, 3), scale)


class TestLifStep:
    def test_zero_state_zero_input(self):
        cfg = LifConfig()
        state = MembraneGrid.zeros(6, 6)
        spikes, new = lif_step(state, np.zeros((6, 6)), cfg)
        assert not spikes.any()
        assert not new.potential.any()

    def test_block_drives_spike_and_reset(self):
        # all-ones kernel over a 3x3 block of ones: conv at center is 9
        cfg = LifConfig(beta=0.0, kernel=ones_kernel(1.0))
        X = np.zeros((7, 7))
        X[2:5, 2:5] = 1.0
        spikes, new = lif_step(MembraneGrid.zeros(7, 7), X, cfg)
        assert spikes[3, 3]
        assert new.potential[3, 3] == 0.0

    def test_subthreshold_leak_arithmetic(self):
        # beta 0.1 on a unit potential plus 0.5 drive stays below 1.75
        cfg = LifConfig(beta=0.1, kernel=np.diag([0.0, 0.5, 0.0]))
        state = MembraneGrid(np.zeros((5, 5)))
        state.potential[2, 2] = 1.0
        X = np.zeros((5, 5))
        X[2, 2] = 1.0
        spikes, new = lif_step(state, X, cfg)
        assert not spikes[2, 2]
        assert new.potential[2, 2] == pytest.approx(0.6)

    def test_reduces_to_convolution(self):
        # beta 0 and an unreachable threshold leave exactly conv(X, W)
        rng = np.random.default_rng(6)
        X = rng.integers(0, 5, (10, 12)).astype(float)
        W = rng.random((3, 3))
        cfg = LifConfig(beta=0.0, u_th=np.inf, kernel=W)
        spikes, new = lif_step(MembraneGrid.zeros(10, 12), X, cfg)
        assert not spikes.any()
        expected = np.zeros((10, 12))
        for i in range(10):
            for j in range(12):
                acc = 0.0
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        ii, jj = i + di, j + dj
                        if 0 <= ii < 10 and 0 <= jj < 12:
                            acc += W[di + 1, dj + 1] * X[ii, jj]
                expected[i, j] = acc
        assert np.allclose(new.potential, expected, atol=1e-12)

    def test_two_silent_steps_decay_by_beta_squared(self):
        cfg = LifConfig(beta=0.3)
        state = MembraneGrid(np.full((4, 4), 1.2))
        zero = np.zeros((4, 4))
        _, state = lif_step(state, zero, cfg)
        _, state = lif_step(state, zero, cfg)
        assert np.allclose(state.potential, 1.2 * 0.3 ** 2, atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            lif_step(MembraneGrid.zeros(4, 4), np.zeros((5, 5)), LifConfig())


class TestLifConfigValidation:
    def test_beta_range(self):
        with pytest.raises(ValueError):
            LifConfig(beta=1.0)
        with pytest.raises(ValueError):
            LifConfig(beta=-0.1)

    def test_threshold_positive(self):
        with pytest.raises(ValueError):
            LifConfig(u_th=0.0)

    def test_kernel_must_be_3x3(self):
        with pytest.raises(ValueError):
            LifConfig(kernel=np.ones((5, 5)))


class TestDetectBbox:
    def test_empty_map(self):
        assert detect_bbox(np.zeros((8, 8), dtype=bool), LifConfig()) is None

    def test_single_pixel(self):
        cfg = LifConfig(min_spike_pixels=1)
        grid = np.zeros((16, 16), dtype=bool)
        grid[9, 7] = True
        assert detect_bbox(grid, cfg) == BoundingBox(7, 7, 9, 9)

    def test_min_spike_pixels_floor(self):
        cfg = LifConfig(min_spike_pixels=3)
        grid = np.zeros((8, 8), dtype=bool)
        grid[1, 1] = grid[2, 2] = True
        assert detect_bbox(grid, cfg) is None
        grid[3, 3] = True
        assert detect_bbox(grid, cfg) == BoundingBox(1, 3, 1, 3)

    def test_matches_exhaustive_scan_on_all_4x4_maps(self):
        cfg = LifConfig(min_spike_pixels=1)
        for code in range(1 << 16):
            grid = np.array([(code >> k) & 1 for k in range(16)],
                            dtype=bool).reshape(4, 4)
            got = detect_bbox(grid, cfg)
            xs = [j for i in range(4) for j in range(4) if grid[i, j]]
            ys = [i for i in range(4) for j in range(4) if grid[i, j]]
            if not xs:
                assert got is None
            else:
                assert got == BoundingBox(min(xs), max(xs), min(ys), max(ys))


class TestBboxCenter:
    @pytest.mark.parametrize("box,center", [
        (BoundingBox(10, 20, 10, 20), (15, 15)),
        (BoundingBox(0, 0, 0, 0), (0, 0)),
        (BoundingBox(3, 8, 2, 9), (5, 5)),
    ])
    def test_floor_center(self, box, center):
        assert bbox_center(box) == center

    def test_center_inside_box(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            x0, y0 = rng.integers(0, 50, 2)
            box = BoundingBox(int(x0), int(x0 + rng.integers(0, 30)),
                              int(y0), int(y0 + rng.integers(0, 30)))
            cx, cy = bbox_center(box)
            assert box.x_min <= cx <= box.x_max
            assert box.y_min <= cy <= box.y_max


class TestIou:
    def test_identity(self):
        assert iou(BoundingBox(3, 9, 2, 8), BoundingBox(3, 9, 2, 8)) == 1.0
        # degenerate box still matches itself
        assert iou(BoundingBox(5, 5, 5, 5), BoundingBox(5, 5, 5, 5)) == 1.0

    def test_disjoint(self):
        assert iou(BoundingBox(0, 2, 0, 2), BoundingBox(10, 12, 10, 12)) == 0.0

    def test_half_overlap_area_arithmetic(self):
        a = BoundingBox(0, 10, 0, 10)
        b = BoundingBox(5, 15, 0, 10)
        assert iou(a, b) == pytest.approx(1.0 / 3.0)

    def test_symmetry(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            vals = rng.integers(0, 40, 8)
            a = BoundingBox(min(vals[0], vals[1]), max(vals[0], vals[1]),
                            min(vals[2], vals[3]), max(vals[2], vals[3]))
            b = BoundingBox(min(vals[4], vals[5]), max(vals[4], vals[5]),
                            min(vals[6], vals[7]), max(vals[6], vals[7]))
            assert iou(a, b) == pytest.approx(iou(b, a))
            assert 0.0 <= iou(a, b) <= 1.0


class TestSpeedFilter:
    def test_fast_gate_spikes_slow_gate_does_not(self):
        # short-stream version of the speed-filter acceptance criterion
        cam = CameraModel()
        fast = detection_stream(SceneGate(depth=3.0, lateral_speed=4.0), cam, n_bins=40)
        slow = detection_stream(SceneGate(depth=3.0, lateral_speed=0.2), cam, n_bins=40)
        fast_frac = np.mean([d.spike_count >= 1 for d, _, _ in fast])
        slow_frac = np.mean([d.spike_count >= 1 for d, _, _ in slow])
        assert fast_frac > 0.9
        assert slow_frac < fast_frac

    def test_detector_reset_clears_state(self):
        cam = CameraModel()
        det = SpikingGateDetector(cam.height, cam.width)
        det.state.potential[0, 0] = 5.0
        det.reset()
        assert det.state.potential.sum() == 0.0

    def test_filter_survives_sensor_noise(self):
        # isolated Bernoulli noise events stay below the firing threshold
        from gatenav.events import (bernoulli_noise_events, generate_events,
                                    merge_batches, render_log_intensity)
        rng = np.random.default_rng(77)
        cam = CameraModel()
        cfg = LifConfig()
        results = {}
        for speed in (4.0, 0.2):
            camera = cam.fresh()
            camera.reference_log_intensity[:] = render_log_intensity(
                SceneGate(depth=3.0, lateral_speed=speed), camera, 0.0)
            det = SpikingGateDetector(camera.height, camera.width, cfg)
            gate = SceneGate(depth=3.0, lateral_speed=speed)
            hits = 0
            n_bins = 40
            for k in range(1, n_bins + 1):
                grid = render_log_intensity(gate, camera, k * 0.01)
                batch = generate_events(camera, grid, (k - 1) * 10_000, k * 10_000)
                noise = bernoulli_noise_events(camera, (k - 1) * 10_000,
                                               k * 10_000, 0.002, rng)
                detection = det.step(merge_batches(batch, noise),
                                     (k - 1) * 10_000, k * 10_000)
                hits += detection.spike_count >= 1
            results[speed] = hits / n_bins
        assert results[4.0] > 0.9
        assert results[0.2] <= 0.2
