"""Event camera: projection, rendering, and contrast-threshold events."""

import numpy as np
import pytest

from gatenav.events import (CameraModel, EventBatch, SceneGate,
                            bernoulli_noise_events, generate_events,
                            gate_pixel_box, merge_batches, project,
                            read_event_file, render_log_intensity,
                            unproject_lateral, write_event_file)


def small_camera(**kw):
    defaults = dict(width=32, height=24, focal_length=20.0)
    defaults.update(kw)
    return CameraModel(**defaults)


class TestProject:
    @pytest.mark.parametrize("depth", [0.5, 1.0, 3.0, 9.0])
    def test_optical_axis_hits_image_center(self, depth):
        cam = CameraModel()
        assert project((depth, 0.0, 0.0), cam) == (120.0, 90.0)

    def test_pinhole_formula(self):
        cam = CameraModel(width=240, height=180, focal_length=100.0)
        u, v = project((2.0, 2.0, 0.0), cam)
        assert u == pytest.approx(220.0)
        assert v == pytest.approx(90.0)

    def test_doubling_depth_halves_offset(self):
        cam = CameraModel()
        u1, _ = project((2.0, 0.8, 0.0), cam)
        u2, _ = project((4.0, 0.8, 0.0), cam)
        assert (u1 - cam.width / 2) == pytest.approx(2 * (u2 - cam.width / 2))

    def test_non_positive_depth_rejected(self):
        cam = CameraModel()
        with pytest.raises(ValueError):
            project((0.0, 1.0, 0.0), cam)
        with pytest.raises(ValueError):
            project((-1.0, 1.0, 0.0), cam)

    def test_unproject_roundtrip(self):
        cam = CameraModel()
        for lateral in (-1.2, 0.0, 0.7):
            u, _ = project((3.0, lateral, 0.0), cam)
            assert unproject_lateral(u, 3.0, cam) == pytest.approx(lateral)


class TestRender:
    def test_gate_outside_sensor_gives_uniform_background(self):
        cam = CameraModel()
        gate = SceneGate(depth=2.0, center_z=50.0)
        grid = render_log_intensity(gate, cam, 0.0)
        assert np.all(grid == np.log(cam.intensity_floor))
        assert gate_pixel_box(gate, cam, 0.0) is None

    def test_deterministic(self):
        cam = CameraModel()
        gate = SceneGate(depth=3.0)
        a = render_log_intensity(gate, cam, 0.125)
        b = render_log_intensity(gate, cam, 0.125)
        assert np.array_equal(a, b)

    def test_two_level_intensities(self):
        cam = CameraModel()
        gate = SceneGate(depth=2.0, lateral_speed=0.0)
        grid = render_log_intensity(gate, cam, 0.0)
        assert grid.min() == pytest.approx(np.log(cam.intensity_floor))
        assert grid.max() == pytest.approx(np.log(1.0 + cam.intensity_floor))

    def test_closer_gate_covers_more_pixels(self):
        # independent pixel-count oracle on the rendered grids
        cam = CameraModel()
        floor = np.log(cam.intensity_floor)
        near = render_log_intensity(SceneGate(depth=2.0), cam, 0.0)
        far = render_log_intensity(SceneGate(depth=8.0), cam, 0.0)
        assert np.count_nonzero(near > floor) > np.count_nonzero(far > floor)


class TestGenerateEvents:
    def test_no_change_no_events(self):
        cam = small_camera()
        batch = generate_events(cam, cam.reference_log_intensity.copy(), 0, 10_000)
        assert len(batch) == 0

    def test_floor_of_delta_over_threshold(self):
        cam = small_camera(contrast_threshold=0.3)
        new = cam.reference_log_intensity.copy()
        new[5, 7] += 0.75
        batch = generate_events(cam, new, 0, 10_000)
        assert len(batch) == 2
        assert all(e.x == 7 and e.y == 5 and e.polarity == 1 for e in batch)
        assert all(0 < e.t <= 10_000 for e in batch)

    def test_residual_carries_between_calls(self):
        cam = small_camera(contrast_threshold=0.3)
        base = cam.reference_log_intensity.copy()
        first = base.copy()
        first[3, 3] += 1.9 * 0.3
        second = base.copy()
        second[3, 3] += 2.1 * 0.3
        n1 = len(generate_events(cam, first, 0, 1000))
        n2 = len(generate_events(cam, second, 1000, 2000))
        assert (n1, n2) == (1, 1)

    def test_count_equals_sum_of_floors(self):
        rng = np.random.default_rng(3)
        cam = small_camera(contrast_threshold=0.3)
        new = cam.reference_log_intensity + rng.normal(0, 0.8, (24, 32))
        expected = 0
        for i in range(24):
            for j in range(32):
                delta = new[i, j] - cam.reference_log_intensity[i, j]
                expected += int(abs(delta) / 0.3)
        batch = generate_events(cam, new, 0, 5000)
        assert len(batch) == expected

    def test_sorted_by_time_then_position(self):
        rng = np.random.default_rng(4)
        cam = small_camera()
        new = cam.reference_log_intensity + rng.normal(0, 1.0, (24, 32))
        batch = generate_events(cam, new, 0, 10_000)
        keys = list(zip(batch.t, batch.y, batch.x, batch.polarity))
        assert keys == sorted(keys)

    def test_polarity_follows_sign(self):
        cam = small_camera(contrast_threshold=0.3)
        new = cam.reference_log_intensity.copy()
        new[0, 0] += 1.0
        new[1, 1] -= 1.0
        batch = generate_events(cam, new, 0, 100)
        pols = {(e.x, e.y): e.polarity for e in batch}
        assert pols[(0, 0)] == 1
        assert pols[(1, 1)] == -1

    def test_bad_window_rejected(self):
        cam = small_camera()
        with pytest.raises(ValueError):
            generate_events(cam, cam.reference_log_intensity.copy(), 10, 10)

    def test_shape_mismatch_rejected(self):
        cam = small_camera()
        with pytest.raises(ValueError):
            generate_events(cam, np.zeros((4, 4)), 0, 10)

    def test_deterministic_stream(self):
        def stream():
            cam = CameraModel()
            gate = SceneGate(depth=3.0)
            out = []
            for k in range(1, 11):
                grid = render_log_intensity(gate, cam, k * 0.01)
                out.append(generate_events(cam, grid, (k - 1) * 10_000, k * 10_000))
            return out
        for a, b in zip(stream(), stream()):
            assert np.array_equal(a.t, b.t)
            assert np.array_equal(a.x, b.x)
            assert np.array_equal(a.y, b.y)
            assert np.array_equal(a.polarity, b.polarity)


def events_per_window(speed, n_bins=50):
    cam = CameraModel()
    gate = SceneGate(depth=3.0, lateral_speed=speed)
    cam.reference_log_intensity[:] = render_log_intensity(gate, cam, 0.0)
    total = 0
    for k in range(1, n_bins + 1):
        grid = render_log_intensity(gate, cam, k * 0.01)
        total += len(generate_events(cam, grid, (k - 1) * 10_000, k * 10_000))
    return total / n_bins


def test_event_rate_tracks_gate_speed():
    rates = [events_per_window(s) for s in (0.5, 1.0, 2.0, 4.0)]
    assert all(a <= b for a, b in zip(rates, rates[1:]))
    assert rates[-1] > events_per_window(1.0)


class TestGateMotion:
    def test_stays_inside_bound(self):
        gate = SceneGate(depth=3.0, oscillation_bound=1.0, lateral_speed=4.0)
        ys = [gate.lateral_position(t) for t in np.linspace(0, 5, 1000)]
        assert max(abs(y) for y in ys) <= 1.0 + 1e-12

    def test_triangle_period(self):
        gate = SceneGate(depth=3.0, oscillation_bound=1.0, lateral_speed=4.0)
        period = 4 * 1.0 / 4.0
        assert gate.lateral_position(3 * period) == pytest.approx(0.0, abs=1e-12)
        assert gate.lateral_position(period / 4) == pytest.approx(1.0)
        assert gate.lateral_position(period / 2) == pytest.approx(0.0, abs=1e-12)
        assert gate.lateral_position(3 * period / 4) == pytest.approx(-1.0)


class TestNoiseAndFiles:
    def test_noise_rate_zero_is_empty(self):
        cam = small_camera()
        rng = np.random.default_rng(0)
        assert len(bernoulli_noise_events(cam, 0, 1000, 0.0, rng)) == 0

    def test_noise_is_seeded(self):
        cam = small_camera()
        a = bernoulli_noise_events(cam, 0, 1000, 0.2, np.random.default_rng(9))
        b = bernoulli_noise_events(cam, 0, 1000, 0.2, np.random.default_rng(9))
        assert np.array_equal(a.t, b.t) and np.array_equal(a.x, b.x)
        assert len(a) > 0
        assert all(0 < t <= 1000 for t in a.t)

    def test_merge_restores_order(self):
        a = EventBatch([5, 10], [1, 2], [1, 2], [1, -1])
        b = EventBatch([7], [0], [0], [1])
        merged = merge_batches(a, b)
        assert list(merged.t) == [5, 7, 10]

    def test_file_roundtrip(self, tmp_path):
        batch = EventBatch([1, 2, 3], [4, 5, 6], [7, 8, 9], [1, -1, 1])
        path = tmp_path / "events.txt"
        write_event_file(path, batch)
        assert path.read_text().splitlines()[0] == "# t_us,x,y,p"
        back = read_event_file(path)
        assert np.array_equal(back.t, batch.t)
        assert np.array_equal(back.x, batch.x)
        assert np.array_equal(back.y, batch.y)
        assert np.array_equal(back.polarity, batch.polarity)
