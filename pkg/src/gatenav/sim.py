"""Closed-loop episodes: perceive the moving gate, predict, fly through.

One episode wires the whole pipeline together at a fixed control step:
render the gate into the event camera, bin events through the spiking
detector, convert the detected center to meters with a noisy depth
reading, estimate the gate's lateral velocity over a short window,
predict where the gate will be when the drone arrives, and track a
minimum-jerk trajectory to that point. The drone is a point mass riding
the trajectory; actuation energy is charged from the thrust implied by
the sampled velocity/acceleration through the motor model.

The sensor rig (event camera + depth readout) sits at the origin looking
down the +x axis; the drone launches nearby and flies through the gate
plane. A depth-only baseline aims at the gate's currently observed
position instead of the prediction.
"""

import json
import math
from dataclasses import dataclass, field, asdict, replace
from functools import lru_cache

import numpy as np

from .energy import (DroneDynamics, MotorParams, fit_depths, motor_electrical,
                     optimal_velocity, power_thrust)
from .events import (CameraModel, SceneGate, gate_pixel_box, generate_events,
                     render_log_intensity, unproject_lateral)
from .planner import (min_jerk_trajectory, predict_gate_position,
                      sample_trajectory, window_velocity)
from .snn import BoundingBox, LifConfig, SpikingGateDetector, iou
from .velocity_net import load_weights

MODE_PREDICTIVE = "predictive"
MODE_BASELINE = "depth_baseline"

# Aim this far beyond the depth reading so sensor noise cannot leave the
# trajectory short of the gate plane.
PASS_MARGIN = 0.15
REPLAN_DIVERGENCE = 0.25
STABLE_BINS = 2
STABLE_IOU = 0.3
VELOCITY_WINDOW = 10
NO_DETECTION_DEADLINE = 1.0


@dataclass
class SimConfig:
    dt: float = 0.01
    seed: int = 0
    gate: SceneGate = field(default_factory=SceneGate)
    camera: CameraModel = field(default_factory=CameraModel)
    lif: LifConfig = field(default_factory=LifConfig)
    dynamics: DroneDynamics = field(default_factory=DroneDynamics)
    motors: MotorParams = field(default_factory=MotorParams)
    drone_start: tuple = (0.0, 0.0, 0.0)
    velocity_source: str = "analytic"     # "analytic" or a weights-file path
    lambda_physics: float = 0.1
    lambda_energy: float = 0.1
    kappa: float = 1.0
    alpha: float = 0.2
    depth_noise_sigma: float = 0.02
    planner_mode: str = MODE_PREDICTIVE

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.depth_noise_sigma < 0:
            raise ValueError("depth noise sigma must be >= 0")
        if self.planner_mode not in (MODE_PREDICTIVE, MODE_BASELINE):
            raise ValueError(f"unknown planner mode {self.planner_mode!r}")


@dataclass
class SimMetrics:
    flight_time: float
    path_length: float
    dynamic_energy: float
    success: bool
    mean_iou: float
    miss_distance: float
    thrust_law_energy: float = 0.0
    status: str = "ok"


@dataclass
class _Plan:
    traj: object
    t_start: float
    target_y: float
    cruise: float
    t_traj: float


class AnalyticVelocityPredictor:
    """Cruise speed straight from the per-depth energy fits (no network)."""

    def __init__(self, dynamics, motors, depths=tuple(range(2, 10))):
        polys, _ = _cached_fits(dynamics, motors, tuple(depths))
        self._depths = np.array([p.depth for p in polys])
        self._speeds = np.array([optimal_velocity(p).velocity for p in polys])

    def velocity(self, depth):
        idx = int(np.argmin(np.abs(self._depths - depth)))
        return float(self._speeds[idx])


class NetworkVelocityPredictor:
    """Cruise speed from a trained depth-to-velocity model."""

    def __init__(self, model):
        self.model = model

    def velocity(self, depth):
        return float(self.model.forward(max(depth, 1e-3)))


@lru_cache(maxsize=8)
def _cached_fits(dynamics, motors, depths):
    return fit_depths(depths, dynamics, motors)


def build_predictor(config):
    if config.velocity_source == "analytic":
        return AnalyticVelocityPredictor(config.dynamics, config.motors)
    return NetworkVelocityPredictor(load_weights(config.velocity_source))


def detection_stream(gate, camera, lif_config=None, n_bins=100, bin_us=None,
                     preadapt=True, box_memory=2):
    """Run the perception pipeline alone over ``n_bins`` windows.

    Returns a list of (Detection, truth_box, event_count) per bin. With
    ``preadapt`` the camera reference starts at the t=0 scene so only
    motion makes events; otherwise the gate pops into view in bin 1.
    """
    lif_config = lif_config or LifConfig()
    if bin_us is None:
        bin_us = lif_config.bin_width_us
    cam = camera.fresh()
    if preadapt:
        cam.reference_log_intensity[:] = render_log_intensity(gate, cam, 0.0)
    detector = SpikingGateDetector(cam.height, cam.width, lif_config, box_memory)
    out = []
    for k in range(1, n_bins + 1):
        t = k * bin_us * 1e-6
        grid = render_log_intensity(gate, cam, t)
        batch = generate_events(cam, grid, (k - 1) * bin_us, k * bin_us)
        detection = detector.step(batch, (k - 1) * bin_us, k * bin_us)
        truth = gate_pixel_box(gate, cam, t)
        out.append((detection, truth, len(batch)))
    return out


def run_episode(config, predictor=None):
    """Run one closed-loop episode; returns (SimMetrics, step log).

    The log holds one dict per control step with the quantities the
    metrics are derived from (time, drone position, gate truth, detector
    box, aim point, commanded thrust).
    """
    rng = np.random.default_rng([config.seed, 2861])
    predictor = predictor or build_predictor(config)
    gate = config.gate
    # The camera powers on against plain background, so the first bin sees
    # the whole gate appear; a static gate is still detected that way.
    camera = config.camera.fresh()
    detector = SpikingGateDetector(camera.height, camera.width, config.lif)

    dyn = config.dynamics
    bin_us = int(round(config.dt * 1e6))
    drone = np.array(config.drone_start, dtype=np.float64)
    path_length = 0.0
    energy = 0.0
    alpha_energy = 0.0
    ious = []
    recent = []          # (t, y_obs) detections for velocity estimation
    consec = 0
    prev_box = None
    plan = None
    deadline = None
    log = []
    crossed = False
    miss = float("nan")
    status = "timeout"
    hover_thrust = dyn.mass * dyn.gravity

    k = 0
    while True:
        k += 1
        t = k * config.dt

        # --- perception
        grid = render_log_intensity(gate, camera, t)
        batch = generate_events(camera, grid, (k - 1) * bin_us, k * bin_us)
        detection = detector.step(batch, (k - 1) * bin_us, k * bin_us)
        box = detection.box
        truth = gate_pixel_box(gate, camera, t)
        y_obs = None
        depth_reading = None
        if box is not None and truth is not None:
            ious.append(iou(box, BoundingBox(*truth)))
            depth_reading = gate.depth + rng.normal(0.0, config.depth_noise_sigma)
            y_obs = unproject_lateral(detection.center[0], depth_reading, camera)
            recent.append((t, y_obs))
            if len(recent) > VELOCITY_WINDOW:
                recent.pop(0)
            consec = consec + 1 if (prev_box is None or iou(box, prev_box) >= STABLE_IOU) else 1
        else:
            consec = 0
        prev_box = box

        # --- planning
        if plan is None and consec >= STABLE_BINS:
            plan = _make_plan(config, predictor, drone, depth_reading, y_obs,
                              recent, t, horizon=None)
            deadline = t + 3.0 * plan.t_traj
        elif plan is None and t > NO_DETECTION_DEADLINE:
            status = "no_detection"
            break
        elif plan is not None and y_obs is not None:
            remaining_t = max(plan.t_start + plan.traj.duration - t, config.dt)
            if config.planner_mode == MODE_PREDICTIVE:
                v_r = window_velocity([p[0] for p in recent], [p[1] for p in recent])
                expected = predict_gate_position(
                    min(max(y_obs, -gate.oscillation_bound), gate.oscillation_bound),
                    v_r, remaining_t, gate.oscillation_bound).y_star
            else:
                expected = y_obs
            if abs(expected - plan.target_y) > REPLAN_DIVERGENCE:
                plan = _make_plan(config, predictor, drone, depth_reading, y_obs,
                                  recent, t, horizon=remaining_t)

        # --- motion along the current trajectory
        if plan is not None:
            local = min(t - plan.t_start, plan.traj.duration)
            s = sample_trajectory(plan.traj, local)
            new_pos = s.position
            speed = float(np.linalg.norm(s.velocity))
            if speed > 1e-9:
                a_t = float(np.dot(s.velocity, s.acceleration)) / speed
            else:
                a_t = 0.0
            thrust = max(0.0, dyn.mass * (dyn.gravity + a_t) + dyn.drag * speed)
        else:
            new_pos = drone
            thrust = hover_thrust

        volts, amps, _ = motor_electrical(thrust, config.motors)
        energy += 4.0 * volts * amps * config.dt
        alpha_energy += power_thrust(thrust, config.kappa, config.alpha) * config.dt
        path_length += float(np.linalg.norm(new_pos - drone))
        drone = new_pos

        gate_y = gate.lateral_position(t)
        log.append({
            "t": t,
            "drone": [float(v) for v in drone],
            "gate_y": gate_y,
            "box": [box.x_min, box.x_max, box.y_min, box.y_max] if box else None,
            "y_obs": y_obs,
            "target_y": plan.target_y if plan else None,
            "thrust": thrust,
        })

        # --- termination
        if drone[0] >= gate.depth:
            crossed = True
            miss = math.hypot(drone[1] - gate_y, drone[2] - gate.center_z)
            status = "ok"
            break
        if deadline is not None and t > deadline:
            status = "timeout"
            break
        if t > 60.0:
            status = "timeout"
            break

    metrics = SimMetrics(
        flight_time=t,
        path_length=path_length,
        dynamic_energy=energy,
        success=bool(crossed and miss < gate.aperture),
        mean_iou=float(np.mean(ious)) if ious else 0.0,
        miss_distance=miss,
        thrust_law_energy=alpha_energy,
        status=status,
    )
    return metrics, log


def _make_plan(config, predictor, drone, depth_reading, y_obs, recent, t, horizon):
    """Build a trajectory toward the (predicted) gate center.

    ``horizon`` None means a fresh plan timed at remaining-distance over
    cruise speed; a replan keeps the original deadline so retargeting
    does not stretch the flight.
    """
    gate = config.gate
    remaining = max(depth_reading - drone[0], 0.2)
    cruise = predictor.velocity(remaining)
    t_traj = remaining / cruise
    duration = t_traj if horizon is None else max(horizon, 5.0 * config.dt)
    bound = gate.oscillation_bound
    y_now = min(max(y_obs, -bound), bound)
    if config.planner_mode == MODE_PREDICTIVE:
        v_r = window_velocity([p[0] for p in recent], [p[1] for p in recent])
        target_y = predict_gate_position(y_now, v_r, duration, bound).y_star
    else:
        target_y = y_now
    target = (depth_reading + PASS_MARGIN, target_y, gate.center_z)
    traj = min_jerk_trajectory(tuple(drone), target, duration)
    return _Plan(traj, t, target_y, cruise, t_traj)


def run_sweep(config, depths, offsets, modes, predictor=None):
    """One episode per (mode, depth, offset) combination.

    Episodes are seeded from (config.seed, grid index) so the grid order
    is reproducible; a failing episode is recorded as a failed row and
    the sweep continues. Returns (rows, aggregates) where each row is
    (mode, depth, offset, SimMetrics).
    """
    depths = list(depths)
    offsets = list(offsets)
    modes = list(modes)
    if not depths or not offsets or not modes:
        raise ValueError("sweep grids must be non-empty")
    rows = []
    index = 0
    for mode in modes:
        for depth in depths:
            for offset in offsets:
                try:
                    episode_config = replace(
                        config,
                        seed=config.seed * 100_003 + index,
                        gate=replace(config.gate, depth=float(depth)),
                        drone_start=(config.drone_start[0], float(offset),
                                     config.drone_start[2]),
                        planner_mode=mode,
                    )
                    metrics, _ = run_episode(episode_config, predictor)
                except Exception as exc:  # keep sweeping, record the failure
                    metrics = SimMetrics(float("nan"), float("nan"), float("nan"),
                                         False, float("nan"), float("nan"),
                                         float("nan"), f"error: {exc}")
                rows.append((mode, float(depth), float(offset), metrics))
                index += 1
    return rows, aggregate_rows(rows)


def aggregate_rows(rows):
    """Per-mode mean flight time, path length and energy plus success rate."""
    aggregates = {}
    for mode in dict.fromkeys(row[0] for row in rows):
        picked = [r[3] for r in rows if r[0] == mode]
        aggregates[mode] = {
            "episodes": len(picked),
            "success_rate": float(np.mean([m.success for m in picked])),
            "mean_flight_time_s": float(np.nanmean([m.flight_time for m in picked])),
            "mean_path_length_m": float(np.nanmean([m.path_length for m in picked])),
            "mean_energy_J": float(np.nanmean([m.dynamic_energy for m in picked])),
        }
    return aggregates


METRICS_HEADER = "mode,depth_m,offset_x_m,flight_time_s,path_length_m,energy_J,success,mean_iou,miss_m"


def metrics_table(rows):
    """Render sweep rows as the canonical CSV text table."""
    lines = [METRICS_HEADER]
    for mode, depth, offset, m in rows:
        lines.append(
            f"{mode},{depth:.3f},{offset:.3f},{m.flight_time:.6f},"
            f"{m.path_length:.6f},{m.dynamic_energy:.6f},{str(m.success).lower()},"
            f"{m.mean_iou:.6f},{m.miss_distance:.6f}")
    return "\n".join(lines) + "\n"


def aggregates_table(aggregates):
    lines = ["mode,episodes,success_rate,mean_flight_time_s,mean_path_length_m,mean_energy_J"]
    for mode, agg in aggregates.items():
        lines.append(
            f"{mode},{agg['episodes']},{agg['success_rate']:.6f},"
            f"{agg['mean_flight_time_s']:.6f},{agg['mean_path_length_m']:.6f},"
            f"{agg['mean_energy_J']:.6f}")
    return "\n".join(lines) + "\n"


def write_episode_log(path, log):
    with open(path, "w") as fh:
        for record in log:
            fh.write(json.dumps(record) + "\n")


def config_to_dict(config):
    data = asdict(config)
    data["camera"].pop("reference_log_intensity", None)
    data["lif"]["kernel"] = config.lif.kernel.tolist()
    data["drone_start"] = list(config.drone_start)
    return data


def config_from_dict(data):
    """Build a SimConfig from a plain JSON dict; unknown keys are errors."""
    data = dict(data)
    kwargs = {}
    if "gate" in data:
        kwargs["gate"] = SceneGate(**data.pop("gate"))
    if "camera" in data:
        kwargs["camera"] = CameraModel(**data.pop("camera"))
    if "lif" in data:
        lif = dict(data.pop("lif"))
        if "kernel" in lif:
            lif["kernel"] = np.asarray(lif["kernel"], dtype=np.float64)
        kwargs["lif"] = LifConfig(**lif)
    if "dynamics" in data:
        kwargs["dynamics"] = DroneDynamics(**data.pop("dynamics"))
    if "motors" in data:
        kwargs["motors"] = MotorParams(**data.pop("motors"))
    if "drone_start" in data:
        kwargs["drone_start"] = tuple(data.pop("drone_start"))
    known = {"dt", "seed", "velocity_source", "lambda_physics", "lambda_energy",
             "kappa", "alpha", "depth_noise_sigma", "planner_mode"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs.update(data)
    return SimConfig(**kwargs)


def load_config(path):
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def save_config(config, path):
    with open(path, "w") as fh:
        json.dump(config_to_dict(config), fh, indent=2)
