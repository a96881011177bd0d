"""Gate-motion prediction and minimum-jerk trajectory generation.

The gate slides laterally at constant speed and reverses at +-bound.
Given its latest position, an estimated velocity, and the time the drone
needs to arrive, the predictor extrapolates where the gate center will
be, folding in at most one boundary reversal; a brute-force stepped
oracle covers arbitrarily many reversals. The flight itself is a
rest-to-rest quintic that zeroes velocity and acceleration at both ends.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels


@dataclass(frozen=True)
class GateObservation:
    """Two consecutive tracked gate centers, delta_t apart."""

    y1: float
    y2: float
    delta_t: float

    def __post_init__(self):
        if self.delta_t <= 0:
            raise ValueError("delta_t must be > 0")


@dataclass(frozen=True)
class GatePrediction:
    velocity: float
    y_star: float
    bounced: bool


def gate_velocity(obs):
    """Lateral gate velocity from two consecutive detections."""
    return (obs.y2 - obs.y1) / obs.delta_t


def predict_gate_position(y2, v_r, t_traj, bound):
    """Gate center after ``t_traj`` seconds, handling one boundary reversal.

    The displacement v_r * t_traj is compared against the distance left to
    the boundary the gate is heading for; if it overshoots, the remainder
    is folded back from that boundary. Multiple reversals are not modeled;
    the result is clamped to [-bound, bound].
    """
    if abs(y2) > bound:
        raise ValueError("gate position outside the oscillation bound")
    if t_traj < 0:
        raise ValueError("prediction horizon must be >= 0")
    d1 = v_r * t_traj
    if v_r > 0:
        d2 = bound - y2
    else:
        d2 = y2 + bound
    if abs(d1) > abs(d2):
        x = abs(d1) - abs(d2)
        if v_r > 0:
            y_star = bound - x
        else:
            y_star = -bound + x
        bounced = True
    else:
        y_star = y2 + d1
        bounced = False
    y_star = min(max(y_star, -bound), bound)
    return GatePrediction(v_r, y_star, bounced)


def reflect_oracle(y2, v_r, t, bound, dt=1e-4):
    """Stepped ground truth for the bouncing gate position.

    Advances by v_r * dt, mirroring across a boundary whenever a step
    would exit [-bound, bound]; handles any number of reversals. Step
    size must satisfy |v_r| * dt < 2 * bound.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    out = kernels.reflect_batch(
        np.array([y2], dtype=np.float64), np.array([v_r], dtype=np.float64),
        np.array([t], dtype=np.float64), float(bound), float(dt))
    return float(out[0])


def reflect_oracle_batch(y2, v_r, t, bound, dt=1e-4):
    """Vectorized :func:`reflect_oracle` over arrays of draws."""
    return kernels.reflect_batch(
        np.asarray(y2, dtype=np.float64), np.asarray(v_r, dtype=np.float64),
        np.asarray(t, dtype=np.float64), float(bound), float(dt))


class TrajectorySample(NamedTuple):
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    jerk: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Rest-to-rest minimum-jerk path between two 3D points.

    Per axis, position(t) = start + delta * s(t/T) with
    s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5, which zeroes velocity and
    acceleration at both endpoints.
    """

    start: tuple
    end: tuple
    duration: float

    @property
    def delta(self):
        return np.asarray(self.end, dtype=np.float64) - np.asarray(self.start, dtype=np.float64)

    @property
    def coefficients(self):
        """Per-axis quintic coefficients c0..c5 of position in t."""
        d = self.delta
        T = self.duration
        zeros = np.zeros_like(d)
        return np.stack([
            np.asarray(self.start, dtype=np.float64), zeros, zeros,
            10.0 * d / T ** 3, -15.0 * d / T ** 4, 6.0 * d / T ** 5,
        ], axis=1)


def min_jerk_trajectory(start, end, duration):
    """Construct the rest-to-rest quintic from start to end over duration."""
    if duration <= 0:
        raise ValueError("trajectory duration must be > 0")
    start = tuple(float(v) for v in start)
    end = tuple(float(v) for v in end)
    if len(start) != 3 or len(end) != 3:
        raise ValueError("start and end must be 3D points")
    return Trajectory(start, end, float(duration))


def sample_trajectory(traj, t):
    """Analytic position/velocity/acceleration/jerk at time t in [0, T]."""
    T = traj.duration
    if t < 0 or t > T:
        raise ValueError("sample time outside [0, duration]")
    tau = t / T
    s = tau ** 3 * (10.0 + tau * (-15.0 + 6.0 * tau))
    ds = tau ** 2 * (30.0 + tau * (-60.0 + 30.0 * tau))
    dds = tau * (60.0 + tau * (-180.0 + 120.0 * tau))
    ddds = 60.0 + tau * (-360.0 + 360.0 * tau)
    d = traj.delta
    start = np.asarray(traj.start, dtype=np.float64)
    return TrajectorySample(
        start + d * s,
        d * (ds / T),
        d * (dds / T ** 2),
        d * (ddds / T ** 3),
    )


def jerk_squared_integral(traj, n_steps=2000):
    """Trapezoid-rule integral of |jerk|^2 over the trajectory."""
    ts = np.linspace(0.0, traj.duration, n_steps + 1)
    mags = []
    for t in ts:
        j = sample_trajectory(traj, t).jerk
        mags.append(float(np.dot(j, j)))
    mags = np.array(mags)
    return float(np.trapezoid(mags, ts))


def window_velocity(times, positions):
    """Least-squares slope of recent (t, y) detections; 0 if degenerate.

    Pixel-quantized centers make two-point differencing noisy; a short
    regression window recovers the gate speed to a few percent.
    """
    t = np.asarray(times, dtype=np.float64)
    y = np.asarray(positions, dtype=np.float64)
    if t.size < 2:
        return 0.0
    t_c = t - t.mean()
    denom = float(np.dot(t_c, t_c))
    if denom == 0.0:
        return 0.0
    return float(np.dot(t_c, y - y.mean()) / denom)
