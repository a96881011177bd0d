"""Quadrotor actuation-energy model for straight flights.

Simulates trapezoidal velocity profiles through a brushless-motor
electrical chain, producing the characteristic non-monotonic
energy-vs-cruise-speed curve: crawling wastes hover energy over a long
flight, sprinting pays in current draw. Per-depth 5th-degree polynomial
fits of that curve expose the energy-minimizing cruise speed through the
zero of their derivative.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels


@dataclass(frozen=True)
class MotorParams:
    """Brushless motor electrical constants (one of four identical rotors)."""

    resistance: float = 0.2     # winding resistance, ohm
    k_e: float = 0.01           # voltage constant, V*s/rad
    k_t: float = 0.01           # torque constant, N*m/A
    k_f: float = 6.11e-8        # thrust coefficient, N*s^2/rad^2
    k_m: float = 1.5e-9         # drag-torque coefficient, N*m*s^2/rad^2
    i_idle: float = 0.3         # no-load friction current, A

    def __post_init__(self):
        for name in ("resistance", "k_e", "k_t", "k_f", "k_m", "i_idle"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class DroneDynamics:
    """Point-mass flight parameters; thrust covers weight, accel and drag."""

    mass: float = 0.5           # kg
    gravity: float = 9.81       # m/s^2
    drag: float = 0.3           # linear drag coefficient, N*s/m
    a_max: float = 12.0         # m/s^2
    motor_count: int = 4

    def __post_init__(self):
        if self.mass <= 0 or self.a_max <= 0:
            raise ValueError("mass and a_max must be positive")
        if self.motor_count != 4:
            raise ValueError("the energy model assumes a quadrotor")


@dataclass(frozen=True)
class EnergySample:
    """One {depth, cruise velocity, energy} training triplet."""

    depth: float
    velocity: float
    energy: float


def motor_voltage(current, omega, params):
    """Back-EMF plus resistive drop: e = R*i + k_e*omega."""
    return params.resistance * current + params.k_e * omega


def motor_electrical(total_thrust, params):
    """Electrical operating point (volts, amps, omega) of one of 4 motors.

    omega = sqrt(F/(4 k_f)) for total thrust F split evenly, propeller
    drag torque k_m*omega^2 sets the current above the idle draw.
    """
    omega = math.sqrt(max(total_thrust, 0.0) / (4.0 * params.k_f))
    torque = params.k_m * omega * omega
    current = torque / params.k_t + params.i_idle
    return motor_voltage(current, omega, params), current, omega


def simulate_flight_energy(distance, v_cruise, dynamics, motors, dt=1e-3):
    """Total electrical energy (J) to fly ``distance`` meters straight.

    The velocity profile accelerates at a_max to v_cruise, cruises, and
    decelerates at a_max (triangular if the distance is too short).
    Returns 0 for a zero-length flight.
    """
    if distance < 0:
        raise ValueError("distance must be >= 0")
    if v_cruise <= 0:
        raise ValueError("cruise velocity must be > 0")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    return float(kernels.flight_energy(
        float(distance), float(v_cruise), float(dt),
        dynamics.mass, dynamics.gravity, dynamics.drag, dynamics.a_max,
        motors.resistance, motors.k_e, motors.k_t, motors.k_f, motors.k_m,
        motors.i_idle))


def generate_dataset(depths, velocities, dynamics, motors, dt=1e-3):
    """One EnergySample per (depth, velocity) pair, in grid order."""
    depths = list(depths)
    velocities = list(velocities)
    if not depths or not velocities:
        raise ValueError("depth and velocity grids must be non-empty")
    return [
        EnergySample(float(d), float(v),
                     simulate_flight_energy(d, v, dynamics, motors, dt))
        for d in depths for v in velocities
    ]


def fit_velocity_grid(depth, dynamics, motors, dt=1e-3, count=30,
                      v_lo=0.5, v_hi=8.0):
    """Cruise-speed grid bracketing the energy minimum at one depth.

    Two stages: a coarse 0.25 m/s sweep locates the minimum, then the
    returned grid spans [0.7, 1.35] times that estimate. The window stays
    below sqrt(a_max * depth), where the profile turns triangular and
    E(v) goes flat, which would poison a polynomial fit.
    """
    cap = math.sqrt(dynamics.a_max * depth)
    hi_lim = min(v_hi, 0.98 * cap)
    if hi_lim <= v_lo:
        raise ValueError("no usable velocity window at this depth")
    coarse = np.arange(v_lo, hi_lim + 1e-9, 0.25)
    energies = [simulate_flight_energy(depth, v, dynamics, motors, dt)
                for v in coarse]
    v_hat = float(coarse[int(np.argmin(energies))])
    lo = max(v_lo, 0.7 * v_hat)
    hi = min(hi_lim, 1.35 * v_hat)
    return np.linspace(lo, hi, count)


@dataclass(frozen=True)
class PolyCoeffs:
    """Degree-5 energy fit E(u) = sum c_k u^k in normalized velocity u.

    u = (v - v_min)/(v_max - v_min) maps the fitted window onto [0, 1]
    for conditioning; ``depth`` tags which flight distance the fit
    belongs to.
    """

    coeffs: tuple
    depth: float
    v_min: float
    v_max: float
    rms_residual: float = 0.0

    def __post_init__(self):
        if len(self.coeffs) != 6:
            raise ValueError("exactly 6 coefficients required")
        if not self.v_min < self.v_max:
            raise ValueError("v_min must be below v_max")

    def u_of(self, v):
        return (v - self.v_min) / (self.v_max - self.v_min)

    def v_of(self, u):
        return self.v_min + u * (self.v_max - self.v_min)

    def energy_u(self, u):
        c = self.coeffs
        return c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * (c[4] + u * c[5]))))

    def d_energy_u(self, u):
        c = self.coeffs
        return c[1] + u * (2 * c[2] + u * (3 * c[3] + u * (4 * c[4] + u * 5 * c[5])))

    def d2_energy_u(self, u):
        c = self.coeffs
        return 2 * c[2] + u * (6 * c[3] + u * (12 * c[4] + u * 20 * c[5]))

    def energy_at(self, v):
        return self.energy_u(self.u_of(v))

    def d_energy_dv(self, v):
        return self.d_energy_u(self.u_of(v)) / (self.v_max - self.v_min)


def fit_energy_poly(samples):
    """Least-squares degree-5 fit of E(v) for samples at one shared depth.

    Velocities are normalized to [0, 1] before fitting; the RMS residual
    is recorded on the result. Requires at least 6 distinct velocities.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("no samples to fit")
    depths = {s.depth for s in samples}
    if len(depths) != 1:
        raise ValueError("fit_energy_poly expects samples at a single depth")
    v = np.array([s.velocity for s in samples], dtype=np.float64)
    e = np.array([s.energy for s in samples], dtype=np.float64)
    if np.unique(v).size < 6:
        raise ValueError("underdetermined: need >= 6 distinct velocities")
    v_min, v_max = float(v.min()), float(v.max())
    u = (v - v_min) / (v_max - v_min)
    vander = np.vander(u, 6, increasing=True)
    coeffs, _, _, _ = np.linalg.lstsq(vander, e, rcond=None)
    residual = vander @ coeffs - e
    rms = float(np.sqrt(np.mean(residual ** 2)))
    return PolyCoeffs(tuple(float(c) for c in coeffs), float(depths.pop()),
                      v_min, v_max, rms)


def quartic_roots_in_unit_interval(coeffs_ascending, tol=1e-9):
    """Real roots of a polynomial (ascending coeffs) inside [0, 1].

    Companion-matrix roots filtered to near-real values, polished with a
    couple of Newton steps, clipped to the interval.
    """
    c = np.asarray(coeffs_ascending, dtype=np.float64)
    c = np.trim_zeros(c, "b")
    if c.size <= 1:
        return []
    roots = np.roots(c[::-1])
    out = []
    poly = np.polynomial.Polynomial(c)
    dpoly = poly.deriv()
    for r in roots:
        if abs(r.imag) > 1e-7:
            continue
        x = float(r.real)
        if x < -tol or x > 1.0 + tol:
            continue
        for _ in range(2):
            slope = dpoly(x)
            if slope != 0.0:
                x -= poly(x) / slope
        out.append(min(max(x, 0.0), 1.0))
    return sorted(out)


class OptimalVelocity(NamedTuple):
    velocity: float
    at_boundary: bool


def optimal_velocity(poly):
    """Energy-minimizing cruise speed from a fitted polynomial.

    Finds the real roots of dE/du on [0, 1], compares the energy there and
    at both window endpoints, and maps the global minimizer back to m/s.
    An endpoint winner is flagged ``at_boundary``.
    """
    c = poly.coeffs
    dcoeffs = [c[1], 2 * c[2], 3 * c[3], 4 * c[4], 5 * c[5]]
    interior = quartic_roots_in_unit_interval(dcoeffs)
    candidates = [(poly.energy_u(u), u, False) for u in interior]
    candidates.append((poly.energy_u(0.0), 0.0, True))
    candidates.append((poly.energy_u(1.0), 1.0, True))
    best = min(candidates, key=lambda item: item[0])
    return OptimalVelocity(poly.v_of(best[1]), best[2])


def fit_depths(depths, dynamics, motors, dt=1e-3, count=30):
    """Fit one energy polynomial per depth.

    Returns (polys, samples): the per-depth PolyCoeffs list and the flat
    list of every EnergySample that went into the fits.
    """
    polys = []
    all_samples = []
    for depth in depths:
        grid = fit_velocity_grid(depth, dynamics, motors, dt, count)
        samples = generate_dataset([depth], grid, dynamics, motors, dt)
        polys.append(fit_energy_poly(samples))
        all_samples.extend(samples)
    return polys, all_samples


def power_thrust(thrust, kappa, alpha):
    """Thrust-law power P = kappa * F^alpha."""
    if thrust < 0:
        raise ValueError("thrust must be >= 0")
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    return kappa * thrust ** alpha
