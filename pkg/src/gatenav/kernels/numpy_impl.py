"""Pure-numpy implementations of the hot numeric kernels.

These are the fallback path used when numba is unavailable or when
GATENAV_BACKEND=numpy is set. Each function mirrors its numba twin in
``numba_impl`` operation-for-operation, so integer outputs are identical
and float outputs agree bit-for-bit wherever no reduction is involved
(``flight_energy`` sums with a different association and agrees only to
rounding error).
"""

import numpy as np


def _interval_overlap(coords, center, half_width):
    # Overlap length of unit pixel cell [c-0.5, c+0.5] with [center-h, center+h].
    lo = np.maximum(coords - 0.5, center - half_width)
    hi = np.minimum(coords + 0.5, center + half_width)
    return np.clip(hi - lo, 0.0, 1.0)


def gate_coverage(height, width, center_u, center_v, inner_half, outer_half):
    """Per-pixel area coverage of a square ring centered at (center_u, center_v).

    A pixel (row, col) is the unit cell [col-0.5, col+0.5] x [row-0.5, row+0.5].
    Coverage is the exact cell overlap with the outer square minus the overlap
    with the inner square; both squares are axis aligned with half widths in
    pixels. Values lie in [0, 1].
    """
    cols = np.arange(width, dtype=np.float64)
    rows = np.arange(height, dtype=np.float64)
    outer_u = _interval_overlap(cols, center_u, outer_half)
    outer_v = _interval_overlap(rows, center_v, outer_half)
    inner_u = _interval_overlap(cols, center_u, inner_half)
    inner_v = _interval_overlap(rows, center_v, inner_half)
    return outer_v[:, None] * outer_u[None, :] - inner_v[:, None] * inner_u[None, :]


def contrast_event_counts(reference, new_log, threshold):
    """Per-pixel event counts from a log-intensity change, residual carried.

    Each pixel emits floor(|delta| / threshold) events where delta is the
    change against ``reference``; the reference is advanced in place by
    n * threshold in the direction of the change so sub-threshold residual
    is retained for later calls. Returns (counts int64, polarity int64 in
    {-1, 0, +1}).
    """
    delta = new_log - reference
    counts = np.floor(np.abs(delta) / threshold).astype(np.int64)
    signs = np.where(delta > 0, 1.0, -1.0)
    reference += (counts * threshold) * signs
    polarity = np.where(counts > 0, np.where(delta > 0, 1, -1), 0).astype(np.int64)
    return counts, polarity


def accumulate_counts(xs, ys, height, width):
    """Histogram event coordinates into a per-pixel count grid (int64)."""
    grid = np.zeros((height, width), dtype=np.int64)
    np.add.at(grid, (ys, xs), 1)
    return grid


def lif_step_grid(potential, drive, kernel, leak, threshold):
    """One leaky integrate-and-fire update over the whole pixel grid.

    u = leak * potential + conv2d(drive, kernel) with zero padding; pixels
    with u >= threshold spike and reset to 0, the rest keep u. Returns
    (new_potential float64, spikes uint8).
    """
    h, w = potential.shape
    padded = np.zeros((h + 2, w + 2), dtype=np.float64)
    padded[1:-1, 1:-1] = drive
    acc = np.zeros((h, w), dtype=np.float64)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            acc = acc + kernel[di + 1, dj + 1] * padded[1 + di:1 + di + h, 1 + dj:1 + dj + w]
    u = leak * potential + acc
    spikes = u >= threshold
    new_potential = np.where(spikes, 0.0, u)
    return new_potential, spikes.astype(np.uint8)


def flight_energy(distance, v_cruise, dt, mass, gravity, drag, a_max,
                  resistance, k_e, k_t, k_f, k_m, i_idle):
    """Actuation energy (J) of a straight trapezoidal-profile flight.

    Accelerate at a_max to v_cruise, cruise, decelerate at a_max; the profile
    degenerates to a triangle when the distance is too short to reach
    v_cruise. Thrust at each step is mass*(gravity + a) + drag*v, split over
    four rotors; the electrical chain is omega = sqrt(F/(4 k_f)),
    tau = k_m omega^2, i = tau/k_t + i_idle, e = R i + k_e omega and the
    energy is the left-rectangle sum of 4 e i over time.
    """
    if distance <= 0.0:
        return 0.0
    v_peak = min(v_cruise, np.sqrt(a_max * distance))
    t_acc = v_peak / a_max
    d_acc = 0.5 * v_peak * v_peak / a_max
    t_cruise = (distance - 2.0 * d_acc) / v_peak
    if t_cruise < 0.0:
        t_cruise = 0.0
    total = 2.0 * t_acc + t_cruise
    n_full = int(total / dt)

    t = np.arange(n_full + 1, dtype=np.float64) * dt
    steps = np.full(n_full + 1, dt, dtype=np.float64)
    steps[-1] = total - n_full * dt
    in_acc = t < t_acc
    in_cruise = ~in_acc & (t < t_acc + t_cruise)
    v = np.where(in_acc, a_max * t,
                 np.where(in_cruise, v_peak, v_peak - a_max * (t - t_acc - t_cruise)))
    v = np.maximum(v, 0.0)
    a = np.where(in_acc, a_max, np.where(in_cruise, 0.0, -a_max))
    thrust = np.maximum(mass * (gravity + a) + drag * v, 0.0)
    omega = np.sqrt(thrust / (4.0 * k_f))
    torque = k_m * omega * omega
    current = torque / k_t + i_idle
    volts = resistance * current + k_e * omega
    power = 4.0 * volts * current
    return float(np.sum(power * np.maximum(steps, 0.0)))


def reflect_batch(y0, vel, duration, bound, step):
    """Propagate lateral positions bouncing inside [-bound, bound].

    Lock-step vectorized twin of the per-lane numba loop: advance by
    vel*step, mirroring position and flipping velocity whenever a step
    would exit the band, then take one final partial step. Requires
    |vel|*step < 2*bound so a step crosses at most one boundary.
    """
    y = np.asarray(y0, dtype=np.float64).copy()
    v = np.asarray(vel, dtype=np.float64).copy()
    rem = np.asarray(duration, dtype=np.float64).copy()
    active = rem >= step
    while active.any():
        y_next = y + v * step
        over = y_next > bound
        under = y_next < -bound
        y_ref = np.where(over, 2.0 * bound - y_next,
                         np.where(under, -2.0 * bound - y_next, y_next))
        v_ref = np.where(over | under, -v, v)
        y = np.where(active, y_ref, y)
        v = np.where(active, v_ref, v)
        rem = np.where(active, rem - step, rem)
        active = rem >= step
    y_next = y + v * rem
    over = y_next > bound
    under = y_next < -bound
    return np.where(over, 2.0 * bound - y_next,
                    np.where(under, -2.0 * bound - y_next, y_next))
