"""Numba-compiled twins of the hot kernels in ``numpy_impl``.

The loop bodies apply the same arithmetic in the same order as the
vectorized fallback, so the two backends produce identical integer
results; float results match bit-for-bit except where a reduction
changes the summation order (``flight_energy``).
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _overlap(coord, center, half_width):
    lo = max(coord - 0.5, center - half_width)
    hi = min(coord + 0.5, center + half_width)
    span = hi - lo
    if span < 0.0:
        return 0.0
    if span > 1.0:
        return 1.0
    return span


@njit(cache=True)
def gate_coverage(height, width, center_u, center_v, inner_half, outer_half):
    outer_u = np.empty(width, dtype=np.float64)
    inner_u = np.empty(width, dtype=np.float64)
    for j in range(width):
        outer_u[j] = _overlap(float(j), center_u, outer_half)
        inner_u[j] = _overlap(float(j), center_u, inner_half)
    outer_v = np.empty(height, dtype=np.float64)
    inner_v = np.empty(height, dtype=np.float64)
    for i in range(height):
        outer_v[i] = _overlap(float(i), center_v, outer_half)
        inner_v[i] = _overlap(float(i), center_v, inner_half)
    grid = np.empty((height, width), dtype=np.float64)
    for i in range(height):
        for j in range(width):
            grid[i, j] = outer_v[i] * outer_u[j] - inner_v[i] * inner_u[j]
    return grid


@njit(cache=True)
def contrast_event_counts(reference, new_log, threshold):
    h, w = reference.shape
    counts = np.zeros((h, w), dtype=np.int64)
    polarity = np.zeros((h, w), dtype=np.int64)
    for i in range(h):
        for j in range(w):
            delta = new_log[i, j] - reference[i, j]
            n = np.int64(np.floor(abs(delta) / threshold))
            if n > 0:
                sign = 1.0 if delta > 0 else -1.0
                counts[i, j] = n
                polarity[i, j] = 1 if delta > 0 else -1
                reference[i, j] = reference[i, j] + (n * threshold) * sign
    return counts, polarity


@njit(cache=True)
def accumulate_counts(xs, ys, height, width):
    grid = np.zeros((height, width), dtype=np.int64)
    for k in range(xs.shape[0]):
        grid[ys[k], xs[k]] += 1
    return grid


@njit(cache=True)
def lif_step_grid(potential, drive, kernel, leak, threshold):
    h, w = potential.shape
    new_potential = np.empty((h, w), dtype=np.float64)
    spikes = np.zeros((h, w), dtype=np.uint8)
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for di in range(-1, 2):
                for dj in range(-1, 2):
                    ii = i + di
                    jj = j + dj
                    if 0 <= ii < h and 0 <= jj < w:
                        acc = acc + kernel[di + 1, dj + 1] * drive[ii, jj]
            u = leak * potential[i, j] + acc
            if u >= threshold:
                spikes[i, j] = 1
                new_potential[i, j] = 0.0
            else:
                new_potential[i, j] = u
    return new_potential, spikes


@njit(cache=True)
def flight_energy(distance, v_cruise, dt, mass, gravity, drag, a_max,
                  resistance, k_e, k_t, k_f, k_m, i_idle):
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
    energy = 0.0
    for k in range(n_full + 1):
        t = k * dt
        step = dt if k < n_full else total - n_full * dt
        if step <= 0.0:
            continue
        if t < t_acc:
            v = a_max * t
            a = a_max
        elif t < t_acc + t_cruise:
            v = v_peak
            a = 0.0
        else:
            v = v_peak - a_max * (t - t_acc - t_cruise)
            a = -a_max
        if v < 0.0:
            v = 0.0
        thrust = mass * (gravity + a) + drag * v
        if thrust < 0.0:
            thrust = 0.0
        omega = np.sqrt(thrust / (4.0 * k_f))
        torque = k_m * omega * omega
        current = torque / k_t + i_idle
        volts = resistance * current + k_e * omega
        energy += 4.0 * volts * current * step
    return energy


@njit(cache=True)
def reflect_batch(y0, vel, duration, bound, step):
    n = y0.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        y = y0[i]
        v = vel[i]
        rem = duration[i]
        while rem >= step:
            y_next = y + v * step
            if y_next > bound:
                y_next = 2.0 * bound - y_next
                v = -v
            elif y_next < -bound:
                y_next = -2.0 * bound - y_next
                v = -v
            y = y_next
            rem = rem - step
        y_next = y + v * rem
        if y_next > bound:
            y_next = 2.0 * bound - y_next
        elif y_next < -bound:
            y_next = -2.0 * bound - y_next
        out[i] = y_next
    return out
