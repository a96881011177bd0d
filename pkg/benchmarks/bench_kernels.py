"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel on a representative workload with both backends,
checks they agree, and prints the timing ratio. Numba timings exclude
the first (compiling) call.

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from gatenav.kernels import numpy_impl

try:
    from gatenav.kernels import numba_impl
except ImportError:
    numba_impl = None


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a, dtype=np.float64)
                               - np.asarray(b, dtype=np.float64)))) if np.size(a) else 0.0


def workloads():
    rng = np.random.default_rng(7)
    h, w = 180, 240
    ref = np.log(0.05) * np.ones((h, w))
    new = ref + rng.normal(0.0, 1.0, (h, w))
    xs = rng.integers(0, w, 200_000)
    ys = rng.integers(0, h, 200_000)
    potential = rng.random((h, w))
    drive = rng.integers(0, 12, (h, w)).astype(np.float64)
    kernel3 = np.full((3, 3), 1.0 / 9.0)
    lanes = 10_000
    y0 = rng.uniform(-1, 1, lanes)
    vel = rng.uniform(-5, 5, lanes)
    dur = rng.uniform(0, 2, lanes)
    return [
        ("gate_coverage", "gate_coverage",
         lambda impl: impl.gate_coverage(h, w, 120.3, 90.7, 20.0, 26.0)),
        ("contrast_event_counts", "contrast_event_counts",
         lambda impl: impl.contrast_event_counts(ref.copy(), new, 0.3)),
        ("accumulate_counts", "accumulate_counts",
         lambda impl: impl.accumulate_counts(xs, ys, h, w)),
        ("lif_step_grid", "lif_step_grid",
         lambda impl: impl.lif_step_grid(potential, drive, kernel3, 0.1, 1.75)),
        ("flight_energy", "flight_energy",
         lambda impl: impl.flight_energy(6.0, 3.0, 1e-3, 0.5, 9.81, 0.3, 12.0,
                                         0.2, 0.01, 0.01, 6.11e-8, 1.5e-9, 0.3)),
        ("reflect_batch", "reflect_batch",
         lambda impl: impl.reflect_batch(y0, vel, dur, 1.0, 1e-4)),
    ]


def main():
    if numba_impl is None:
        print("numba not importable; benchmarking numpy backend only")
    print(f"{'kernel':24} {'numpy':>10} {'numba':>10} {'speedup':>8}  max|diff|")
    for name, _, call in workloads():
        t_np, out_np = timeit(lambda: call(numpy_impl))
        if numba_impl is None:
            print(f"{name:24} {t_np * 1e3:9.2f}ms {'-':>10} {'-':>8}")
            continue
        call(numba_impl)  # compile outside the timing
        t_nb, out_nb = timeit(lambda: call(numba_impl))
        diff = max_diff(out_np, out_nb)
        print(f"{name:24} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms "
              f"{t_np / t_nb:7.1f}x  {diff:.3g}")


if __name__ == "__main__":
    main()
