"""Backend dispatch for the hot numeric kernels.

The environment variable GATENAV_BACKEND picks the implementation at
import time:

* ``auto`` (default) -- numba-compiled kernels if numba imports, else numpy
* ``numba``          -- require the compiled kernels, raise if unavailable
* ``numpy``          -- force the pure-numpy fallback

``BACKEND`` records which one is live. ``benchmarks/bench_kernels.py``
times the two implementations against each other.
"""

import os

_CHOICE = os.environ.get("GATENAV_BACKEND", "auto").strip().lower()
if _CHOICE not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"GATENAV_BACKEND must be 'auto', 'numba' or 'numpy', got {_CHOICE!r}")

if _CHOICE == "numpy":
    from . import numpy_impl as _impl
    BACKEND = "numpy"
else:
    try:
        from . import numba_impl as _impl
        BACKEND = "numba"
    except ImportError:
        if _CHOICE == "numba":
            raise
        from . import numpy_impl as _impl
        BACKEND = "numpy"

gate_coverage = _impl.gate_coverage
contrast_event_counts = _impl.contrast_event_counts
accumulate_counts = _impl.accumulate_counts
lif_step_grid = _impl.lif_step_grid
flight_energy = _impl.flight_energy
reflect_batch = _impl.reflect_batch

__all__ = [
    "BACKEND",
    "gate_coverage",
    "contrast_event_counts",
    "accumulate_counts",
    "lif_step_grid",
    "flight_energy",
    "reflect_batch",
]
