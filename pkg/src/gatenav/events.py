"""Synthetic event camera watching a laterally oscillating gate.

The scene is a bright square frame (a racing gate seen front-on) over a
dark background. Intensity is two-level with an additive floor so the
logarithm stays defined: background ``floor``, fully covered pixels
``1 + floor``, and pixels straddling a frame edge take the exact area
fraction in between. Events fire per pixel whenever the log-intensity
change since the last emitted event exceeds the contrast threshold;
sub-threshold residual is retained.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class Event:
    """One asynchronous brightness-change record."""

    x: int
    y: int
    t: int          # microseconds
    polarity: int   # +1 or -1


class EventBatch:
    """A time-sorted sequence of events backed by flat arrays.

    Behaves as a sequence of :class:`Event` (len, indexing, iteration)
    while keeping the columns (`t`, `x`, `y`, `polarity`) available as
    numpy arrays for the grid pipeline. Events are ordered by
    (t, y, x, polarity).
    """

    __slots__ = ("t", "x", "y", "polarity")

    def __init__(self, t, x, y, polarity):
        self.t = np.asarray(t, dtype=np.int64)
        self.x = np.asarray(x, dtype=np.int32)
        self.y = np.asarray(y, dtype=np.int32)
        self.polarity = np.asarray(polarity, dtype=np.int8)

    @classmethod
    def empty(cls):
        return cls([], [], [], [])

    @classmethod
    def from_events(cls, events):
        events = list(events)
        return cls(
            [e.t for e in events],
            [e.x for e in events],
            [e.y for e in events],
            [e.polarity for e in events],
        )

    def __len__(self):
        return int(self.t.shape[0])

    def __getitem__(self, i):
        return Event(int(self.x[i]), int(self.y[i]), int(self.t[i]), int(self.polarity[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def sorted(self):
        order = np.lexsort((self.polarity, self.x, self.y, self.t))
        return EventBatch(self.t[order], self.x[order], self.y[order], self.polarity[order])


def merge_batches(*batches):
    """Concatenate batches and restore the (t, y, x, polarity) ordering."""
    merged = EventBatch(
        np.concatenate([b.t for b in batches]) if batches else [],
        np.concatenate([b.x for b in batches]) if batches else [],
        np.concatenate([b.y for b in batches]) if batches else [],
        np.concatenate([b.polarity for b in batches]) if batches else [],
    )
    return merged.sorted()


@dataclass
class CameraModel:
    """Pinhole sensor plus the per-pixel event-generation state.

    ``reference_log_intensity`` is the log intensity at which each pixel
    last emitted an event; it is advanced in place by
    :func:`generate_events`.
    """

    width: int = 240
    height: int = 180
    focal_length: float = 120.0
    contrast_threshold: float = 0.3
    intensity_floor: float = 0.05
    reference_log_intensity: np.ndarray = None

    def __post_init__(self):
        if self.contrast_threshold <= 0:
            raise ValueError("contrast threshold must be > 0")
        if self.intensity_floor <= 0:
            raise ValueError("intensity floor must be > 0")
        if self.reference_log_intensity is None:
            self.reference_log_intensity = np.full(
                (self.height, self.width), np.log(self.intensity_floor), dtype=np.float64)
        else:
            self.reference_log_intensity = np.asarray(
                self.reference_log_intensity, dtype=np.float64)
        if self.reference_log_intensity.shape != (self.height, self.width):
            raise ValueError("reference grid shape must be (height, width)")

    def fresh(self):
        """A copy with an independent background-level reference grid."""
        return CameraModel(self.width, self.height, self.focal_length,
                           self.contrast_threshold, self.intensity_floor)


@dataclass
class SceneGate:
    """Square gate at fixed depth oscillating laterally between +-bound.

    The frame is the ring between the inner opening (half width
    ``aperture``) and the outer square (half width aperture +
    frame_thickness). Motion is a triangle wave: constant speed with
    instantaneous reversal at the oscillation bounds, starting from
    ``center_y`` moving in +y.
    """

    depth: float = 3.0
    center_y: float = 0.0
    center_z: float = 0.0
    aperture: float = 0.5
    frame_thickness: float = 0.15
    oscillation_bound: float = 1.0
    lateral_speed: float = 4.0

    def __post_init__(self):
        if self.depth <= 0:
            raise ValueError("gate depth must be > 0")
        if self.aperture <= 0 or self.frame_thickness <= 0:
            raise ValueError("aperture and frame thickness must be > 0")
        if abs(self.center_y) > self.oscillation_bound:
            raise ValueError("gate starts outside its oscillation bound")

    def lateral_position(self, time):
        """Gate center y at ``time`` (exact triangle-wave fold)."""
        bound = self.oscillation_bound
        if self.lateral_speed == 0.0 or bound == 0.0:
            return self.center_y
        unfolded = self.center_y + self.lateral_speed * time
        r = np.mod(unfolded + bound, 4.0 * bound)
        if r < 2.0 * bound:
            return float(r - bound)
        return float(3.0 * bound - r)


def project(point, camera):
    """Pinhole projection of (depth, lateral, vertical) meters to pixels.

    u grows with lateral offset, v grows downward (image rows).
    """
    depth, lateral, vertical = float(point[0]), float(point[1]), float(point[2])
    if depth <= 0:
        raise ValueError("cannot project a point at non-positive depth")
    u = camera.width / 2.0 + camera.focal_length * lateral / depth
    v = camera.height / 2.0 - camera.focal_length * vertical / depth
    return u, v


def unproject_lateral(u, depth, camera):
    """Lateral offset in meters of pixel column ``u`` at a known depth."""
    return (u - camera.width / 2.0) * depth / camera.focal_length


def render_log_intensity(gate, camera, time):
    """Log-intensity image of the gate at ``time``.

    Edge pixels get the exact area fraction of frame coverage, so a
    sub-pixel lateral move changes boundary intensities proportionally
    and the downstream event rate tracks gate speed.
    """
    y = gate.lateral_position(time)
    u0, v0 = project((gate.depth, y, gate.center_z), camera)
    scale = camera.focal_length / gate.depth
    inner = gate.aperture * scale
    outer = (gate.aperture + gate.frame_thickness) * scale
    coverage = kernels.gate_coverage(camera.height, camera.width, u0, v0, inner, outer)
    return np.log(camera.intensity_floor + coverage)


def gate_pixel_box(gate, camera, time):
    """Ground-truth outer bounding box of the gate in pixels, or None.

    Returns integer (x_min, x_max, y_min, y_max) clipped to the sensor;
    None when the gate projects entirely outside the frame.
    """
    y = gate.lateral_position(time)
    u0, v0 = project((gate.depth, y, gate.center_z), camera)
    half = (gate.aperture + gate.frame_thickness) * camera.focal_length / gate.depth
    x_min, x_max = u0 - half, u0 + half
    y_min, y_max = v0 - half, v0 + half
    if x_max < 0 or y_max < 0 or x_min > camera.width - 1 or y_min > camera.height - 1:
        return None
    return (int(round(max(x_min, 0))), int(round(min(x_max, camera.width - 1))),
            int(round(max(y_min, 0))), int(round(min(y_max, camera.height - 1))))


def generate_events(camera, new_log_intensity, t0, t1):
    """Contrast-threshold events for the change from the camera reference.

    Each pixel emits n = floor(|delta| / C) events of polarity
    sign(delta); the k-th event (k = 1..n) is stamped
    t0 + k*(t1 - t0)//n microseconds so timestamps interpolate across
    (t0, t1]. The camera reference advances by n*C toward the new value,
    retaining the sub-threshold remainder.
    """
    t0 = int(t0)
    t1 = int(t1)
    if t1 <= t0:
        raise ValueError("event window requires t1 > t0")
    new_log = np.asarray(new_log_intensity, dtype=np.float64)
    if new_log.shape != camera.reference_log_intensity.shape:
        raise ValueError("grid dimensions must match the camera")
    counts, polarity = kernels.contrast_event_counts(
        camera.reference_log_intensity, new_log, camera.contrast_threshold)
    ys, xs = np.nonzero(counts)
    if ys.size == 0:
        return EventBatch.empty()
    per_pixel = counts[ys, xs]
    per_pol = polarity[ys, xs]
    total = int(per_pixel.sum())
    rep_x = np.repeat(xs, per_pixel).astype(np.int32)
    rep_y = np.repeat(ys, per_pixel).astype(np.int32)
    rep_p = np.repeat(per_pol, per_pixel).astype(np.int8)
    rep_n = np.repeat(per_pixel, per_pixel)
    offsets = np.repeat(np.cumsum(per_pixel) - per_pixel, per_pixel)
    k = np.arange(total, dtype=np.int64) - offsets + 1
    rep_t = np.int64(t0) + (k * np.int64(t1 - t0)) // rep_n
    return EventBatch(rep_t, rep_x, rep_y, rep_p).sorted()


def bernoulli_noise_events(camera, t0, t1, rate, rng):
    """Seeded per-pixel noise: each pixel fires once with probability ``rate``.

    Polarity is a fair coin and the timestamp is uniform over (t0, t1].
    Off by default in the pipeline; used for robustness experiments.
    """
    t0 = int(t0)
    t1 = int(t1)
    if t1 <= t0:
        raise ValueError("event window requires t1 > t0")
    if rate <= 0:
        return EventBatch.empty()
    mask = rng.random((camera.height, camera.width)) < rate
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return EventBatch.empty()
    ts = rng.integers(t0 + 1, t1 + 1, size=ys.size, dtype=np.int64)
    pol = rng.choice(np.array([-1, 1], dtype=np.int8), size=ys.size)
    return EventBatch(ts, xs, ys, pol).sorted()


EVENT_FILE_HEADER = "# t_us,x,y,p"


def write_event_file(path, batch):
    """Write events as text lines ``t_us,x,y,p`` with a header line."""
    with open(path, "w") as fh:
        fh.write(EVENT_FILE_HEADER + "\n")
        for i in range(len(batch)):
            fh.write(f"{int(batch.t[i])},{int(batch.x[i])},{int(batch.y[i])},{int(batch.polarity[i])}\n")


def read_event_file(path):
    """Read an event text file written by :func:`write_event_file`."""
    ts, xs, ys, ps = [], [], [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            t_s, x_s, y_s, p_s = line.split(",")
            ts.append(int(t_s))
            xs.append(int(x_s))
            ys.append(int(y_s))
            ps.append(int(p_s))
    return EventBatch(ts, xs, ys, ps)
