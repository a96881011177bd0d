"""Depth-to-cruise-velocity regressor trained with physics-aware losses.

A small fully connected network (hidden widths 64, 128, 128, tanh
activations) maps normalized depth to a cruise speed, squashed onto
[v_floor, v_ceil] through a sigmoid so the flight-time division never
blows up. Training minimizes

    data MSE  +  lambda_physics * physics term  +  lambda_energy * energy term

where the physics term is either the |dE/dv| zero-derivative residual on
the fitted per-depth energy polynomial or the kinematic-vs-dynamic
distance gap, and the energy term is the fitted energy at the prediction
normalized by the energy at the optimum. Gradients are reverse-mode by
hand; the optimizer is Adam on the full batch.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .energy import optimal_velocity

HIDDEN_WIDTHS = (64, 128, 128)

PHYSICS_ZERO_DERIVATIVE = "zero_derivative"
PHYSICS_DYNAMICS = "dynamics"


class TrainingError(RuntimeError):
    """Raised when the loss diverges to NaN or infinity."""


@dataclass
class LossWeights:
    """Multipliers for the physics and energy terms (lambda_1, lambda_2)."""

    physics: float = 0.1
    energy: float = 0.1

    def __post_init__(self):
        if self.physics < 0 or self.energy < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 5000
    seed: int = 0
    grad_clip: float = 10.0
    physics_variant: str = PHYSICS_ZERO_DERIVATIVE
    d_max: float = 10.0
    v_floor: float = 0.2
    v_ceil: float = 8.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.physics_variant not in (PHYSICS_ZERO_DERIVATIVE, PHYSICS_DYNAMICS):
            raise ValueError(f"unknown physics variant {self.physics_variant!r}")


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


class MlpModel:
    """Weights, biases and the input/output normalization constants."""

    def __init__(self, weights, biases, d_max=10.0, v_floor=0.2, v_ceil=8.0, seed=None):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.d_max = float(d_max)
        self.v_floor = float(v_floor)
        self.v_ceil = float(v_ceil)
        self.seed = seed
        for w in self.weights:
            if not np.all(np.isfinite(w)):
                raise ValueError("weights must be finite")

    @classmethod
    def initialize(cls, config=None, seed=None):
        """Fan-in-scaled uniform init; biases start at zero."""
        config = config or TrainConfig()
        if seed is None:
            seed = config.seed
        rng = np.random.default_rng(seed)
        sizes = (1, *HIDDEN_WIDTHS, 1)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, config.d_max, config.v_floor, config.v_ceil, seed)

    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def _forward_cached(self, depths):
        x = (depths / self.d_max).reshape(-1, 1)
        activations = [x]
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.tanh(h @ w + b)
            activations.append(h)
        z = (h @ self.weights[-1] + self.biases[-1]).reshape(-1)
        s = _sigmoid(z)
        v = self.v_floor + (self.v_ceil - self.v_floor) * s
        return v, s, activations

    def forward(self, depth):
        """Predicted cruise velocity (m/s) for depth(s) > 0."""
        depths = np.atleast_1d(np.asarray(depth, dtype=np.float64))
        if np.any(depths <= 0):
            raise ValueError("depth must be > 0")
        v, _, _ = self._forward_cached(depths)
        return float(v[0]) if np.isscalar(depth) or np.ndim(depth) == 0 else v

    def predict_flight_time(self, depth):
        """Flight time d / v_pred; exactly 0 for a zero-length flight."""
        if depth < 0:
            raise ValueError("depth must be >= 0")
        if depth == 0:
            return 0.0
        return depth / self.forward(depth)


def forward(model, depth):
    return model.forward(depth)


def predict_flight_time(model, depth):
    return model.predict_flight_time(depth)


@dataclass
class TrainingSet:
    """Aligned per-sample training data.

    ``polys`` holds, per sample, the energy polynomial fitted nearest to
    that sample's depth (no interpolation between depths); ``e_opt`` is
    the polynomial energy at its own optimum, the normalizer of the
    energy term.
    """

    depths: np.ndarray
    targets: np.ndarray
    polys: list
    u_opt: np.ndarray
    e_opt: np.ndarray
    a_max: float


def build_training_set(pairs, polys, a_max):
    """Assemble a TrainingSet from (depth, v_opt) pairs and fitted polys."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("training set must be non-empty")
    polys = list(polys)
    if not polys:
        raise ValueError("no fitted energy polynomials supplied")
    depths = np.array([p[0] for p in pairs], dtype=np.float64)
    targets = np.array([p[1] for p in pairs], dtype=np.float64)
    poly_depths = np.array([p.depth for p in polys], dtype=np.float64)
    chosen, u_opt, e_opt = [], [], []
    for d in depths:
        poly = polys[int(np.argmin(np.abs(poly_depths - d)))]
        opt = optimal_velocity(poly)
        chosen.append(poly)
        u_opt.append(poly.u_of(opt.velocity))
        e_opt.append(poly.energy_u(poly.u_of(opt.velocity)))
    return TrainingSet(depths, targets, chosen,
                       np.array(u_opt), np.array(e_opt), float(a_max))


def loss_data(preds, targets):
    """Mean squared error between predicted and reference velocities."""
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.size == 0 or preds.shape != targets.shape:
        raise ValueError("predictions and targets must be non-empty and aligned")
    return float(np.mean((preds - targets) ** 2))


def _data_head(v, targets):
    n = v.size
    diff = v - targets
    return float(np.mean(diff ** 2)), 2.0 * diff / n


def _kinematic_gap(v, depth, a_max):
    # Distance shortfall of the accelerate-then-cruise profile run for d/v.
    if v <= math.sqrt(a_max * depth):
        return v * v / (2.0 * a_max), v / a_max
    t = depth / v
    x_sim = 0.5 * a_max * t * t
    return depth - x_sim, a_max * depth * depth / v ** 3


def _physics_head(v, data, variant):
    n = v.size
    vals = np.empty(n)
    grads = np.empty(n)
    if variant == PHYSICS_ZERO_DERIVATIVE:
        for i in range(n):
            poly = data.polys[i]
            span = poly.v_max - poly.v_min
            u = poly.u_of(v[i])
            f = poly.d_energy_u(u)
            vals[i] = abs(f)
            grads[i] = math.copysign(1.0, f) * poly.d2_energy_u(u) / span if f != 0 else 0.0
    elif variant == PHYSICS_DYNAMICS:
        for i in range(n):
            gap, dgap = _kinematic_gap(v[i], data.depths[i], data.a_max)
            vals[i] = abs(gap)
            grads[i] = math.copysign(1.0, gap) * dgap if gap != 0 else 0.0
    else:
        raise ValueError(f"unknown physics variant {variant!r}")
    return float(np.mean(vals)), grads / n


def _energy_head(v, data):
    n = v.size
    vals = np.empty(n)
    grads = np.empty(n)
    for i in range(n):
        poly = data.polys[i]
        span = poly.v_max - poly.v_min
        u = poly.u_of(v[i])
        vals[i] = poly.energy_u(u) / data.e_opt[i]
        grads[i] = poly.d_energy_u(u) / span / data.e_opt[i]
    return float(np.mean(vals)), grads / n


def loss_physics(model, data, variant=PHYSICS_ZERO_DERIVATIVE):
    """Physical-consistency penalty at the current predictions.

    zero_derivative: mean |dE/du| on each sample's fitted polynomial.
    dynamics: mean |v*t_traj - x_sim| against the bounded-acceleration
    profile run for the same duration.
    """
    v, _, _ = model._forward_cached(data.depths)
    val, _ = _physics_head(v, data, variant)
    return val


def loss_energy(model, data):
    """Mean fitted energy at the prediction over fitted energy at the optimum."""
    v, _, _ = model._forward_cached(data.depths)
    val, _ = _energy_head(v, data)
    return val


def total_loss(model, data, weights, variant=PHYSICS_ZERO_DERIVATIVE):
    """data + lambda_physics * physics + lambda_energy * energy."""
    v, _, _ = model._forward_cached(data.depths)
    l_data, _ = _data_head(v, data.targets)
    l_phys, _ = _physics_head(v, data, variant)
    l_energy, _ = _energy_head(v, data)
    return l_data + weights.physics * l_phys + weights.energy * l_energy


def loss_and_gradients(model, data, weights, variant=PHYSICS_ZERO_DERIVATIVE):
    """Total loss, its three components, and reverse-mode parameter gradients."""
    v, s, activations = model._forward_cached(data.depths)
    l_data, g_data = _data_head(v, data.targets)
    l_phys, g_phys = _physics_head(v, data, variant)
    l_energy, g_energy = _energy_head(v, data)
    total = l_data + weights.physics * l_phys + weights.energy * l_energy

    dl_dv = g_data + weights.physics * g_phys + weights.energy * g_energy
    dl_dz = dl_dv * (model.v_ceil - model.v_floor) * s * (1.0 - s)

    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    delta = dl_dz.reshape(-1, 1)
    grads_w[-1] = activations[-1].T @ delta
    grads_b[-1] = delta.sum(axis=0)
    upstream = delta @ model.weights[-1].T
    for layer in range(len(model.weights) - 2, -1, -1):
        h = activations[layer + 1]
        delta = upstream * (1.0 - h * h)
        grads_w[layer] = activations[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        upstream = delta @ model.weights[layer].T
    parts = {"data": l_data, "physics": l_phys, "energy": l_energy}
    return total, parts, grads_w, grads_b


def train(model, data, weights=None, config=None):
    """Full-batch Adam training; returns (model, history).

    history has one row per epoch: total, data, physics, energy losses.
    Raises TrainingError naming the epoch if the loss leaves the floats.
    """
    weights = weights or LossWeights()
    config = config or TrainConfig()
    history = np.empty((config.epochs, 4))
    m_w = [np.zeros_like(w) for w in model.weights]
    v_w = [np.zeros_like(w) for w in model.weights]
    m_b = [np.zeros_like(b) for b in model.biases]
    v_b = [np.zeros_like(b) for b in model.biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    for epoch in range(config.epochs):
        total, parts, grads_w, grads_b = loss_and_gradients(
            model, data, weights, config.physics_variant)
        if not np.isfinite(total):
            raise TrainingError(f"loss diverged at epoch {epoch}")
        history[epoch] = (total, parts["data"], parts["physics"], parts["energy"])

        norm_sq = sum(float(np.sum(g * g)) for g in grads_w)
        norm_sq += sum(float(np.sum(g * g)) for g in grads_b)
        norm = math.sqrt(norm_sq)
        if norm > config.grad_clip:
            scale = config.grad_clip / norm
            grads_w = [g * scale for g in grads_w]
            grads_b = [g * scale for g in grads_b]

        step = epoch + 1
        correction = math.sqrt(1.0 - beta2 ** step) / (1.0 - beta1 ** step)
        for i in range(len(model.weights)):
            m_w[i] = beta1 * m_w[i] + (1 - beta1) * grads_w[i]
            v_w[i] = beta2 * v_w[i] + (1 - beta2) * grads_w[i] ** 2
            model.weights[i] -= config.learning_rate * correction * m_w[i] / (np.sqrt(v_w[i]) + eps)
            m_b[i] = beta1 * m_b[i] + (1 - beta1) * grads_b[i]
            v_b[i] = beta2 * v_b[i] + (1 - beta2) * grads_b[i] ** 2
            model.biases[i] -= config.learning_rate * correction * m_b[i] / (np.sqrt(v_b[i]) + eps)
    return model, history


def save_weights(model, path):
    """Write the model as JSON: sizes, row-major arrays, normalization."""
    payload = {
        "layer_sizes": model.layer_sizes(),
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "d_max": model.d_max,
        "v_floor": model.v_floor,
        "v_ceil": model.v_ceil,
        "seed": model.seed,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_weights(path):
    with open(path) as fh:
        payload = json.load(fh)
    model = MlpModel(payload["weights"], payload["biases"], payload["d_max"],
                     payload["v_floor"], payload["v_ceil"], payload.get("seed"))
    if model.layer_sizes() != payload["layer_sizes"]:
        raise ValueError("weights file layer sizes are inconsistent")
    return model
