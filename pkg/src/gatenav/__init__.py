"""Event-camera gate navigation sandbox.

Pipeline pieces: a synthetic event camera watching a laterally
oscillating gate (`events`), a spiking LIF detector that filters fast
movers and boxes them (`snn`), a quadrotor energy model with per-depth
polynomial fits and optima (`energy`), a physics-aware depth-to-velocity
network (`velocity_net`), gate-motion prediction plus minimum-jerk
trajectories (`planner`), and the closed-loop episode runner and sweeps
(`sim`). Hot kernels live in `kernels` with numba/numpy backends chosen
by the GATENAV_BACKEND environment variable.
"""

from .events import (CameraModel, Event, EventBatch, SceneGate,
                     generate_events, project, render_log_intensity)
from .snn import (BoundingBox, LifConfig, MembraneGrid, SpikingGateDetector,
                  accumulate, bbox_center, detect_bbox, iou, lif_step)
from .energy import (DroneDynamics, EnergySample, MotorParams, PolyCoeffs,
                     fit_energy_poly, generate_dataset, motor_voltage,
                     optimal_velocity, power_thrust, simulate_flight_energy)
from .planner import (GateObservation, GatePrediction, Trajectory,
                      gate_velocity, min_jerk_trajectory,
                      predict_gate_position, reflect_oracle, sample_trajectory)
from .velocity_net import (LossWeights, MlpModel, TrainConfig, loss_data,
                           loss_energy, loss_physics, total_loss, train)
from .sim import SimConfig, SimMetrics, run_episode, run_sweep

__version__ = "0.1.0"
