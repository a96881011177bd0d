import pytest

from gatenav.energy import DroneDynamics, MotorParams, fit_depths, optimal_velocity
from gatenav.velocity_net import (LossWeights, MlpModel, TrainConfig,
                                  build_training_set, train)


@pytest.fixture(scope="session")
def dynamics():
    return DroneDynamics()


@pytest.fixture(scope="session")
def motors():
    return MotorParams()


@pytest.fixture(scope="session")
def energy_polys(dynamics, motors):
    polys, _ = fit_depths(range(2, 10), dynamics, motors)
    return polys


@pytest.fixture(scope="session")
def depth_velocity_pairs(energy_polys):
    return [(p.depth, optimal_velocity(p).velocity) for p in energy_polys]


@pytest.fixture(scope="session")
def training_set(depth_velocity_pairs, energy_polys, dynamics):
    return build_training_set(depth_velocity_pairs, energy_polys, dynamics.a_max)


@pytest.fixture(scope="session")
def trained_model(training_set):
    """Model trained on the 8 default depths with default loss weights."""
    config = TrainConfig(epochs=5000, seed=0)
    model = MlpModel.initialize(config)
    model, history = train(model, training_set, LossWeights(), config)
    return model, history
