"""Serial and pipelined-parallel ADMM trainers for fully connected residual networks.

The package trains FCResNets (residual blocks x + sigma(Wx) followed by a
linear read-out) by alternating-direction methods on two relaxations of the
training problem, exposes gradient-based baselines, convergence diagnostics,
operation-count/memory cost models, and a pipelined model-parallel executor
that reproduces the serial iterates exactly.
"""

from .activations import Activation, get_activation
from .datasets import Dataset, gen_l1, gen_oscillation, split_train_test
from .estimators import ADMMResNetRegressor, GradientResNetRegressor
from .network import NetworkShape, forward, init_weights, mse, objective, predict

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "get_activation",
    "Dataset",
    "gen_l1",
    "gen_oscillation",
    "split_train_test",
    "NetworkShape",
    "forward",
    "predict",
    "objective",
    "mse",
    "init_weights",
    "ADMMResNetRegressor",
    "GradientResNetRegressor",
    "__version__",
]
