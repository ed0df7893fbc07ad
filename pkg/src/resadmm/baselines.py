"""Gradient-based trainers (SGD, SGD with momentum, Adam) with hand-written
reverse-mode differentiation of the FCResNet objective.

backprop returns the exact gradient of
(1/2)||V_N - Y||_F^2 + (lam/2) sum_i ||W_i||_F^2; the mini-batch trainers
average the data term per sample (library-style mean reduction) so the step
sizes quoted for batch training behave independently of the batch size.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .network import NetworkShape, forward, mse, objective
from .trace import TraceRecord

__all__ = [
    "OptimizerConfig",
    "OptimizerState",
    "backprop",
    "batch_gradient",
    "step_sgd",
    "step_sgdm",
    "step_adam",
    "train_baseline",
    "BaselineRun",
]

KINDS = ("sgd", "sgdm", "adam")


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "sgd"
    lr: float = 0.01
    momentum: float = 0.7
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr_decay: float = 0.9
    batch_size: int = 64

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


@dataclass
class OptimizerState:
    lr: float
    velocity: list[np.ndarray] | None = None
    m: list[np.ndarray] | None = None
    v: list[np.ndarray] | None = None
    t: int = 0


def backprop(weights, shape: NetworkShape, X, Y, lam: float) -> list[np.ndarray]:
    """Exact gradient of (1/2)||V_N - Y||^2 + (lam/2) sum ||W_i||^2.

    Reverse pass through the residual blocks:
    delta_{i-1} = delta_i + W_i^T (delta_i . sigma_i'(W_i V_{i-1})).
    """
    X = linalg.as_matrix(X, rows=shape.d)
    Y = linalg.as_matrix(Y, rows=shape.q)
    n = shape.n_layers
    vs = [X]
    zs = []
    v = X
    for i in range(n - 1):
        z = weights[i] @ v
        zs.append(z)
        v = v + shape.activations[i].sigma(z)
        vs.append(v)
    out = weights[-1] @ v

    delta = out - Y  # dF/dV_N
    grads: list[np.ndarray] = [None] * n
    grads[n - 1] = delta @ vs[n - 1].T + lam * weights[n - 1]
    delta = weights[n - 1].T @ delta
    for i in range(n - 2, -1, -1):
        gated = delta * shape.activations[i].dsigma(zs[i])
        grads[i] = gated @ vs[i].T + lam * weights[i]
        delta = delta + weights[i].T @ gated
    return grads


def batch_gradient(weights, shape: NetworkShape, Xb, Yb, lam: float) -> list[np.ndarray]:
    """Gradient of the per-sample-averaged batch loss (data term / batch size)."""
    nb = np.asarray(Xb).shape[1]
    raw = backprop(weights, shape, Xb, Yb, lam=0.0)
    return [g / nb + lam * w for g, w in zip(raw, weights)]


def step_sgd(weights, grads, state: OptimizerState, config: OptimizerConfig):
    new = [w - state.lr * g for w, g in zip(weights, grads)]
    return new, state


def step_sgdm(weights, grads, state: OptimizerState, config: OptimizerConfig):
    if state.velocity is None:
        state.velocity = [np.zeros_like(w) for w in weights]
    state.velocity = [config.momentum * v + g for v, g in zip(state.velocity, grads)]
    new = [w - state.lr * v for w, v in zip(weights, state.velocity)]
    return new, state


def step_adam(weights, grads, state: OptimizerState, config: OptimizerConfig):
    if state.m is None:
        state.m = [np.zeros_like(w) for w in weights]
        state.v = [np.zeros_like(w) for w in weights]
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    state.m = [b1 * m + (1 - b1) * g for m, g in zip(state.m, grads)]
    state.v = [b2 * v + (1 - b2) * g * g for v, g in zip(state.v, grads)]
    bc1 = 1 - b1**state.t
    bc2 = 1 - b2**state.t
    new = [
        w - state.lr * (m / bc1) / (np.sqrt(v / bc2) + config.eps)
        for w, m, v in zip(weights, state.m, state.v)
    ]
    return new, state


_STEPS = {"sgd": step_sgd, "sgdm": step_sgdm, "adam": step_adam}


@dataclass
class BaselineRun:
    weights: list[np.ndarray]
    records: list[TraceRecord] = field(default_factory=list)
    test_mse: list[float] = field(default_factory=list)
    aborted: str | None = None  # reason, when the iteration produced non-finite values


def train_baseline(
    shape: NetworkShape,
    X,
    Y,
    config: OptimizerConfig,
    epochs: int,
    seed: int = 0,
    weights0=None,
    lam: float = 0.001,
    test=None,
) -> BaselineRun:
    """Mini-batch training with seeded shuffling and per-epoch lr decay.

    One trace row per weight update; when ``test`` = (X_test, Y_test) is
    given the per-iteration test MSE is recorded alongside.
    """
    from .network import init_weights

    X = linalg.as_matrix(X, rows=shape.d)
    Y = linalg.as_matrix(Y, rows=shape.q)
    rng = np.random.default_rng(seed)
    weights = [w.copy() for w in (weights0 if weights0 is not None else init_weights(shape, seed=seed))]
    state = OptimizerState(lr=config.lr)
    step = _STEPS[config.kind]
    run = BaselineRun(weights)
    n = X.shape[1]
    k = 0
    last_good = [w.copy() for w in weights]
    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            t0 = time.perf_counter_ns()
            ops0 = linalg.op_count()
            idx = perm[start : start + config.batch_size]
            grads = batch_gradient(weights, shape, X[:, idx], Y[:, idx], lam)
            weights, state = step(weights, grads, state, config)
            if not all(np.all(np.isfinite(w)) for w in weights):
                run.aborted = f"non-finite weights after update {k + 1}"
                weights = last_good
                break
            last_good = weights
            k += 1
            rec = TraceRecord(
                k=k,
                objective=objective(weights, shape, X, Y, lam),
                grad_lag=float(np.sqrt(sum(np.sum(g * g) for g in grads))),
                op_count=linalg.op_count() - ops0,
                wall_ns=time.perf_counter_ns() - t0,
            )
            run.records.append(rec)
            if test is not None:
                run.test_mse.append(mse(forward(weights, shape, test[0])[-1], test[1]))
        if run.aborted:
            break
        state.lr *= config.lr_decay
    run.weights = weights
    return run
