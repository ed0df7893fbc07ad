"""Elementwise activations with first/second derivatives and bound metadata.

Each activation carries the bound triple (psi0, psi1, psi2) with
|sigma| <= psi0, |sigma'| <= psi1, |sigma''| <= psi2 when such bounds exist.
The smooth kinds (sigmoid, tanh, sin, cos) satisfy them; relu carries no
triple and is flagged non-analytic, so strict parameter validation rejects
it while the trainers still accept it (with sigma'(0) := 0).

psi0/psi1 for sigmoid and tanh are the textbook constants; psi2 is obtained
by dense grid maximization of |sigma''| over [-50, 50].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import linalg

__all__ = ["Activation", "get_activation", "ACTIVATION_KINDS"]

ACTIVATION_KINDS = ("sigmoid", "tanh", "sin", "cos", "relu")


@dataclass(frozen=True)
class Activation:
    kind: str
    sigma: Callable[[np.ndarray], np.ndarray]
    dsigma: Callable[[np.ndarray], np.ndarray]
    ddsigma: Callable[[np.ndarray], np.ndarray]
    bounds: Optional[tuple[float, float, float]]

    @property
    def analytic(self) -> bool:
        return self.bounds is not None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return linalg.emap(self.sigma, x)

    def deriv(self, x: np.ndarray) -> np.ndarray:
        return linalg.emap(self.dsigma, x)

    def deriv2(self, x: np.ndarray) -> np.ndarray:
        return linalg.emap(self.ddsigma, x)


def _sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _dsigmoid(x):
    s = _sigmoid(x)
    return s * (1.0 - s)


def _ddsigmoid(x):
    s = _sigmoid(x)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


def _dtanh(x):
    t = np.tanh(x)
    return 1.0 - t * t


def _ddtanh(x):
    t = np.tanh(x)
    return -2.0 * t * (1.0 - t * t)


def _relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def _drelu(x):
    # sigma'(0) := 0 by convention
    return (np.asarray(x, dtype=np.float64) > 0.0).astype(np.float64)


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=np.float64))


def _grid_max_abs(f, lo: float = -50.0, hi: float = 50.0, points: int = 200001) -> float:
    grid = np.linspace(lo, hi, points)
    return float(np.max(np.abs(f(grid))))


def _build(kind: str) -> Activation:
    if kind == "sigmoid":
        psi2 = _grid_max_abs(_ddsigmoid)
        return Activation(kind, _sigmoid, _dsigmoid, _ddsigmoid, (1.0, 0.25, psi2))
    if kind == "tanh":
        psi2 = _grid_max_abs(_ddtanh)
        return Activation(kind, np.tanh, _dtanh, _ddtanh, (1.0, 1.0, psi2))
    if kind == "sin":
        return Activation(kind, np.sin, np.cos, lambda x: -np.sin(x), (1.0, 1.0, 1.0))
    if kind == "cos":
        return Activation(kind, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), (1.0, 1.0, 1.0))
    if kind == "relu":
        return Activation(kind, _relu, _drelu, _zero, None)
    raise ValueError(f"unknown activation kind {kind!r}; choose from {ACTIVATION_KINDS}")


_CACHE: dict[str, Activation] = {}


def get_activation(kind: str) -> Activation:
    if kind not in _CACHE:
        _CACHE[kind] = _build(kind)
    return _CACHE[kind]
