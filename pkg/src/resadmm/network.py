"""FCResNet definition: shapes, initializers, forward pass and objectives.

The network maps d-dimensional inputs through N-1 residual blocks
x -> x + sigma_i(W_i x) followed by a linear output layer W_N (q x d).
Data is handled in matrix form: samples are columns of X (d x n) and
Y (q x n).  Biases are omitted throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .activations import Activation, get_activation

__all__ = [
    "NetworkShape",
    "weight_shapes",
    "init_weights",
    "forward",
    "predict",
    "objective",
    "mse",
    "save_weights",
    "load_weights",
    "INIT_METHODS",
]

INIT_METHODS = ("kaiming", "constant", "normal", "uniform", "xavier", "orthogonal", "sparse")


@dataclass(frozen=True)
class NetworkShape:
    """Layer count N >= 2, input/hidden width d, output width q."""

    n_layers: int
    d: int
    q: int
    activations: tuple[Activation, ...] = field(default=())

    def __post_init__(self):
        if self.n_layers < 2:
            raise ValueError("FCResNet needs at least 2 layers (one block + linear output)")
        if self.d < 1 or self.q < 1:
            raise ValueError("widths must be positive")
        acts = self.activations
        if not acts:
            acts = tuple(get_activation("sigmoid") for _ in range(self.n_layers - 1))
        elif len(acts) == 1 and self.n_layers - 1 > 1:
            acts = tuple(acts[0] for _ in range(self.n_layers - 1))
        if len(acts) != self.n_layers - 1:
            raise ValueError(f"need {self.n_layers - 1} activations, got {len(acts)}")
        object.__setattr__(self, "activations", acts)

    @classmethod
    def make(cls, n_layers: int, d: int, q: int, activation: str | Activation = "sigmoid"):
        act = activation if isinstance(activation, Activation) else get_activation(activation)
        return cls(n_layers, d, q, (act,))


def weight_shapes(shape: NetworkShape) -> list[tuple[int, int]]:
    return [(shape.d, shape.d)] * (shape.n_layers - 1) + [(shape.q, shape.d)]


def _orthogonal(rng, rows, cols):
    a = rng.standard_normal((rows, cols))
    if rows < cols:
        a = a.T
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q.T if rows < cols else q


def init_weights(shape: NetworkShape, method: str = "kaiming", seed: int = 0) -> list[np.ndarray]:
    """Seeded weight initialization; Kaiming normal is the default."""
    if method not in INIT_METHODS:
        raise ValueError(f"unknown init method {method!r}; choose from {INIT_METHODS}")
    rng = np.random.default_rng(seed)
    weights = []
    for rows, cols in weight_shapes(shape):
        fan_in = cols
        if method == "kaiming":
            w = rng.standard_normal((rows, cols)) * np.sqrt(2.0 / fan_in)
        elif method == "constant":
            w = np.full((rows, cols), 0.1)
        elif method == "normal":
            w = rng.standard_normal((rows, cols)) * 0.1
        elif method == "uniform":
            w = rng.uniform(0.0, 1.0, size=(rows, cols))
        elif method == "xavier":
            w = rng.standard_normal((rows, cols)) * np.sqrt(2.0 / (rows + cols))
        elif method == "orthogonal":
            w = _orthogonal(rng, rows, cols)
        else:  # sparse: 90% of each column zeroed, the rest N(0, 0.01)
            w = rng.standard_normal((rows, cols)) * 0.01
            for c in range(cols):
                n_zero = int(round(0.9 * rows))
                idx = rng.permutation(rows)[:n_zero]
                w[idx, c] = 0.0
        weights.append(np.ascontiguousarray(w, dtype=np.float64))
    return weights


def _check_weights(weights, shape: NetworkShape):
    expected = weight_shapes(shape)
    if len(weights) != len(expected):
        raise linalg.ShapeError(f"expected {len(expected)} weight matrices, got {len(weights)}")
    for i, (w, exp) in enumerate(zip(weights, expected)):
        if w.shape != exp:
            raise linalg.ShapeError(f"weight {i + 1} has shape {w.shape}, expected {exp}")


def forward(weights: list[np.ndarray], shape: NetworkShape, X: np.ndarray) -> list[np.ndarray]:
    """Layer outputs [V0, ..., VN] with V0 = X, Vi = V(i-1) + sigma_i(W_i V(i-1)), VN = W_N V(N-1)."""
    _check_weights(weights, shape)
    X = linalg.as_matrix(X, rows=shape.d)
    vs = [X]
    v = X
    for i in range(shape.n_layers - 1):
        v = linalg.add(v, shape.activations[i](linalg.matmul(weights[i], v)))
        vs.append(v)
    vs.append(linalg.matmul(weights[-1], v))
    return vs


def predict(weights: list[np.ndarray], shape: NetworkShape, X: np.ndarray) -> np.ndarray:
    return forward(weights, shape, X)[-1]


def objective(weights, shape: NetworkShape, X, Y, lam: float) -> float:
    """(1/2)||V_N - Y||_F^2 + (lam/2) sum_i ||W_i||_F^2."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    Y = linalg.as_matrix(Y, rows=shape.q)
    out = forward(weights, shape, X)[-1]
    misfit = linalg.frob_norm(linalg.sub(out, Y))
    penalty = sum(linalg.frob_norm(w) ** 2 for w in weights)
    return 0.5 * misfit**2 + 0.5 * lam * penalty


def mse(pred: np.ndarray, Y: np.ndarray) -> float:
    """Mean squared error per sample: (1/n) sum_j ||pred_j - y_j||_2^2."""
    if pred.shape != Y.shape:
        raise linalg.ShapeError(f"mse: shape mismatch {pred.shape} vs {Y.shape}")
    n = pred.shape[1]
    return float(np.sum((pred - Y) ** 2) / n)


# ---------------------------------------------------------------------------
# weight dump: ASCII header "N d q activation", then row-major little-endian
# float64 payload of W_1 ... W_N.


def save_weights(path, weights, shape: NetworkShape) -> None:
    _check_weights(weights, shape)
    kind = shape.activations[0].kind
    with open(path, "wb") as fh:
        fh.write(f"{shape.n_layers} {shape.d} {shape.q} {kind}\n".encode("ascii"))
        for w in weights:
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())


def load_weights(path) -> tuple[list[np.ndarray], NetworkShape]:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        n_layers, d, q, kind = int(header[0]), int(header[1]), int(header[2]), header[3]
        shape = NetworkShape.make(n_layers, d, q, kind)
        weights = []
        for rows, cols in weight_shapes(shape):
            buf = fh.read(rows * cols * 8)
            if len(buf) != rows * cols * 8:
                raise ValueError("truncated weight dump")
            weights.append(np.frombuffer(buf, dtype="<f8").reshape(rows, cols).astype(np.float64))
    return weights, shape


def unpack_header(path) -> tuple[int, int, int, str]:
    with open(path, "rb") as fh:
        n_layers, d, q, kind = fh.readline().decode("ascii").split()
    return int(n_layers), int(d), int(q), kind
