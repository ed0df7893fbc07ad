"""Synthetic regression tasks used by the function-fitting experiments.

Inputs are drawn uniformly from [-2, 2)^d; targets are either the l1 norm
of the input or a piecewise oscillation surface.  Samples are columns:
X is (d, n) and Y is (q, n).

The oscillation target is defined on three regions.  The middle region is
written degenerately in its source (a set minus itself), so the partition
implemented here is: region 1 = all coordinates <= -1, region 3 = any
coordinate > 1, region 2 = everything else.  On region 1 odd-indexed
coordinates enter linearly and even-indexed ones squared; region 3 swaps
the exponent pattern; region 2 squares everything.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import linalg

__all__ = [
    "Dataset",
    "gen_l1",
    "gen_oscillation",
    "oscillation_value",
    "split_train_test",
    "save_csv",
    "load_csv",
]


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray  # (d, n)
    Y: np.ndarray  # (q, n)

    def __post_init__(self):
        object.__setattr__(self, "X", linalg.as_matrix(self.X))
        object.__setattr__(self, "Y", linalg.as_matrix(self.Y))
        if self.X.shape[1] != self.Y.shape[1]:
            raise linalg.ShapeError("X and Y must have the same number of sample columns")

    @property
    def d(self) -> int:
        return self.X.shape[0]

    @property
    def q(self) -> int:
        return self.Y.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]


def _uniform_inputs(d: int, n: int, seed: int) -> np.ndarray:
    if d < 1 or n < 1:
        raise ValueError("d and n must be positive")
    rng = np.random.default_rng(seed)
    return rng.uniform(-2.0, 2.0, size=(d, n))


def gen_l1(d: int, n: int, seed: int = 0) -> Dataset:
    """y = sum_i |x_i| on uniform [-2, 2)^d inputs."""
    X = _uniform_inputs(d, n, seed)
    Y = np.sum(np.abs(X), axis=0, keepdims=True)
    return Dataset(X, Y)


def oscillation_value(x: np.ndarray) -> float:
    """Piecewise oscillation target for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    odd = x[0::2]   # x_1, x_3, ... (1-based odd positions)
    even = x[1::2]  # x_2, x_4, ...
    if np.all(x <= -1.0):
        return float(np.prod(odd) * np.prod(even**2))
    if np.any(x > 1.0):
        return float(np.prod(odd**2) * np.prod(even))
    return float(np.prod(x**2))


def gen_oscillation(d: int, n: int, seed: int = 0) -> Dataset:
    X = _uniform_inputs(d, n, seed)
    Y = np.array([[oscillation_value(X[:, j]) for j in range(n)]])
    return Dataset(X, Y)


def split_train_test(ds: Dataset, ratio: float, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then a floor(ratio * n) / remainder column split."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ds.n)
    n_train = int(ratio * ds.n)
    tr, te = perm[:n_train], perm[n_train:]
    return (
        Dataset(ds.X[:, tr].copy(), ds.Y[:, tr].copy()),
        Dataset(ds.X[:, te].copy(), ds.Y[:, te].copy()),
    )


def save_csv(ds: Dataset, path) -> None:
    """One sample per row with header x_1..x_d,y_1..y_q."""
    header = [f"x_{i + 1}" for i in range(ds.d)] + [f"y_{i + 1}" for i in range(ds.q)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for j in range(ds.n):
            writer.writerow([repr(float(v)) for v in ds.X[:, j]] + [repr(float(v)) for v in ds.Y[:, j]])


def load_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = sum(1 for h in header if h.startswith("x_"))
        q = len(header) - d
        rows = [[float(v) for v in row] for row in reader]
    data = np.asarray(rows, dtype=np.float64).T
    return Dataset(data[:d], data[d:])
