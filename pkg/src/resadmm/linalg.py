"""Dense float64 kernels shared by every trainer in the package.

All block-variable updates are expressed through the small operation set
below (matmul, SPD solve, Hadamard, transpose, norms, elementwise maps) so
that the numerical backend stays swappable and every kernel call feeds a
global basic-operation counter.  Arrays are plain C-contiguous float64
ndarrays; callers treat them as immutable once produced.

SPD systems are solved with a Cholesky factorization instead of forming an
explicit inverse; the factorization reports the offending pivot when the
matrix is not positive definite.
"""

from __future__ import annotations

import threading

import numpy as np

__all__ = [
    "ShapeError",
    "NumericalError",
    "as_matrix",
    "require_finite",
    "matmul",
    "hadamard",
    "transpose",
    "frob_norm",
    "frob_inner",
    "axpy",
    "scale",
    "add",
    "sub",
    "emap",
    "cholesky",
    "spd_solve",
    "add_ops",
    "op_count",
    "reset_op_count",
]


class ShapeError(ValueError):
    """Operand shapes do not match the operation contract."""


class NumericalError(ArithmeticError):
    """Numerical failure (non-SPD system, non-finite entries, ...)."""


# ---------------------------------------------------------------------------
# basic-operation counter (thread-safe; used by the cost-model cross checks)

_lock = threading.Lock()
_ops = 0


def add_ops(n: int) -> None:
    global _ops
    with _lock:
        _ops += int(n)


def op_count() -> int:
    with _lock:
        return _ops


def reset_op_count() -> None:
    global _ops
    with _lock:
        _ops = 0


# ---------------------------------------------------------------------------
# construction / validation


def as_matrix(a, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce ``a`` to a 2-D C-contiguous float64 array and validate it."""
    m = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if rows is not None and m.shape[0] != rows:
        raise ShapeError(f"expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise ShapeError(f"expected {cols} cols, got {m.shape[1]}")
    require_finite(m, "matrix")
    return m


def require_finite(a: np.ndarray, what: str = "result") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"non-finite entries in {what}")
    return a


def _binary_shapes(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# ---------------------------------------------------------------------------
# kernels


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product a @ b with schoolbook operation accounting pr(2q-1)."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions disagree {a.shape} x {b.shape}")
    p, q = a.shape
    r = b.shape[1]
    add_ops(p * r * (2 * q - 1))
    return a @ b


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _binary_shapes(a, b, "hadamard")
    add_ops(a.size)
    return a * b


def transpose(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a.T)


def frob_norm(a: np.ndarray) -> float:
    add_ops(2 * a.size)
    return float(np.linalg.norm(a))


def frob_inner(a: np.ndarray, b: np.ndarray) -> float:
    """<A, B> = trace(A B^T) = sum of entrywise products."""
    _binary_shapes(a, b, "frob_inner")
    add_ops(2 * a.size)
    return float(np.sum(a * b))


def axpy(alpha: float, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """alpha * a + b."""
    _binary_shapes(a, b, "axpy")
    add_ops(2 * a.size)
    return alpha * a + b


def scale(alpha: float, a: np.ndarray) -> np.ndarray:
    add_ops(a.size)
    return alpha * a


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _binary_shapes(a, b, "add")
    add_ops(a.size)
    return a + b


def sub(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _binary_shapes(a, b, "sub")
    add_ops(a.size)
    return a - b


def emap(f, a: np.ndarray) -> np.ndarray:
    """Apply a scalar function elementwise; one basic op per entry."""
    add_ops(a.size)
    out = np.asarray(f(a), dtype=np.float64)
    if out.shape != a.shape:
        raise ShapeError("emap: function changed the shape")
    return out


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor of a symmetric positive definite matrix.

    Raises NumericalError naming the offending pivot when the matrix is not
    positive definite, and ShapeError when it is not square/symmetric.
    """
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"cholesky: matrix must be square, got {a.shape}")
    n = a.shape[0]
    sym_tol = 1e-12 * max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > sym_tol:
        raise NumericalError("cholesky: matrix not symmetric within 1e-12")
    L = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - np.dot(L[j, :j], L[j, :j])
        if pivot <= 0.0 or not np.isfinite(pivot):
            raise NumericalError(f"cholesky: non-positive pivot {pivot!r} at index {j}")
        L[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            L[j + 1 :, j] = (a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    # column j: one sqrt, 2j flops for the pivot, (n-j-1)(2j+1) for the column
    add_ops(sum(1 + 2 * j + (n - j - 1) * (2 * j + 1) for j in range(n)))
    return L


def _solve_lower(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    n, m = L.shape[0], B.shape[1]
    X = np.zeros((n, m))
    for i in range(n):
        X[i] = (B[i] - L[i, :i] @ X[:i]) / L[i, i]
    add_ops(n * n * m)
    return X


def _solve_upper(U: np.ndarray, B: np.ndarray) -> np.ndarray:
    n, m = U.shape[0], B.shape[1]
    X = np.zeros((n, m))
    for i in range(n - 1, -1, -1):
        X[i] = (B[i] - U[i, i + 1 :] @ X[i + 1 :]) / U[i, i]
    add_ops(n * n * m)
    return X


def spd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A X = B for symmetric positive definite A via Cholesky.

    Postcondition ||A X - B||_F <= 1e-10 (1 + ||B||_F); never forms A^{-1}.
    """
    if b.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ShapeError(f"spd_solve: incompatible shapes {a.shape} x {b.shape}")
    L = cholesky(a)
    x = _solve_upper(L.T, _solve_lower(L, b))
    resid = float(np.linalg.norm(a @ x - b))
    if resid > 1e-10 * (1.0 + float(np.linalg.norm(b))):
        raise NumericalError(f"spd_solve: residual {resid:.3e} above contract")
    return require_finite(x, "spd_solve result")
