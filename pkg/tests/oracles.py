"""Independent numeric oracles for the test suite.

Everything here is deliberately primitive (triple loops, Gaussian
elimination, golden-section line searches, central differences) and shares
no code path with the implementation it checks.
"""

from __future__ import annotations

import numpy as np

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def matmul_triple_loop(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    p, q = a.shape
    q2, r = b.shape
    assert q == q2
    out = np.zeros((p, r))
    for i in range(p):
        for j in range(r):
            acc = 0.0
            for k in range(q):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


def gauss_solve(a, b):
    """Dense Gaussian elimination with partial pivoting."""
    a = np.array(a, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    n = a.shape[0]
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        for row in range(col + 1, n):
            f = a[row, col] / a[col, col]
            a[row, col:] -= f * a[col, col:]
            b[row] -= f * b[col]
    x = np.zeros_like(b)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x


def golden_section(f, lo, hi, iters=90):
    """Golden-section search for the minimum of a unimodal scalar function."""
    a, b = float(lo), float(hi)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def grid_then_golden(f, lo, hi, grid_points=4001, iters=90):
    """Dense scan followed by golden-section refinement; a global 1-D oracle."""
    xs = np.linspace(lo, hi, grid_points)
    vals = np.array([f(x) for x in xs])
    j = int(np.argmin(vals))
    a = xs[max(j - 1, 0)]
    b = xs[min(j + 1, grid_points - 1)]
    return golden_section(f, a, b, iters)


def coordinate_argmin(f, x0, sweeps=60, radius=4.0, tol=1e-14):
    """Cyclic coordinate descent with golden-section line searches.

    An independent numeric minimizer for small smooth problems; the bracket
    radius shrinks as the sweeps stall.
    """
    x = np.array(x0, dtype=np.float64)
    best = f(x)
    r = radius
    for _ in range(sweeps):
        improved = 0.0
        for idx in np.ndindex(x.shape):
            def line(t, idx=idx):
                x_try = x.copy()
                x_try[idx] = t
                return f(x_try)

            t_star = golden_section(line, x[idx] - r, x[idx] + r, iters=70)
            val = line(t_star)
            if val < best:
                improved += best - val
                best = val
                x[idx] = t_star
        if improved < tol:
            if r < 1e-8:
                break
            r *= 0.25
    return x


def numeric_grad(f, x, h=1e-6):
    """Central finite differences of a scalar function of an ndarray."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def moving_average(xs, window):
    xs = np.asarray(xs, dtype=np.float64)
    if len(xs) < window:
        raise ValueError("series shorter than window")
    kernel = np.ones(window) / window
    return np.convolve(xs, kernel, mode="valid")


def rel_err(approx, exact, floor=1e-12):
    approx = np.asarray(approx, dtype=np.float64)
    exact = np.asarray(exact, dtype=np.float64)
    denom = max(float(np.linalg.norm(exact)), floor)
    return float(np.linalg.norm(approx - exact)) / denom
