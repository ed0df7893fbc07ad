"""Inner solvers for the proximal-point block subproblems.

Two solvers live here:

* ``minimize_gd`` -- Armijo-backtracked gradient descent, warm started at
  the previous iterate.  It never returns a point worse than the warm
  start, which is the property the descent analysis relies on.

* ``separable_prox`` -- exact per-entry solver for subproblems of the form
  min_u (mu/2)(a + sigma(u) - b)^2 + (beta/2)(u - c)^2 + (omega/2)(u - p)^2
  applied entrywise.  Every stationary point lies inside an explicit
  bracket around the quadratic-part minimizer, so a sign-change scan plus
  bisection finds the global per-entry minimizer deterministically.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .activations import Activation

__all__ = ["InnerConfig", "InnerResult", "minimize_gd", "separable_prox"]


@dataclass(frozen=True)
class InnerConfig:
    tol: float = 1e-8          # gradient Frobenius norm target
    max_iter: int = 500
    armijo_c: float = 1e-4
    backtrack: float = 0.5


@dataclass
class InnerResult:
    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool


def minimize_gd(fg, x0: np.ndarray, cfg: InnerConfig = InnerConfig()) -> InnerResult:
    """Minimize f via gradient descent with Armijo backtracking.

    ``fg(x)`` must return ``(f(x), grad f(x))``.  The trial step length uses
    the Barzilai-Borwein estimate of the local curvature, safeguarded by the
    Armijo condition, so only descent steps are ever accepted: the returned
    point always satisfies ``f(x) <= f(x0)``.  If the gradient tolerance is
    not met within the iteration budget a warning is emitted and the best
    iterate returned.
    """
    x = np.array(x0, dtype=np.float64)
    f, g = fg(x)
    gnorm = float(np.linalg.norm(g))
    step = 1.0
    x_prev = g_prev = None
    it = 0
    while gnorm > cfg.tol and it < cfg.max_iter:
        if x_prev is not None:
            dx = x - x_prev
            dg = g - g_prev
            dgg = float(np.sum(dg * dg))
            bb = float(np.sum(dx * dg)) / dgg if dgg > 0 else 0.0
            if np.isfinite(bb) and bb > 0 and np.any(dx):
                step = min(max(bb, 1e-12), 1e12)
            elif not np.any(dx):
                step = 1.0  # last accepted step rounded to a no-op; restart
        gsq = gnorm * gnorm
        accepted = False
        # once the Armijo decrement falls below the floating point resolution
        # of f, steps that strictly shrink the gradient are accepted instead;
        # for a locally convex smooth function those steps also decrease the
        # exact objective, so f can wobble upward only by evaluation jitter
        f_jitter = 8.0 * np.finfo(np.float64).eps * (1.0 + abs(f))
        for _ in range(60):
            cand = x - step * g
            f_cand, g_cand = fg(cand)
            if (f_cand < f and f_cand <= f - cfg.armijo_c * step * gsq) or (
                f_cand <= f + f_jitter and float(np.linalg.norm(g_cand)) < gnorm
            ):
                x_prev, g_prev = x, g
                x, f, g = cand, f_cand, g_cand
                gnorm = float(np.linalg.norm(g))
                accepted = True
                break
            step *= cfg.backtrack
        if not accepted:
            # step has collapsed to the point where no progress is resolvable
            break
        it += 1
    converged = gnorm <= cfg.tol
    if not converged:
        warnings.warn(
            f"inner solver stopped after {it} iterations with gradient norm {gnorm:.3e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return InnerResult(x, f, gnorm, it, converged)


# ---------------------------------------------------------------------------
# separable prox solver


def _g_val(u, a, b, c, p, mu, beta, omega, act: Activation):
    s = act.sigma(u)
    return 0.5 * mu * (a + s - b) ** 2 + 0.5 * beta * (u - c) ** 2 + 0.5 * omega * (u - p) ** 2


def _g_der(u, a, b, c, p, mu, beta, omega, act: Activation):
    return mu * (a + act.sigma(u) - b) * act.dsigma(u) + beta * (u - c) + omega * (u - p)


def _relu_exact(a, b, c, p, mu, beta, omega):
    # two quadratic branches: u <= 0 (sigma = 0) and u >= 0 (sigma = u)
    u_neg = np.minimum((beta * c + omega * p) / (beta + omega), 0.0)
    u_pos = np.maximum((mu * (b - a) + beta * c + omega * p) / (mu + beta + omega), 0.0)
    relu = Activation("relu", lambda x: np.maximum(x, 0.0), lambda x: (x > 0) * 1.0, lambda x: 0.0 * x, None)
    g_neg = _g_val(u_neg, a, b, c, p, mu, beta, omega, relu)
    g_pos = _g_val(u_pos, a, b, c, p, mu, beta, omega, relu)
    return np.where(g_neg <= g_pos, u_neg, u_pos)


def separable_prox(
    A: np.ndarray,
    B: np.ndarray,
    C: np.ndarray,
    P: np.ndarray,
    mu: float,
    beta: float,
    omega: float,
    act: Activation,
    tol: float = 1e-10,
    grid_points: int = 33,
) -> np.ndarray:
    """Entrywise global minimizer of the three-term prox subproblem.

    Entries of A, B, C, P supply a, b, c, p.  For smooth bounded activations
    all stationary points lie in [u0 - R, u0 + R] with
    u0 = (beta c + omega p) / (beta + omega) and
    R = mu psi1 (|a - b| + psi0) / (beta + omega); the derivative changes
    sign across that bracket, so bisection over sign-change cells followed
    by a value comparison yields the global minimizer per entry to
    |derivative| <= tol.
    """
    if act.kind == "relu":
        return _relu_exact(A, B, C, P, mu, beta, omega)
    if not act.analytic:
        raise ValueError("separable_prox needs activation bounds")
    psi0, psi1, _ = act.bounds

    a, b, c, p = (np.asarray(m, dtype=np.float64) for m in (A, B, C, P))
    u0 = (beta * c + omega * p) / (beta + omega)
    R = mu * psi1 * (np.abs(a - b) + psi0) / (beta + omega)
    lo, hi = u0 - R, u0 + R

    def der(u):
        return _g_der(u, a, b, c, p, mu, beta, omega, act)

    def val(u):
        return _g_val(u, a, b, c, p, mu, beta, omega, act)

    ts = np.linspace(0.0, 1.0, grid_points)
    grid = lo[None, ...] + ts.reshape((-1,) + (1,) * a.ndim) * (hi - lo)[None, ...]
    ders = der(grid)

    # endpoints seed the candidates; they only win when roundoff flips the
    # bracketing derivative signs, in which case they are stationary to eps
    best_u, best_v = lo.copy(), val(lo)
    v_hi = val(hi)
    hi_better = v_hi < best_v
    best_u = np.where(hi_better, hi, best_u)
    best_v = np.where(hi_better, v_hi, best_v)
    for j in range(grid_points - 1):
        mask = (ders[j] <= 0.0) & (ders[j + 1] >= 0.0)
        if not np.any(mask):
            continue
        l, r = grid[j].copy(), grid[j + 1].copy()
        for _ in range(90):
            mid = 0.5 * (l + r)
            neg = der(mid) <= 0.0
            l = np.where(neg, mid, l)
            r = np.where(neg, r, mid)
        u_c = 0.5 * (l + r)
        v_c = np.where(mask, val(u_c), np.inf)
        better = v_c < best_v
        best_u = np.where(better, u_c, best_u)
        best_v = np.where(better, v_c, best_v)

    resid = np.max(np.abs(der(best_u)))
    if resid > max(tol, 1e-9 * (beta + omega) * (1.0 + np.max(np.abs(best_u)))):
        raise ArithmeticError(f"separable prox solver residual {resid:.3e} above tolerance")
    return best_u
