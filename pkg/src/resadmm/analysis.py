"""Measurable convergence theory: Lagrangian gradients, descent/relative-error
monitors, KKT residuals, rate fitting, and the operation-count/memory cost
model with its per-block polynomials.

The gradients are the analytic partials of the two augmented Lagrangians;
their Frobenius norm feeds the relative-error monitor.  KKT residuals stack
the stationarity and feasibility equations characterizing limit points of
the relaxations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .admm2 import Admm2Hyper, Admm2State
from .admm3 import Admm3Hyper, Admm3State
from .network import NetworkShape
from .trace import TraceRecord  # re-exported: the trace schema belongs to the diagnostics surface

__all__ = [
    "TraceRecord",
    "Grad2s",
    "Grad3s",
    "grad_L2s",
    "grad_L3s",
    "check_b1",
    "check_b2",
    "B1Report",
    "B2Report",
    "kkt_residual_2s",
    "kkt_residual_3s",
    "fit_rate",
    "RateFit",
    "CostModel",
    "cost_2s_update",
    "cost_3s_update",
    "serial_cycle_cost",
    "serial_memory_entries",
    "per_node_memory_entries",
    "complexity_tables",
]


# ---------------------------------------------------------------------------
# analytic gradients


@dataclass
class Grad2s:
    dW: list[np.ndarray]
    dV: list[np.ndarray]
    dLam: np.ndarray

    def frob_norm(self) -> float:
        sq = sum(float(np.sum(g * g)) for g in self.dW + self.dV)
        sq += float(np.sum(self.dLam * self.dLam))
        return math.sqrt(sq)


@dataclass
class Grad3s:
    dW: list[np.ndarray]
    dU: list[np.ndarray]
    dV: list[np.ndarray]
    dLam: list[np.ndarray]

    def frob_norm(self) -> float:
        sq = sum(float(np.sum(g * g)) for g in self.dW + self.dU + self.dV + self.dLam)
        return math.sqrt(sq)


def grad_L2s(state: Admm2State, Y, hyper: Admm2Hyper, shape: NetworkShape) -> Grad2s:
    """Analytic partials of the 2-splitting augmented Lagrangian."""
    n = state.n_layers
    mu, lam, beta = hyper.mu, hyper.lam, hyper.beta
    acts = shape.activations

    z = [state.W[i] @ state.v(i) for i in range(n - 1)]  # pre-activations W_i V_{i-1}
    resid = [state.v(i - 1) + acts[i - 1].sigma(z[i - 1]) - state.v(i) for i in range(1, n)]
    gap = state.W[n - 1] @ state.v(n - 1) - state.v(n)

    dW = []
    for i in range(1, n):
        dW.append(lam * state.W[i - 1] + mu * ((resid[i - 1] * acts[i - 1].dsigma(z[i - 1])) @ state.v(i - 1).T))
    dW.append(lam * state.W[n - 1] + beta * (gap @ state.v(n - 1).T) + state.Lam @ state.v(n - 1).T)

    dV = []
    for i in range(1, n - 1):
        up = resid[i]  # V_i + sigma(W_{i+1} V_i) - V_{i+1}
        dv = -mu * resid[i - 1] + mu * up
        dv = dv + mu * (state.W[i].T @ (up * acts[i].dsigma(z[i])))
        dV.append(dv)
    dV.append(-mu * resid[n - 2] + state.W[n - 1].T @ state.Lam + beta * (state.W[n - 1].T @ gap))
    dV.append(state.v(n) - Y - state.Lam - beta * gap)

    return Grad2s(dW, dV, gap.copy())


def grad_L3s(state: Admm3State, Y, hyper: Admm3Hyper, shape: NetworkShape) -> Grad3s:
    """Analytic partials of the 3-splitting augmented Lagrangian."""
    n = state.n_layers
    mu, lam = hyper.mu, hyper.lam
    beta = hyper.beta
    acts = shape.activations

    resid = [state.v(i - 1) + acts[i - 1].sigma(state.U[i - 1]) - state.v(i) for i in range(1, n)]
    gaps = [state.W[i - 1] @ state.v(i - 1) - state.U[i - 1] for i in range(1, n)]
    gap_n = state.W[n - 1] @ state.v(n - 1) - state.v(n)

    dW = []
    for i in range(1, n):
        dW.append(lam * state.W[i - 1] + beta[i - 1] * (gaps[i - 1] @ state.v(i - 1).T) + state.Lam[i - 1] @ state.v(i - 1).T)
    dW.append(lam * state.W[n - 1] + beta[n - 1] * (gap_n @ state.v(n - 1).T) + state.Lam[n - 1] @ state.v(n - 1).T)

    dU = []
    for i in range(1, n):
        dU.append(mu * (resid[i - 1] * acts[i - 1].dsigma(state.U[i - 1])) - beta[i - 1] * gaps[i - 1] - state.Lam[i - 1])

    dV = []
    for i in range(1, n - 1):
        dv = -mu * resid[i - 1] + mu * resid[i]
        dv = dv + state.W[i].T @ state.Lam[i] + beta[i] * (state.W[i].T @ gaps[i])
        dV.append(dv)
    dV.append(-mu * resid[n - 2] + state.W[n - 1].T @ state.Lam[n - 1] + beta[n - 1] * (state.W[n - 1].T @ gap_n))
    dV.append(state.v(n) - Y - state.Lam[n - 1] - beta[n - 1] * gap_n)

    dLam = [g.copy() for g in gaps] + [gap_n.copy()]
    return Grad3s(dW, dU, dV, dLam)


# ---------------------------------------------------------------------------
# descent / relative-error monitors


@dataclass
class B1Report:
    holds: bool
    c1_hat: float
    worst_violation: float


@dataclass
class B2Report:
    c2_hat: float
    ratios: np.ndarray


def check_b1(values, deltas, slack: float = 1e-10, tiny: float = 1e-14) -> B1Report:
    """Sufficient-decrease monitor over consecutive f values.

    ``values[j]`` is f at iterate j of the monitored sequence and
    ``deltas[j]`` the step norm into it; pair j uses (values[j-1],
    values[j], deltas[j]).  Steps with ||dX|| < tiny are ignored for the
    c1 estimate; a trace with no usable step reports c1_hat = inf.
    """
    values = np.asarray(values, dtype=np.float64)
    deltas = np.asarray(deltas, dtype=np.float64)
    if len(values) != len(deltas):
        raise ValueError("values and deltas must align")
    holds = True
    worst = 0.0
    margins = []
    for j in range(1, len(values)):
        diff = values[j - 1] - values[j]
        if diff < -slack:
            holds = False
            worst = max(worst, -diff)
        if deltas[j] >= tiny:
            margins.append(diff / deltas[j] ** 2)
    c1 = min(margins) if margins else math.inf
    return B1Report(holds, c1, worst)


def check_b2(grad_norms, deltas, tiny: float = 1e-14) -> B2Report:
    """Relative-error monitor: per-step ratio ||grad f|| / ||dX||.

    A step with both gradient and movement below tiny contributes 0;
    movement below tiny with a live gradient reports an infinite ratio.
    """
    grad_norms = np.asarray(grad_norms, dtype=np.float64)
    deltas = np.asarray(deltas, dtype=np.float64)
    ratios = np.where(
        grad_norms <= tiny,
        0.0,
        np.where(deltas >= tiny, grad_norms / np.maximum(deltas, tiny), math.inf),
    )
    c2 = float(np.max(ratios)) if len(ratios) else 0.0
    return B2Report(c2, ratios)


# ---------------------------------------------------------------------------
# KKT residuals


def kkt_residual_2s(state: Admm2State, Y, hyper: Admm2Hyper, shape: NetworkShape) -> float:
    """Root-sum-square of the six stationarity/feasibility blocks."""
    n = state.n_layers
    mu, lam = hyper.mu, hyper.lam
    acts = shape.activations
    z = [state.W[i] @ state.v(i) for i in range(n - 1)]
    resid = [state.v(i - 1) + acts[i - 1].sigma(z[i - 1]) - state.v(i) for i in range(1, n)]

    sq = float(np.sum((lam * state.W[n - 1] + state.Lam @ state.v(n - 1).T) ** 2))
    for i in range(1, n):
        term = lam * state.W[i - 1] + mu * ((resid[i - 1] * acts[i - 1].dsigma(z[i - 1])) @ state.v(i - 1).T)
        sq += float(np.sum(term**2))
    for i in range(1, n - 1):
        term = -mu * resid[i - 1] + mu * (state.W[i].T @ (resid[i] * acts[i].dsigma(z[i]))) + mu * resid[i]
        sq += float(np.sum(term**2))
    term = -mu * resid[n - 2] + state.W[n - 1].T @ state.Lam
    sq += float(np.sum(term**2))
    sq += float(np.sum((state.v(n) - Y - state.Lam) ** 2))
    sq += float(np.sum((state.W[n - 1] @ state.v(n - 1) - state.v(n)) ** 2))
    return math.sqrt(sq)


def kkt_residual_3s(state: Admm3State, Y, hyper: Admm3Hyper, shape: NetworkShape) -> float:
    """Root-sum-square of the eight stationarity/feasibility blocks."""
    n = state.n_layers
    mu, lam = hyper.mu, hyper.lam
    acts = shape.activations
    resid = [state.v(i - 1) + acts[i - 1].sigma(state.U[i - 1]) - state.v(i) for i in range(1, n)]

    sq = 0.0
    for i in range(1, n):
        sq += float(np.sum((state.W[i - 1] @ state.v(i - 1) - state.U[i - 1]) ** 2))
    sq += float(np.sum((state.v(n) - state.W[n - 1] @ state.v(n - 1)) ** 2))
    sq += float(np.sum((lam * state.W[n - 1] + state.Lam[n - 1] @ state.v(n - 1).T) ** 2))
    for i in range(1, n):
        sq += float(np.sum((lam * state.W[i - 1] + state.Lam[i - 1] @ state.v(i - 1).T) ** 2))
        term = mu * (resid[i - 1] * acts[i - 1].dsigma(state.U[i - 1])) - state.Lam[i - 1]
        sq += float(np.sum(term**2))
    for i in range(1, n - 1):
        term = -mu * resid[i - 1] + mu * resid[i] + state.W[i].T @ state.Lam[i]
        sq += float(np.sum(term**2))
    term = -mu * resid[n - 2] + state.W[n - 1].T @ state.Lam[n - 1]
    sq += float(np.sum(term**2))
    sq += float(np.sum((state.v(n) - Y - state.Lam[n - 1]) ** 2))
    return math.sqrt(sq)


# ---------------------------------------------------------------------------
# rate fitting


@dataclass
class RateFit:
    eta_hat: float       # geometric factor from the log-linear fit
    r2_linear: float
    power_exponent: float  # from the log-log fit
    r2_power: float


def _least_squares_line(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    a = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    pred = a @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return coef[0], r2


def fit_rate(gaps, tail: float = 0.5, floor: float = 1e-300) -> RateFit:
    """Least-squares fits of log(gap) against k and against log k on the tail.

    The geometric factor eta_hat = exp(slope) describes the R-linear case;
    the log-log exponent describes the sublinear case.  Fit quality is
    reported, never asserted.
    """
    gaps = np.asarray(gaps, dtype=np.float64)
    ks = np.arange(1, len(gaps) + 1, dtype=np.float64)
    keep = gaps > floor
    gaps, ks = gaps[keep], ks[keep]
    if len(gaps) < 3:
        raise ValueError("need at least 3 positive gap values")
    start = int(len(gaps) * (1.0 - tail))
    g, k = np.log(gaps[start:]), ks[start:]
    slope, r2_lin = _least_squares_line(k, g)
    expo, r2_pow = _least_squares_line(np.log(k), g)
    return RateFit(float(np.exp(slope)), r2_lin, float(expo), r2_pow)


# ---------------------------------------------------------------------------
# cost model (basic-operation polynomials per block update)


@dataclass(frozen=True)
class CostModel:
    """Schoolbook operation counts: multiply pr(2q-1), inversion n^3."""

    def t_mul(self, p: int, q: int, r: int) -> int:
        return p * r * (2 * q - 1)

    def t_mul_sq(self, n: int) -> int:
        return self.t_mul(n, n, n)

    def t_inv(self, n: int) -> int:
        return n**3

    def t_elewise(self, p: int, q: int) -> int:
        return p * q

    def t_hadamard(self, p: int, q: int) -> int:
        return p * q


_2S_BLOCKS = ("wN", "wi", "vi", "vN1", "vN", "lambda")
_3S_BLOCKS = ("wN", "wi", "ui", "vi", "vN1", "vN", "lambda_i", "lambda_N")


def cost_2s_update(block: str, d: int, q: int, n: int, model: CostModel = CostModel()) -> int:
    """Printed per-block operation-count polynomial for the 2-splitting cycle."""
    m = model
    if block == "wN":
        return m.t_mul(d, n, d) + m.t_inv(d) + m.t_mul(q, d, d) + 2 * m.t_mul(q, n, d) + 2 * q * d + 2 * d**2 + d
    if block == "wi":
        return (
            2 * m.t_mul(d, d, n) + m.t_mul(d, n, d) + m.t_hadamard(d, n)
            + m.t_elewise(d, n) + m.t_elewise(d, n) + 2 * d * n + 3 * d**2 + 4
        )
    if block == "vi":
        return (
            5 * m.t_mul(d, d, n) + m.t_hadamard(d, n) + m.t_elewise(d, n) + 2 * m.t_elewise(d, n)
            + m.t_elewise(d, n) + 10 * d * n + d**2 + 6
        )
    if block == "vN1":
        return (
            2 * m.t_mul(d, d, n) + 2 * m.t_mul(d, d, q) + 3 * m.t_mul(d, q, d) + 2 * m.t_mul(d, q, n)
            + 3 * m.t_inv(d) + m.t_elewise(d, n) + 3 * d * n + 3 * d**2 + 3 * d * q + 2 * d**2 + 3 * d
        )
    if block == "vN":
        return m.t_mul(q, d, n) + 3 * q * n + q * d + 2
    if block == "lambda":
        return m.t_mul(q, d, n) + 3 * q * n
    raise ValueError(f"unknown 2s block {block!r}; choose from {_2S_BLOCKS}")


def cost_3s_update(block: str, d: int, q: int, n: int, model: CostModel = CostModel()) -> int:
    """Printed per-block operation-count polynomial for the 3-splitting cycle."""
    m = model
    if block == "wN":
        return m.t_mul(d, n, d) + 2 * m.t_mul(q, n, d) + m.t_inv(d) + m.t_mul(q, d, d) + 2 * q * d + 2 * d**2 + d
    if block == "wi":
        return 3 * m.t_mul(d, n, d) + m.t_inv(d) + m.t_mul_sq(d) + 4 * d**2 + d
    if block == "ui":
        return m.t_mul(d, d, n) + m.t_hadamard(d, n) + 2 * m.t_elewise(d, n) + 8 * d * n + d**2 + 8
    if block == "vi":
        return (
            3 * m.t_mul(d, d, n) + 5 * m.t_mul_sq(d) + 2 * m.t_elewise(d, n) + 3 * m.t_inv(d)
            + 5 * d * n + 8 * d**2 + 3 * d + 3
        )
    if block == "vN1":
        return (
            3 * m.t_mul(d, q, d) + m.t_mul(d, d, n) + 2 * m.t_mul(d, d, q) + 2 * m.t_mul(d, q, n)
            + 3 * m.t_inv(d) + m.t_elewise(d, n) + 3 * d * n + 3 * d**2 + 3 * d * q + 2 * d**2 + 3 * d
        )
    if block == "vN":
        return m.t_mul(q, d, n) + 3 * q * n + q * d + 2
    if block == "lambda_i":
        return m.t_mul(d, d, n) + 3 * d * n
    if block == "lambda_N":
        return m.t_mul(q, d, n) + 3 * q * n
    raise ValueError(f"unknown 3s block {block!r}; choose from {_3S_BLOCKS}")


def serial_cycle_cost(splitting: int, n_layers: int, d: int, q: int, n: int, model: CostModel = CostModel()) -> int:
    """Basic operations of one full serial update cycle."""
    if splitting == 2:
        c = cost_2s_update
        return (
            c("wN", d, q, n, model)
            + (n_layers - 1) * c("wi", d, q, n, model)
            + (n_layers - 2) * c("vi", d, q, n, model)
            + c("vN1", d, q, n, model)
            + c("vN", d, q, n, model)
            + c("lambda", d, q, n, model)
        )
    if splitting == 3:
        c = cost_3s_update
        return (
            c("wN", d, q, n, model)
            + (n_layers - 1) * c("wi", d, q, n, model)
            + (n_layers - 1) * c("ui", d, q, n, model)
            + (n_layers - 2) * c("vi", d, q, n, model)
            + c("vN1", d, q, n, model)
            + c("vN", d, q, n, model)
            + (n_layers - 1) * c("lambda_i", d, q, n, model)
            + c("lambda_N", d, q, n, model)
        )
    raise ValueError("splitting must be 2 or 3")


# ---------------------------------------------------------------------------
# memory accounting (entry counts, two adjacent iterates for serial runs)


def serial_memory_entries(splitting: int, n_layers: int, d: int, q: int, n: int) -> int:
    """Resident entries of a serial run: two adjacent iterates of all blocks."""
    w = (n_layers - 1) * d * d + q * d
    if splitting == 2:
        per_iter = w + (n_layers - 1) * d * n + q * n + q * n  # V_1..V_{N-1}, V_N, Lambda
    elif splitting == 3:
        per_iter = w + 3 * (n_layers - 1) * d * n + 2 * q * n  # U, V, Lambda_i triples + V_N, Lambda_N
    else:
        raise ValueError("splitting must be 2 or 3")
    return 2 * per_iter


def per_node_memory_entries(splitting: int, worker: int, n_layers: int, d: int, q: int, n: int) -> int:
    """Peak resident entries of worker ``worker`` (1-based) in a distributed run.

    Interior workers of the 2-splitting hold 8 block matrices
    (W_i twice, W_{i+1}, V_{i-1} twice, V_i twice, V_{i+1} once): 3d^2+5dn.
    The 3-splitting interior set has 13 matrices: 2d^2+11dn.
    """
    if not 1 <= worker <= n_layers:
        raise ValueError("worker index out of range")
    if splitting == 2:
        if worker <= n_layers - 2:
            return 3 * d * d + 5 * d * n
        if worker == n_layers - 1:
            return 2 * d * d + q * d + 4 * d * n + 2 * q * n
        return q * d + 2 * d * n + 3 * q * n
    if splitting == 3:
        if worker <= n_layers - 2:
            return 2 * d * d + 11 * d * n
        if worker == n_layers - 1:
            return d * d + q * d + 8 * d * n + 2 * q * n
        return q * d + 2 * d * n + 4 * q * n
    raise ValueError("splitting must be 2 or 3")


def complexity_tables(K: int, n_layers: int, d: int, q: int, n: int, model: CostModel = CostModel()) -> dict:
    """Closed-form serial/parallel cost and memory summary for both splittings."""
    from .parallel import simulate_makespan  # local import to keep modules acyclic

    out = {}
    for splitting in (2, 3):
        cycle = serial_cycle_cost(splitting, n_layers, d, q, n, model)
        blocks = _2S_BLOCKS if splitting == 2 else _3S_BLOCKS
        cost_fn = cost_2s_update if splitting == 2 else cost_3s_update
        unit = max(cost_fn(b, d, q, n, model) for b in blocks)
        span_slots = simulate_makespan(splitting, K, n_layers)
        out[f"{splitting}s"] = {
            "serial_ops": K * cycle,
            "parallel_ops_span": span_slots * unit,
            "serial_units": K * (2 * n_layers + 1) if splitting == 2 else K * (4 * n_layers - 1),
            "parallel_slots": span_slots,
            "serial_mem": serial_memory_entries(splitting, n_layers, d, q, n),
            "per_node_mem": [
                per_node_memory_entries(splitting, w, n_layers, d, q, n) for w in range(1, n_layers + 1)
            ],
        }
    return out
