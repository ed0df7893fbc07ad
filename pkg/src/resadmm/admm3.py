"""3-splitting alternating-direction trainer.

On top of the layer outputs V_i, this relaxation introduces pre-activations
U_i = W_i V_{i-1} and dualizes every linear constraint (multipliers
Lambda_1..Lambda_N with per-layer penalties beta_i), which makes all W and
V updates closed-form.  The U updates are proximal-point (solved exactly
entrywise, the subproblem being separable) or proximal-gradient.

One serial cycle: W_N, W_{N-1}..W_1, then alternately (U_1, V_1)...
(U_{N-2}, V_{N-2}), U_{N-1}, V_{N-1}, V_N, then Lambda_1..Lambda_N.

The parameter validator evaluates the lower-bound and schedule-window
formulas backing the descent analysis (penalty floors for beta_i, the
discriminant Delta_i, the omega window, and the auxiliary-function weights
theta_i / eta_i); strict mode refuses configurations that violate them,
permissive mode demotes violations to reported diagnostics.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import linalg
from .activations import Activation
from .admm2 import lambda_closed_form, vN_closed_form, weight_ridge_update
from .network import NetworkShape, objective
from .schedules import Schedule
from .subsolvers import InnerConfig, separable_prox
from .trace import TraceRecord

__all__ = [
    "Admm3Hyper",
    "Admm3State",
    "Admm3Report",
    "validate_3s_params",
    "init_3s",
    "aug_lag_3s",
    "aux_function",
    "update_wi_3s",
    "update_ui_prox_point",
    "update_ui_prox_grad",
    "update_vi_3s",
    "update_vN1_3s",
    "update_vN_3s",
    "update_lambda_i",
    "update_lambda_N",
    "step_serial_3s",
]

VARIANTS = ("prox_point", "prox_grad")

# Assumption constants: beta floor 32(1+sqrt(2)) mu S_i and 16 mu psi1^2
_BETA_FLOOR_COEF = 32.0 * (1.0 + np.sqrt(2.0))


@dataclass(frozen=True)
class Admm3Hyper:
    n_layers: int
    lam: float = 0.0001
    mu: float = 1.0
    beta: tuple[float, ...] | float = 100.0
    variant: str = "prox_grad"
    omega: Schedule = field(default_factory=lambda: Schedule.constant(10.0))
    tau: Schedule = field(default_factory=lambda: Schedule.constant(10.0))
    vmax: tuple[float, ...] | float = 100.0  # bounds for ||V_i||_F, i = 0..N-1
    eps_hat: float | None = None  # in (0, sqrt(Delta_i)/32); default sqrt(Delta_i)/64
    eps: float | None = None      # in (0, omega_min/4); default omega_min/8
    inner: InnerConfig = field(default_factory=InnerConfig)

    def __post_init__(self):
        if self.n_layers < 2:
            raise ValueError("n_layers must be at least 2")
        if min(self.lam, self.mu) <= 0:
            raise ValueError("lam and mu must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        beta = self.beta
        if np.isscalar(beta):
            beta = tuple(float(beta) for _ in range(self.n_layers))
        else:
            beta = tuple(float(b) for b in beta)
        if len(beta) != self.n_layers or min(beta) <= 0:
            raise ValueError(f"need {self.n_layers} positive beta values")
        object.__setattr__(self, "beta", beta)
        vmax = self.vmax
        if np.isscalar(vmax):
            vmax = tuple(float(vmax) for _ in range(self.n_layers))
        else:
            vmax = tuple(float(v) for v in vmax)
        if len(vmax) != self.n_layers or min(vmax) < 0:
            raise ValueError(f"need {self.n_layers} nonnegative vmax values (indices 0..N-1)")
        object.__setattr__(self, "vmax", vmax)


@dataclass
class Admm3Report:
    """Derived Assumption quantities and per-assumption verdicts."""

    s: np.ndarray            # S_i = psi0 psi2 + psi1^2 + (Vmax_i + Vmax_{i-1}) psi2
    delta: np.ndarray
    omega_min: np.ndarray
    omega_max: np.ndarray
    theta: np.ndarray
    eta: np.ndarray
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures


def validate_3s_params(
    hyper: Admm3Hyper,
    activation: Activation,
    x_norm: float | None = None,
    strict: bool = False,
) -> Admm3Report:
    """Evaluate the parameter lower bounds and the omega schedule window.

    Checks, per hidden layer i: beta_i above its floor, discriminant
    Delta_i = (beta_i/4 - 8 mu S_i)^2 - 128 mu^2 S_i^2 > 0, the printed
    omega_min/omega_max window non-empty with eps_hat in (0, sqrt(Delta)/32)
    and eps in (0, omega_min/4), the omega schedule non-decreasing inside
    the window, beta_N > 1 and Vmax_0 > ||X||_F.  theta_i and eta_i are the
    auxiliary-function weights.  In strict mode any violation raises.
    """
    n = hyper.n_layers
    failures: list[str] = []
    if not activation.analytic:
        failures.append(f"activation {activation.kind!r} has no smoothness bounds (relu rejected)")
        psi0 = psi1 = psi2 = np.nan
    else:
        psi0, psi1, psi2 = activation.bounds

    mu = hyper.mu
    beta = np.asarray(hyper.beta)
    vmax = np.asarray(hyper.vmax)
    idx = np.arange(1, n)  # hidden layers 1..N-1
    s = psi0 * psi2 + psi1**2 + (vmax[idx] + vmax[idx - 1]) * psi2

    floor = np.maximum(_BETA_FLOOR_COEF * mu * s, 16.0 * mu * psi1**2)
    for i in idx:
        if not beta[i - 1] > floor[i - 1]:
            failures.append(
                f"penalty floor: beta_{i}={beta[i - 1]:g} must exceed "
                f"max(32(1+sqrt2) mu S_{i}, 16 mu psi1^2)={floor[i - 1]:g}"
            )
    if not beta[n - 1] > 1.0:
        failures.append(f"penalty floor: beta_N={beta[n - 1]:g} must exceed 1")
    if x_norm is not None and not vmax[0] > x_norm:
        failures.append(f"vmax_0={vmax[0]:g} must exceed ||X||_F={x_norm:g}")

    core = beta[idx - 1] / 4.0 - 8.0 * mu * s
    delta = core**2 - 128.0 * mu**2 * s**2
    with np.errstate(invalid="ignore"):
        sqrt_delta = np.sqrt(np.maximum(delta, 0.0))
    for i in idx:
        if not delta[i - 1] > 0:
            failures.append(f"discriminant: Delta_{i}={delta[i - 1]:g} must be positive")

    eps_hat = hyper.eps_hat if hyper.eps_hat is not None else sqrt_delta / 64.0
    eps_hat = np.broadcast_to(np.asarray(eps_hat, dtype=np.float64), (n - 1,)).copy()
    bad = (eps_hat <= 0) | (eps_hat >= sqrt_delta / 32.0)
    for i in idx[bad]:
        failures.append(f"eps_hat_{i} must lie in (0, sqrt(Delta_{i})/32)")

    omega_min = (core - sqrt_delta) / 16.0 + eps_hat
    eps = hyper.eps if hyper.eps is not None else omega_min / 8.0
    eps = np.broadcast_to(np.asarray(eps, dtype=np.float64), (n - 1,)).copy()
    bad = (eps <= 0) | (eps >= omega_min / 4.0)
    for i in idx[bad]:
        failures.append(f"eps_{i} must lie in (0, omega_min_{i}/4)")

    with np.errstate(invalid="ignore"):
        cap = np.sqrt(np.maximum(omega_min**2 + beta[idx - 1] * omega_min / 16.0 - beta[idx - 1] * eps / 4.0, 0.0))
    omega_max = np.minimum((core + sqrt_delta) / 16.0 - eps_hat, cap)
    for i in idx:
        if not omega_min[i - 1] > 0:
            failures.append(f"omega_min_{i}={omega_min[i - 1]:g} must be positive")
        if not omega_max[i - 1] > omega_min[i - 1]:
            failures.append(f"omega window empty: omega_max_{i}={omega_max[i - 1]:g} <= omega_min_{i}={omega_min[i - 1]:g}")

    if hyper.variant == "prox_point" and not failures:
        sched = hyper.omega
        if not sched.non_decreasing:
            failures.append("omega schedule must be non-decreasing")
        for i in idx:
            if not (omega_min[i - 1] < sched.lo and sched.hi < omega_max[i - 1]):
                failures.append(
                    f"omega schedule range [{sched.lo:g}, {sched.hi:g}] must lie inside "
                    f"(omega_min_{i}, omega_max_{i}) = ({omega_min[i - 1]:g}, {omega_max[i - 1]:g})"
                )

    # auxiliary-function weights; outside the certified regime fall back to
    # the schedule's declared floor so the auxiliary value stays computable
    wmin = omega_min if not failures else np.full(n - 1, hyper.omega.lo if hyper.variant == "prox_point" else hyper.tau.lo)
    theta = 4.0 * wmin**2 / beta[idx - 1] + wmin / 4.0
    eta = 4.0 * mu**2 * psi1**2 / beta[idx - 1] + mu / 4.0 if activation.analytic else np.full(n - 1, np.nan)

    report = Admm3Report(s, delta, omega_min, omega_max, theta, eta, failures)
    if strict and failures:
        raise ValueError("3-splitting parameter validation failed: " + "; ".join(failures))
    return report


@dataclass(frozen=True)
class Admm3State:
    """Full iterate: weights, pre-activations, layer outputs, multipliers."""

    W: tuple[np.ndarray, ...]
    U: tuple[np.ndarray, ...]    # N-1 matrices, d x n
    V: tuple[np.ndarray, ...]    # V_1..V_N
    Lam: tuple[np.ndarray, ...]  # Lambda_1..Lambda_N
    X: np.ndarray
    k: int = 0

    @property
    def n_layers(self) -> int:
        return len(self.W)

    def v(self, i: int) -> np.ndarray:
        return self.X if i == 0 else self.V[i - 1]

    def flat_blocks(self) -> list[np.ndarray]:
        return list(self.W) + list(self.U) + list(self.V) + list(self.Lam)


def init_3s(weights, shape: NetworkShape, X: np.ndarray) -> Admm3State:
    """U_i = W_i V_{i-1}, V_i from the recursion, all multipliers zero."""
    X = linalg.as_matrix(X, rows=shape.d)
    us, vs = [], []
    v = X
    for i in range(shape.n_layers - 1):
        u = linalg.matmul(weights[i], v)
        us.append(u)
        v = linalg.add(v, shape.activations[i](u))
        vs.append(v)
    vs.append(linalg.matmul(weights[-1], v))
    lams = [np.zeros_like(u) for u in us] + [np.zeros_like(vs[-1])]
    return Admm3State(tuple(np.array(w) for w in weights), tuple(us), tuple(vs), tuple(lams), X, k=0)


def aug_lag_3s(state: Admm3State, Y: np.ndarray, hyper: Admm3Hyper, shape: NetworkShape) -> float:
    n = state.n_layers
    val = 0.5 * linalg.frob_norm(linalg.sub(state.v(n), Y)) ** 2
    val += 0.5 * hyper.lam * sum(linalg.frob_norm(w) ** 2 for w in state.W)
    for i in range(1, n):
        act = shape.activations[i - 1]
        resid = linalg.sub(linalg.add(state.v(i - 1), act(state.U[i - 1])), state.v(i))
        val += 0.5 * hyper.mu * linalg.frob_norm(resid) ** 2
        gap = linalg.sub(linalg.matmul(state.W[i - 1], state.v(i - 1)), state.U[i - 1])
        val += linalg.frob_inner(state.Lam[i - 1], gap)
        val += 0.5 * hyper.beta[i - 1] * linalg.frob_norm(gap) ** 2
    gap = linalg.sub(linalg.matmul(state.W[n - 1], state.v(n - 1)), state.v(n))
    val += linalg.frob_inner(state.Lam[n - 1], gap)
    val += 0.5 * hyper.beta[n - 1] * linalg.frob_norm(gap) ** 2
    return val


def aux_function(
    state: Admm3State,
    prev_U: tuple[np.ndarray, ...],
    prev_V: tuple[np.ndarray, ...],
    Y: np.ndarray,
    hyper: Admm3Hyper,
    shape: NetworkShape,
    theta: np.ndarray,
    eta: np.ndarray,
) -> float:
    """Augmented Lagrangian plus theta/eta-weighted squared steps of (U, V).

    prev_U and prev_V are the previous-cycle values of U_1..U_{N-1} and
    V_1..V_{N-1}; with a stationary pair the value reduces to aug_lag_3s.
    """
    val = aug_lag_3s(state, Y, hyper, shape)
    for i in range(state.n_layers - 1):
        val += float(theta[i]) * linalg.frob_norm(linalg.sub(state.U[i], prev_U[i])) ** 2
        val += float(eta[i]) * linalg.frob_norm(linalg.sub(state.V[i], prev_V[i])) ** 2
    return val


# ---------------------------------------------------------------------------
# block-level updates (shared with the pipelined executor)


def ui_prox_point(u_prev, w_cur, v_im1_cur, v_i_prev, lam_dual, act, mu, beta, omega):
    """Exact entrywise solution of the proximal-point pre-activation update."""
    center = linalg.add(linalg.matmul(w_cur, v_im1_cur), linalg.scale(1.0 / beta, lam_dual))
    return separable_prox(v_im1_cur, v_i_prev, center, u_prev, mu, beta, omega, act)


def ui_prox_grad(u_prev, w_cur, v_im1_cur, v_i_prev, lam_dual, act, mu, beta, tau):
    """Closed-form linearized pre-activation update."""
    resid = linalg.sub(linalg.add(v_im1_cur, act(u_prev)), v_i_prev)
    out = linalg.scale(-mu / (tau + beta), linalg.hadamard(resid, act.deriv(u_prev)))
    out = linalg.add(out, linalg.scale(tau / (tau + beta), u_prev))
    out = linalg.add(out, linalg.scale(beta / (tau + beta), linalg.matmul(w_cur, v_im1_cur)))
    return linalg.add(out, linalg.scale(1.0 / (tau + beta), lam_dual))


def vi_closed_form_3s(v_im1_cur, u_i_cur, u_ip1_prev, v_ip1_prev, w_ip1_cur, lam_ip1, act_i, act_ip1, mu, beta_ip1):
    """Interior layer-output update via the SPD system 2 mu I + beta W'W."""
    d = w_ip1_cur.shape[1]
    a = linalg.axpy(beta_ip1, linalg.matmul(linalg.transpose(w_ip1_cur), w_ip1_cur), linalg.scale(2.0 * mu, np.eye(d)))
    s = linalg.add(linalg.sub(linalg.add(v_im1_cur, act_i(u_i_cur)), act_ip1(u_ip1_prev)), v_ip1_prev)
    rhs = linalg.scale(mu, s)
    rhs = linalg.add(rhs, linalg.matmul(linalg.transpose(w_ip1_cur), linalg.sub(linalg.scale(beta_ip1, u_ip1_prev), lam_ip1)))
    return linalg.spd_solve(a, rhs)


def vN1_closed_form_3s(v_Nm2_cur, u_Nm1_cur, w_N_cur, v_N_prev, lamN, act_Nm1, mu, beta_N):
    """Last hidden output update via the SPD system mu I + beta_N W_N'W_N."""
    d = w_N_cur.shape[1]
    a = linalg.axpy(beta_N, linalg.matmul(linalg.transpose(w_N_cur), w_N_cur), linalg.scale(mu, np.eye(d)))
    pred = linalg.add(act_Nm1(u_Nm1_cur), v_Nm2_cur)
    rhs = linalg.scale(mu, pred)
    rhs = linalg.add(rhs, linalg.matmul(linalg.transpose(w_N_cur), linalg.sub(linalg.scale(beta_N, v_N_prev), lamN)))
    return linalg.spd_solve(a, rhs)


def lambda_i_closed_form(lam_prev, w_cur, v_im1_cur, u_cur, beta_i):
    gap = linalg.sub(linalg.matmul(w_cur, v_im1_cur), u_cur)
    return linalg.axpy(beta_i, gap, lam_prev)


# ---------------------------------------------------------------------------
# state-level operations


def update_wN_3s(state: Admm3State, hyper: Admm3Hyper) -> np.ndarray:
    n = state.n_layers
    return weight_ridge_update(state.v(n), state.v(n - 1), state.Lam[n - 1], hyper.lam, hyper.beta[n - 1])


def update_wi_3s(state: Admm3State, i: int, hyper: Admm3Hyper) -> np.ndarray:
    return weight_ridge_update(state.U[i - 1], state.v(i - 1), state.Lam[i - 1], hyper.lam, hyper.beta[i - 1])


def update_ui_prox_point(state, i, hyper, shape, w_cur, v_im1_cur) -> np.ndarray:
    omega = hyper.omega.value(i, state.k)
    return ui_prox_point(
        state.U[i - 1], w_cur, v_im1_cur, state.v(i), state.Lam[i - 1],
        shape.activations[i - 1], hyper.mu, hyper.beta[i - 1], omega,
    )


def update_ui_prox_grad(state, i, hyper, shape, w_cur, v_im1_cur) -> np.ndarray:
    tau = hyper.tau.value(i, state.k)
    return ui_prox_grad(
        state.U[i - 1], w_cur, v_im1_cur, state.v(i), state.Lam[i - 1],
        shape.activations[i - 1], hyper.mu, hyper.beta[i - 1], tau,
    )


def update_vi_3s(state, i, hyper, shape, v_im1_cur, u_i_cur, w_ip1_cur) -> np.ndarray:
    return vi_closed_form_3s(
        v_im1_cur, u_i_cur, state.U[i], state.v(i + 1), w_ip1_cur, state.Lam[i],
        shape.activations[i - 1], shape.activations[i], hyper.mu, hyper.beta[i],
    )


def update_vN1_3s(state, hyper, shape, v_Nm2_cur, u_Nm1_cur, w_N_cur) -> np.ndarray:
    n = state.n_layers
    return vN1_closed_form_3s(
        v_Nm2_cur, u_Nm1_cur, w_N_cur, state.v(n), state.Lam[n - 1],
        shape.activations[n - 2], hyper.mu, hyper.beta[n - 1],
    )


def update_vN_3s(state, hyper, Y, w_N_cur, v_Nm1_cur) -> np.ndarray:
    n = state.n_layers
    return vN_closed_form(w_N_cur, v_Nm1_cur, state.Lam[n - 1], Y, hyper.beta[n - 1])


def update_lambda_i(state, i, hyper, w_cur, v_im1_cur, u_cur) -> np.ndarray:
    return lambda_i_closed_form(state.Lam[i - 1], w_cur, v_im1_cur, u_cur, hyper.beta[i - 1])


def update_lambda_N(state, hyper, w_N_cur, v_Nm1_cur, v_N_cur) -> np.ndarray:
    n = state.n_layers
    return lambda_closed_form(state.Lam[n - 1], w_N_cur, v_Nm1_cur, v_N_cur, hyper.beta[n - 1])


def step_serial_3s(
    state: Admm3State,
    Y: np.ndarray,
    hyper: Admm3Hyper,
    shape: NetworkShape,
    theta: np.ndarray | None = None,
    eta: np.ndarray | None = None,
) -> tuple[Admm3State, TraceRecord]:
    """One full serial cycle; fills aux_lag when theta/eta are supplied."""
    t0 = time.perf_counter_ns()
    ops0 = linalg.op_count()
    n = state.n_layers
    prox_u = update_ui_prox_point if hyper.variant == "prox_point" else update_ui_prox_grad

    w_new: list = [None] * n
    w_new[n - 1] = update_wN_3s(state, hyper)
    for i in range(n - 1, 0, -1):
        w_new[i - 1] = update_wi_3s(state, i, hyper)

    u_new: list = [None] * (n - 1)
    v_new: list = [None] * n

    def v_cur(i: int) -> np.ndarray:
        return state.X if i == 0 else v_new[i - 1]

    for i in range(1, n - 1):
        u_new[i - 1] = prox_u(state, i, hyper, shape, w_new[i - 1], v_cur(i - 1))
        v_new[i - 1] = update_vi_3s(state, i, hyper, shape, v_cur(i - 1), u_new[i - 1], w_new[i])
    u_new[n - 2] = prox_u(state, n - 1, hyper, shape, w_new[n - 2], v_cur(n - 2))
    v_new[n - 2] = update_vN1_3s(state, hyper, shape, v_cur(n - 2), u_new[n - 2], w_new[n - 1])
    v_new[n - 1] = update_vN_3s(state, hyper, Y, w_new[n - 1], v_new[n - 2])

    lam_new: list = [None] * n
    for i in range(1, n):
        lam_new[i - 1] = update_lambda_i(state, i, hyper, w_new[i - 1], v_cur(i - 1), u_new[i - 1])
    lam_new[n - 1] = update_lambda_N(state, hyper, w_new[n - 1], v_new[n - 2], v_new[n - 1])

    new_state = replace(state, W=tuple(w_new), U=tuple(u_new), V=tuple(v_new), Lam=tuple(lam_new), k=state.k + 1)
    for block in new_state.flat_blocks():
        linalg.require_finite(block, f"3s state at k={new_state.k}")

    rec = TraceRecord(
        k=new_state.k,
        objective=objective(list(new_state.W), shape, state.X, Y, hyper.lam),
        aug_lag=aug_lag_3s(new_state, Y, hyper, shape),
        delta_x=delta_x(state, new_state),
        op_count=linalg.op_count() - ops0,
        wall_ns=time.perf_counter_ns() - t0,
    )
    if theta is not None and eta is not None:
        rec.aux_lag = aux_function(new_state, state.U, state.V[: n - 1], Y, hyper, shape, theta, eta)
    return new_state, rec


def delta_x(prev: Admm3State, cur: Admm3State) -> float:
    sq = 0.0
    for a, b in zip(prev.flat_blocks(), cur.flat_blocks()):
        sq += float(np.sum((a - b) ** 2))
    return float(np.sqrt(sq))
