"""2-splitting alternating-direction trainer.

The relaxation keeps the residual-block recursions as quadratic penalties
(weight mu) and dualizes only the linear output constraint
W_N V_{N-1} = V_N (multiplier Lambda, penalty beta).  One serial cycle
updates, in order: W_N (closed form), W_{N-1}..W_1 (proximal point or
proximal gradient), V_1..V_{N-2} (proximal point or gradient), V_{N-1}
(closed form), V_N (closed form), Lambda (dual ascent).

Block updates are exposed both as pure array functions (shared with the
pipelined executor, so serial and parallel runs produce bit-identical
iterates) and as state-level operations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import linalg
from .activations import Activation
from .network import NetworkShape, forward, objective
from .schedules import Schedule
from .subsolvers import InnerConfig, minimize_gd
from .trace import TraceRecord

__all__ = [
    "Admm2Hyper",
    "Admm2State",
    "init_2s",
    "aug_lag_2s",
    "update_wN",
    "update_wi_prox_point",
    "update_wi_prox_grad",
    "update_vi_prox_point",
    "update_vi_prox_grad",
    "update_vN1",
    "update_vN",
    "update_lambda",
    "step_serial_2s",
    "weight_ridge_update",
    "vN_closed_form",
]

VARIANTS = ("prox_point", "prox_grad")


@dataclass(frozen=True)
class Admm2Hyper:
    lam: float = 0.001
    mu: float = 0.1
    beta: float = 1.0
    variant: str = "prox_grad"
    omega: Schedule = field(default_factory=lambda: Schedule.constant(1.0))
    nu: Schedule = field(default_factory=lambda: Schedule.constant(1.0))
    tau: Schedule = field(default_factory=lambda: Schedule.constant(1.0))
    iota: Schedule = field(default_factory=lambda: Schedule.constant(1.0))
    inner: InnerConfig = field(default_factory=InnerConfig)

    def __post_init__(self):
        if min(self.lam, self.mu, self.beta) <= 0:
            raise ValueError("lam, mu and beta must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")

    def validate(self, activation: Activation, strict: bool = False) -> list[str]:
        """Check the convergence assumptions; returns a list of violations."""
        issues = []
        if self.beta <= 1.0:
            issues.append(f"beta must exceed 1 for the descent guarantee (got {self.beta})")
        if not activation.analytic:
            issues.append(f"activation {activation.kind!r} carries no smoothness bounds")
        if strict and issues:
            raise ValueError("; ".join(issues))
        return issues


@dataclass(frozen=True)
class Admm2State:
    """Full iterate: weights, layer outputs V_1..V_N, multiplier, counter.

    V_0 is the constant input X and is stored once on the state.
    """

    W: tuple[np.ndarray, ...]
    V: tuple[np.ndarray, ...]
    Lam: np.ndarray
    X: np.ndarray
    k: int = 0

    @property
    def n_layers(self) -> int:
        return len(self.W)

    def v(self, i: int) -> np.ndarray:
        """V_i with v(0) == X."""
        return self.X if i == 0 else self.V[i - 1]

    def flat_blocks(self) -> list[np.ndarray]:
        return list(self.W) + list(self.V) + [self.Lam]


def init_2s(weights, shape: NetworkShape, X: np.ndarray) -> Admm2State:
    """Forward-pass initialization: V_i from the network recursion, Lambda = O."""
    vs = forward(weights, shape, X)
    lam0 = np.zeros_like(vs[-1])
    return Admm2State(tuple(np.array(w) for w in weights), tuple(vs[1:]), lam0, vs[0], k=0)


def aug_lag_2s(state: Admm2State, Y: np.ndarray, hyper: Admm2Hyper, shape: NetworkShape) -> float:
    """Augmented Lagrangian of the 2-splitting relaxation."""
    n = state.n_layers
    val = 0.5 * linalg.frob_norm(linalg.sub(state.v(n), Y)) ** 2
    val += 0.5 * hyper.lam * sum(linalg.frob_norm(w) ** 2 for w in state.W)
    for i in range(1, n):
        act = shape.activations[i - 1]
        resid = linalg.sub(
            linalg.add(state.v(i - 1), act(linalg.matmul(state.W[i - 1], state.v(i - 1)))),
            state.v(i),
        )
        val += 0.5 * hyper.mu * linalg.frob_norm(resid) ** 2
    gap = linalg.sub(linalg.matmul(state.W[n - 1], state.v(n - 1)), state.v(n))
    val += linalg.frob_inner(state.Lam, gap)
    val += 0.5 * hyper.beta * linalg.frob_norm(gap) ** 2
    return val


# ---------------------------------------------------------------------------
# block-level updates (pure array functions)


def weight_ridge_update(target, v_prev, lam_dual, lam: float, beta: float) -> np.ndarray:
    """argmin_W (lam/2)||W||^2 + (beta/2)||W v_prev - target + lam_dual/beta||^2.

    Closed form (beta target v' - lam_dual v')(lam I + beta v v')^{-1},
    solved on the transposed SPD system instead of forming the inverse.
    """
    d = v_prev.shape[0]
    vt = linalg.transpose(v_prev)
    rhs = linalg.matmul(linalg.sub(linalg.scale(beta, target), lam_dual), vt)
    a = linalg.axpy(beta, linalg.matmul(v_prev, vt), linalg.scale(lam, np.eye(d)))
    return linalg.transpose(linalg.spd_solve(a, linalg.transpose(rhs)))


def wi_prox_point(w_prev, v_im1, v_i, act: Activation, lam, mu, omega, inner: InnerConfig):
    """Proximal-point weight update, solved by warm-started gradient descent."""

    def fg(w):
        z = linalg.matmul(w, v_im1)
        resid = linalg.sub(linalg.add(v_im1, act(z)), v_i)
        dw = linalg.sub(w, w_prev)
        f = (
            0.5 * lam * linalg.frob_norm(w) ** 2
            + 0.5 * mu * linalg.frob_norm(resid) ** 2
            + 0.5 * omega * linalg.frob_norm(dw) ** 2
        )
        g = linalg.scale(lam, w)
        g = linalg.add(g, linalg.scale(mu, linalg.matmul(linalg.hadamard(resid, act.deriv(z)), linalg.transpose(v_im1))))
        g = linalg.add(g, linalg.scale(omega, dw))
        return f, g

    return minimize_gd(fg, w_prev, inner).x


def wi_prox_grad(w_prev, v_im1, v_i, act: Activation, lam, mu, tau):
    """Closed-form linearized weight update."""
    z = linalg.matmul(w_prev, v_im1)
    resid = linalg.sub(linalg.add(v_im1, act(z)), v_i)
    grad_part = linalg.matmul(linalg.hadamard(resid, act.deriv(z)), linalg.transpose(v_im1))
    return linalg.sub(
        linalg.scale(tau / (lam + tau), w_prev),
        linalg.scale(mu / (lam + tau), grad_part),
    )


def vi_prox_point(v_prev, v_im1_cur, v_ip1_prev, w_i_cur, w_ip1_cur, act_i, act_ip1, mu, nu, inner: InnerConfig):
    """Proximal-point update of an interior layer output."""
    pred = linalg.add(v_im1_cur, act_i(linalg.matmul(w_i_cur, v_im1_cur)))

    def fg(v):
        z = linalg.matmul(w_ip1_cur, v)
        up = linalg.sub(linalg.add(v, act_ip1(z)), v_ip1_prev)
        dv = linalg.sub(v, v_prev)
        down = linalg.sub(pred, v)
        f = 0.5 * mu * (linalg.frob_norm(down) ** 2 + linalg.frob_norm(up) ** 2) + 0.5 * nu * linalg.frob_norm(dv) ** 2
        g = linalg.scale(-mu, down)
        g = linalg.add(g, linalg.scale(mu, up))
        g = linalg.add(g, linalg.scale(mu, linalg.matmul(linalg.transpose(w_ip1_cur), linalg.hadamard(up, act_ip1.deriv(z)))))
        g = linalg.add(g, linalg.scale(nu, dv))
        return f, g

    return minimize_gd(fg, v_prev, inner).x


def vi_prox_grad(v_prev, v_im1_cur, v_ip1_prev, w_i_cur, w_ip1_cur, act_i, act_ip1, mu, iota):
    """Closed-form linearized update of an interior layer output."""
    z_prev = linalg.matmul(w_ip1_cur, v_prev)
    resid_up = linalg.sub(linalg.add(v_prev, act_ip1(z_prev)), v_ip1_prev)
    fwd = linalg.add(
        linalg.sub(linalg.add(v_im1_cur, v_ip1_prev), v_prev),
        linalg.sub(act_i(linalg.matmul(w_i_cur, v_im1_cur)), act_ip1(z_prev)),
    )
    out = linalg.scale(mu / (mu + iota), fwd)
    out = linalg.add(out, linalg.scale(iota / (mu + iota), v_prev))
    correction = linalg.matmul(linalg.transpose(w_ip1_cur), linalg.hadamard(resid_up, act_ip1.deriv(z_prev)))
    return linalg.sub(out, linalg.scale(mu / (mu + iota), correction))


def vN1_closed_form(v_Nm2_cur, w_Nm1_cur, w_N_cur, v_N_prev, lam_dual, act_Nm1, mu, beta):
    """Closed-form update of V_{N-1} via the SPD system mu I + beta W_N' W_N."""
    d = w_N_cur.shape[1]
    a = linalg.axpy(beta, linalg.matmul(linalg.transpose(w_N_cur), w_N_cur), linalg.scale(mu, np.eye(d)))
    pred = linalg.add(act_Nm1(linalg.matmul(w_Nm1_cur, v_Nm2_cur)), v_Nm2_cur)
    rhs = linalg.scale(mu, pred)
    rhs = linalg.add(rhs, linalg.matmul(linalg.transpose(w_N_cur), linalg.sub(linalg.scale(beta, v_N_prev), lam_dual)))
    return linalg.spd_solve(a, rhs)


def vN_closed_form(w_N_cur, v_Nm1_cur, lam_dual, Y, beta):
    """V_N = (Y + beta W_N V_{N-1} + Lambda) / (1 + beta)."""
    s = linalg.add(Y, linalg.axpy(beta, linalg.matmul(w_N_cur, v_Nm1_cur), lam_dual))
    return linalg.scale(1.0 / (1.0 + beta), s)


def lambda_closed_form(lam_dual, w_N_cur, v_Nm1_cur, v_N_cur, beta):
    """Lambda <- Lambda + beta (W_N V_{N-1} - V_N)."""
    gap = linalg.sub(linalg.matmul(w_N_cur, v_Nm1_cur), v_N_cur)
    return linalg.axpy(beta, gap, lam_dual)


# ---------------------------------------------------------------------------
# state-level operations


def update_wN(state: Admm2State, hyper: Admm2Hyper) -> np.ndarray:
    n = state.n_layers
    return weight_ridge_update(state.v(n), state.v(n - 1), state.Lam, hyper.lam, hyper.beta)


def update_wi_prox_point(state: Admm2State, i: int, hyper: Admm2Hyper, shape: NetworkShape) -> np.ndarray:
    act = shape.activations[i - 1]
    omega = hyper.omega.value(i, state.k)
    return wi_prox_point(state.W[i - 1], state.v(i - 1), state.v(i), act, hyper.lam, hyper.mu, omega, hyper.inner)


def update_wi_prox_grad(state: Admm2State, i: int, hyper: Admm2Hyper, shape: NetworkShape) -> np.ndarray:
    act = shape.activations[i - 1]
    tau = hyper.tau.value(i, state.k)
    return wi_prox_grad(state.W[i - 1], state.v(i - 1), state.v(i), act, hyper.lam, hyper.mu, tau)


def update_vi_prox_point(state, i, hyper, shape, v_im1_cur, w_i_cur, w_ip1_cur) -> np.ndarray:
    nu = hyper.nu.value(i, state.k)
    return vi_prox_point(
        state.v(i), v_im1_cur, state.v(i + 1), w_i_cur, w_ip1_cur,
        shape.activations[i - 1], shape.activations[i], hyper.mu, nu, hyper.inner,
    )


def update_vi_prox_grad(state, i, hyper, shape, v_im1_cur, w_i_cur, w_ip1_cur) -> np.ndarray:
    iota = hyper.iota.value(i, state.k)
    return vi_prox_grad(
        state.v(i), v_im1_cur, state.v(i + 1), w_i_cur, w_ip1_cur,
        shape.activations[i - 1], shape.activations[i], hyper.mu, iota,
    )


def update_vN1(state, hyper, shape, v_Nm2_cur, w_Nm1_cur, w_N_cur) -> np.ndarray:
    n = state.n_layers
    return vN1_closed_form(
        v_Nm2_cur, w_Nm1_cur, w_N_cur, state.v(n), state.Lam,
        shape.activations[n - 2], hyper.mu, hyper.beta,
    )


def update_vN(state, hyper, Y, w_N_cur, v_Nm1_cur) -> np.ndarray:
    return vN_closed_form(w_N_cur, v_Nm1_cur, state.Lam, Y, hyper.beta)


def update_lambda(state, hyper, w_N_cur, v_Nm1_cur, v_N_cur) -> np.ndarray:
    return lambda_closed_form(state.Lam, w_N_cur, v_Nm1_cur, v_N_cur, hyper.beta)


def step_serial_2s(
    state: Admm2State,
    Y: np.ndarray,
    hyper: Admm2Hyper,
    shape: NetworkShape,
) -> tuple[Admm2State, TraceRecord]:
    """One full serial update cycle; returns the advanced state and a trace row."""
    t0 = time.perf_counter_ns()
    ops0 = linalg.op_count()
    n = state.n_layers
    prox_w = update_wi_prox_point if hyper.variant == "prox_point" else update_wi_prox_grad
    prox_v = update_vi_prox_point if hyper.variant == "prox_point" else update_vi_prox_grad

    w_new: list = [None] * n
    w_new[n - 1] = update_wN(state, hyper)
    for i in range(n - 1, 0, -1):
        w_new[i - 1] = prox_w(state, i, hyper, shape)

    v_new: list = [None] * n

    def v_cur(i: int) -> np.ndarray:
        return state.X if i == 0 else v_new[i - 1]

    for i in range(1, n - 1):
        v_new[i - 1] = prox_v(state, i, hyper, shape, v_cur(i - 1), w_new[i - 1], w_new[i])
    v_new[n - 2] = update_vN1(state, hyper, shape, v_cur(n - 2), w_new[n - 2], w_new[n - 1])
    v_new[n - 1] = update_vN(state, hyper, Y, w_new[n - 1], v_new[n - 2])
    lam_new = update_lambda(state, hyper, w_new[n - 1], v_new[n - 2], v_new[n - 1])

    new_state = replace(state, W=tuple(w_new), V=tuple(v_new), Lam=lam_new, k=state.k + 1)
    for block in new_state.flat_blocks():
        linalg.require_finite(block, f"2s state at k={new_state.k}")

    delta = delta_x(state, new_state)
    lag = aug_lag_2s(new_state, Y, hyper, shape)
    rec = TraceRecord(
        k=new_state.k,
        objective=objective(list(new_state.W), shape, state.X, Y, hyper.lam),
        aug_lag=lag,
        delta_x=delta,
        op_count=linalg.op_count() - ops0,
        wall_ns=time.perf_counter_ns() - t0,
    )
    return new_state, rec


def delta_x(prev: Admm2State, cur: Admm2State) -> float:
    sq = 0.0
    for a, b in zip(prev.flat_blocks(), cur.flat_blocks()):
        sq += float(np.sum((a - b) ** 2))
    return float(np.sqrt(sq))
