"""Acceptance suite: one test (or parametrized group) per criterion, each
printing a PASS line with its measured quantities (visible with -s / -rA).

Shared fixtures pin the monitored runs: the 2-splitting proximal-point
run (criteria 3, 5, 6 share one instance, extended to 2000 cycles) and the
strict-mode 3-splitting run (criteria 4, 5).
"""

import time

import numpy as np
import pytest

from resadmm import admm2, admm3, analysis
from resadmm.activations import get_activation
from resadmm.admm2 import Admm2Hyper, init_2s
from resadmm.admm3 import Admm3Hyper, init_3s, validate_3s_params
from resadmm.baselines import OptimizerConfig, backprop, train_baseline
from resadmm.datasets import gen_l1, split_train_test
from resadmm.network import NetworkShape, forward, init_weights, objective, weight_shapes
from resadmm.parallel import (
    run_parallel_2s,
    run_parallel_3s,
    serial_units,
    simulate_makespan,
)
from resadmm.schedules import Schedule
from resadmm.subsolvers import separable_prox
from resadmm.training import train_admm2, train_admm3
from oracles import coordinate_argmin, grid_then_golden, moving_average, numeric_grad, rel_err

SIN = get_activation("sin")


def report(n, message):
    print(f"\nACCEPTANCE CRITERION {n}: PASS - {message}")


# ---------------------------------------------------------------------------
# shared monitored runs


@pytest.fixture(scope="module")
def run_2s_prox_point():
    """Criterion-3 instance: sin, N=3, d=2, n=20, beta=2, omega=nu=1,
    prox-point; teacher-realizable target, extended to 2000 cycles."""
    shape = NetworkShape.make(3, 2, 1, "sin")
    rng = np.random.default_rng(3)
    ws = init_weights(shape, seed=3)
    X = rng.uniform(-2, 2, (2, 20))
    teacher = [0.5 * w for w in init_weights(shape, seed=53)]
    Y = forward(teacher, shape, X)[-1]
    hyper = Admm2Hyper(
        lam=0.001, mu=0.1, beta=2.0, variant="prox_point",
        omega=Schedule.constant(1.0), nu=Schedule.constant(1.0),
    )
    t0 = time.time()
    run = train_admm2(ws, shape, X, Y, hyper, 2000)
    run.elapsed = time.time() - t0
    assert run.aborted is None
    return run


@pytest.fixture(scope="module")
def run_3s_strict():
    """Criterion-4 instance: strict-mode parameters (small mu, large beta),
    sin, N=3, d=2, n=20, K=200."""
    shape = NetworkShape.make(3, 2, 1, "sin")
    rng = np.random.default_rng(5)
    ws = init_weights(shape, seed=5)
    X = rng.uniform(-2, 2, (2, 20))
    Y = np.abs(X).sum(axis=0, keepdims=True)
    hyper = Admm3Hyper(
        n_layers=3, lam=1e-3, mu=0.01, beta=100.0, variant="prox_point",
        omega=Schedule.constant(0.9), vmax=50.0,
    )
    report_ = validate_3s_params(hyper, SIN, x_norm=float(np.linalg.norm(X)), strict=True)
    assert report_.ok
    run = train_admm3(ws, shape, X, Y, hyper, 200, strict=True)
    assert run.aborted is None
    run.Y = Y
    return run


# ---------------------------------------------------------------------------
# criterion 1: closed-form updates vs independent numeric minimization


def _rand_dims(rng):
    return int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(1, 5))


def test_criterion_01_closed_form_oracle_suite():
    t0 = time.time()
    rng = np.random.default_rng(2024)
    checks = 0

    def assert_close(got, oracle, label):
        nonlocal checks
        assert rel_err(got, oracle) <= 1e-6, f"{label}: rel err {rel_err(got, oracle):.2e}"
        checks += 1

    for trial in range(20):
        d, q, n = _rand_dims(rng)
        lam, mu, beta, tau, iota = rng.uniform(0.2, 2.0, 5)
        beta_r = float(rng.uniform(0.5, 2.5))

        # --- 2s / 3s ridge weight update (W_N; also W_i of the 3-splitting)
        v_prev = rng.standard_normal((d, n))
        target = rng.standard_normal((q, n))
        lam_d = rng.standard_normal((q, n))
        w = admm2.weight_ridge_update(target, v_prev, lam_d, lam, beta)

        def f_ridge(wm):
            gap = wm @ v_prev - target + lam_d / beta
            return 0.5 * lam * np.sum(wm**2) + 0.5 * beta * np.sum(gap**2)

        assert_close(w, coordinate_argmin(f_ridge, np.zeros((q, d))), "2s W_N")

        # --- 2s V_{N-1}
        w_nm1 = rng.standard_normal((d, d))
        w_n = rng.standard_normal((q, d))
        v_nm2 = rng.standard_normal((d, n))
        v_n_prev = rng.standard_normal((q, n))
        lam_qn = rng.standard_normal((q, n))
        v = admm2.vN1_closed_form(v_nm2, w_nm1, w_n, v_n_prev, lam_qn, SIN, mu, beta)

        def f_vn1(vm):
            pred = np.sin(w_nm1 @ v_nm2) + v_nm2
            gap = w_n @ vm - v_n_prev + lam_qn / beta
            return 0.5 * mu * np.sum((vm - pred) ** 2) + 0.5 * beta * np.sum(gap**2)

        assert_close(v, coordinate_argmin(f_vn1, np.zeros((d, n))), "2s V_{N-1}")

        # --- 2s V_N
        v_nm1 = rng.standard_normal((d, n))
        Y = rng.standard_normal((q, n))
        vn = admm2.vN_closed_form(w_n, v_nm1, lam_qn, Y, beta)

        def f_vn(vm):
            gap = w_n @ v_nm1 - vm + lam_qn / beta
            return 0.5 * np.sum((vm - Y) ** 2) + 0.5 * beta * np.sum(gap**2)

        assert_close(vn, coordinate_argmin(f_vn, np.zeros((q, n))), "2s V_N")

        # --- 2s Lambda (dual ascent formula; independent recomputation)
        lam_new = admm2.lambda_closed_form(lam_qn, w_n, v_nm1, vn, beta)
        assert_close(lam_new, lam_qn + beta * (w_n @ v_nm1 - vn), "2s Lambda")

        # --- 2s prox-grad W_i: argmin of the printed linearized model
        w_prev = rng.standard_normal((d, d))
        v_im1 = rng.standard_normal((d, n))
        v_i = rng.standard_normal((d, n))
        wg = admm2.wi_prox_grad(w_prev, v_im1, v_i, SIN, lam, mu, tau)
        z = w_prev @ v_im1
        lin = mu * ((v_im1 + np.sin(z) - v_i) * np.cos(z)) @ v_im1.T

        def f_wg(wm):
            return 0.5 * lam * np.sum(wm**2) + np.sum(lin * (wm - w_prev)) + 0.5 * tau * np.sum((wm - w_prev) ** 2)

        assert_close(wg, coordinate_argmin(f_wg, w_prev.copy()), "2s prox-grad W_i")

        # --- 2s prox-grad V_i: the down-coupling penalty stays exact, the
        # up-coupling term enters linearized at V_i^{k-1}
        w_ip1 = rng.standard_normal((d, d))
        v_prev_i = rng.standard_normal((d, n))
        v_ip1 = rng.standard_normal((d, n))
        vg = admm2.vi_prox_grad(v_prev_i, v_im1, v_ip1, w_prev, w_ip1, SIN, SIN, mu, iota)
        zp = w_ip1 @ v_prev_i
        up = v_prev_i + np.sin(zp) - v_ip1
        lin_up = mu * (w_ip1.T @ (up * np.cos(zp))) + mu * up
        pred_i = v_im1 + np.sin(w_prev @ v_im1)

        def f_vg(vm):
            return (
                0.5 * mu * np.sum((pred_i - vm) ** 2)
                + np.sum(lin_up * (vm - v_prev_i))
                + 0.5 * iota * np.sum((vm - v_prev_i) ** 2)
            )

        assert_close(vg, coordinate_argmin(f_vg, v_prev_i.copy()), "2s prox-grad V_i")

        # --- 3s V_i
        u_i = rng.standard_normal((d, n))
        u_ip1 = rng.standard_normal((d, n))
        lam_dn = rng.standard_normal((d, n))
        v3 = admm3.vi_closed_form_3s(v_im1, u_i, u_ip1, v_ip1, w_ip1, lam_dn, SIN, SIN, mu, beta_r)

        def f_v3(vm):
            a = 0.5 * mu * np.sum((v_im1 + np.sin(u_i) - vm) ** 2)
            b = 0.5 * mu * np.sum((vm + np.sin(u_ip1) - v_ip1) ** 2)
            c = 0.5 * beta_r * np.sum((w_ip1 @ vm - u_ip1 + lam_dn / beta_r) ** 2)
            return a + b + c

        assert_close(v3, coordinate_argmin(f_v3, np.zeros((d, n))), "3s V_i")

        # --- 3s V_{N-1}
        v31 = admm3.vN1_closed_form_3s(v_nm2, u_i, w_n, v_n_prev, lam_qn, SIN, mu, beta_r)

        def f_v31(vm):
            a = 0.5 * mu * np.sum((vm - v_nm2 - np.sin(u_i)) ** 2)
            b = 0.5 * beta_r * np.sum((w_n @ vm - v_n_prev + lam_qn / beta_r) ** 2)
            return a + b

        assert_close(v31, coordinate_argmin(f_v31, np.zeros((d, n))), "3s V_{N-1}")

        # --- 3s prox-grad U_i: argmin of the printed linearized model
        u_prev = rng.standard_normal((d, n))
        w_i = rng.standard_normal((d, d))
        ug = admm3.ui_prox_grad(u_prev, w_i, v_im1, v_i, lam_dn, SIN, mu, beta_r, tau)
        lin_u = mu * (v_im1 + np.sin(u_prev) - v_i) * np.cos(u_prev)

        def f_ug(um):
            a = np.sum(lin_u * (um - u_prev)) + 0.5 * tau * np.sum((um - u_prev) ** 2)
            b = 0.5 * beta_r * np.sum((um - w_i @ v_im1 - lam_dn / beta_r) ** 2)
            return a + b

        assert_close(ug, coordinate_argmin(f_ug, u_prev.copy()), "3s prox-grad U_i")

        # --- 3s Lambda_i and Lambda_N
        l3 = admm3.lambda_i_closed_form(lam_dn, w_i, v_im1, u_i, beta_r)
        assert_close(l3, lam_dn + beta_r * (w_i @ v_im1 - u_i), "3s Lambda_i")
        l3n = admm2.lambda_closed_form(lam_qn, w_n, v_nm1, vn, beta_r)
        assert_close(l3n, lam_qn + beta_r * (w_n @ v_nm1 - vn), "3s Lambda_N")

    elapsed = time.time() - t0
    assert elapsed < 30.0, f"oracle suite took {elapsed:.1f}s (budget 30s)"
    report(1, f"{checks} oracle comparisons at rel err <= 1e-6 in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# criterion 2: prox-point inner solvers


def test_criterion_02_prox_point_suite():
    rng = np.random.default_rng(77)
    inner = admm2.InnerConfig()

    for _ in range(20):
        d, n = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        lam, mu, omega, nu, beta = rng.uniform(0.2, 2.0, 5)

        # W_i subproblem
        w_prev = rng.standard_normal((d, d))
        v_im1 = rng.standard_normal((d, n))
        v_i = rng.standard_normal((d, n))
        w = admm2.wi_prox_point(w_prev, v_im1, v_i, SIN, lam, mu, omega, inner)
        z = w @ v_im1
        resid = v_im1 + np.sin(z) - v_i
        grad = lam * w + mu * (resid * np.cos(z)) @ v_im1.T + omega * (w - w_prev)
        assert np.linalg.norm(grad) <= 1e-8

        def f_w(wm):
            return (
                0.5 * lam * np.sum(wm**2)
                + 0.5 * mu * np.sum((v_im1 + np.sin(wm @ v_im1) - v_i) ** 2)
                + 0.5 * omega * np.sum((wm - w_prev) ** 2)
            )

        assert f_w(w) <= f_w(w_prev) + 1e-12

        # V_i subproblem
        w_i = rng.standard_normal((d, d))
        w_ip1 = rng.standard_normal((d, d))
        v_prev = rng.standard_normal((d, n))
        v_ip1 = rng.standard_normal((d, n))
        v = admm2.vi_prox_point(v_prev, v_im1, v_ip1, w_i, w_ip1, SIN, SIN, mu, nu, inner)
        zv = w_ip1 @ v
        upv = v + np.sin(zv) - v_ip1
        pred = v_im1 + np.sin(w_i @ v_im1)
        grad_v = -mu * (pred - v) + mu * upv + mu * (w_ip1.T @ (upv * np.cos(zv))) + nu * (v - v_prev)
        assert np.linalg.norm(grad_v) <= 1e-8

        def f_v(vm):
            u = vm + np.sin(w_ip1 @ vm) - v_ip1
            return 0.5 * mu * np.sum((pred - vm) ** 2) + 0.5 * mu * np.sum(u**2) + 0.5 * nu * np.sum((vm - v_prev) ** 2)

        assert f_v(v) <= f_v(v_prev) + 1e-12

        # U_i subproblem (separable exact solver)
        u_prev = rng.standard_normal((d, n))
        w_cur = rng.standard_normal((d, d))
        lam_d = rng.standard_normal((d, n))
        u = admm3.ui_prox_point(u_prev, w_cur, v_im1, v_i, lam_d, SIN, mu, beta, omega)
        center = w_cur @ v_im1 + lam_d / beta
        grad_u = mu * (v_im1 + np.sin(u) - v_i) * np.cos(u) + beta * (u - center) + omega * (u - u_prev)
        assert np.linalg.norm(grad_u) <= 1e-8

        def f_u(um):
            return (
                0.5 * mu * np.sum((v_im1 + np.sin(um) - v_i) ** 2)
                + 0.5 * beta * np.sum((um - center) ** 2)
                + 0.5 * omega * np.sum((um - u_prev) ** 2)
            )

        assert f_u(u) <= f_u(u_prev) + 1e-12

    # separable solver vs a dense per-entry global grid search
    a, b, c, p = (np.random.default_rng(s).uniform(-2, 2, (2, 3)) for s in range(4))
    mu, beta, omega = 0.9, 1.4, 0.6
    u = separable_prox(a, b, c, p, mu, beta, omega, SIN)
    for idx in np.ndindex(a.shape):
        def g(t, idx=idx):
            return (
                0.5 * mu * (a[idx] + np.sin(t) - b[idx]) ** 2
                + 0.5 * beta * (t - c[idx]) ** 2
                + 0.5 * omega * (t - p[idx]) ** 2
            )

        lo = (beta * c[idx] + omega * p[idx]) / (beta + omega)
        oracle = grid_then_golden(g, lo - 3, lo + 3, grid_points=8001)
        assert abs(u[idx] - oracle) <= 1e-6

    report(2, "20 draws per subproblem: gradient <= 1e-8, never worse than warm start; separable solver matches the dense grid")


# ---------------------------------------------------------------------------
# criteria 3-6: monitored runs


def test_criterion_03_b1_descent_2s(run_2s_prox_point):
    run = run_2s_prox_point
    lags = [r.aug_lag for r in run.records[:200]]
    deltas = [r.delta_x for r in run.records[:200]]
    rep = analysis.check_b1(lags, deltas, slack=1e-10)
    assert rep.holds, f"worst violation {rep.worst_violation:.3e}"
    assert rep.c1_hat > 0
    assert run.elapsed < 60.0, f"run took {run.elapsed:.1f}s (budget 60s)"
    report(3, f"augmented Lagrangian non-increasing over 200 cycles, c1_hat={rep.c1_hat:.4f}")


def test_criterion_04_b1_descent_3s_aux(run_3s_strict):
    run = run_3s_strict
    aux = [r.aux_lag for r in run.records]
    deltas = [r.delta_x for r in run.records]
    assert not any(np.isnan(aux))
    rep = analysis.check_b1(aux, deltas, slack=1e-10)
    assert rep.holds, f"worst violation {rep.worst_violation:.3e}"
    assert rep.c1_hat > 0
    st = run.state
    # the identity holds after every cycle; spot-check the final state and
    # every recorded cycle's residual via a re-run is unnecessary: the state
    # sequence is deterministic, so verify on a fresh short run as well
    assert np.max(np.abs(st.Lam[-1] - (st.V[-1] - run.Y))) <= 1e-12
    report(4, f"auxiliary function non-increasing over 200 cycles, c1_hat={rep.c1_hat:.4f}, dual identity <= 1e-12")


def test_criterion_04b_lambda_identity_every_cycle():
    shape = NetworkShape.make(3, 2, 1, "sin")
    rng = np.random.default_rng(5)
    ws = init_weights(shape, seed=5)
    X = rng.uniform(-2, 2, (2, 20))
    Y = np.abs(X).sum(axis=0, keepdims=True)
    hyper = Admm3Hyper(n_layers=3, lam=1e-3, mu=0.01, beta=100.0, variant="prox_point",
                       omega=Schedule.constant(0.9), vmax=50.0)
    st = init_3s(ws, shape, X)
    for _ in range(50):
        st, _ = admm3.step_serial_3s(st, Y, hyper, shape)
        assert np.max(np.abs(st.Lam[-1] - (st.V[-1] - Y))) <= 1e-12


def test_criterion_05_b2_boundedness(run_2s_prox_point, run_3s_strict):
    for run, label in ((run_2s_prox_point, "2s"), (run_3s_strict, "3s")):
        grads = [r.grad_lag for r in run.records[9:200]]
        deltas = [r.delta_x for r in run.records[9:200]]
        rep = analysis.check_b2(grads, deltas)
        assert np.isfinite(rep.c2_hat), f"{label}: unbounded ratio"
        assert not any(d <= 1e-14 and g > 1e-8 for d, g in zip(deltas, grads)), f"{label}: stalled step with live gradient"
    report(5, "gradient/step ratio has a finite maximum on both monitored runs")


def test_criterion_06_kkt_convergence(run_2s_prox_point):
    kkts = np.array([r.kkt for r in run_2s_prox_point.records])
    assert len(kkts) == 2000
    assert kkts[-1] < 1e-3, f"kkt at K=2000 is {kkts[-1]:.3e}"
    ma = moving_average(kkts, 50)
    rises = sum(1 for i in range(1, len(ma)) if ma[i] > ma[i - 1] + 1e-12)
    assert rises == 0, f"{rises} upward moves in the 50-step moving average"
    report(6, f"kkt residual {kkts[-1]:.3e} < 1e-3 at K=2000 with a monotone 50-step moving average")


# ---------------------------------------------------------------------------
# criterion 7: gradient checks


@pytest.mark.parametrize("activation", ["sigmoid", "tanh", "sin"])
def test_criterion_07_gradient_checks(activation):
    rng = np.random.default_rng(101)
    shape = NetworkShape.make(4, 3, 2, activation)
    ws = [rng.standard_normal(s) for s in weight_shapes(shape)]
    X = rng.uniform(-1, 1, (3, 4))
    Y = rng.uniform(-1, 1, (2, 4))

    # backprop
    lam = 0.3
    grads = backprop(ws, shape, X, Y, lam)
    for i in range(4):
        def f(w, i=i):
            return objective([w if j == i else ws[j] for j in range(4)], shape, X, Y, lam)

        assert rel_err(grads[i], numeric_grad(f, ws[i])) <= 1e-5

    # grad_L2s
    from dataclasses import replace

    hyp2 = Admm2Hyper(lam=0.4, mu=0.9, beta=1.7)
    st2 = init_2s(ws, shape, X)
    st2 = replace(st2, V=tuple(rng.standard_normal(v.shape) for v in st2.V), Lam=rng.standard_normal(st2.Lam.shape))
    g2 = analysis.grad_L2s(st2, Y, hyp2, shape)
    for i in range(4):
        def f2(w, i=i):
            s = replace(st2, W=tuple(w if j == i else st2.W[j] for j in range(4)))
            return admm2.aug_lag_2s(s, Y, hyp2, shape)

        assert rel_err(g2.dW[i], numeric_grad(f2, st2.W[i])) <= 1e-5
    for i in range(4):
        def f2v(v, i=i):
            s = replace(st2, V=tuple(v if j == i else st2.V[j] for j in range(4)))
            return admm2.aug_lag_2s(s, Y, hyp2, shape)

        assert rel_err(g2.dV[i], numeric_grad(f2v, st2.V[i])) <= 1e-5

    # grad_L3s
    hyp3 = Admm3Hyper(n_layers=4, lam=0.4, mu=0.9, beta=(1.2, 1.7, 2.2, 2.7))
    st3 = init_3s(ws, shape, X)
    st3 = replace(
        st3,
        U=tuple(rng.standard_normal(u.shape) for u in st3.U),
        V=tuple(rng.standard_normal(v.shape) for v in st3.V),
        Lam=tuple(rng.standard_normal(l.shape) for l in st3.Lam),
    )
    g3 = analysis.grad_L3s(st3, Y, hyp3, shape)
    for i in range(3):
        def f3u(u, i=i):
            s = replace(st3, U=tuple(u if j == i else st3.U[j] for j in range(3)))
            return admm3.aug_lag_3s(s, Y, hyp3, shape)

        assert rel_err(g3.dU[i], numeric_grad(f3u, st3.U[i])) <= 1e-5
    for i in range(4):
        def f3v(v, i=i):
            s = replace(st3, V=tuple(v if j == i else st3.V[j] for j in range(4)))
            return admm3.aug_lag_3s(s, Y, hyp3, shape)

        assert rel_err(g3.dV[i], numeric_grad(f3v, st3.V[i])) <= 1e-5
    report(7, f"backprop, 2s and 3s Lagrangian gradients match central differences at 1e-5 ({activation})")


# ---------------------------------------------------------------------------
# criterion 8: parallel == serial across repeated threaded runs


@pytest.mark.parametrize("K,N", [(5, 3), (10, 6), (20, 4)])
def test_criterion_08_parallel_equals_serial(K, N):
    shape = NetworkShape.make(N, 2, 1, "sin")
    ws = init_weights(shape, seed=N)
    rng = np.random.default_rng(N)
    X = rng.uniform(-2, 2, (2, 8))
    Y = np.abs(X).sum(axis=0, keepdims=True)

    hyp2 = Admm2Hyper(lam=0.001, mu=0.1, beta=2.0, variant="prox_grad")
    st = init_2s(ws, shape, X)
    for _ in range(K):
        st, _ = admm2.step_serial_2s(st, Y, hyp2, shape)
    for repeat in range(5):
        par, _ = run_parallel_2s(init_2s(ws, shape, X), Y, hyp2, shape, K)
        for a, b in zip(st.flat_blocks(), par.flat_blocks()):
            assert np.max(np.abs(a - b)) <= 1e-12

    hyp3 = Admm3Hyper(n_layers=N, lam=1e-4, mu=1.0, beta=100.0, variant="prox_grad")
    st3 = init_3s(ws, shape, X)
    for _ in range(K):
        st3, _ = admm3.step_serial_3s(st3, Y, hyp3, shape)
    for repeat in range(5):
        par3, _ = run_parallel_3s(init_3s(ws, shape, X), Y, hyp3, shape, K)
        for a, b in zip(st3.flat_blocks(), par3.flat_blocks()):
            assert np.max(np.abs(a - b)) <= 1e-12
    report(8, f"K={K}, N={N}: 5 threaded runs per splitting equal the serial iterates to 1e-12")


# ---------------------------------------------------------------------------
# criterion 9: complexity separation


GRID = (4, 8, 16, 32)


def test_criterion_09_serial_units_exact():
    for K in GRID:
        for N in GRID:
            assert serial_units(2, K, N) == K * (2 * N + 1)
            assert serial_units(3, K, N) == K * (4 * N - 1)
    report(9, "serial unit counts equal K(2N+1) and K(4N-1) across the grid")


@pytest.mark.parametrize("splitting", [2, 3])
def test_criterion_09_parallel_makespan_bound(splitting):
    """Makespan <= 4(K+N) over the grid.

    Known honest failure for the 3-splitting at K >> N: the printed update
    equations contain the data cycle
    W_{i+1}^k -> V_i^k -> U_{i+1}^k -> Lambda_{i+1}^k -> W_{i+1}^{k+1}
    whose in-order execution needs 5 slots per epoch (measured makespan
    5K + 2N - 4), so 4(K+N) is exceeded once K > 2N + 4.  See the decisions
    ledger for the full analysis; the linear-in-max(K,N) claim itself holds.
    """
    failures = []
    for K in GRID:
        for N in GRID:
            m = simulate_makespan(splitting, K, N)
            if m > 4 * (K + N):
                failures.append((K, N, m, 4 * (K + N)))
    if failures:
        print(
            f"\nACCEPTANCE CRITERION 9: FAIL - {splitting}s makespan exceeds 4(K+N) at "
            f"{[(K, N) for K, N, *_ in failures]}; the update equations force 5 slots "
            f"per epoch (makespan 5K+2N-4), see this test's docstring and the ledger"
        )
    assert not failures, f"{splitting}s cells exceeding 4(K+N): {failures}"
    report(9, f"{splitting}s parallel makespan within 4(K+N) over the grid")


def test_criterion_09_ratio_grows_along_diagonal():
    for splitting in (2, 3):
        ratios = [serial_units(splitting, n, n) / simulate_makespan(splitting, n, n) for n in GRID]
        assert all(b > a for a, b in zip(ratios, ratios[1:])), ratios
    report(9, "serial/parallel ratio strictly increases along K=N=4..32 for both splittings")


# ---------------------------------------------------------------------------
# criterion 10: memory accounting


@pytest.mark.parametrize("d", [2, 8])
@pytest.mark.parametrize("n", [10, 50])
def test_criterion_10_interior_memory_exact(d, n):
    N = 5
    shape = NetworkShape.make(N, d, 1, "sin")
    ws = init_weights(shape, seed=1)
    rng = np.random.default_rng(1)
    X = rng.uniform(-2, 2, (d, n))
    Y = np.abs(X).sum(axis=0, keepdims=True)
    _, trace = run_parallel_2s(init_2s(ws, shape, X), Y, Admm2Hyper(beta=2.0), shape, 3)
    for worker in range(1, N - 1):
        assert trace.node_peak_entries[worker - 1] == 3 * d * d + 5 * d * n
    report(10, f"2s interior high-water mark equals 3d^2+5dn exactly (d={d}, n={n})")


def test_criterion_10_serial_linear_vs_node_constant():
    serial_totals = [analysis.serial_memory_entries(2, N, 4, 2, 16) for N in (4, 8, 16, 32)]
    diffs = np.diff(serial_totals)
    assert diffs[1] == 2 * diffs[0] and diffs[2] == 2 * diffs[1]  # linear growth in N
    peaks = []
    for N in (4, 6, 8):
        shape = NetworkShape.make(N, 2, 1, "sin")
        ws = init_weights(shape, seed=2)
        rng = np.random.default_rng(2)
        X = rng.uniform(-2, 2, (2, 10))
        Y = np.abs(X).sum(axis=0, keepdims=True)
        _, trace = run_parallel_2s(init_2s(ws, shape, X), Y, Admm2Hyper(beta=2.0), shape, 3)
        peaks.append(trace.node_peak_entries[0])
    assert peaks[0] == peaks[1] == peaks[2]
    report(10, "serial totals grow linearly in N; interior per-node counts are N-independent")


# ---------------------------------------------------------------------------
# criterion 11: cost-model golden values


def test_criterion_11_cost_goldens():
    assert analysis.cost_2s_update("wN", 1, 1, 1) == 10
    assert analysis.cost_2s_update("lambda", 1, 1, 1) == 4
    assert analysis.cost_3s_update("lambda_i", 1, 1, 1) == 4
    report(11, "T_2WN(1,1,1)=10, T_2Lambda(1,1,1)=4, T_3Lambda_i(1,1,1)=4")


# ---------------------------------------------------------------------------
# criterion 12: function-fitting reproduction at desk scale


def test_criterion_12_l1_reproduction():
    t0 = time.time()
    train, test = split_train_test(gen_l1(2, 1000, seed=7), 0.8, seed=7)
    shape = NetworkShape.make(3, 2, 1, "sigmoid")
    ws = init_weights(shape, seed=7)

    hyper = Admm2Hyper(
        lam=0.001, mu=0.1, beta=1.0, variant="prox_grad",
        tau=Schedule.constant(1.0), iota=Schedule.constant(1.0),
    )
    run = train_admm2(ws, shape, train.X, train.Y, hyper, 600, test=(test.X, test.Y), diagnostics=False)
    assert run.aborted is None
    mses = run.test_mse
    assert np.all(np.isfinite(mses))
    assert mses[-1] <= mses[0] / 10.0, f"mse[600]={mses[-1]:.4f} vs mse[1]={mses[0]:.4f}"

    sgd = train_baseline(
        shape, train.X, train.Y,
        OptimizerConfig(kind="sgd", lr=0.01, lr_decay=0.9, batch_size=64),
        epochs=5, seed=7, weights0=ws, lam=0.001, test=(test.X, test.Y),
    )
    assert np.all(np.isfinite(sgd.test_mse))
    elapsed = time.time() - t0
    assert elapsed < 300.0, f"took {elapsed:.1f}s (budget 300s)"
    report(
        12,
        f"2s preset: test mse {mses[0]:.3f} -> {mses[-1]:.3f} ({mses[0] / mses[-1]:.1f}x) in {elapsed:.1f}s; "
        f"sgd preset side-by-side final mse {sgd.test_mse[-1]:.3f}",
    )


# ---------------------------------------------------------------------------
# criterion 13: 30-layer depth study


def test_criterion_13_depth_study():
    train, test = split_train_test(gen_l1(2, 1000, seed=7), 0.8, seed=7)
    shape = NetworkShape.make(30, 2, 1, "sigmoid")
    ws = init_weights(shape, seed=7)
    hyper = Admm3Hyper(
        n_layers=30, lam=1e-4, mu=1.0, beta=100.0, variant="prox_grad",
        tau=Schedule.constant(10.0),
    )
    run = train_admm3(ws, shape, train.X, train.Y, hyper, 300, test=(test.X, test.Y), diagnostics=False)
    assert run.aborted is None
    for rec in run.records:
        assert np.isfinite(rec.objective) and np.isfinite(rec.aug_lag)
    mses = np.array(run.test_mse)
    assert np.all(np.isfinite(mses))
    ma = moving_average(mses, 50)
    rises = sum(1 for i in range(1, len(ma)) if ma[i] > ma[i - 1] * (1 + 1e-8) + 1e-12)
    assert rises == 0, f"{rises} upward moves in the trailing-50 moving average"
    report(13, f"30-layer 3s run finite throughout; trailing-50 MA of test mse monotone, final {mses[-1]:.3f}")
