import numpy as np
import pytest

from resadmm.baselines import (
    OptimizerConfig,
    OptimizerState,
    backprop,
    batch_gradient,
    step_adam,
    step_sgd,
    step_sgdm,
    train_baseline,
)
from resadmm.network import NetworkShape, init_weights, objective, weight_shapes
from oracles import numeric_grad, rel_err


class TestBackprop:
    def test_penalty_only_on_zero_data(self):
        shape = NetworkShape.make(3, 2, 1, "sin")
        ws = init_weights(shape, seed=0)
        grads = backprop(ws, shape, np.zeros((2, 3)), np.zeros((1, 3)), lam=0.7)
        for g, w in zip(grads, ws):
            assert np.max(np.abs(g - 0.7 * w)) < 1e-14

    def test_scalar_two_layer_hand_chain_rule(self):
        # F = 1/2 (w2 (x + sin(w1 x)) - y)^2 + lam/2 (w1^2 + w2^2)
        w1, w2, x, y, lam = 0.3, -1.2, 0.8, 0.5, 0.1
        shape = NetworkShape.make(2, 1, 1, "sin")
        grads = backprop([np.array([[w1]]), np.array([[w2]])], shape, [[x]], [[y]], lam)
        v1 = x + np.sin(w1 * x)
        resid = w2 * v1 - y
        d_w2 = resid * v1 + lam * w2
        d_w1 = resid * w2 * np.cos(w1 * x) * x + lam * w1
        assert grads[1].item() == pytest.approx(d_w2, rel=1e-12)
        assert grads[0].item() == pytest.approx(d_w1, rel=1e-12)

    @pytest.mark.parametrize("activation", ["sigmoid", "tanh", "sin"])
    def test_matches_finite_differences(self, activation):
        rng = np.random.default_rng(1)
        shape = NetworkShape.make(4, 3, 2, activation)
        ws = [rng.standard_normal(s) for s in weight_shapes(shape)]
        X = rng.uniform(-1, 1, (3, 4))
        Y = rng.uniform(-1, 1, (2, 4))
        lam = 0.3
        grads = backprop(ws, shape, X, Y, lam)

        for i in range(4):
            def f(w, i=i):
                trial = [w if j == i else ws[j] for j in range(4)]
                return objective(trial, shape, X, Y, lam)

            fd = numeric_grad(f, ws[i])
            assert rel_err(grads[i], fd) < 1e-5

    def test_relu_subgradient_convention(self):
        shape = NetworkShape.make(2, 1, 1, "relu")
        grads = backprop([np.array([[0.0]]), np.array([[1.0]])], shape, [[1.0]], [[0.0]], lam=0.0)
        # z = 0 at the hidden layer: sigma'(0) = 0 kills the W1 path
        assert grads[0].item() == 0.0


class TestSteps:
    def test_zero_gradient_no_motion(self):
        ws = [np.ones((2, 2))]
        zeros = [np.zeros((2, 2))]
        cfg = OptimizerConfig()
        for step in (step_sgd, step_sgdm, step_adam):
            out, _ = step([w.copy() for w in ws], zeros, OptimizerState(lr=0.1), cfg)
            assert np.array_equal(out[0], ws[0])

    def test_sgd_step_size(self):
        out, _ = step_sgd([np.zeros((1, 1))], [np.ones((1, 1))], OptimizerState(lr=0.1), OptimizerConfig())
        assert out[0].item() == pytest.approx(-0.1)

    def test_adam_first_step_is_lr_sized(self):
        cfg = OptimizerConfig(kind="adam")
        out, _ = step_adam([np.zeros((1, 1))], [np.ones((1, 1))], OptimizerState(lr=0.05), cfg)
        assert out[0].item() == pytest.approx(-0.05 / (1 + cfg.eps), rel=1e-9)

    def test_sgdm_equals_sgd_without_momentum(self):
        rng = np.random.default_rng(2)
        shape = NetworkShape.make(3, 2, 1, "sigmoid")
        X = rng.uniform(-2, 2, (2, 32))
        Y = np.abs(X).sum(axis=0, keepdims=True)
        cfg_sgd = OptimizerConfig(kind="sgd", lr_decay=1.0, batch_size=8)
        cfg_sgdm = OptimizerConfig(kind="sgdm", momentum=0.0, lr_decay=1.0, batch_size=8)
        a = train_baseline(shape, X, Y, cfg_sgd, epochs=3, seed=5)
        b = train_baseline(shape, X, Y, cfg_sgdm, epochs=3, seed=5)
        for wa, wb in zip(a.weights, b.weights):
            assert np.max(np.abs(wa - wb)) < 1e-14


class TestTrainLoop:
    def test_deterministic(self):
        shape = NetworkShape.make(3, 2, 1, "sigmoid")
        rng = np.random.default_rng(3)
        X = rng.uniform(-2, 2, (2, 50))
        Y = np.abs(X).sum(axis=0, keepdims=True)
        cfg = OptimizerConfig(kind="adam", batch_size=16)
        a = train_baseline(shape, X, Y, cfg, epochs=2, seed=7)
        b = train_baseline(shape, X, Y, cfg, epochs=2, seed=7)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_iterations_per_epoch(self):
        shape = NetworkShape.make(2, 2, 1, "sigmoid")
        rng = np.random.default_rng(4)
        X = rng.uniform(-1, 1, (2, 50))
        Y = np.abs(X).sum(axis=0, keepdims=True)
        cfg = OptimizerConfig(batch_size=16)
        run = train_baseline(shape, X, Y, cfg, epochs=3, seed=0)
        assert len(run.records) == 3 * int(np.ceil(50 / 16))

    def test_loss_decreases_on_realizable_data(self):
        # targets produced by a linear map are reachable for the read-out layer
        rng = np.random.default_rng(5)
        shape = NetworkShape.make(2, 2, 1, "sigmoid")
        X = rng.uniform(-1, 1, (2, 64))
        Y = np.array([[1.5, -0.5]]) @ X
        cfg = OptimizerConfig(kind="sgd", lr=0.05, lr_decay=1.0, batch_size=16)
        run = train_baseline(shape, X, Y, cfg, epochs=30, seed=1, lam=1e-6)
        assert run.records[-1].objective < 0.2 * run.records[0].objective

    def test_batch_gradient_scaling(self):
        shape = NetworkShape.make(3, 2, 1, "tanh")
        ws = init_weights(shape, seed=6)
        rng = np.random.default_rng(6)
        X = rng.uniform(-1, 1, (2, 8))
        Y = rng.uniform(-1, 1, (1, 8))
        lam = 0.2
        bg = batch_gradient(ws, shape, X, Y, lam)
        raw = backprop(ws, shape, X, Y, 0.0)
        for g, r, w in zip(bg, raw, ws):
            assert np.max(np.abs(g - (r / 8 + lam * w))) < 1e-14

    def test_test_curve_recorded(self):
        shape = NetworkShape.make(3, 2, 1, "sigmoid")
        rng = np.random.default_rng(7)
        X = rng.uniform(-2, 2, (2, 40))
        Y = np.abs(X).sum(axis=0, keepdims=True)
        Xt = rng.uniform(-2, 2, (2, 10))
        Yt = np.abs(Xt).sum(axis=0, keepdims=True)
        run = train_baseline(shape, X, Y, OptimizerConfig(batch_size=20), epochs=2, seed=0, test=(Xt, Yt))
        assert len(run.test_mse) == len(run.records)
        assert all(np.isfinite(run.test_mse))
