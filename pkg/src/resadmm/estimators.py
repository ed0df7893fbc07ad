"""Scikit-learn style regressors wrapping the trainers.

Both estimators follow the fit/predict/get_params/set_params contract
(samples as rows) so they drop into sklearn pipelines, grid search and
cross-validation without depending on scikit-learn itself.  Internally the
data is transposed to the columns-as-samples layout the trainers use.
"""

from __future__ import annotations

import inspect

import numpy as np

from .admm2 import Admm2Hyper
from .admm3 import Admm3Hyper
from .baselines import OptimizerConfig, train_baseline
from .network import NetworkShape, forward, init_weights, mse
from .parallel import run_parallel_2s, run_parallel_3s
from .schedules import Schedule
from .training import train_admm2, train_admm3
from .validation import check_array, check_is_fitted, check_X_y

__all__ = ["BaseEstimator", "ADMMResNetRegressor", "GradientResNetRegressor"]


class BaseEstimator:
    """get_params/set_params via __init__ introspection, sklearn-style."""

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [p.name for p in sig.parameters.values() if p.name != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


class _ResNetRegressorMixin:
    def predict(self, X):
        check_is_fitted(self)
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        out = forward(self.weights_, self.shape_, X.T)[-1].T
        return out.ravel() if self._y_1d_ else out

    def score(self, X, y) -> float:
        """Coefficient of determination R^2, per sklearn regressor convention."""
        X, Y, _ = check_X_y(X, y)
        pred = np.asarray(self.predict(X)).reshape(Y.shape)
        ss_res = float(np.sum((Y - pred) ** 2))
        ss_tot = float(np.sum((Y - np.mean(Y, axis=0)) ** 2))
        return 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0

    def mse(self, X, y) -> float:
        X, Y, _ = check_X_y(X, y)
        return mse(forward(self.weights_, self.shape_, X.T)[-1], Y.T)


class ADMMResNetRegressor(BaseEstimator, _ResNetRegressorMixin):
    """FCResNet regressor trained by alternating-direction block updates.

    Parameters mirror the trainer hyper-parameters: ``splitting`` selects
    the 2- or 3-splitting relaxation, ``variant`` the proximal-point or
    proximal-gradient block updates, and the scalar schedule weights
    (omega, nu, tau, iota) are held constant across iterations.  With
    ``executor="parallel"`` the fit runs the pipelined model-parallel
    executor, which produces the same iterates as the serial one.
    """

    def __init__(
        self,
        splitting: int = 2,
        variant: str = "prox_grad",
        n_layers: int = 3,
        activation: str = "sigmoid",
        n_iter: int = 100,
        lam: float = 0.001,
        mu: float = 0.1,
        beta=1.0,
        omega: float = 1.0,
        nu: float = 1.0,
        tau: float = 1.0,
        iota: float = 1.0,
        vmax: float = 100.0,
        executor: str = "serial",
        strict_assumptions: bool = False,
        init: str = "kaiming",
        random_state: int = 0,
    ):
        self.splitting = splitting
        self.variant = variant
        self.n_layers = n_layers
        self.activation = activation
        self.n_iter = n_iter
        self.lam = lam
        self.mu = mu
        self.beta = beta
        self.omega = omega
        self.nu = nu
        self.tau = tau
        self.iota = iota
        self.vmax = vmax
        self.executor = executor
        self.strict_assumptions = strict_assumptions
        self.init = init
        self.random_state = random_state

    def _hyper(self):
        if self.splitting == 2:
            return Admm2Hyper(
                lam=self.lam,
                mu=self.mu,
                beta=float(self.beta),
                variant=self.variant,
                omega=Schedule.constant(self.omega),
                nu=Schedule.constant(self.nu),
                tau=Schedule.constant(self.tau),
                iota=Schedule.constant(self.iota),
            )
        if self.splitting == 3:
            return Admm3Hyper(
                n_layers=self.n_layers,
                lam=self.lam,
                mu=self.mu,
                beta=self.beta,
                variant=self.variant,
                omega=Schedule.constant(self.omega),
                tau=Schedule.constant(self.tau),
                vmax=self.vmax,
            )
        raise ValueError("splitting must be 2 or 3")

    def fit(self, X, y):
        if self.executor not in ("serial", "parallel"):
            raise ValueError("executor must be 'serial' or 'parallel'")
        X, Y, self._y_1d_ = check_X_y(X, y)
        self.n_features_in_ = X.shape[1]
        shape = NetworkShape.make(self.n_layers, X.shape[1], Y.shape[1], self.activation)
        weights0 = init_weights(shape, method=self.init, seed=self.random_state)
        hyper = self._hyper()
        Xc, Yc = X.T, Y.T
        if self.executor == "parallel":
            from .admm2 import init_2s
            from .admm3 import init_3s

            if self.splitting == 2:
                state, trace = run_parallel_2s(init_2s(weights0, shape, Xc), Yc, hyper, shape, self.n_iter)
            else:
                state, trace = run_parallel_3s(init_3s(weights0, shape, Xc), Yc, hyper, shape, self.n_iter)
            self.pipeline_trace_ = trace
            self.weights_ = list(state.W)
            self.records_ = []
        else:
            train = train_admm2 if self.splitting == 2 else train_admm3
            run = train(weights0, shape, Xc, Yc, hyper, self.n_iter, strict=self.strict_assumptions)
            self.weights_ = run.weights
            self.records_ = run.records
            self.vmax_violations_ = getattr(run, "vmax_violations", [])
        self.shape_ = shape
        return self


class GradientResNetRegressor(BaseEstimator, _ResNetRegressorMixin):
    """FCResNet regressor trained by SGD, SGD with momentum, or Adam."""

    def __init__(
        self,
        algorithm: str = "sgd",
        n_layers: int = 3,
        activation: str = "sigmoid",
        n_epochs: int = 10,
        learning_rate: float = 0.01,
        momentum: float = 0.7,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        lr_decay: float = 0.9,
        batch_size: int = 64,
        lam: float = 0.001,
        init: str = "kaiming",
        random_state: int = 0,
    ):
        self.algorithm = algorithm
        self.n_layers = n_layers
        self.activation = activation
        self.n_epochs = n_epochs
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.lr_decay = lr_decay
        self.batch_size = batch_size
        self.lam = lam
        self.init = init
        self.random_state = random_state

    def fit(self, X, y):
        X, Y, self._y_1d_ = check_X_y(X, y)
        self.n_features_in_ = X.shape[1]
        shape = NetworkShape.make(self.n_layers, X.shape[1], Y.shape[1], self.activation)
        config = OptimizerConfig(
            kind=self.algorithm,
            lr=self.learning_rate,
            momentum=self.momentum,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            lr_decay=self.lr_decay,
            batch_size=self.batch_size,
        )
        weights0 = init_weights(shape, method=self.init, seed=self.random_state)
        run = train_baseline(shape, X.T, Y.T, config, self.n_epochs, seed=self.random_state, weights0=weights0, lam=self.lam)
        self.weights_ = run.weights
        self.records_ = run.records
        self.shape_ = shape
        return self
