"""Training drivers that run the alternating-direction trainers for K cycles
and enrich each trace row with the diagnostics the convergence theory
measures (Lagrangian gradient norm, KKT residual, descent margin,
relative-error ratio), plus the per-iteration test MSE and the
layer-output-bound audit for the 3-splitting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .admm2 import Admm2Hyper, Admm2State, init_2s, step_serial_2s
from .admm3 import Admm3Hyper, Admm3State, init_3s, step_serial_3s, validate_3s_params
from .network import NetworkShape, forward, mse
from .trace import TraceRecord

__all__ = ["RunResult", "train_admm2", "train_admm3"]


@dataclass
class RunResult:
    state: object
    records: list[TraceRecord] = field(default_factory=list)
    test_mse: list[float] = field(default_factory=list)
    vmax_violations: list[tuple[int, int, float, float]] = field(default_factory=list)
    aborted: str | None = None  # reason, when a step produced non-finite values

    @property
    def weights(self) -> list[np.ndarray]:
        return list(self.state.W)


def _enrich(records: list[TraceRecord]) -> None:
    import math

    for prev, cur in zip(records, records[1:]):
        # the 3-splitting descends on the auxiliary function; fall back to
        # the augmented Lagrangian when no auxiliary value was recorded
        f_prev = prev.aux_lag if not math.isnan(prev.aux_lag) else prev.aug_lag
        f_cur = cur.aux_lag if not math.isnan(cur.aux_lag) else cur.aug_lag
        if cur.delta_x > 1e-14:
            cur.b1_margin = (f_prev - f_cur) / cur.delta_x**2
            cur.b2_ratio = cur.grad_lag / cur.delta_x
        else:
            cur.b1_margin = float("inf")
            cur.b2_ratio = 0.0 if cur.grad_lag <= 1e-14 else float("inf")


def train_admm2(
    weights0,
    shape: NetworkShape,
    X,
    Y,
    hyper: Admm2Hyper,
    iterations: int,
    test=None,
    strict: bool = False,
    diagnostics: bool = True,
    state: Admm2State | None = None,
    kkt_stop: float | None = None,
) -> RunResult:
    """Run the serial 2-splitting trainer for ``iterations`` cycles.

    The default stopping rule is the fixed cycle budget; passing
    ``kkt_stop`` additionally stops once the KKT residual falls below it.
    """
    hyper.validate(shape.activations[0], strict=strict)
    st = state if state is not None else init_2s(weights0, shape, X)
    run = RunResult(st)
    for _ in range(iterations):
        try:
            st, rec = step_serial_2s(st, Y, hyper, shape)
        except ArithmeticError as exc:
            run.aborted = str(exc)
            break
        if diagnostics or kkt_stop is not None:
            rec.grad_lag = analysis.grad_L2s(st, Y, hyper, shape).frob_norm()
            rec.kkt = analysis.kkt_residual_2s(st, Y, hyper, shape)
        run.records.append(rec)
        if test is not None:
            run.test_mse.append(mse(forward(list(st.W), shape, test[0])[-1], test[1]))
        if kkt_stop is not None and rec.kkt <= kkt_stop:
            break
    _enrich(run.records)
    run.state = st
    return run


def train_admm3(
    weights0,
    shape: NetworkShape,
    X,
    Y,
    hyper: Admm3Hyper,
    iterations: int,
    test=None,
    strict: bool = False,
    diagnostics: bool = True,
    state: Admm3State | None = None,
    kkt_stop: float | None = None,
) -> RunResult:
    """Run the serial 3-splitting trainer for ``iterations`` cycles.

    The auxiliary-function value enters each trace row (weights theta/eta
    from the parameter report); exceedances of the declared layer-output
    bounds are collected as (k, i, norm, bound) tuples, never enforced.
    The fixed cycle budget is the default stop; ``kkt_stop`` adds a
    residual-based stop.
    """
    X = np.asarray(X, dtype=np.float64)
    report = validate_3s_params(hyper, shape.activations[0], x_norm=float(np.linalg.norm(X)), strict=strict)
    st = state if state is not None else init_3s(weights0, shape, X)
    run = RunResult(st)
    for _ in range(iterations):
        try:
            st, rec = step_serial_3s(st, Y, hyper, shape, theta=report.theta, eta=report.eta)
        except ArithmeticError as exc:
            run.aborted = str(exc)
            break
        if diagnostics or kkt_stop is not None:
            rec.grad_lag = analysis.grad_L3s(st, Y, hyper, shape).frob_norm()
            rec.kkt = analysis.kkt_residual_3s(st, Y, hyper, shape)
        for i in range(1, st.n_layers):
            norm = float(np.linalg.norm(st.V[i - 1]))
            if norm > hyper.vmax[i]:
                run.vmax_violations.append((st.k, i, norm, hyper.vmax[i]))
        run.records.append(rec)
        if test is not None:
            run.test_mse.append(mse(forward(list(st.W), shape, test[0])[-1], test[1]))
        if kkt_stop is not None and rec.kkt <= kkt_stop:
            break
    _enrich(run.records)
    run.state = st
    return run
