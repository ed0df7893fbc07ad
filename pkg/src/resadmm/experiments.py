"""Configuration-driven experiment runner.

Configs are flat key = value text files with dotted sections; unknown keys
are rejected with a field-level message.  Each trainer ships with the
function-fitting presets (the gradient-variant penalties and step weights,
and the optimizer defaults), which the hyper.* keys override.

``run`` trains one configuration and writes trace.csv, summary.txt and
optionally dataset.csv / weights.bin / pipeline.csv.  ``compare`` repeats a
list of configurations and tabulates runtime and final test MSE.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analysis, linalg
from .admm2 import Admm2Hyper, init_2s
from .admm3 import Admm3Hyper, init_3s
from .baselines import OptimizerConfig, train_baseline
from .datasets import Dataset, gen_l1, gen_oscillation, save_csv, split_train_test
from .network import NetworkShape, forward, init_weights, mse, save_weights
from .network import objective as objective_value
from .parallel import run_parallel_2s, run_parallel_3s
from .schedules import Schedule
from .trace import TRACE_COLUMNS, TraceRecord
from .training import RunResult, train_admm2, train_admm3

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config", "run", "compare"]

TRAINERS = ("admm2_pp", "admm2_pg", "admm3_pp", "admm3_pg", "sgd", "sgdm", "adam")
TASKS = ("l1", "oscillation")

# gradient-variant presets follow the function-fitting experiments; the
# proximal-point presets reuse them with the prox weights in place of the
# linearization weights (and a beta above the descent floor for the 2s)
PRESETS = {
    "admm2_pg": {"beta": 1.0, "mu": 0.1, "lambda": 0.001, "tau": 1.0, "iota": 1.0},
    "admm2_pp": {"beta": 2.0, "mu": 0.1, "lambda": 0.001, "omega": 1.0, "nu": 1.0},
    "admm3_pg": {"beta": 100.0, "mu": 1.0, "lambda": 0.0001, "tau": 10.0},
    "admm3_pp": {"beta": 100.0, "mu": 1.0, "lambda": 0.0001, "omega": 10.0},
    "sgd": {"lr": 0.01, "lr_decay": 0.9, "batch_size": 64},
    "sgdm": {"lr": 0.01, "momentum": 0.7, "lr_decay": 0.9, "batch_size": 64},
    "adam": {"lr": 0.001, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8, "lr_decay": 0.9, "batch_size": 64},
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    task: str = "l1"
    d: int = 2
    n_samples: int = 1000
    split_ratio: float = 0.8
    seed: int = 0
    dump_dataset: bool = False
    n_layers: int = 3
    activation: str = "sigmoid"
    init: str = "kaiming"
    trainer: str = "admm2_pg"
    executor: str = "serial"
    iterations: int = 100
    batches: int = 1
    strict: bool = False
    dump_weights: bool = False
    out_dir: str = "results"
    hyper: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.task not in TASKS:
            raise ConfigError(f"task: expected one of {TASKS}, got {self.task!r}")
        if self.trainer not in TRAINERS:
            raise ConfigError(f"trainer: expected one of {TRAINERS}, got {self.trainer!r}")
        if self.executor not in ("serial", "parallel"):
            raise ConfigError(f"executor: expected serial or parallel, got {self.executor!r}")
        if self.executor == "parallel" and not self.trainer.startswith("admm"):
            raise ConfigError("executor: parallel execution requires an admm trainer")
        if self.d < 1:
            raise ConfigError("data.d: must be >= 1")
        if self.n_samples < 2:
            raise ConfigError("data.n: must be >= 2")
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError("data.split: must lie strictly between 0 and 1")
        if self.n_layers < 2:
            raise ConfigError("net.layers: must be >= 2")
        if self.iterations < 1:
            raise ConfigError("iterations: must be >= 1")
        if self.batches < 1:
            raise ConfigError("batches: must be >= 1")


_KEYS = {
    "task": ("task", str),
    "data.d": ("d", int),
    "data.n": ("n_samples", int),
    "data.split": ("split_ratio", float),
    "data.seed": ("seed", int),
    "data.dump": ("dump_dataset", lambda v: v.lower() == "true"),
    "net.layers": ("n_layers", int),
    "net.activation": ("activation", str),
    "net.init": ("init", str),
    "trainer": ("trainer", str),
    "executor": ("executor", str),
    "iterations": ("iterations", int),
    "batches": ("batches", int),
    "strict": ("strict", lambda v: v.lower() == "true"),
    "dump_weights": ("dump_weights", lambda v: v.lower() == "true"),
    "out": ("out_dir", str),
}


def parse_config(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("hyper."):
            cfg.hyper[key[len("hyper.") :]] = float(value)
        elif key in _KEYS:
            attr, conv = _KEYS[key]
            try:
                setattr(cfg, attr, conv(value))
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def _dataset(cfg: ExperimentConfig) -> tuple[Dataset, Dataset]:
    gen = gen_l1 if cfg.task == "l1" else gen_oscillation
    ds = gen(cfg.d, cfg.n_samples, seed=cfg.seed)
    return split_train_test(ds, cfg.split_ratio, seed=cfg.seed)


def _hyper_value(cfg: ExperimentConfig, key: str, default=None):
    if key in cfg.hyper:
        return cfg.hyper[key]
    preset = PRESETS[cfg.trainer]
    return preset.get(key, default)


def _admm_hyper(cfg: ExperimentConfig):
    if cfg.trainer.startswith("admm2"):
        variant = "prox_point" if cfg.trainer.endswith("pp") else "prox_grad"
        return Admm2Hyper(
            lam=_hyper_value(cfg, "lambda", 0.001),
            mu=_hyper_value(cfg, "mu", 0.1),
            beta=_hyper_value(cfg, "beta", 1.0),
            variant=variant,
            omega=Schedule.constant(_hyper_value(cfg, "omega", 1.0)),
            nu=Schedule.constant(_hyper_value(cfg, "nu", 1.0)),
            tau=Schedule.constant(_hyper_value(cfg, "tau", 1.0)),
            iota=Schedule.constant(_hyper_value(cfg, "iota", 1.0)),
        )
    variant = "prox_point" if cfg.trainer.endswith("pp") else "prox_grad"
    return Admm3Hyper(
        n_layers=cfg.n_layers,
        lam=_hyper_value(cfg, "lambda", 0.0001),
        mu=_hyper_value(cfg, "mu", 1.0),
        beta=_hyper_value(cfg, "beta", 100.0),
        variant=variant,
        omega=Schedule.constant(_hyper_value(cfg, "omega", 10.0)),
        tau=Schedule.constant(_hyper_value(cfg, "tau", 10.0)),
        vmax=_hyper_value(cfg, "vmax", 100.0),
    )


def _optimizer_config(cfg: ExperimentConfig) -> OptimizerConfig:
    return OptimizerConfig(
        kind=cfg.trainer,
        lr=_hyper_value(cfg, "lr", 0.01),
        momentum=_hyper_value(cfg, "momentum", 0.7),
        beta1=_hyper_value(cfg, "beta1", 0.9),
        beta2=_hyper_value(cfg, "beta2", 0.999),
        eps=_hyper_value(cfg, "eps", 1e-8),
        lr_decay=_hyper_value(cfg, "lr_decay", 0.9),
        batch_size=int(_hyper_value(cfg, "batch_size", 64)),
    )


def _train_admm_batched(cfg, shape, weights0, train: Dataset, test: Dataset, hyper) -> RunResult:
    """Round-robin cycles over fixed batches with per-batch auxiliary state.

    The dataset is partitioned once; every batch owns persistent layer
    outputs (and pre-activations/multipliers), the weights are shared.  One
    iteration is one full update cycle on one batch.
    """
    from .admm2 import step_serial_2s
    from .admm3 import step_serial_3s

    splitting = 2 if cfg.trainer.startswith("admm2") else 3
    idx = np.array_split(np.arange(train.n), cfg.batches)
    init_fn = init_2s if splitting == 2 else init_3s
    states = [init_fn(weights0, shape, train.X[:, j]) for j in idx]
    ys = [train.Y[:, j] for j in idx]
    run = RunResult(states[0])
    weights = tuple(np.array(w) for w in weights0)
    for k in range(cfg.iterations):
        b = k % cfg.batches
        st = replace(states[b], W=weights)
        try:
            if splitting == 2:
                st, rec = step_serial_2s(st, ys[b], hyper, shape)
            else:
                st, rec = step_serial_3s(st, ys[b], hyper, shape)
        except ArithmeticError as exc:
            run.aborted = str(exc)
            break
        states[b] = st
        weights = st.W
        rec.k = k + 1
        run.records.append(rec)
        run.test_mse.append(mse(forward(list(weights), shape, test.X)[-1], test.Y))
    run.state = replace(states[0], W=weights)
    return run


@dataclass
class RunArtifacts:
    config: ExperimentConfig
    weights: list[np.ndarray]
    shape: NetworkShape
    records: list[TraceRecord]
    test_mse: list[float]
    train_mse: float
    final_test_mse: float
    wall_seconds: float
    op_count: int
    summary: str
    exit_code: int = 0


def run(cfg: ExperimentConfig, out_dir: str | None = None) -> RunArtifacts:
    """Execute one configuration and write its artifacts."""
    cfg.validate()
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, test = _dataset(cfg)
    shape = NetworkShape.make(cfg.n_layers, cfg.d, train.q, cfg.activation)
    weights0 = init_weights(shape, method=cfg.init, seed=cfg.seed)

    linalg.reset_op_count()
    t0 = time.perf_counter()
    par_diff = None
    pipeline = None
    aborted = None
    vmax_violations = 0

    if cfg.trainer.startswith("admm"):
        hyper = _admm_hyper(cfg)
        if cfg.batches > 1:
            result = _train_admm_batched(cfg, shape, weights0, train, test, hyper)
        elif cfg.trainer.startswith("admm2"):
            result = train_admm2(weights0, shape, train.X, train.Y, hyper, cfg.iterations,
                                 test=(test.X, test.Y), strict=cfg.strict)
        else:
            result = train_admm3(weights0, shape, train.X, train.Y, hyper, cfg.iterations,
                                 test=(test.X, test.Y), strict=cfg.strict)
            vmax_violations = len(result.vmax_violations)
        records, test_curve, weights = result.records, result.test_mse, result.weights
        aborted = result.aborted
        if cfg.executor == "parallel" and not aborted:
            if cfg.trainer.startswith("admm2"):
                par_state, pipeline = run_parallel_2s(init_2s(weights0, shape, train.X), train.Y, hyper, shape, cfg.iterations)
            else:
                par_state, pipeline = run_parallel_3s(init_3s(weights0, shape, train.X), train.Y, hyper, shape, cfg.iterations)
            par_diff = max(
                float(np.max(np.abs(a - b))) for a, b in zip(par_state.W, result.state.W)
            )
            weights = list(par_state.W)
    else:
        opt = _optimizer_config(cfg)
        updates_per_epoch = max(1, -(-train.n // opt.batch_size))
        epochs = max(1, -(-cfg.iterations // updates_per_epoch))
        b_run = train_baseline(shape, train.X, train.Y, opt, epochs, seed=cfg.seed,
                               weights0=weights0, lam=_hyper_value(cfg, "lambda", 0.001),
                               test=(test.X, test.Y))
        records = b_run.records[: cfg.iterations]
        test_curve = b_run.test_mse[: cfg.iterations]
        weights = b_run.weights
        aborted = b_run.aborted
    wall = time.perf_counter() - t0
    ops = linalg.op_count()

    train_mse = mse(forward(weights, shape, train.X)[-1], train.Y)
    final_test = mse(forward(weights, shape, test.X)[-1], test.Y)
    lam_obj = _hyper_value(cfg, "lambda", 0.001)
    final_objective = objective_value(weights, shape, train.X, train.Y, lam_obj)

    lines = [
        f"task: {cfg.task} (d={cfg.d}, n={cfg.n_samples}, split={cfg.split_ratio}, seed={cfg.seed})",
        f"network: {cfg.n_layers} layers, {cfg.activation}, init={cfg.init}",
        f"trainer: {cfg.trainer}  executor: {cfg.executor}  iterations: {cfg.iterations}  batches: {cfg.batches}",
        f"final train objective: {final_objective:.10e}",
        f"final train mse: {train_mse:.10e}",
        f"final test mse:  {final_test:.10e}",
        f"wall seconds (not reproducible): {wall:.3f}",
        f"basic operations: {ops}",
    ]
    if records:
        vals = [r.aug_lag for r in records]
        deltas = [r.delta_x for r in records]
        grads = [r.grad_lag for r in records]
        if not any(np.isnan(vals)):
            b1 = analysis.check_b1(vals, deltas)
            lines.append(f"b1 monitor: holds={b1.holds} c1_hat={b1.c1_hat:.6g}")
            b2 = analysis.check_b2(grads[1:], deltas[1:])
            lines.append(f"b2 monitor: c2_hat={b2.c2_hat:.6g}")
            lines.append(f"final kkt residual: {records[-1].kkt:.6g}")
    if cfg.trainer.startswith("admm3"):
        lines.append(f"layer-output bound violations: {vmax_violations}")
    if par_diff is not None:
        lines.append(f"parallel-vs-serial final-weight max abs diff: {par_diff:.3e}")
        lines.append(f"pipeline makespan (slots): {pipeline.makespan}")
    exit_code = 0
    if aborted:
        lines.append(f"ABORTED after {len(records)} iterations: {aborted}")
        exit_code = 3
    summary = "\n".join(lines) + "\n"

    _write_trace(out / "trace.csv", records)
    (out / "summary.txt").write_text(summary)
    if cfg.dump_dataset:
        save_csv(train, out / "train.csv")
        save_csv(test, out / "test.csv")
    if cfg.dump_weights:
        save_weights(out / "weights.bin", weights, shape)
    if pipeline is not None:
        pipeline.to_csv(out / "pipeline.csv")

    return RunArtifacts(
        cfg, weights, shape, records, test_curve, train_mse, final_test, wall, ops, summary, exit_code
    )


def _write_trace(path, records) -> None:
    # wall_ns is zeroed in the artifact so repeated runs of one config are
    # byte-identical; wall time is reported in summary.txt instead
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in records:
            row = rec.row()
            row[-1] = 0
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def compare(configs: list[ExperimentConfig], repeats: int = 1, out_dir: str | None = None) -> list[dict]:
    """Run each configuration ``repeats`` times; tabulate time and test MSE."""
    rows = []
    for cfg in configs:
        times, mses = [], []
        for r in range(repeats):
            rcfg = replace(cfg, seed=cfg.seed + r, hyper=dict(cfg.hyper))
            art = run(rcfg, out_dir=out_dir)
            times.append(art.wall_seconds)
            mses.append(art.final_test_mse)
        rows.append(
            {
                "trainer": cfg.trainer,
                "task": cfg.task,
                "repeats": repeats,
                "time_mean": statistics.mean(times),
                "time_std": statistics.stdev(times) if repeats > 1 else 0.0,
                "mse_mean": statistics.mean(mses),
                "mse_std": statistics.stdev(mses) if repeats > 1 else 0.0,
            }
        )
    return rows


def format_table(rows: list[dict]) -> str:
    header = f"{'trainer':<10} {'task':<12} {'runs':>4} {'time mean±std (s)':>22} {'test mse mean±std':>26}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r['trainer']:<10} {r['task']:<12} {r['repeats']:>4} "
            f"{r['time_mean']:>11.3f}±{r['time_std']:<9.3f} "
            f"{r['mse_mean']:>14.6e}±{r['mse_std']:<10.3e}"
        )
    return "\n".join(lines) + "\n"
