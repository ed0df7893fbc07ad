"""Pipelined model-parallel executor: one worker thread per residual block.

Workers exchange versioned block variables through a write-once slot store
and advance on a lockstep logical clock: in every slot the coordinator
dispatches each worker whose next operation has all its cross-worker inputs
available, every dispatched update costs exactly one slot, and
communication costs zero slots.  Because each update consumes exactly the
same (k / k-1)-versioned inputs as the serial algorithms and runs the same
block functions, the final iterates match the serial executor bit for bit,
while the slot schedule realizes the pipelined pattern whose makespan is
linear in max(K, N) instead of the serial K * (blocks per cycle).

Per-worker resident-entry accounting mirrors a distributed deployment:
each worker holds only its own current/previous block variables plus the
neighbor versions the updates need, and the recorded high-water marks equal
the closed-form per-node entry counts.
"""

from __future__ import annotations

import csv
import queue
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import admm2, admm3, linalg
from .admm2 import Admm2Hyper, Admm2State
from .admm3 import Admm3Hyper, Admm3State
from .network import NetworkShape

__all__ = [
    "OpSpec",
    "PipelineOpRecord",
    "PipelineTrace",
    "SlotStore",
    "build_program",
    "simulate_schedule",
    "simulate_makespan",
    "run_parallel_2s",
    "run_parallel_3s",
    "makespan",
    "speedup_model",
    "per_node_memory",
    "serial_units",
]


# ---------------------------------------------------------------------------
# program description (shared by the simulator and the threaded executor)


@dataclass(frozen=True)
class OpSpec:
    worker: int  # 1-based block index
    epoch: int   # 1-based
    kind: str    # "W" | "U" | "V" | "Lam"
    deps: tuple[tuple[str, int, int], ...]  # (kind, index, version), cross-worker only


def _ops_2s(i: int, n: int, k: int) -> list[OpSpec]:
    ops = [OpSpec(i, k, "W", ())]
    if i <= n - 2:
        deps = []
        if i > 1:
            deps.append(("V", i - 1, k))
        deps += [("W", i + 1, k), ("V", i + 1, k - 1)]
        ops.append(OpSpec(i, k, "V", tuple(deps)))
    elif i == n - 1:
        deps = []
        if n - 2 >= 1:
            deps.append(("V", n - 2, k))
        deps += [("W", n, k), ("V", n, k - 1), ("Lam", n, k - 1)]
        ops.append(OpSpec(i, k, "V", tuple(deps)))
    else:
        ops.append(OpSpec(i, k, "V", (("V", n - 1, k),)))
        ops.append(OpSpec(i, k, "Lam", ()))
    return ops


def _ops_3s(i: int, n: int, k: int) -> list[OpSpec]:
    if i == n:
        return [
            OpSpec(i, k, "W", ()),
            OpSpec(i, k, "V", (("V", n - 1, k),)),
            OpSpec(i, k, "Lam", ()),
        ]
    ops = [OpSpec(i, k, "W", ())]
    ops.append(OpSpec(i, k, "U", (("V", i - 1, k),) if i > 1 else ()))
    if i <= n - 2:
        vdeps = (("W", i + 1, k), ("U", i + 1, k - 1), ("V", i + 1, k - 1), ("Lam", i + 1, k - 1))
    else:  # i == n - 1; the left value V_{i-1}^k is already gated by the U op
        vdeps = (("W", n, k), ("V", n, k - 1), ("Lam", n, k - 1))
    ops.append(OpSpec(i, k, "V", vdeps))
    ops.append(OpSpec(i, k, "Lam", ()))
    return ops


def build_program(splitting: int, n_layers: int, K: int) -> list[list[OpSpec]]:
    """Per-worker ordered op lists for K epochs."""
    if splitting not in (2, 3):
        raise ValueError("splitting must be 2 or 3")
    make = _ops_2s if splitting == 2 else _ops_3s
    program = []
    for i in range(1, n_layers + 1):
        ops: list[OpSpec] = []
        for k in range(1, K + 1):
            ops.extend(make(i, n_layers, k))
        program.append(ops)
    return program


def _writes(op: OpSpec) -> tuple[str, int, int]:
    return (op.kind, op.worker, op.epoch)


def simulate_schedule(splitting: int, K: int, n_layers: int) -> list[tuple[int, int, str, int, int]]:
    """Logical-clock schedule without any numerical work.

    Returns (worker, epoch, kind, start_slot, end_slot) tuples; the rule is
    identical to the threaded executor's dispatch rule, so measured and
    simulated slot schedules coincide.
    """
    program = build_program(splitting, n_layers, K)
    pointers = [0] * n_layers
    written: set[tuple[str, int, int]] = set()
    for i in range(1, n_layers + 1):
        for kind in ("W", "U", "V", "Lam"):
            written.add((kind, i, 0))
    out = []
    slot = 0
    total = sum(len(p) for p in program)
    done = 0
    while done < total:
        ready = []
        for w in range(n_layers):
            if pointers[w] >= len(program[w]):
                continue
            op = program[w][pointers[w]]
            if all(dep in written for dep in op.deps):
                ready.append(op)
        if not ready:
            raise RuntimeError("pipeline schedule stalled; dependency cycle")
        for op in ready:
            out.append((op.worker, op.epoch, op.kind, slot, slot + 1))
            pointers[op.worker - 1] += 1
            done += 1
        for op in ready:
            written.add(_writes(op))
        slot += 1
    return out


def simulate_makespan(splitting: int, K: int, n_layers: int) -> int:
    if K == 0:
        return 0
    return max(end for *_, end in simulate_schedule(splitting, K, n_layers))


def serial_units(splitting: int, K: int, n_layers: int) -> int:
    """Unit-update count of the serial schedule: K(2N+1) or K(4N-1)."""
    if splitting == 2:
        return K * (2 * n_layers + 1)
    if splitting == 3:
        return K * (4 * n_layers - 1)
    raise ValueError("splitting must be 2 or 3")


def speedup_model(K: int, n_layers: int, splitting: int) -> tuple[int, int]:
    """(serial unit updates, parallel logical makespan) for K epochs."""
    return serial_units(splitting, K, n_layers), simulate_makespan(splitting, K, n_layers)


# ---------------------------------------------------------------------------
# versioned slot store


class SlotStore:
    """Write-once versioned slots with bounded retention.

    Each (kind, index) name retains the latest ``capacity`` versions; the
    k/k-1 access pattern of the pipeline guarantees older versions are dead
    by the time they are pruned (reads of pruned versions raise).  Reads
    block until the requested version is written.
    """

    def __init__(self, capacity: int = 2):
        self.capacity = capacity
        self._data: dict[tuple[str, int], dict[int, np.ndarray]] = {}
        self._cond = threading.Condition()
        self.write_log: list[tuple[str, int, int]] = []
        self.read_log: list[tuple[str, int, int]] = []

    def write(self, kind: str, index: int, version: int, value: np.ndarray) -> None:
        with self._cond:
            slot = self._data.setdefault((kind, index), {})
            if version in slot:
                raise RuntimeError(f"slot ({kind}, {index}) version {version} written twice")
            if slot and version <= max(slot):
                raise RuntimeError(f"slot ({kind}, {index}) version {version} written out of order")
            slot[version] = value
            self.write_log.append((kind, index, version))
            while len(slot) > self.capacity:
                del slot[min(slot)]
            self._cond.notify_all()

    def read(self, kind: str, index: int, version: int, timeout: float = 60.0) -> np.ndarray:
        with self._cond:
            deadline = time.monotonic() + timeout
            while True:
                slot = self._data.get((kind, index), {})
                if version in slot:
                    self.read_log.append((kind, index, version))
                    return slot[version]
                if slot and version < min(slot):
                    raise RuntimeError(
                        f"slot ({kind}, {index}) version {version} already pruned; retention bound violated"
                    )
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise RuntimeError(f"timed out waiting for slot ({kind}, {index}) version {version}")
                self._cond.wait(remaining)


# ---------------------------------------------------------------------------
# trace types


@dataclass(frozen=True)
class PipelineOpRecord:
    worker: int
    epoch: int
    op: str
    start_slot: int
    end_slot: int
    resident_entries: int


@dataclass
class PipelineTrace:
    n_workers: int
    n_epochs: int
    records: list[PipelineOpRecord] = field(default_factory=list)
    node_peak_entries: list[int] = field(default_factory=list)
    wall_ns: int = 0

    @property
    def makespan(self) -> int:
        return max((r.end_slot for r in self.records), default=0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["worker", "epoch", "op", "start_slot", "end_slot", "resident_entries"])
            for r in self.records:
                writer.writerow([r.worker, r.epoch, r.op, r.start_slot, r.end_slot, r.resident_entries])


def makespan(trace: PipelineTrace) -> int:
    return trace.makespan


def per_node_memory(trace: PipelineTrace) -> list[int]:
    return list(trace.node_peak_entries)


# ---------------------------------------------------------------------------
# worker-local memory accounting


class _Mem:
    """Named local buffers with peak-entry tracking."""

    def __init__(self):
        self.buffers: dict[str, np.ndarray] = {}
        self.peak = 0

    def hold(self, name: str, arr: np.ndarray) -> np.ndarray:
        self.buffers[name] = arr
        self.peak = max(self.peak, self.entries())
        return arr

    def drop(self, name: str) -> None:
        self.buffers.pop(name, None)

    def rename(self, src: str, dst: str) -> None:
        self.buffers[dst] = self.buffers.pop(src)

    def entries(self) -> int:
        return sum(a.size for a in self.buffers.values())

    def get(self, name: str) -> np.ndarray:
        return self.buffers[name]


# ---------------------------------------------------------------------------
# threaded execution engine


class _WorkerBase(threading.Thread):
    def __init__(self, index: int, store: SlotStore, program: list[OpSpec]):
        super().__init__(daemon=True, name=f"block-worker-{index}")
        self.index = index
        self.store = store
        self.program = program
        self.pointer = 0
        self.mem = _Mem()
        self.inbox: queue.Queue = queue.Queue()
        self.outbox: queue.Queue = queue.Queue()
        self.error: BaseException | None = None

    def run(self):
        while True:
            op = self.inbox.get()
            if op is None:
                return
            try:
                self.execute(op)
            except BaseException as exc:  # propagated by the coordinator
                self.error = exc
            self.outbox.put(op)

    def execute(self, op: OpSpec) -> None:
        raise NotImplementedError

    def pull(self, kind: str, index: int, version: int, name: str) -> np.ndarray:
        return self.mem.hold(name, self.store.read(kind, index, version))


class _Worker2s(_WorkerBase):
    def __init__(self, index, store, program, state: Admm2State, Y, hyper: Admm2Hyper, shape: NetworkShape):
        super().__init__(index, store, program)
        self.hyper = hyper
        self.shape = shape
        self.n = state.n_layers
        self.Y = Y
        i, n = index, state.n_layers
        m = self.mem
        if i == n:
            m.hold("V_left_prev", state.v(n - 1))
            m.hold("V_own_prev", state.v(n))
            m.hold("Lam", state.Lam)
        else:
            m.hold("W_prev", state.W[i - 1])
            m.hold("V_own_prev", state.v(i))
            m.hold("V_left_prev", state.v(i - 1))  # X itself for worker 1

    def execute(self, op: OpSpec) -> None:
        i, n, k = self.index, self.n, op.epoch
        hyper, shape, m = self.hyper, self.shape, self.mem
        if op.kind == "W":
            if i == n:
                w = admm2.weight_ridge_update(m.get("V_own_prev"), m.get("V_left_prev"), m.get("Lam"), hyper.lam, hyper.beta)
                m.drop("W_cur")
                m.hold("W_cur", w)
                m.drop("V_own_prev")  # V_N^{k-1} is dead once W_N^k exists
                self.store.write("W", n, k, w)
            else:
                act = shape.activations[i - 1]
                if hyper.variant == "prox_point":
                    w = admm2.wi_prox_point(
                        m.get("W_prev"), m.get("V_left_prev"), m.get("V_own_prev"), act,
                        hyper.lam, hyper.mu, hyper.omega.value(i, k - 1), hyper.inner,
                    )
                else:
                    w = admm2.wi_prox_grad(
                        m.get("W_prev"), m.get("V_left_prev"), m.get("V_own_prev"), act,
                        hyper.lam, hyper.mu, hyper.tau.value(i, k - 1),
                    )
                m.hold("W_cur", w)
                if i > 1:
                    self.store.write("W", i, k, w)
        elif op.kind == "V":
            if i <= n - 2:
                # worker 1's left value is the constant V_0 = X, held in both
                # version slots like every other interior worker
                v_left = (
                    m.hold("V_left_cur", m.get("V_left_prev")) if i == 1 else self.pull("V", i - 1, k, "V_left_cur")
                )
                self.pull("W", i + 1, k, "W_right")
                self.pull("V", i + 1, k - 1, "V_right_prev")
                acts = (shape.activations[i - 1], shape.activations[i])
                if hyper.variant == "prox_point":
                    v = admm2.vi_prox_point(
                        m.get("V_own_prev"), v_left, m.get("V_right_prev"), m.get("W_cur"), m.get("W_right"),
                        *acts, hyper.mu, hyper.nu.value(i, k - 1), hyper.inner,
                    )
                else:
                    v = admm2.vi_prox_grad(
                        m.get("V_own_prev"), v_left, m.get("V_right_prev"), m.get("W_cur"), m.get("W_right"),
                        *acts, hyper.mu, hyper.iota.value(i, k - 1),
                    )
                m.hold("V_cur", v)
                self.store.write("V", i, k, v)
            elif i == n - 1:
                v_left = (
                    m.hold("V_left_cur", m.get("V_left_prev")) if i == 1 else self.pull("V", n - 2, k, "V_left_cur")
                )
                self.pull("W", n, k, "W_right")
                self.pull("V", n, k - 1, "V_N_prev")
                self.pull("Lam", n, k - 1, "Lam_prev")
                v = admm2.vN1_closed_form(
                    v_left, m.get("W_cur"), m.get("W_right"), m.get("V_N_prev"), m.get("Lam_prev"),
                    shape.activations[n - 2], hyper.mu, hyper.beta,
                )
                m.hold("V_cur", v)
                self.store.write("V", i, k, v)
            else:
                v_left = self.pull("V", n - 1, k, "V_left_cur")
                v = admm2.vN_closed_form(m.get("W_cur"), v_left, m.get("Lam"), self.Y, hyper.beta)
                m.hold("V_cur", v)
                self.store.write("V", n, k, v)
        else:  # Lam, worker n only
            lam = admm2.lambda_closed_form(m.get("Lam"), m.get("W_cur"), m.get("V_left_cur"), m.get("V_cur"), hyper.beta)
            m.hold("Lam_new", lam)
            m.drop("Lam")
            m.rename("Lam_new", "Lam")
            self.store.write("Lam", n, k, lam)
            # end of epoch for worker n
            m.rename("V_left_cur", "V_left_prev")
            m.rename("V_cur", "V_own_prev")
        if op.kind == "V" and i < n:
            # end of epoch for workers 1..n-1
            m.drop("W_prev")
            m.rename("W_cur", "W_prev")
            m.rename("V_cur", "V_own_prev")
            m.rename("V_left_cur", "V_left_prev")
            m.drop("V_right_prev")
            m.drop("W_right")
            m.drop("V_N_prev")
            m.drop("Lam_prev")

    def final(self) -> dict:
        m = self.mem
        if self.index == self.n:
            return {"W": m.get("W_cur"), "V": m.get("V_own_prev"), "Lam": m.get("Lam")}
        return {"W": m.get("W_prev"), "V": m.get("V_own_prev")}


class _Worker3s(_WorkerBase):
    def __init__(self, index, store, program, state: Admm3State, Y, hyper: Admm3Hyper, shape: NetworkShape):
        super().__init__(index, store, program)
        self.hyper = hyper
        self.shape = shape
        self.n = state.n_layers
        self.Y = Y
        i, n = index, state.n_layers
        m = self.mem
        if i == n:
            m.hold("V_left_prev", state.v(n - 1))
            m.hold("V_own_prev", state.v(n))
            m.hold("Lam", state.Lam[n - 1])
        else:
            m.hold("U_own_prev", state.U[i - 1])
            m.hold("V_own_prev", state.v(i))
            m.hold("V_left_prev", state.v(i - 1))
            m.hold("Lam", state.Lam[i - 1])

    def execute(self, op: OpSpec) -> None:
        i, n, k = self.index, self.n, op.epoch
        hyper, shape, m = self.hyper, self.shape, self.mem
        if op.kind == "W":
            target = m.get("V_own_prev") if i == n else m.get("U_own_prev")
            beta = hyper.beta[i - 1]
            m.drop("W_cur")
            w = admm2.weight_ridge_update(target, m.get("V_left_prev"), m.get("Lam"), hyper.lam, beta)
            m.hold("W_cur", w)
            if i == n or i > 1:
                self.store.write("W", i, k, w)
        elif op.kind == "U":
            act = shape.activations[i - 1]
            v_left = (
                m.hold("V_left_cur", m.get("V_left_prev")) if i == 1 else self.pull("V", i - 1, k, "V_left_cur")
            )
            if hyper.variant == "prox_point":
                u = admm3.ui_prox_point(
                    m.get("U_own_prev"), m.get("W_cur"), v_left, m.get("V_own_prev"), m.get("Lam"),
                    act, hyper.mu, hyper.beta[i - 1], hyper.omega.value(i, k - 1),
                )
            else:
                u = admm3.ui_prox_grad(
                    m.get("U_own_prev"), m.get("W_cur"), v_left, m.get("V_own_prev"), m.get("Lam"),
                    act, hyper.mu, hyper.beta[i - 1], hyper.tau.value(i, k - 1),
                )
            m.hold("U_cur", u)
            if i > 1:
                self.store.write("U", i, k, u)
        elif op.kind == "V":
            if i == n:
                v_left = self.pull("V", n - 1, k, "V_left_cur")
                v = admm2.vN_closed_form(m.get("W_cur"), v_left, m.get("Lam"), self.Y, hyper.beta[n - 1])
                m.hold("V_cur", v)
                self.store.write("V", n, k, v)
            elif i == n - 1:
                v_left = m.get("V_left_cur")
                self.pull("W", n, k, "W_right")
                self.pull("V", n, k - 1, "V_N_prev")
                self.pull("Lam", n, k - 1, "Lam_right_prev")
                v = admm3.vN1_closed_form_3s(
                    v_left, m.get("U_cur"), m.get("W_right"), m.get("V_N_prev"), m.get("Lam_right_prev"),
                    shape.activations[n - 2], hyper.mu, hyper.beta[n - 1],
                )
                m.hold("V_cur", v)
                self.store.write("V", i, k, v)
            else:
                v_left = m.get("V_left_cur")
                self.pull("W", i + 1, k, "W_right")
                self.pull("U", i + 1, k - 1, "U_right_prev")
                self.pull("V", i + 1, k - 1, "V_right_prev")
                self.pull("Lam", i + 1, k - 1, "Lam_right_prev")
                v = admm3.vi_closed_form_3s(
                    v_left, m.get("U_cur"), m.get("U_right_prev"), m.get("V_right_prev"), m.get("W_right"),
                    m.get("Lam_right_prev"), shape.activations[i - 1], shape.activations[i],
                    hyper.mu, hyper.beta[i],
                )
                m.hold("V_cur", v)
                self.store.write("V", i, k, v)
        else:  # Lam
            if i == n:
                lam = admm2.lambda_closed_form(m.get("Lam"), m.get("W_cur"), m.get("V_left_cur"), m.get("V_cur"), hyper.beta[n - 1])
            else:
                v_left = m.get("V_left_cur")
                lam = admm3.lambda_i_closed_form(m.get("Lam"), m.get("W_cur"), v_left, m.get("U_cur"), hyper.beta[i - 1])
            m.hold("Lam_new", lam)
            m.drop("Lam")
            m.rename("Lam_new", "Lam")
            if 1 < i < n:
                self.store.write("Lam", i, k, lam)
            elif i == n:
                self.store.write("Lam", n, k, lam)
            # end of epoch rotation
            if i == n:
                m.rename("V_left_cur", "V_left_prev")
                m.rename("V_cur", "V_own_prev")
            else:
                m.drop("U_own_prev")
                m.rename("U_cur", "U_own_prev")
                m.rename("V_cur", "V_own_prev")
                m.rename("V_left_cur", "V_left_prev")
                m.drop("W_right")
                m.drop("U_right_prev")
                m.drop("V_right_prev")
                m.drop("Lam_right_prev")
                m.drop("V_N_prev")

    def final(self) -> dict:
        m = self.mem
        if self.index == self.n:
            return {"W": m.get("W_cur"), "V": m.get("V_own_prev"), "Lam": m.get("Lam")}
        return {"W": m.get("W_cur"), "U": m.get("U_own_prev"), "V": m.get("V_own_prev"), "Lam": m.get("Lam")}


def _seed_store(store: SlotStore, splitting: int, state) -> None:
    n = state.n_layers
    for i in range(1, n + 1):
        store.write("W", i, 0, state.W[i - 1])
        store.write("V", i, 0, state.V[i - 1])
    if splitting == 2:
        store.write("Lam", n, 0, state.Lam)
    else:
        for i in range(1, n):
            store.write("U", i, 0, state.U[i - 1])
            store.write("Lam", i, 0, state.Lam[i - 1])
        store.write("Lam", n, 0, state.Lam[n - 1])


def _run_engine(workers: list[_WorkerBase], store: SlotStore) -> PipelineTrace:
    n = len(workers)
    trace = PipelineTrace(n_workers=n, n_epochs=0)
    t0 = time.perf_counter_ns()
    for w in workers:
        w.start()
    written: set[tuple[str, int, int]] = set()
    for i in range(1, n + 1):
        for kind in ("W", "U", "V", "Lam"):
            written.add((kind, i, 0))
    slot = 0
    remaining = sum(len(w.program) for w in workers)
    try:
        while remaining:
            ready = []
            for w in workers:
                if w.pointer >= len(w.program):
                    continue
                op = w.program[w.pointer]
                if all(dep in written for dep in op.deps):
                    ready.append((w, op))
            if not ready:
                raise RuntimeError("pipeline deadlock: no worker ready")
            for w, op in ready:
                w.inbox.put(op)
            for w, op in ready:
                done = w.outbox.get(timeout=600)
                if w.error is not None:
                    raise RuntimeError(f"worker {w.index} failed on {done}") from w.error
                w.pointer += 1
                remaining -= 1
                written.add(_writes(op))
                trace.records.append(
                    PipelineOpRecord(op.worker, op.epoch, op.kind, slot, slot + 1, w.mem.entries())
                )
            slot += 1
    finally:
        for w in workers:
            w.inbox.put(None)
        for w in workers:
            w.join(timeout=10)
    trace.records.sort(key=lambda r: (r.start_slot, r.worker))
    trace.node_peak_entries = [w.mem.peak for w in workers]
    trace.n_epochs = max((r.epoch for r in trace.records), default=0)
    trace.wall_ns = time.perf_counter_ns() - t0
    return trace


def run_parallel_2s(
    state: Admm2State, Y: np.ndarray, hyper: Admm2Hyper, shape: NetworkShape, K: int
) -> tuple[Admm2State, PipelineTrace]:
    """Run K pipelined epochs; the result equals K serial cycles exactly."""
    if K == 0:
        return state, PipelineTrace(n_workers=state.n_layers, n_epochs=0)
    n = state.n_layers
    store = SlotStore()
    _seed_store(store, 2, state)
    program = build_program(2, n, K)
    workers = [_Worker2s(i, store, program[i - 1], state, Y, hyper, shape) for i in range(1, n + 1)]
    trace = _run_engine(workers, store)
    finals = [w.final() for w in workers]
    new_state = Admm2State(
        W=tuple(f["W"] for f in finals),
        V=tuple(f["V"] for f in finals),
        Lam=finals[-1]["Lam"],
        X=state.X,
        k=state.k + K,
    )
    for block in new_state.flat_blocks():
        linalg.require_finite(block, "parallel 2s state")
    return new_state, trace


def run_parallel_3s(
    state: Admm3State, Y: np.ndarray, hyper: Admm3Hyper, shape: NetworkShape, K: int
) -> tuple[Admm3State, PipelineTrace]:
    """Run K pipelined epochs; the result equals K serial cycles exactly."""
    if K == 0:
        return state, PipelineTrace(n_workers=state.n_layers, n_epochs=0)
    n = state.n_layers
    store = SlotStore()
    _seed_store(store, 3, state)
    program = build_program(3, n, K)
    workers = [_Worker3s(i, store, program[i - 1], state, Y, hyper, shape) for i in range(1, n + 1)]
    trace = _run_engine(workers, store)
    finals = [w.final() for w in workers]
    new_state = Admm3State(
        W=tuple(f["W"] for f in finals),
        U=tuple(f["U"] for f in finals[: n - 1]),
        V=tuple(f["V"] for f in finals),
        Lam=tuple(f["Lam"] for f in finals),
        X=state.X,
        k=state.k + K,
    )
    for block in new_state.flat_blocks():
        linalg.require_finite(block, "parallel 3s state")
    return new_state, trace
