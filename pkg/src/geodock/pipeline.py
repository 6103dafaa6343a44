"""
Hybrid screening pipeline.

Each ligand is one task. Worker threads claim tasks FIFO; a task stays on
the worker that claimed it. The rigid-alignment batch of a task is offloaded
to device lane ``worker_id % n_devices`` while holding that lane's exclusive
guard, and the optimization phase then runs on the owning worker. With
``n_devices == 0`` everything runs on the worker.

A device lane is a stand-in accelerator: a guarded pool of ``lane_width``
threads that evaluates the restart-by-rotation score table in chunks.

``simulate_schedule`` replays the same policy as a discrete-event model with
fixed service times; it is the reference for throughput and saturation.
"""
from __future__ import annotations

import heapq
import logging
import os
import queue
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import NamedTuple

from .docking import (
    DockParams,
    DockResult,
    align_batch,
    empty_visits,
    refine_and_select,
    starting_poses,
)
from .errors import ContractError
from .geometry import enumerate_rotations
from .molecule import check_ligand

log = logging.getLogger(__name__)

WORKERS_ENV = "GEODOCK_WORKERS"
MODES = ("real", "synthetic")

# Default relative service times: device alignment 1, CPU optimization 6,
# CPU alignment 16x the device time, device optimization half the CPU time.
DEFAULT_TIMES = {"t_align_device": 1.0, "t_opt_cpu": 6.0, "t_align_cpu": 16.0, "t_opt_device": 3.0}


def resolve_workers(n_workers: int | None) -> int:
    """Explicit value, else ``$GEODOCK_WORKERS``, else the CPU count."""
    if n_workers is not None:
        return int(n_workers)
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ContractError(f"{WORKERS_ENV}={env!r} is not an integer") from None
    return os.cpu_count() or 1


@dataclass(frozen=True)
class NodeConfig:
    n_workers: int | None = None
    n_devices: int = 1
    lane_width: int = 1
    mode: str = "real"
    t_align_device: float = DEFAULT_TIMES["t_align_device"]
    t_align_cpu: float = DEFAULT_TIMES["t_align_cpu"]
    t_opt_cpu: float = DEFAULT_TIMES["t_opt_cpu"]
    t_opt_device: float = DEFAULT_TIMES["t_opt_device"]
    # seconds per synthetic time unit when synthetic mode runs on real threads
    time_unit: float = 1e-3
    pin_cores: bool = False

    def __post_init__(self):
        object.__setattr__(self, "n_workers", resolve_workers(self.n_workers))
        if self.n_workers < 1:
            raise ContractError(f"n_workers must be >= 1, got {self.n_workers}")
        if self.n_devices < 0:
            raise ContractError(f"n_devices must be >= 0, got {self.n_devices}")
        if self.lane_width < 1:
            raise ContractError(f"lane_width must be >= 1, got {self.lane_width}")
        if self.mode not in MODES:
            raise ContractError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "synthetic":
            times = (self.t_align_device, self.t_align_cpu, self.t_opt_cpu, self.t_opt_device)
            if min(times) <= 0:
                raise ContractError("synthetic service times must be positive")


class Offload(NamedTuple):
    ligand: int
    worker: int
    lane: int
    start: float
    end: float


@dataclass
class RunMetrics:
    n_workers: int
    n_devices: int
    lane_width: int
    mode: str
    n_ligands: int = 0
    wall_time: float = 0.0
    device_busy: list[float] = field(default_factory=list)
    worker_wait: list[float] = field(default_factory=list)
    phase_seconds: dict[str, float] = field(default_factory=dict)
    offloads: list[Offload] = field(default_factory=list)
    task_workers: list[tuple[int, int]] = field(default_factory=list)
    violations: int = 0
    errors: list[str] = field(default_factory=list)

    @property
    def throughput(self) -> float:
        return self.n_ligands / self.wall_time if self.wall_time > 0 else 0.0

    @property
    def device_idle(self) -> list[float]:
        return [self.wall_time - b for b in self.device_busy]

    @property
    def device_utilization(self) -> float:
        if not self.device_busy or self.wall_time <= 0:
            return 0.0
        return sum(b / self.wall_time for b in self.device_busy) / len(self.device_busy)

    @property
    def mean_lane_wait(self) -> float:
        return sum(self.worker_wait) / self.n_ligands if self.n_ligands else 0.0


SUMMARY_COLUMNS = ("workers", "devices", "mode", "throughput", "device_utilization", "mean_wait")


def summarize(metrics: RunMetrics) -> list[dict]:
    """Report rows for a run (empty when nothing was docked)."""
    if metrics.n_ligands == 0:
        return []
    return [{
        "workers": metrics.n_workers,
        "devices": metrics.n_devices,
        "mode": metrics.mode,
        "throughput": metrics.throughput,
        "device_utilization": metrics.device_utilization,
        "mean_wait": metrics.mean_lane_wait,
    }]


class DeviceLane:
    """Exclusive, capacity-limited executor standing in for one accelerator."""

    def __init__(self, lane_id: int, width: int = 1):
        self.lane_id = lane_id
        self.width = width
        self._guard = threading.Lock()
        self._stats = threading.Lock()
        self._pool = ThreadPoolExecutor(width, thread_name_prefix=f"lane{lane_id}") if width > 1 else None
        self.in_flight = 0
        self.violations = 0
        self.busy = 0.0

    @contextmanager
    def exclusive(self):
        with self._guard:
            with self._stats:
                self.in_flight += 1
                if self.in_flight > 1:
                    self.violations += 1
            t0 = time.perf_counter()
            try:
                yield self
            finally:
                with self._stats:
                    self.busy += time.perf_counter() - t0
                    self.in_flight -= 1

    def align(self, poses, pocket, grid):
        mapper = self._pool.map if self._pool is not None else map
        return align_batch(poses, pocket, grid, chunks=self.width, mapper=mapper)

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()


def _pin(worker_id: int) -> None:
    try:
        cpus = sorted(os.sched_getaffinity(0))
        os.sched_setaffinity(0, {cpus[worker_id % len(cpus)]})
    except (AttributeError, OSError):
        pass


def run_screening(library, pocket, params: DockParams, config: NodeConfig,
                  lane_factory=DeviceLane) -> tuple[list[DockResult], RunMetrics]:
    """Dock a library on ``config.n_workers`` workers and ``config.n_devices`` lanes.

    Real mode returns one :class:`DockResult` per ligand in library order,
    identical to :func:`~geodock.docking.dock_ligand`. Synthetic mode sleeps
    for the configured service times instead of docking and returns no
    results, only metrics.
    """
    library = list(library)
    if not library:
        raise ContractError("empty ligand library")
    if config.mode == "real":
        for ligand in library:
            check_ligand(ligand)
    grid = enumerate_rotations(params.rotation_steps) if config.mode == "real" else None
    lanes = [lane_factory(i, config.lane_width) for i in range(config.n_devices)]
    tasks: queue.SimpleQueue = queue.SimpleQueue()
    for item in enumerate(library):
        tasks.put(item)

    n = config.n_workers
    results: list[DockResult | None] = [None] * len(library)
    waits = [0.0] * n
    sink_lock = threading.Lock()
    metrics = RunMetrics(n, config.n_devices, config.lane_width, config.mode, len(library))
    metrics.phase_seconds = {"align": 0.0, "optimize": 0.0}
    task_workers: dict[int, tuple[int, int]] = {}
    failures: list[BaseException] = []

    def record(key, value):
        with sink_lock:
            metrics.phase_seconds[key] += value

    def offload(wid, idx, fn):
        lane = lanes[wid % len(lanes)]
        t_req = time.perf_counter()
        with lane.exclusive():
            t_got = time.perf_counter()
            try:
                return fn(lane)
            finally:
                with sink_lock:
                    waits[wid] += t_got - t_req
                    metrics.offloads.append(Offload(idx, wid, lane.lane_id, t_got, time.perf_counter()))

    def real_task(wid, idx, ligand):
        t0 = time.perf_counter()
        align_worker = threading.get_ident()
        starts = starting_poses(ligand, pocket, params)
        aligned = None
        if lanes:
            try:
                aligned, scores, _ = offload(wid, idx, lambda lane: lane.align(starts, pocket, grid))
            except Exception as exc:  # retried once on the worker
                with sink_lock:
                    metrics.errors.append(f"ligand {idx} lane {wid % len(lanes)}: {exc!r}")
                log.warning("lane failure on ligand %d, retrying on CPU: %r", idx, exc)
        if aligned is None:
            aligned, scores, _ = align_batch(starts, pocket, grid)
        t1 = time.perf_counter()
        visits = empty_visits()
        visits["align_score"] = len(starts) * len(grid)
        result = refine_and_select(ligand, aligned, scores, pocket, params, visits)
        t2 = time.perf_counter()
        result.align_seconds = t1 - t0
        result.optimize_seconds = t2 - t1
        record("align", t1 - t0)
        record("optimize", t2 - t1)
        task_workers[idx] = (align_worker, threading.get_ident())
        results[idx] = result

    def synthetic_task(wid, idx, _ligand):
        unit = config.time_unit
        align_worker = threading.get_ident()
        t0 = time.perf_counter()
        if lanes:
            offload(wid, idx, lambda lane: time.sleep(config.t_align_device * unit))
        else:
            time.sleep(config.t_align_cpu * unit)
        t1 = time.perf_counter()
        time.sleep(config.t_opt_cpu * unit)
        t2 = time.perf_counter()
        record("align", t1 - t0)
        record("optimize", t2 - t1)
        task_workers[idx] = (align_worker, threading.get_ident())

    task = real_task if config.mode == "real" else synthetic_task

    def worker(wid):
        if config.pin_cores:
            _pin(wid)
        while not failures:
            try:
                idx, ligand = tasks.get_nowait()
            except queue.Empty:
                return
            try:
                task(wid, idx, ligand)
            except BaseException as exc:
                failures.append(exc)
                return

    threads = [threading.Thread(target=worker, args=(w,), name=f"worker{w}") for w in range(n)]
    t_start = time.perf_counter()
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    metrics.wall_time = time.perf_counter() - t_start
    for lane in lanes:
        lane.close()
    if failures:
        raise failures[0]

    metrics.device_busy = [lane.busy for lane in lanes]
    metrics.violations = sum(lane.violations for lane in lanes)
    metrics.worker_wait = waits
    metrics.task_workers = [task_workers[i] for i in range(len(library))]
    metrics.offloads.sort(key=lambda o: o.start)
    out = [r for r in results if r is not None] if config.mode == "real" else []
    return out, metrics


def simulate_schedule(config: NodeConfig, n_ligands: int) -> RunMetrics:
    """Discrete-event replay of the :func:`run_screening` policy.

    Workers claim tasks FIFO; each task waits for lane ``worker % n_devices``
    (FIFO per lane), aligns for ``t_align_device``, then optimizes on its
    worker for ``t_opt_cpu``. Without devices a task takes
    ``t_align_cpu + t_opt_cpu`` on its worker. Times are in model units.
    """
    if config.mode != "synthetic":
        raise ContractError("simulate_schedule needs a synthetic-mode config")
    n, d = config.n_workers, config.n_devices
    ta, to, tc = config.t_align_device, config.t_opt_cpu, config.t_align_cpu
    metrics = RunMetrics(n, d, config.lane_width, "synthetic", n_ligands)
    busy = [0.0] * d
    waits = [0.0] * n
    lane_free = [True] * d
    lane_queue = [deque() for _ in range(d)]
    events: list = []
    seq = 0
    next_task = 0
    current = [None] * n
    end = 0.0
    phase = {"align": 0.0, "optimize": 0.0}

    def push(t, kind, w, lane=-1):
        nonlocal seq
        heapq.heappush(events, (t, seq, kind, w, lane))
        seq += 1

    def start_align(lane, w, t, t_req):
        lane_free[lane] = False
        waits[w] += t - t_req
        busy[lane] += ta
        metrics.offloads.append(Offload(current[w], w, lane, t, t + ta))
        phase["align"] += t + ta - t_req
        push(t + ta, "aligned", w, lane)

    def claim(w, t):
        nonlocal next_task
        if next_task >= n_ligands:
            return
        current[w] = next_task
        metrics.task_workers.append((w, w))
        next_task += 1
        if d == 0:
            phase["align"] += tc
            phase["optimize"] += to
            push(t + tc + to, "done", w)
            return
        lane = w % d
        if lane_free[lane]:
            start_align(lane, w, t, t)
        else:
            lane_queue[lane].append((w, t))

    for w in range(n):
        claim(w, 0.0)
    while events:
        t, _, kind, w, lane = heapq.heappop(events)
        if kind == "aligned":
            lane_free[lane] = True
            if lane_queue[lane]:
                w2, t_req = lane_queue[lane].popleft()
                start_align(lane, w2, t, t_req)
            phase["optimize"] += to
            push(t + to, "done", w)
        else:
            end = t
            claim(w, t)

    metrics.wall_time = end
    metrics.device_busy = busy
    metrics.worker_wait = waits
    metrics.phase_seconds = phase
    return metrics
