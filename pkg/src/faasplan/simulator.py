"""Discrete-event simulator of a FaaS platform.

Models cold start (image fetch plus batched container boots), a single shared
FCFS dispatch queue per function, and per-replica sequential service. A single
run is strictly deterministic given its seed; independent runs derive child
seeds from grid position, so parallel execution cannot change results.

The simulator doubles as the measurement oracle: it produces throughput,
completion-time, and queue-time observations, and the labeled datasets the
replica classifier trains on.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .model import ConfigSpace, Configuration, FunctionSpec
from .seeds import derive_seed

TRACE_PATTERNS = ("constant", "poisson", "bursty")

# bursty traces alternate (2*rate, idle) epochs over this many cycles
_BURST_CYCLES = 3

DATASET_CSV_HEADER = ("cpus", "memory_mb", "rate", "label_replicas")


@dataclass(frozen=True)
class PlatformParams:
    """Platform-level knobs the simulator runs under.

    ``cpu_work_units`` is the CPU-seconds one request costs; per-request service
    time is ``cpu_work_units / cpus`` scaled by uniform jitter in
    ``[1 - service_jitter, 1 + service_jitter]``. Containers smaller than
    ``mem_floor_mb`` fail every request.
    """

    image_fetch_time: float = 0.5
    boot_time_per_container: float = 0.5
    boot_parallelism: int = 32
    cpu_work_units: float = 0.1
    mem_floor_mb: int = 128
    service_jitter: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.image_fetch_time < 0 or self.boot_time_per_container < 0:
            raise ValueError("boot and fetch times must be >= 0")
        if self.boot_parallelism < 1:
            raise ValueError("boot_parallelism must be >= 1")
        if self.cpu_work_units <= 0:
            raise ValueError("cpu_work_units must be > 0")
        if self.mem_floor_mb < 1:
            raise ValueError("mem_floor_mb must be >= 1")
        if not 0 <= self.service_jitter < 1:
            raise ValueError("service_jitter must be in [0, 1)")


@dataclass(frozen=True)
class WorkloadTrace:
    """Request arrival timestamps (seconds from epoch 0), non-decreasing."""

    arrivals: tuple[float, ...]
    pattern_tag: str

    def __post_init__(self) -> None:
        if not self.arrivals:
            raise ValueError("trace must contain at least one arrival")
        if any(b < a for a, b in zip(self.arrivals, self.arrivals[1:])):
            raise ValueError("arrivals must be non-decreasing")


@dataclass(frozen=True)
class SimResult:
    """Measurements from one simulation run."""

    throughput: float
    makespan: float
    init_time: float
    mean_queue_time: float
    per_request_latency: tuple[float, ...]
    failed: int


@dataclass
class LabeledDataset:
    """Training rows: features [cpus, memory_mb, rate] with a replica-class label.

    ``labels`` index into ``class_labels``; ``flags`` marks cells no class could
    satisfy (labeled with the largest class).
    """

    features: np.ndarray
    labels: np.ndarray
    class_labels: tuple[int, ...]
    flags: np.ndarray

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        self.flags = np.asarray(self.flags, dtype=bool)
        if self.features.ndim != 2 or self.features.shape[1] != 3:
            raise ValueError("features must have shape (n, 3)")
        n = self.features.shape[0]
        if self.labels.shape != (n,) or self.flags.shape != (n,):
            raise ValueError("labels/flags must align with features")
        if not np.all(np.isfinite(self.features)) or np.any(self.features <= 0):
            raise ValueError("features must be finite and positive")
        if np.any(self.labels < 0) or np.any(self.labels >= len(self.class_labels)):
            raise ValueError("labels must index class_labels")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def label_values(self) -> np.ndarray:
        return np.asarray(self.class_labels)[self.labels]


def init_duration(replicas: int, params: PlatformParams) -> float:
    """Cold-start time: one image fetch plus batched container boots."""
    batches = math.ceil(replicas / params.boot_parallelism)
    return params.image_fetch_time + params.boot_time_per_container * batches


def generate_trace(pattern: str, rate: float, horizon: float, seed: int = 0) -> WorkloadTrace:
    """Produce arrivals over ``[0, horizon)`` averaging ``rate`` requests/second.

    ``constant`` spaces arrivals exactly ``1/rate`` apart; ``poisson`` draws
    exponential inter-arrivals; ``bursty`` alternates saturated epochs at twice
    the rate with idle epochs, front-loaded so the tail of the horizon is free
    for the platform to drain its backlog.
    """
    if rate <= 0 or horizon <= 0:
        raise ValueError("rate and horizon must be > 0")
    if pattern == "constant":
        arrivals = [i / rate for i in range(math.ceil(rate * horizon)) if i / rate < horizon]
    elif pattern == "poisson":
        rng = np.random.default_rng(seed)
        arrivals = []
        t = rng.exponential(1.0 / rate)
        while t < horizon:
            arrivals.append(t)
            t += rng.exponential(1.0 / rate)
    elif pattern == "bursty":
        epoch = horizon / (2 * _BURST_CYCLES)
        burst_rate = 2.0 * rate
        arrivals = []
        for cycle in range(_BURST_CYCLES):
            start = 2 * cycle * epoch
            i = 0
            while True:
                t = start + i / burst_rate
                if t >= start + epoch or t >= horizon:
                    break
                arrivals.append(t)
                i += 1
    else:
        raise ValueError(f"unknown trace pattern {pattern!r}; expected one of {TRACE_PATTERNS}")
    if not arrivals:
        raise ValueError("trace parameters produced no arrivals")
    return WorkloadTrace(arrivals=tuple(arrivals), pattern_tag=pattern)


def simulate(trace: WorkloadTrace, cfg: Configuration, params: PlatformParams) -> SimResult:
    """Run one deterministic FCFS simulation of the trace on the configuration.

    Replicas all become available once initialization finishes (timed from the
    first arrival); requests then dispatch in arrival order to the
    earliest-free replica, ties broken toward the lowest replica index.
    """
    arrivals = trace.arrivals
    n = len(arrivals)
    if n == 0:
        raise ValueError("cannot simulate an empty trace")
    init = init_duration(cfg.replicas, params)
    if cfg.container.memory_mb < params.mem_floor_mb:
        return SimResult(
            throughput=0.0,
            makespan=0.0,
            init_time=init,
            mean_queue_time=0.0,
            per_request_latency=(),
            failed=n,
        )

    base = params.cpu_work_units / cfg.container.cpus
    if params.service_jitter > 0:
        rng = np.random.default_rng(params.seed)
        service = base * (1.0 + params.service_jitter * rng.uniform(-1.0, 1.0, n))
    else:
        service = np.full(n, base)

    t0 = arrivals[0]
    ready = t0 + init
    # (free_time, replica_idx) heap realizes the FCFS event loop: the next
    # dispatch always pairs the head of the queue with the earliest-free replica.
    free: list[tuple[float, int]] = [(ready, i) for i in range(cfg.replicas)]
    heapq.heapify(free)

    queue_waits = np.empty(n)
    latencies = np.empty(n)
    last_completion = t0
    for i, arrival in enumerate(arrivals):
        free_at, idx = heapq.heappop(free)
        start = arrival if arrival > free_at else free_at
        completion = start + service[i]
        heapq.heappush(free, (completion, idx))
        queue_waits[i] = start - (arrival if arrival > ready else ready)
        latencies[i] = completion - arrival
        if completion > last_completion:
            last_completion = completion

    makespan = float(last_completion - t0)
    return SimResult(
        throughput=n / makespan,
        makespan=makespan,
        init_time=init,
        mean_queue_time=float(queue_waits.mean()),
        per_request_latency=tuple(float(x) for x in latencies),
        failed=0,
    )


def saturation_trace(spec: FunctionSpec, seed: int = 0, pattern: str = "bursty") -> WorkloadTrace:
    """The measurement workload for a function: its batch at its target rate."""
    horizon = spec.request_count / spec.target_rate
    return generate_trace(pattern, spec.target_rate, horizon, seed=seed)


def measure_throughput(
    cfg: Configuration,
    params: PlatformParams,
    spec: FunctionSpec,
    runs: int,
    seed: int,
    pattern: str = "bursty",
) -> float:
    """Mean throughput over independently seeded runs at the function's target rate."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    total = 0.0
    for i in range(runs):
        run_params = _reseed(params, derive_seed(seed, 1, i))
        trace = saturation_trace(spec, seed=derive_seed(seed, 0, i), pattern=pattern)
        total += simulate(trace, cfg, run_params).throughput
    return total / runs


def _reseed(params: PlatformParams, seed: int) -> PlatformParams:
    if params.service_jitter == 0:
        return params
    return replace(params, seed=seed)


def _cell_measurement(
    container,
    replicas: int,
    rate: float,
    params: PlatformParams,
    spec_template: FunctionSpec,
    runs: int,
    seed: int,
    pattern: str,
) -> tuple[float, float]:
    """Mean (throughput, composed WCT) for one (container, rate, replicas) cell."""
    cfg = Configuration(replicas=replicas, container=container)
    spec = FunctionSpec(
        id=spec_template.id,
        slo_deadline=spec_template.slo_deadline,
        target_rate=rate,
        request_count=spec_template.request_count,
    )
    service = params.cpu_work_units / container.cpus * spec.request_count / replicas
    tp_sum = 0.0
    wct_sum = 0.0
    for i in range(runs):
        run_params = _reseed(params, derive_seed(seed, 1, i))
        trace = saturation_trace(spec, seed=derive_seed(seed, 0, i), pattern=pattern)
        res = simulate(trace, cfg, run_params)
        tp_sum += res.throughput
        wct_sum += max(res.makespan, res.init_time + service)
    return tp_sum / runs, wct_sum / runs


def build_dataset(
    space: ConfigSpace,
    rate_grid: Sequence[float],
    params: PlatformParams,
    spec_template: FunctionSpec,
    runs_per_cell: int,
    replica_classes: Sequence[int],
    seed: int,
    pattern: str = "bursty",
) -> LabeledDataset:
    """Label every (container, rate) cell with the smallest sufficient replica class.

    A class suffices when its measured mean throughput reaches the cell's rate
    and its mean completion time stays within the template deadline. Cells no
    class satisfies get the largest class and a flag. Each of the cell's
    ``runs_per_cell`` runs contributes one row carrying the cell's aggregate
    label, mirroring how repeated load runs aggregate into a training set.
    """
    if len(rate_grid) == 0:
        raise ValueError("rate_grid must be non-empty")
    if runs_per_cell < 1:
        raise ValueError("runs_per_cell must be >= 1")
    classes = [int(c) for c in replica_classes]
    if not classes or classes != sorted(classes):
        raise ValueError("replica_classes must be non-empty and sorted ascending")

    containers = space.containers()
    features = []
    labels = []
    flags = []
    for ci, container in enumerate(containers):
        for ri, rate in enumerate(rate_grid):
            label = len(classes) - 1
            flagged = True
            for ki, replicas in enumerate(classes):
                tp, wct = _cell_measurement(
                    container,
                    replicas,
                    rate,
                    params,
                    spec_template,
                    runs_per_cell,
                    derive_seed(seed, ci, ri, ki),
                    pattern,
                )
                if tp >= rate and wct <= spec_template.slo_deadline:
                    label = ki
                    flagged = False
                    break
            row = [container.cpus, float(container.memory_mb), float(rate)]
            features.extend([row] * runs_per_cell)
            labels.extend([label] * runs_per_cell)
            flags.extend([flagged] * runs_per_cell)
    return LabeledDataset(
        features=np.array(features),
        labels=np.array(labels),
        class_labels=tuple(classes),
        flags=np.array(flags),
    )


def write_dataset_csv(dataset: LabeledDataset, path: str) -> None:
    """CSV with header ``cpus,memory_mb,rate,label_replicas``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(DATASET_CSV_HEADER)
        values = dataset.label_values
        for row, label in zip(dataset.features, values):
            writer.writerow([repr(float(row[0])), int(row[1]), repr(float(row[2])), int(label)])


def read_dataset_csv(path: str, class_labels: Iterable[int] | None = None) -> LabeledDataset:
    """Load a dataset CSV; classes default to the sorted labels present."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != DATASET_CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        rows = [row for row in reader if row]
    if not rows:
        raise ValueError("dataset CSV has no rows")
    features = np.array([[float(r[0]), float(r[1]), float(r[2])] for r in rows])
    values = [int(r[3]) for r in rows]
    classes = tuple(int(c) for c in class_labels) if class_labels else tuple(sorted(set(values)))
    index = {c: i for i, c in enumerate(classes)}
    try:
        labels = np.array([index[v] for v in values])
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]} not in class list {classes}") from exc
    return LabeledDataset(
        features=features,
        labels=labels,
        class_labels=classes,
        flags=np.zeros(len(rows), dtype=bool),
    )
