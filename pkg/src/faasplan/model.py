"""Formal model of serverless workloads: functions, containers, completion time, cost.

Everything here is a pure function over immutable value types, so the module is
safe to use from any number of threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence


@dataclass(frozen=True)
class FunctionSpec:
    """A serverless function together with its workload requirements.

    ``slo_deadline`` is the maximum acceptable completion time (seconds) for a
    batch of ``request_count`` requests arriving at ``target_rate`` req/s.
    """

    id: str
    slo_deadline: float
    target_rate: float
    request_count: int

    def __post_init__(self) -> None:
        if self.slo_deadline <= 0:
            raise ValueError("slo_deadline must be > 0")
        if self.target_rate <= 0:
            raise ValueError("target_rate must be > 0")
        if self.request_count < 1:
            raise ValueError("request_count must be >= 1")


@dataclass(frozen=True)
class ContainerConfig:
    """Per-replica container sizing: memory in MB and (possibly fractional) CPUs."""

    memory_mb: int
    cpus: float

    def __post_init__(self) -> None:
        if self.memory_mb < 64:
            raise ValueError("memory_mb must be >= 64")
        if self.cpus <= 0:
            raise ValueError("cpus must be > 0")


@dataclass(frozen=True)
class Configuration:
    """A replica count plus the (homogeneous) container every replica runs in."""

    replicas: int
    container: ContainerConfig

    def __post_init__(self) -> None:
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")

    @property
    def triple(self) -> tuple[int, int, float]:
        return (self.replicas, self.container.memory_mb, self.container.cpus)


@dataclass(frozen=True)
class ConfigSpace:
    """The finite set of candidate configurations a plan may choose from."""

    options: tuple[Configuration, ...]

    def __post_init__(self) -> None:
        if not self.options:
            raise ValueError("configuration space must be non-empty")
        triples = [opt.triple for opt in self.options]
        if len(set(triples)) != len(triples):
            raise ValueError("configuration space contains duplicate options")

    def containers(self) -> tuple[ContainerConfig, ...]:
        """Distinct container shapes, in first-appearance order."""
        seen: dict[ContainerConfig, None] = {}
        for opt in self.options:
            seen.setdefault(opt.container, None)
        return tuple(seen)

    def replica_counts(self) -> tuple[int, ...]:
        return tuple(sorted({opt.replicas for opt in self.options}))


@dataclass(frozen=True)
class ExecutionProfile:
    """Observed per-request execution times and their mean."""

    samples: tuple[float, ...]
    mean_exec: float

    def __post_init__(self) -> None:
        if not self.samples:
            raise ValueError("execution profile needs at least one sample")
        if any(s < 0 for s in self.samples):
            raise ValueError("execution samples must be >= 0")
        mean = math.fsum(self.samples) / len(self.samples)
        if not math.isclose(self.mean_exec, mean, rel_tol=1e-9, abs_tol=1e-15):
            raise ValueError("mean_exec is inconsistent with samples")

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> "ExecutionProfile":
        samples = tuple(float(s) for s in samples)
        return cls(samples=samples, mean_exec=mean_execution_time(samples))


@dataclass(frozen=True)
class WctBreakdown:
    """Workload completion time split into initialization, service, and queueing.

    ``total`` is derived, so the additive decomposition holds exactly.
    """

    init_time: float
    service_time: float
    queue_time: float
    total: float = field(init=False)

    def __post_init__(self) -> None:
        for name in ("init_time", "service_time", "queue_time"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        object.__setattr__(
            self, "total", self.init_time + self.service_time + self.queue_time
        )


@dataclass(frozen=True)
class PriceTable:
    """Pay-as-you-use unit prices: per CPU-second and per MB-second."""

    cpu_price: float
    mem_price: float

    def __post_init__(self) -> None:
        if self.cpu_price < 0 or self.mem_price < 0:
            raise ValueError("prices must be >= 0")


def mean_execution_time(samples: Sequence[float]) -> float:
    """Arithmetic mean of observed execution times."""
    if len(samples) == 0:
        raise ValueError("cannot average an empty sample list")
    return math.fsum(samples) / len(samples)


def workload_completion_time(
    profile: ExecutionProfile,
    cfg: Configuration,
    spec: FunctionSpec,
    init_time: float = 0.0,
    queue_time: float = 0.0,
) -> WctBreakdown:
    """Compose the completion-time estimate for a request batch.

    The service component is ``mean_exec * request_count / replicas``: the batch
    divided evenly across replicas. Initialization and queueing are supplied by
    the caller (typically measured by the simulator).
    """
    if init_time < 0 or queue_time < 0:
        raise ValueError("init_time and queue_time must be >= 0")
    service = profile.mean_exec * spec.request_count / cfg.replicas
    return WctBreakdown(init_time=init_time, service_time=service, queue_time=queue_time)


def meets_slo(wct: WctBreakdown, spec: FunctionSpec) -> bool:
    """True when the completion time is within the deadline (inclusive)."""
    return wct.total <= spec.slo_deadline


def plan_cost(cfg: Configuration, running_time: float, prices: PriceTable) -> float:
    """Resource-seconds cost of keeping a configuration up for ``running_time``."""
    if running_time < 0:
        raise ValueError("running_time must be >= 0")
    per_replica = cfg.container.cpus * prices.cpu_price + cfg.container.memory_mb * prices.mem_price
    return cfg.replicas * per_replica * running_time


def cost_savings(selected: float, baseline: float) -> float:
    """Fraction of the baseline cost avoided by the selected plan."""
    if baseline <= 0:
        raise ValueError("baseline cost must be > 0")
    return (baseline - selected) / baseline
