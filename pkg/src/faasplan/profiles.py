"""Canned benchmark scenarios and the savings benchmark harness.

Two synthetic execution profiles bracket the interesting regimes: a cheap
CPU-light function served at a high rate ("matmul-like") and an expensive
CPU-heavy one served at a low rate ("pearsons-like"). The benchmark provisions
each, verifies the plan, and reports the cost saved against naively taking the
largest configuration available.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import ConfigSpace, Configuration, ContainerConfig, FunctionSpec, PriceTable, cost_savings
from .planner import ModelRegistry, ProvisioningPlan, ProvisionRequest, naive_max_plan, provision
from .simulator import PlatformParams

BENCHMARK_PROFILES = ("matmul-like", "pearsons-like")

DEFAULT_PRICES = PriceTable(cpu_price=1e-3, mem_price=1e-6)

DEFAULT_CONTAINERS = (
    ContainerConfig(memory_mb=512, cpus=1.0),
    ContainerConfig(memory_mb=1024, cpus=2.0),
    ContainerConfig(memory_mb=2048, cpus=3.0),
    ContainerConfig(memory_mb=4096, cpus=4.0),
)

DEFAULT_REPLICA_CLASSES = (5, 10, 15, 20, 25, 30)


def default_config_space(
    containers=DEFAULT_CONTAINERS, replica_classes=DEFAULT_REPLICA_CLASSES
) -> ConfigSpace:
    return ConfigSpace(
        options=tuple(
            Configuration(replicas=r, container=c)
            for c in containers
            for r in replica_classes
        )
    )


@dataclass(frozen=True)
class BenchmarkScenario:
    name: str
    spec: FunctionSpec
    params: PlatformParams
    space: ConfigSpace
    prices: PriceTable

    def request(self) -> ProvisionRequest:
        return ProvisionRequest(spec=self.spec, space=self.space, prices=self.prices)


def matmul_like_scenario(seed: int = 0) -> BenchmarkScenario:
    """CPU-light requests at a high target rate."""
    return BenchmarkScenario(
        name="matmul-like",
        spec=FunctionSpec(
            id="matmul-like", slo_deadline=4.0, target_rate=600.0, request_count=1800
        ),
        params=PlatformParams(
            image_fetch_time=0.5,
            boot_time_per_container=0.5,
            boot_parallelism=32,
            cpu_work_units=0.02,
            mem_floor_mb=128,
            service_jitter=0.0,
            seed=seed,
        ),
        space=default_config_space(),
        prices=DEFAULT_PRICES,
    )


def pearsons_like_scenario(seed: int = 0) -> BenchmarkScenario:
    """CPU-heavy requests at a low target rate."""
    return BenchmarkScenario(
        name="pearsons-like",
        spec=FunctionSpec(
            id="pearsons-like", slo_deadline=14.0, target_rate=20.0, request_count=240
        ),
        params=PlatformParams(
            image_fetch_time=0.5,
            boot_time_per_container=0.5,
            boot_parallelism=32,
            cpu_work_units=0.5,
            mem_floor_mb=128,
            service_jitter=0.0,
            seed=seed,
        ),
        space=default_config_space(),
        prices=DEFAULT_PRICES,
    )


def dataset_scenario(seed: int = 0) -> BenchmarkScenario:
    """The template behind the default training grid (moderate CPU cost)."""
    return BenchmarkScenario(
        name="dataset-default",
        spec=FunctionSpec(
            id="dataset-default", slo_deadline=12.0, target_rate=50.0, request_count=240
        ),
        params=PlatformParams(
            image_fetch_time=0.5,
            boot_time_per_container=0.5,
            boot_parallelism=32,
            cpu_work_units=0.3,
            mem_floor_mb=128,
            service_jitter=0.05,
            seed=seed,
        ),
        space=default_config_space(),
        prices=DEFAULT_PRICES,
    )


DEFAULT_RATE_GRID = (22.0, 30.0, 38.0, 46.0, 54.0, 62.0, 70.0, 78.0)


def scenario_by_name(name: str, seed: int = 0) -> BenchmarkScenario:
    if name == "matmul-like":
        return matmul_like_scenario(seed)
    if name == "pearsons-like":
        return pearsons_like_scenario(seed)
    if name == "dataset-default":
        return dataset_scenario(seed)
    raise ValueError(f"unknown profile {name!r}; expected one of {BENCHMARK_PROFILES}")


@dataclass(frozen=True)
class BenchmarkResult:
    scenario: BenchmarkScenario
    plan: ProvisioningPlan
    naive: ProvisioningPlan
    savings: float


def run_benchmark(name: str, seed: int = 0) -> BenchmarkResult:
    """Provision one profile (by direct profiling) and compare against naive max."""
    scenario = scenario_by_name(name, seed)
    req = scenario.request()
    plan = provision(req, ModelRegistry(), scenario.params)
    naive = naive_max_plan(req, scenario.params)
    return BenchmarkResult(
        scenario=scenario,
        plan=plan,
        naive=naive,
        savings=cost_savings(plan.cost, naive.cost),
    )
