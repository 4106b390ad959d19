import math

import pytest

from faasplan.model import (
    Configuration,
    ContainerConfig,
    ExecutionProfile,
    FunctionSpec,
    PriceTable,
    WctBreakdown,
    cost_savings,
    mean_execution_time,
    meets_slo,
    plan_cost,
    workload_completion_time,
)
from faasplan.seeds import derive_seed
from faasplan.simulator import PlatformParams, WorkloadTrace, simulate


def make_spec(deadline=5.0, rate=10.0, count=10):
    return FunctionSpec(id="f", slo_deadline=deadline, target_rate=rate, request_count=count)


def test_mean_execution_time_constant_samples():
    assert mean_execution_time([2.0, 2.0, 2.0]) == 2.0


def test_mean_execution_time_arithmetic_mean():
    assert mean_execution_time([1.0, 3.0]) == 2.0


def test_mean_execution_time_empty_is_error():
    with pytest.raises(ValueError):
        mean_execution_time([])


def test_mean_execution_time_matches_simulator_samples():
    # 1000 single-request runs at (1 CPU, 512 MB) with jitter: the sample mean
    # must land within 2% of the platform's base service time.
    container = ContainerConfig(memory_mb=512, cpus=1.0)
    cfg = Configuration(replicas=1, container=container)
    trace = WorkloadTrace(arrivals=(0.0,), pattern_tag="constant")
    samples = []
    for i in range(1000):
        params = PlatformParams(
            image_fetch_time=0.0,
            boot_time_per_container=0.0,
            cpu_work_units=0.25,
            service_jitter=0.1,
            seed=derive_seed(99, i),
        )
        samples.append(simulate(trace, cfg, params).per_request_latency[0])
    base = 0.25 / container.cpus
    assert mean_execution_time(samples) == pytest.approx(base, rel=0.02)


def test_wct_direct_substitution():
    profile = ExecutionProfile.from_samples([2.0])
    cfg = Configuration(replicas=5, container=ContainerConfig(512, 1.0))
    wct = workload_completion_time(profile, cfg, make_spec(count=10), 0.0, 0.0)
    assert wct.total == 4.0
    assert wct.service_time == 4.0


def test_wct_with_init_and_queue():
    profile = ExecutionProfile.from_samples([1.0])
    cfg = Configuration(replicas=10, container=ContainerConfig(512, 1.0))
    wct = workload_completion_time(profile, cfg, make_spec(count=100), 3.0, 2.0)
    assert wct.total == 15.0


def test_wct_model_tracks_simulated_makespan():
    # all requests up front: the additive model must land within 10% of the
    # measured makespan for a matmul-like profile at 4 CPUs and 30 replicas
    params = PlatformParams(
        image_fetch_time=0.5,
        boot_time_per_container=0.5,
        boot_parallelism=32,
        cpu_work_units=0.02,
        service_jitter=0.05,
        seed=4,
    )
    cfg = Configuration(replicas=30, container=ContainerConfig(4096, 4.0))
    spec = make_spec(deadline=60.0, rate=600.0, count=1800)
    trace = WorkloadTrace(arrivals=(0.0,) * spec.request_count, pattern_tag="bursty")
    result = simulate(trace, cfg, params)
    profile = ExecutionProfile.from_samples([params.cpu_work_units / cfg.container.cpus])
    wct = workload_completion_time(profile, cfg, spec, init_time=result.init_time)
    assert wct.total == pytest.approx(result.makespan, rel=0.10)


def test_wct_strictly_decreases_with_replicas():
    profile = ExecutionProfile.from_samples([1.5])
    spec = make_spec(count=120)
    totals = [
        workload_completion_time(
            profile, Configuration(replicas=r, container=ContainerConfig(512, 1.0)), spec, 1.0, 0.5
        ).total
        for r in (1, 2, 4, 8, 16)
    ]
    assert all(a > b for a, b in zip(totals, totals[1:]))


def test_wct_homogeneity_in_mu_and_n():
    cfg = Configuration(replicas=3, container=ContainerConfig(512, 1.0))
    a = workload_completion_time(ExecutionProfile.from_samples([1.0]), cfg, make_spec(count=100))
    b = workload_completion_time(ExecutionProfile.from_samples([2.0]), cfg, make_spec(count=50))
    assert a.service_time == b.service_time


def test_meets_slo_boundary_inclusive():
    assert meets_slo(WctBreakdown(0.0, 4.0, 0.0), make_spec(deadline=5.0))
    assert meets_slo(WctBreakdown(0.0, 5.0, 0.0), make_spec(deadline=5.0))
    assert not meets_slo(WctBreakdown(0.0, 5.001, 0.0), make_spec(deadline=5.0))


def test_plan_cost_cpu_only():
    cfg = Configuration(replicas=1, container=ContainerConfig(64, 1.0))
    assert plan_cost(cfg, 10.0, PriceTable(cpu_price=1.0, mem_price=0.0)) == 10.0


def test_plan_cost_direct_substitution():
    cfg = Configuration(replicas=30, container=ContainerConfig(4096, 4.0))
    cost = plan_cost(cfg, 60.0, PriceTable(cpu_price=1e-3, mem_price=1e-6))
    assert cost == pytest.approx(14.5728, rel=1e-12)


def test_plan_cost_linear_in_time_and_replicas():
    prices = PriceTable(cpu_price=2e-3, mem_price=3e-6)
    c = ContainerConfig(1024, 2.0)
    one = plan_cost(Configuration(1, c), 7.0, prices)
    assert plan_cost(Configuration(1, c), 14.0, prices) == pytest.approx(2 * one)
    assert plan_cost(Configuration(6, c), 7.0, prices) == pytest.approx(6 * one)


def test_cost_savings_examples():
    assert cost_savings(1.0, 4.0) == 0.75
    assert cost_savings(3.0, 3.0) == 0.0
    assert cost_savings(8.0, 4.0) == -1.0  # overshoot allowed, bounded above by 1
    with pytest.raises(ValueError):
        cost_savings(1.0, 0.0)


def test_wct_components_nonnegative():
    with pytest.raises(ValueError):
        WctBreakdown(-0.1, 1.0, 0.0)


def test_wct_total_exact_sum():
    wct = WctBreakdown(0.1, 0.2, 0.3)
    assert wct.total == 0.1 + 0.2 + 0.3


def test_execution_profile_mean_invariant():
    with pytest.raises(ValueError):
        ExecutionProfile(samples=(1.0, 3.0), mean_exec=2.5)
    profile = ExecutionProfile.from_samples([0.5, 1.5, 2.5])
    assert math.isclose(profile.mean_exec, 1.5)


def test_type_invariants():
    with pytest.raises(ValueError):
        FunctionSpec(id="x", slo_deadline=0.0, target_rate=1.0, request_count=1)
    with pytest.raises(ValueError):
        ContainerConfig(memory_mb=32, cpus=1.0)
    with pytest.raises(ValueError):
        Configuration(replicas=0, container=ContainerConfig(128, 1.0))
