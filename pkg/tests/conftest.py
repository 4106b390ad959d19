import numpy as np
import pytest

from faasplan.model import ConfigSpace, Configuration, ContainerConfig, FunctionSpec, PriceTable
from faasplan.nn import Network, ReplicaModel
from faasplan.simulator import PlatformParams

TINY_CONTAINERS = (
    ContainerConfig(memory_mb=256, cpus=1.0),
    ContainerConfig(memory_mb=512, cpus=2.0),
)
TINY_CLASSES = (2, 4, 8)


@pytest.fixture
def tiny_space() -> ConfigSpace:
    return ConfigSpace(
        options=tuple(
            Configuration(replicas=r, container=c)
            for c in TINY_CONTAINERS
            for r in TINY_CLASSES
        )
    )


@pytest.fixture
def tiny_spec() -> FunctionSpec:
    return FunctionSpec(id="tiny", slo_deadline=15.0, target_rate=5.0, request_count=60)


@pytest.fixture
def tiny_params() -> PlatformParams:
    return PlatformParams(
        image_fetch_time=0.2,
        boot_time_per_container=0.2,
        boot_parallelism=16,
        cpu_work_units=0.1,
        mem_floor_mb=128,
        service_jitter=0.0,
        seed=0,
    )


@pytest.fixture
def tiny_prices() -> PriceTable:
    return PriceTable(cpu_price=1e-3, mem_price=1e-6)


def handcrafted_model(class_labels=TINY_CLASSES, seed=0) -> ReplicaModel:
    """A deterministic (untrained) model compatible with the tiny space."""
    rng = np.random.default_rng(seed)
    dims = (3, 4, len(class_labels))
    weights = [rng.normal(0, 0.5, (a, b)) for a, b in zip(dims, dims[1:])]
    biases = [rng.normal(0, 0.1, b) for b in dims[1:]]
    return ReplicaModel(
        network=Network(layer_dims=dims, weights=weights, biases=biases),
        class_labels=tuple(class_labels),
        feature_min=np.array([1.0, 256.0, 1.0]),
        feature_max=np.array([2.0, 512.0, 50.0]),
        loss_kind="cce",
    )
