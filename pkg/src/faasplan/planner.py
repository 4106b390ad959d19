"""Configuration selection: the cheapest plan predicted to satisfy the SLO.

Every candidate is verified in the simulator before it can be returned as
satisfiable: the composed completion time must stay within the deadline and
measured throughput must reach the target rate. Model predictions (own or
borrowed from a similar application) only shortlist candidates; verification
has the final word.
"""

from __future__ import annotations

from dataclasses import dataclass

from .callgraph import CallGraph, ModelRegistry, find_similar
from .model import (
    ConfigSpace,
    Configuration,
    FunctionSpec,
    PriceTable,
    WctBreakdown,
    plan_cost,
)
from .nn import ReplicaModel, predict_replicas
from .seeds import derive_seed
from .simulator import PlatformParams, _reseed, saturation_trace, simulate

PROVENANCE_KINDS = ("trained-model", "similar-model", "profiled")


@dataclass(frozen=True)
class Provenance:
    """Where a plan's replica-count estimate came from."""

    kind: str
    application_id: str | None = None
    ds: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in PROVENANCE_KINDS:
            raise ValueError(f"kind must be one of {PROVENANCE_KINDS}")


@dataclass(frozen=True)
class ProvisionRequest:
    spec: FunctionSpec
    space: ConfigSpace
    prices: PriceTable
    call_graph: CallGraph | None = None


@dataclass(frozen=True)
class CandidateEvaluation:
    """One simulator-verified row of the plan's audit table."""

    configuration: Configuration
    wct: WctBreakdown
    throughput: float
    cost: float
    verified: bool


@dataclass(frozen=True)
class ProvisioningPlan:
    configuration: Configuration
    predicted_wct: WctBreakdown
    predicted_throughput: float
    cost: float
    provenance: Provenance
    satisfiable: bool
    candidates: tuple[CandidateEvaluation, ...]

    def __post_init__(self) -> None:
        if self.cost < 0:
            raise ValueError("cost must be >= 0")


def verify_candidate(
    cfg: Configuration,
    req: ProvisionRequest,
    params: PlatformParams,
    seed: int,
    pattern: str = "bursty",
) -> CandidateEvaluation:
    """Simulate one candidate and price it by its measured running time.

    The completion-time breakdown uses the platform's mean service time for the
    container; queueing is the simulator residual, so the composed total never
    understates the measured makespan.
    """
    spec = req.spec
    trace = saturation_trace(spec, seed=derive_seed(seed, 0), pattern=pattern)
    result = simulate(trace, cfg, _reseed(params, derive_seed(seed, 1)))
    mean_exec = params.cpu_work_units / cfg.container.cpus
    service = mean_exec * spec.request_count / cfg.replicas
    queue = max(0.0, result.makespan - result.init_time - service)
    wct = WctBreakdown(init_time=result.init_time, service_time=service, queue_time=queue)
    verified = bool(
        result.failed == 0
        and wct.total <= spec.slo_deadline
        and result.throughput >= spec.target_rate
    )
    return CandidateEvaluation(
        configuration=cfg,
        wct=wct,
        throughput=result.throughput,
        cost=plan_cost(cfg, wct.total, req.prices),
        verified=verified,
    )


def _max_capacity(space: ConfigSpace) -> Configuration:
    return max(space.options, key=lambda o: (o.replicas, o.container.cpus, o.container.memory_mb))


def _plan_from(
    evaluations: list[CandidateEvaluation],
    req: ProvisionRequest,
    params: PlatformParams,
    provenance: Provenance,
    seed: int,
) -> ProvisioningPlan:
    verified = [e for e in evaluations if e.verified]
    if verified:
        chosen = min(verified, key=lambda e: e.cost)
        satisfiable = True
    else:
        fallback = _max_capacity(req.space)
        chosen = next(
            (e for e in evaluations if e.configuration == fallback), None
        ) or verify_candidate(fallback, req, params, derive_seed(seed, 999))
        if not any(e.configuration == fallback for e in evaluations):
            evaluations = evaluations + [chosen]
        satisfiable = False
    return ProvisioningPlan(
        configuration=chosen.configuration,
        predicted_wct=chosen.wct,
        predicted_throughput=chosen.throughput,
        cost=chosen.cost,
        provenance=provenance,
        satisfiable=satisfiable,
        candidates=tuple(evaluations),
    )


def select_configuration(
    req: ProvisionRequest,
    model: ReplicaModel,
    params: PlatformParams,
    provenance: Provenance | None = None,
) -> ProvisioningPlan:
    """Plan using a trained model: one predicted candidate per container shape.

    Every prediction is simulator-verified; the cheapest verified candidate
    wins. If nothing verifies, the max-capacity option is returned flagged
    unsatisfiable.
    """
    space_replicas = set(req.space.replica_counts())
    if not set(model.class_labels) <= space_replicas:
        raise ValueError(
            f"model classes {model.class_labels} are not all available in the "
            f"configuration space (replicas {sorted(space_replicas)})"
        )
    evaluations = []
    for i, container in enumerate(req.space.containers()):
        replicas = predict_replicas(
            model, container.cpus, container.memory_mb, req.spec.target_rate
        )
        cfg = Configuration(replicas=replicas, container=container)
        evaluations.append(
            verify_candidate(cfg, req, params, derive_seed(params.seed, 10, i))
        )
    return _plan_from(
        evaluations,
        req,
        params,
        provenance or Provenance(kind="trained-model"),
        params.seed,
    )


def profile_sweep(req: ProvisionRequest, params: PlatformParams) -> ProvisioningPlan:
    """No model at all: verify every option in the space and take the cheapest."""
    evaluations = [
        verify_candidate(cfg, req, params, derive_seed(params.seed, 20, i))
        for i, cfg in enumerate(req.space.options)
    ]
    return _plan_from(evaluations, req, params, Provenance(kind="profiled"), params.seed)


def provision(
    req: ProvisionRequest, registry: ModelRegistry, params: PlatformParams
) -> ProvisioningPlan:
    """Resolve the best available knowledge source and plan with it.

    Order: the application's own trained model; then models borrowed from
    similar call graphs (ascending dissimilarity, first one whose plan
    verifies); finally direct profiling of the whole space.
    """
    own = registry.get(req.spec.id)
    if own is not None and own.model is not None:
        return select_configuration(req, own.model, params)
    if req.call_graph is not None:
        for candidate in find_similar(registry, req.call_graph):
            if candidate.model is None:
                continue
            plan = select_configuration(
                req,
                candidate.model,
                params,
                provenance=Provenance(
                    kind="similar-model",
                    application_id=candidate.application_id,
                    ds=candidate.ds,
                ),
            )
            if plan.satisfiable:
                return plan
    return profile_sweep(req, params)


def naive_max_plan(req: ProvisionRequest, params: PlatformParams) -> ProvisioningPlan:
    """The overprovisioning baseline: most replicas, largest container."""
    cfg = _max_capacity(req.space)
    evaluation = verify_candidate(cfg, req, params, derive_seed(params.seed, 30))
    return ProvisioningPlan(
        configuration=cfg,
        predicted_wct=evaluation.wct,
        predicted_throughput=evaluation.throughput,
        cost=evaluation.cost,
        provenance=Provenance(kind="profiled"),
        satisfiable=evaluation.verified,
        candidates=(evaluation,),
    )
