"""JSON wire formats shared by the CLI and the HTTP service.

Parsers raise :class:`RequestError` with the offending field so callers can
produce machine-readable diagnostics.
"""

from __future__ import annotations

from dataclasses import asdict

from .callgraph import CallGraph, DissimilarityResult
from .model import ConfigSpace, Configuration, ContainerConfig, FunctionSpec, PriceTable
from .planner import ProvisioningPlan, ProvisionRequest
from .simulator import PlatformParams, SimResult


class RequestError(ValueError):
    """Invalid request payload; carries the field name and a reason."""

    def __init__(self, field: str, reason: str) -> None:
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason

    def to_dict(self) -> dict:
        return {"error": {"field": self.field, "reason": self.reason}}


def _require(doc: dict, field: str, context: str = ""):
    if not isinstance(doc, dict):
        raise RequestError(context or field, "expected a JSON object")
    if field not in doc:
        raise RequestError(f"{context}.{field}" if context else field, "missing required field")
    return doc[field]


def _number(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RequestError(field, "expected a number")
    return float(value)


def parse_function_spec(doc: dict, context: str = "spec") -> FunctionSpec:
    try:
        return FunctionSpec(
            id=str(_require(doc, "id", context)),
            slo_deadline=_number(_require(doc, "slo_deadline", context), f"{context}.slo_deadline"),
            target_rate=_number(_require(doc, "target_rate", context), f"{context}.target_rate"),
            request_count=int(_number(_require(doc, "request_count", context), f"{context}.request_count")),
        )
    except ValueError as exc:
        if isinstance(exc, RequestError):
            raise
        raise RequestError(context, str(exc)) from exc


def parse_configuration(doc: dict, context: str) -> Configuration:
    try:
        return Configuration(
            replicas=int(_number(_require(doc, "replicas", context), f"{context}.replicas")),
            container=ContainerConfig(
                memory_mb=int(_number(_require(doc, "memory_mb", context), f"{context}.memory_mb")),
                cpus=_number(_require(doc, "cpus", context), f"{context}.cpus"),
            ),
        )
    except ValueError as exc:
        if isinstance(exc, RequestError):
            raise
        raise RequestError(context, str(exc)) from exc


def parse_config_space(doc: dict, context: str = "space") -> ConfigSpace:
    options = _require(doc, "options", context)
    if not isinstance(options, list) or not options:
        raise RequestError(f"{context}.options", "expected a non-empty list")
    try:
        return ConfigSpace(
            options=tuple(
                parse_configuration(opt, f"{context}.options[{i}]")
                for i, opt in enumerate(options)
            )
        )
    except ValueError as exc:
        if isinstance(exc, RequestError):
            raise
        raise RequestError(context, str(exc)) from exc


def parse_prices(doc: dict, context: str = "prices") -> PriceTable:
    try:
        return PriceTable(
            cpu_price=_number(_require(doc, "cpu_price", context), f"{context}.cpu_price"),
            mem_price=_number(_require(doc, "mem_price", context), f"{context}.mem_price"),
        )
    except ValueError as exc:
        if isinstance(exc, RequestError):
            raise
        raise RequestError(context, str(exc)) from exc


def parse_call_graph(doc: dict, context: str = "call_graph") -> CallGraph:
    try:
        return CallGraph.from_dict(doc)
    except ValueError as exc:
        raise RequestError(context, str(exc)) from exc


def parse_platform_params(doc: dict, context: str = "platform_params") -> PlatformParams:
    if not isinstance(doc, dict):
        raise RequestError(context, "expected a JSON object")
    known = {
        "image_fetch_time",
        "boot_time_per_container",
        "boot_parallelism",
        "cpu_work_units",
        "mem_floor_mb",
        "service_jitter",
        "seed",
    }
    unknown = set(doc) - known
    if unknown:
        raise RequestError(context, f"unknown fields {sorted(unknown)}")
    try:
        return PlatformParams(**doc)
    except (TypeError, ValueError) as exc:
        raise RequestError(context, str(exc)) from exc


def parse_provision_request(
    doc: dict, default_prices: PriceTable | None = None
) -> ProvisionRequest:
    spec = parse_function_spec(_require(doc, "spec"))
    space = parse_config_space(_require(doc, "space"))
    if "prices" in doc:
        prices = parse_prices(doc["prices"])
    elif default_prices is not None:
        prices = default_prices
    else:
        raise RequestError("prices", "missing required field")
    call_graph = None
    if doc.get("call_graph") is not None:
        call_graph = parse_call_graph(doc["call_graph"])
    return ProvisionRequest(spec=spec, space=space, prices=prices, call_graph=call_graph)


def configuration_to_dict(cfg: Configuration) -> dict:
    return {
        "replicas": cfg.replicas,
        "memory_mb": cfg.container.memory_mb,
        "cpus": cfg.container.cpus,
    }


def plan_to_dict(plan: ProvisioningPlan) -> dict:
    provenance: dict = {"kind": plan.provenance.kind}
    if plan.provenance.application_id is not None:
        provenance["application_id"] = plan.provenance.application_id
    if plan.provenance.ds is not None:
        provenance["ds"] = plan.provenance.ds
    return {
        "version": 1,
        "configuration": configuration_to_dict(plan.configuration),
        "predicted_wct": asdict(plan.predicted_wct),
        "predicted_throughput": plan.predicted_throughput,
        "cost": plan.cost,
        "provenance": provenance,
        "satisfiable": plan.satisfiable,
        "candidates": [
            {
                "configuration": configuration_to_dict(c.configuration),
                "wct_total": c.wct.total,
                "throughput": c.throughput,
                "cost": c.cost,
                "verified": c.verified,
            }
            for c in plan.candidates
        ],
    }


def sim_result_to_dict(result: SimResult) -> dict:
    return {"version": 1, **asdict(result), "per_request_latency": list(result.per_request_latency)}


def dissimilarity_to_dict(result: DissimilarityResult) -> dict:
    return {"version": 1, "ged_lower": result.ged_lower, "ged_upper": result.ged_upper, "ds": result.ds}
