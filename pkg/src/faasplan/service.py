"""HTTP planning service: application registration, plans, similarity scoring.

Endpoints produce and consume the JSON formats in :mod:`faasplan.serialize`.
Payload validation failures return 400 with a machine-readable reason;
unexpected failures return 500 and leave the service up.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse

from .callgraph import dissimilarity_score
from .model import PriceTable
from .nn import model_from_dict
from .planner import provision
from .registry import IntegrityError, RegistryStore
from .serialize import (
    RequestError,
    dissimilarity_to_dict,
    parse_call_graph,
    parse_platform_params,
    parse_prices,
    parse_provision_request,
    plan_to_dict,
)
from .simulator import PlatformParams


@dataclass
class ServiceConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8080
    registry_path: str = "registry"
    platform_params: PlatformParams = field(default_factory=PlatformParams)
    prices: PriceTable = field(default_factory=lambda: PriceTable(cpu_price=1e-3, mem_price=1e-6))
    similarity_threshold: float = 0.2

    def __post_init__(self) -> None:
        if not 1 <= self.listen_port <= 65535:
            raise ValueError("listen_port must be a valid port")
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ValueError("similarity_threshold must lie in [0, 1]")


def load_service_config(path: str | None = None) -> ServiceConfig:
    """Build the config from an optional JSON file plus environment overrides."""
    doc: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    params = parse_platform_params(doc.get("platform_params", {}))
    prices = parse_prices(doc["prices"]) if "prices" in doc else PriceTable(1e-3, 1e-6)
    cfg = ServiceConfig(
        listen_host=doc.get("listen_host", "127.0.0.1"),
        listen_port=int(os.environ.get("FAASPLAN_PORT", doc.get("listen_port", 8080))),
        registry_path=os.environ.get("FAASPLAN_REGISTRY", doc.get("registry_path", "registry")),
        platform_params=params,
        prices=prices,
        similarity_threshold=doc.get("similarity_threshold", 0.2),
    )
    return cfg


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="faasplan", version="0.1.0")
    store = RegistryStore(config.registry_path)

    @app.exception_handler(RequestError)
    async def _bad_request(_, exc: RequestError):
        return JSONResponse(status_code=400, content=exc.to_dict())

    @app.exception_handler(IntegrityError)
    async def _integrity(_, exc: IntegrityError):
        return JSONResponse(status_code=500, content={"error": {"reason": str(exc)}})

    @app.exception_handler(Exception)
    async def _internal(_, exc: Exception):
        return JSONResponse(status_code=500, content={"error": {"reason": "internal error"}})

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    @app.get("/applications")
    async def list_applications():
        apps = []
        for app_id in store.application_ids():
            graph = store.load_call_graph(app_id)
            apps.append(
                {
                    "id": app_id,
                    "nodes": graph.n_nodes,
                    "edges": graph.n_edges,
                    "has_model": store._entry(app_id).get("model") is not None,
                }
            )
        return {"applications": apps}

    @app.post("/applications", status_code=201)
    async def register_application(payload: dict = Body(...)):
        if "id" not in payload:
            raise RequestError("id", "missing required field")
        app_id = str(payload["id"])
        if "call_graph" not in payload:
            raise RequestError("call_graph", "missing required field")
        graph = parse_call_graph(payload["call_graph"])
        model = None
        if payload.get("model") is not None:
            try:
                model = model_from_dict(payload["model"])
            except ValueError as exc:
                raise RequestError("model", str(exc)) from exc
        if store.has_application(app_id):
            return JSONResponse(
                status_code=409,
                content={"error": {"field": "id", "reason": f"application {app_id!r} already registered"}},
            )
        store.register(app_id, graph, model=model, metadata=payload.get("metadata") or {})
        return {"registered": app_id}

    @app.post("/similarity")
    async def similarity(payload: dict = Body(...)):
        if "graph1" not in payload:
            raise RequestError("graph1", "missing required field")
        if "graph2" not in payload:
            raise RequestError("graph2", "missing required field")
        g1 = parse_call_graph(payload["graph1"], context="graph1")
        g2 = parse_call_graph(payload["graph2"], context="graph2")
        return dissimilarity_to_dict(dissimilarity_score(g1, g2))

    @app.post("/plans")
    async def plans(payload: dict = Body(...)):
        req = parse_provision_request(payload, default_prices=config.prices)
        params = config.platform_params
        if payload.get("platform_params") is not None:
            params = parse_platform_params(payload["platform_params"])
        registry = store.to_model_registry(threshold=config.similarity_threshold)
        plan = provision(req, registry, params)
        return plan_to_dict(plan)

    return app


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(config), host=config.listen_host, port=config.listen_port)
