"""On-disk registry of applications: call graphs, trained models, metadata.

Layout under the root directory:

    index.json          application id -> file names + metadata
    graphs/<n>.json     call-graph documents
    models/<n>.json     model artifacts

Index updates are atomic (write to a temp file, then rename), so a crash
between writes leaves the previous index intact. Writers must be serialized by
the caller; concurrent reads are safe.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .callgraph import CallGraph, ModelRegistry, RegistryEntry
from .nn import ReplicaModel, model_from_dict, model_to_dict

INDEX_FORMAT_VERSION = 1


class IntegrityError(RuntimeError):
    """A stored document is malformed; the message names the offending field."""


class NotFoundError(KeyError):
    """The requested application or model is not in the store."""


def _load_json(path: Path, what: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise NotFoundError(f"{what} file {path.name!r} is missing") from None
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"{what} file {path.name!r} is not valid JSON: {exc}") from exc


@dataclass
class RegistryStore:
    """Persistent registry rooted at a directory."""

    root: Path

    def __init__(self, root: str | os.PathLike) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "graphs").mkdir(exist_ok=True)
        (self.root / "models").mkdir(exist_ok=True)
        if not self._index_path.exists():
            self._write_index({"version": INDEX_FORMAT_VERSION, "applications": {}})

    @property
    def _index_path(self) -> Path:
        return self.root / "index.json"

    def _write_index(self, index: dict) -> None:
        tmp = self.root / "index.json.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(index, fh, indent=2)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self._index_path)

    def _read_index(self) -> dict:
        index = _load_json(self._index_path, "index")
        if index.get("version") != INDEX_FORMAT_VERSION:
            raise IntegrityError("index file: field 'version' is unsupported")
        apps = index.get("applications")
        if not isinstance(apps, dict):
            raise IntegrityError("index file: field 'applications' must be an object")
        return index

    def application_ids(self) -> list[str]:
        return list(self._read_index()["applications"])

    def has_application(self, application_id: str) -> bool:
        return application_id in self._read_index()["applications"]

    def has_model(self, application_id: str) -> bool:
        return self._entry(application_id).get("model") is not None

    def metadata(self, application_id: str) -> dict:
        return self._entry(application_id).get("metadata", {})

    def register(
        self,
        application_id: str,
        call_graph: CallGraph,
        model: ReplicaModel | None = None,
        metadata: dict | None = None,
    ) -> None:
        index = self._read_index()
        if application_id in index["applications"]:
            raise ValueError(f"application {application_id!r} already registered")
        slug = f"{len(index['applications']):04d}"
        graph_name = f"graphs/{slug}.json"
        with open(self.root / graph_name, "w", encoding="utf-8") as fh:
            json.dump({"version": 1, **call_graph.to_dict()}, fh)
        model_name = None
        if model is not None:
            model_name = f"models/{slug}.json"
            with open(self.root / model_name, "w", encoding="utf-8") as fh:
                json.dump(model_to_dict(model), fh)
        index["applications"][application_id] = {
            "call_graph": graph_name,
            "model": model_name,
            "metadata": metadata or {},
        }
        self._write_index(index)

    def _entry(self, application_id: str) -> dict:
        index = self._read_index()
        try:
            return index["applications"][application_id]
        except KeyError:
            raise NotFoundError(f"application {application_id!r} is not registered") from None

    def load_call_graph(self, application_id: str) -> CallGraph:
        entry = self._entry(application_id)
        doc = _load_json(self.root / entry["call_graph"], "call-graph")
        try:
            return CallGraph.from_dict(doc)
        except ValueError as exc:
            raise IntegrityError(f"call-graph file for {application_id!r}: {exc}") from exc

    def persist_model(self, application_id: str, model: ReplicaModel) -> str:
        """Attach (or replace) the trained model of a registered application."""
        index = self._read_index()
        if application_id not in index["applications"]:
            raise NotFoundError(f"application {application_id!r} is not registered")
        entry = index["applications"][application_id]
        model_name = entry["model"] or f"models/{Path(entry['call_graph']).stem}.json"
        with open(self.root / model_name, "w", encoding="utf-8") as fh:
            json.dump(model_to_dict(model), fh)
        entry["model"] = model_name
        self._write_index(index)
        return model_name

    def load_model(self, application_id: str) -> ReplicaModel:
        entry = self._entry(application_id)
        if not entry.get("model"):
            raise NotFoundError(f"application {application_id!r} has no stored model")
        doc = _load_json(self.root / entry["model"], "model")
        try:
            return model_from_dict(doc)
        except ValueError as exc:
            raise IntegrityError(f"model file for {application_id!r}: {exc}") from exc

    def to_model_registry(self, threshold: float = 0.2) -> ModelRegistry:
        """Materialize the store as an in-memory registry for planning."""
        entries = []
        for app_id in self.application_ids():
            graph = self.load_call_graph(app_id)
            entry = self._entry(app_id)
            model = self.load_model(app_id) if entry.get("model") else None
            entries.append(
                RegistryEntry(application_id=app_id, call_graph=graph, model=model)
            )
        return ModelRegistry(entries=entries, threshold=threshold)
