"""Operator command line: simulation, dataset building, training, planning.

Exit codes: 0 success, 1 usage error, 2 runtime error. Every subcommand is
deterministic given ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .callgraph import CallGraph, ModelRegistry, dissimilarity_score
from .model import ConfigSpace, Configuration, ContainerConfig, FunctionSpec, PriceTable
from .nn import TrainingConfig, evaluate, init_network, model_from_dict, model_to_dict, train
from .profiles import BENCHMARK_PROFILES, run_benchmark
from .registry import RegistryStore
from .serialize import (
    parse_platform_params,
    parse_prices,
    parse_provision_request,
    plan_to_dict,
    sim_result_to_dict,
)
from .simulator import (
    PlatformParams,
    build_dataset,
    generate_trace,
    read_dataset_csv,
    simulate,
    write_dataset_csv,
)

USAGE_ERROR = 1
RUNTIME_ERROR = 2


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on bad usage; we reserve 2 for runtime."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _platform_params(args) -> PlatformParams:
    doc = {}
    if getattr(args, "config", None):
        doc = _load_json(args.config).get("platform_params", {})
    if getattr(args, "seed", None) is not None:
        doc = {**doc, "seed": args.seed}
    return parse_platform_params(doc)


def _prices(args) -> PriceTable:
    if getattr(args, "config", None):
        doc = _load_json(args.config)
        if "prices" in doc:
            return parse_prices(doc["prices"])
    return PriceTable(cpu_price=1e-3, mem_price=1e-6)


def _parse_containers(text: str) -> list[ContainerConfig]:
    """'1:512,2:1024' -> containers with cpus:memory_mb."""
    containers = []
    for chunk in text.split(","):
        cpus, _, mem = chunk.partition(":")
        containers.append(ContainerConfig(memory_mb=int(mem), cpus=float(cpus)))
    return containers


def _parse_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",")]


def _parse_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",")]


def _cmd_simulate(args) -> int:
    params = _platform_params(args)
    trace = generate_trace(args.pattern, args.rate, args.requests / args.rate, seed=args.seed)
    cfg = Configuration(
        replicas=args.replicas,
        container=ContainerConfig(memory_mb=args.memory_mb, cpus=args.cpus),
    )
    result = simulate(trace, cfg, params)
    doc = sim_result_to_dict(result)
    if not args.latencies:
        doc.pop("per_request_latency")
    _emit(doc, args.out)
    return 0


def _cmd_dataset(args) -> int:
    params = _platform_params(args)
    containers = _parse_containers(args.containers)
    classes = _parse_ints(args.classes)
    space = ConfigSpace(
        options=tuple(
            Configuration(replicas=r, container=c) for c in containers for r in classes
        )
    )
    template = FunctionSpec(
        id="dataset-template",
        slo_deadline=args.deadline,
        target_rate=_parse_floats(args.rates)[0],
        request_count=args.requests,
    )
    dataset = build_dataset(
        space=space,
        rate_grid=_parse_floats(args.rates),
        params=params,
        spec_template=template,
        runs_per_cell=args.runs_per_cell,
        replica_classes=classes,
        seed=args.seed,
    )
    if args.format == "csv":
        write_dataset_csv(dataset, args.out)
    else:
        _emit(
            {
                "version": 1,
                "class_labels": list(dataset.class_labels),
                "rows": [
                    {"features": list(map(float, f)), "label": int(l), "flagged": bool(fl)}
                    for f, l, fl in zip(dataset.features, dataset.labels, dataset.flags)
                ],
            },
            args.out,
        )
    flagged = int(dataset.flags.sum())
    print(f"wrote {len(dataset)} rows ({flagged} flagged unsatisfiable) to {args.out}", file=sys.stderr)
    return 0


def _cmd_train(args) -> int:
    classes = _parse_ints(args.classes) if args.classes else None
    dataset = read_dataset_csv(args.data, class_labels=classes)
    dims = (3, *_parse_ints(args.hidden), len(dataset.class_labels))
    net = init_network(dims, seed=args.seed)
    cfg = TrainingConfig(
        loss_kind=args.loss,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=min(args.batch_size, len(dataset)),
        validation_fraction=args.validation_fraction,
        seed=args.seed,
    )
    model, report = train(net, dataset, cfg)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)
    summary = {
        "rows": len(dataset),
        "classes": list(dataset.class_labels),
        "loss_kind": args.loss,
        "final_accuracy": report.final_accuracy,
        "final_loss": report.final_loss,
    }
    if args.report:
        _emit(
            {
                **summary,
                "train_loss": report.train_loss,
                "train_accuracy": report.train_accuracy,
                "val_loss": report.val_loss,
                "val_accuracy": report.val_accuracy,
            },
            args.report,
        )
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_evaluate(args) -> int:
    model = model_from_dict(_load_json(args.model))
    dataset = read_dataset_csv(args.data, class_labels=model.class_labels)
    accuracy, mean_loss = evaluate(model, dataset, args.loss or model.loss_kind)
    _emit({"accuracy": accuracy, "mean_loss": mean_loss, "rows": len(dataset)}, args.out)
    return 0


def _cmd_similarity(args) -> int:
    g1 = CallGraph.from_dict(_load_json(args.graph1))
    g2 = CallGraph.from_dict(_load_json(args.graph2))
    result = dissimilarity_score(g1, g2)
    _emit(
        {"version": 1, "ged_lower": result.ged_lower, "ged_upper": result.ged_upper, "ds": result.ds},
        args.out,
    )
    return 0


def _cmd_provision(args) -> int:
    from .planner import provision

    req = parse_provision_request(_load_json(args.request), default_prices=_prices(args))
    params = _platform_params(args)
    if args.registry:
        registry = RegistryStore(args.registry).to_model_registry(threshold=args.threshold)
    else:
        registry = ModelRegistry(threshold=args.threshold)
    plan = provision(req, registry, params)
    _emit(plan_to_dict(plan), args.out)
    return 0


def _cmd_benchmark(args) -> int:
    names = list(BENCHMARK_PROFILES) if args.profile == "both" else [args.profile]
    floor = {"matmul-like": 0.60, "pearsons-like": 0.50}
    print(f"{'profile':<16} {'plan':<22} {'plan cost':>10} {'naive cost':>10} {'savings':>8}  floor")
    all_savings = []
    for name in names:
        result = run_benchmark(name, seed=args.seed)
        cfg = result.plan.configuration
        desc = f"{cfg.replicas} x {cfg.container.cpus}cpu/{cfg.container.memory_mb}MB"
        mark = "ok" if result.savings >= floor[name] else "BELOW"
        print(
            f"{name:<16} {desc:<22} {result.plan.cost:>10.4f} {result.naive.cost:>10.4f}"
            f" {result.savings:>8.2%}  >= {floor[name]:.0%} {mark}"
        )
        all_savings.append(result.savings)
    if len(all_savings) > 1:
        print(f"{'average':<16} {'':<22} {'':>10} {'':>10} {float(np.mean(all_savings)):>8.2%}")
    return 0


def _cmd_serve(args) -> int:
    from .service import load_service_config, serve

    config = load_service_config(args.config)
    serve(config)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="faasplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation and print the measurements")
    p.add_argument("--pattern", default="constant", choices=("constant", "poisson", "bursty"))
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--requests", type=int, required=True)
    p.add_argument("--replicas", type=int, required=True)
    p.add_argument("--cpus", type=float, default=1.0)
    p.add_argument("--memory-mb", type=int, default=512)
    p.add_argument("--latencies", action="store_true", help="include per-request latencies")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("dataset", help="sweep a grid in the simulator and write training rows")
    p.add_argument("--containers", default="1:512,2:1024,3:2048,4:4096", help="cpus:memory_mb pairs")
    p.add_argument("--rates", default="22,30,38,46,54,62,70,78")
    p.add_argument("--classes", default="5,10,15,20,25,30")
    p.add_argument("--runs-per-cell", type=int, default=50)
    p.add_argument("--deadline", type=float, default=12.0)
    p.add_argument("--requests", type=int, default=240)
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.set_defaults(func=_cmd_dataset, out_required=True)

    p = sub.add_parser("train", help="train a replica classifier from a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--loss", default="cce", choices=("cce", "klde", "psse"))
    p.add_argument("--hidden", default="64,64")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--validation-fraction", type=float, default=0.2)
    p.add_argument("--classes", default=None, help="override the class list, e.g. 5,10,15")
    p.add_argument("--report", default=None, help="write the full epoch history here")
    p.set_defaults(func=_cmd_train, out_required=True)

    p = sub.add_parser("evaluate", help="accuracy and mean loss of a model on a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--loss", default=None, choices=("cce", "klde", "psse"))
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("similarity", help="dissimilarity score of two call-graph JSON files")
    p.add_argument("graph1")
    p.add_argument("graph2")
    p.set_defaults(func=_cmd_similarity)

    p = sub.add_parser("provision", help="plan a provisioning request JSON")
    p.add_argument("--request", required=True)
    p.add_argument("--registry", default=None, help="registry directory for model lookup")
    p.add_argument("--threshold", type=float, default=0.2)
    p.set_defaults(func=_cmd_provision)

    p = sub.add_parser("benchmark", help="run the savings benchmark against the naive plan")
    p.add_argument("--profile", default="both", choices=(*BENCHMARK_PROFILES, "both"))
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("serve", help="run the HTTP planning service")
    p.set_defaults(func=_cmd_serve)

    for name, sp in sub.choices.items():
        sp.add_argument("--seed", type=int, default=0)
        if name != "serve":
            sp.add_argument("--config", default=None, help="JSON file with platform_params/prices")
            sp.add_argument("--out", default=None, help="write output here instead of stdout")
        else:
            sp.add_argument("--config", default=None, help="service config JSON")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "out_required", False) and not args.out:
            parser.error(f"{args.command} requires --out")
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0
    except Exception as exc:  # runtime failures map to exit code 2
        print(f"faasplan: error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
