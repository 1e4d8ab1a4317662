"""Command-line surface.

Subcommands: ``reason`` (one-shot refinement session), ``garden new/step/auto``
(growth), ``analyze`` (metrics over a session or GraphML file), ``export``,
``gin-demo`` and ``serve``.  Exit codes: 0 success, 1 usage error, 2 runtime
error.  ``--json`` switches machine-readable output on.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import garden as garden_mod
from . import gin, metrics
from .engine import SessionConfig, run_session
from .garden import GardenStore, GardenSession, grow_step
from .gateway import GatewayConfig, GatewayError, build_gateway
from .graph import KnowledgeGraph, dumps as graph_dumps, from_graphml, loads as graph_loads, to_graphml

DEFAULT_STORE = os.environ.get("GPFO_STORE", "./garden-store")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    # the global flags live on a shared parent so they parse both before and
    # after the subcommand; SUPPRESS keeps the subparser from clobbering a
    # value parsed at the root
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output")
    common.add_argument("--store", default=argparse.SUPPRESS, help="session store directory")
    common.add_argument("--config", default=argparse.SUPPRESS, help="gateway config file (JSON)")
    common.add_argument("--trace", default=argparse.SUPPRESS,
                        help="JSONL request/response log path")

    parser = _Parser(prog="graphgarden", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    reason = sub.add_parser("reason", parents=[common], help="run one reasoning session")
    reason.add_argument("task")
    reason.add_argument("--iterations", type=int, default=0)
    reason.add_argument("--integrate", action="store_true")
    reason.add_argument(
        "--integrate-include-initial", dest="include_initial",
        action=argparse.BooleanOptionalAction, default=True,
    )
    reason.add_argument("--save-transcript", default=None, help="write session JSONL here")

    garden = sub.add_parser("garden", help="knowledge-garden growth")
    garden_sub = garden.add_subparsers(dest="garden_command", required=True)
    g_new = garden_sub.add_parser("new", parents=[common], help="create a session and run its seed step")
    g_new.add_argument("seed")
    g_new.add_argument("--mode", choices=["autonomous", "steered"], default="steered")
    g_new.add_argument("--max-steps", type=int, default=100)
    g_step = garden_sub.add_parser("step", parents=[common], help="run one growth step")
    g_step.add_argument("id")
    g_step.add_argument("--prompt", default=None)
    g_auto = garden_sub.add_parser("auto", parents=[common], help="run several autonomous steps")
    g_auto.add_argument("id")
    g_auto.add_argument("--steps", type=int, required=True)

    analyze = sub.add_parser("analyze", parents=[common], help="metric reports for a session or GraphML file")
    analyze.add_argument("target", help="session id or path to a .graphml/.json graph")
    analyze.add_argument("--metric", default="all",
                         choices=sorted(metrics.ALL_METRICS) + ["all", "summary"])
    analyze.add_argument("--top", type=int, default=5)

    export = sub.add_parser("export", parents=[common], help="export a session's integrated graph")
    export.add_argument("id")
    export.add_argument("--format", choices=["graphml", "json"], default="graphml")
    export.add_argument("--output", default=None)

    demo = sub.add_parser("gin-demo", parents=[common], help="embedding-alignment demonstration")
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--budget", type=int, default=gin.DEFAULT_BUDGET)

    serve = sub.add_parser("serve", parents=[common], help="run the HTTP API (and the UI when built)")
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--ui", default="frontend", help="directory with the built workbench")
    return parser


def _gateway(args) -> tuple[GatewayConfig, object]:
    cfg = GatewayConfig.from_env(args.config)
    if args.trace:
        cfg.trace_path = args.trace
    return cfg, build_gateway(cfg)


def _load_graph(args) -> KnowledgeGraph:
    target = args.target
    path = Path(target)
    if path.suffix == ".graphml" and path.exists():
        return from_graphml(path.read_text(encoding="utf-8"))
    if path.suffix == ".json" and path.exists():
        return graph_loads(path.read_text(encoding="utf-8"))
    store = GardenStore(args.store)
    return store.load(target).integrated


def _emit(args, payload: dict, text: str) -> None:
    print(json.dumps(payload, indent=2) if args.json else text)


def _cmd_reason(args) -> int:
    gateway_cfg, gateway = _gateway(args)
    cfg = SessionConfig(
        iterations=args.iterations,
        integrate=args.integrate,
        include_initial_in_integration=args.include_initial,
    )
    session = run_session(args.task, cfg, gateway, gateway_cfg)
    if args.save_transcript:
        Path(args.save_transcript).write_text(session.to_jsonl(), encoding="utf-8")
    _emit(
        args,
        {
            "id": session.session_id,
            "final_answer": session.final_answer,
            "records": len(session.records),
            "nodes": session.merged_graph.node_count(),
            "edges": session.merged_graph.edge_count(),
        },
        session.final_answer,
    )
    return 0


def _cmd_garden(args) -> int:
    store = GardenStore(args.store)
    gateway_cfg, gateway = _gateway(args)
    cfg = SessionConfig()
    if args.garden_command == "new":
        session = GardenSession(
            seed_prompt=args.seed, mode=args.mode, max_steps=args.max_steps
        )
        grow_step(session, None, gateway, cfg, gateway_cfg, store)
        _emit(
            args,
            {"id": session.session_id, "steps": len(session.steps)},
            f"created session {session.session_id} ({len(session.steps)} step)",
        )
        return 0
    session = store.load(args.id)
    if args.garden_command == "step":
        step = grow_step(session, args.prompt, gateway, cfg, gateway_cfg, store)
        _emit(
            args,
            {
                "id": session.session_id,
                "step": step.index,
                "prompt": step.prompt,
                "source": step.prompt_source,
                "nodes": session.integrated.node_count(),
                "edges": session.integrated.edge_count(),
            },
            f"step {step.index} ({step.prompt_source}): {step.prompt}",
        )
        return 0
    if args.garden_command == "auto":
        for _ in range(args.steps):
            grow_step(session, None, gateway, cfg, gateway_cfg, store)
        store.save(session)
        _emit(
            args,
            {
                "id": session.session_id,
                "steps": len(session.steps),
                "nodes": session.integrated.node_count(),
                "edges": session.integrated.edge_count(),
            },
            f"session {session.session_id}: {len(session.steps)} steps, "
            f"{session.integrated.node_count()} nodes",
        )
        return 0
    raise UsageError(f"unknown garden command {args.garden_command!r}")


def _cmd_analyze(args) -> int:
    g = _load_graph(args)
    display = {key: node.display for key, node in g.nodes.items()}
    if args.metric == "summary":
        summary = metrics.summarize(g)
        _emit(args, summary.to_json(), json.dumps(summary.to_json(), indent=2))
        return 0
    names = sorted(metrics.ALL_METRICS) if args.metric == "all" else [args.metric]
    reports = {name: metrics.ALL_METRICS[name](g, k=args.top) for name in names}
    payload = {name: report.to_json() for name, report in reports.items()}
    text = "\n\n".join(report.to_table(display) for report in reports.values())
    _emit(args, payload, text)
    return 0


def _cmd_export(args) -> int:
    store = GardenStore(args.store)
    session = store.load(args.id)
    content = (
        to_graphml(session.integrated)
        if args.format == "graphml"
        else graph_dumps(session.integrated)
    )
    if args.output:
        Path(args.output).write_text(content, encoding="utf-8")
        _emit(args, {"written": args.output}, f"wrote {args.output}")
    else:
        print(content)
    return 0


def _cmd_gin_demo(args) -> int:
    report = gin.demo_report(seed=args.seed, budget=args.budget)
    if args.json:
        g1, g2 = gin.build_equation_graphs()
        fit = gin.fit_alignment(g1, g2, gin.EQUATION_MATCHING, seed=args.seed, budget=args.budget)
        print(json.dumps({"residual": fit.residual, "seed": fit.seed, "model": fit.model.to_json()}))
    else:
        print(report)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    gateway_cfg, gateway = _gateway(args)
    static_dir = args.ui if args.ui and Path(args.ui).is_dir() else None
    app = create_app(GardenStore(args.store), gateway, gateway_cfg, static_dir=static_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cli_dispatch(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    # global flags are SUPPRESS-defaulted so they can appear on either side
    # of the subcommand; fill the defaults here
    args.json = getattr(args, "json", False)
    args.store = getattr(args, "store", DEFAULT_STORE)
    args.config = getattr(args, "config", None)
    args.trace = getattr(args, "trace", None)
    handlers = {
        "reason": _cmd_reason,
        "garden": _cmd_garden,
        "analyze": _cmd_analyze,
        "export": _cmd_export,
        "gin-demo": _cmd_gin_demo,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (GatewayError, garden_mod.StepLimitReached, garden_mod.EmptyGraph,
            KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
