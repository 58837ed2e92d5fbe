"""Command-line driver for offline use and CI.

All command output on stdout is JSON; diagnostics go to stderr. Exit codes:
0 ok, 1 at least one run failed, 2 usage, 3 I/O or schema problem.
"""

from __future__ import annotations

import argparse
import base64
import json
import sys
from pathlib import Path

from .agent import AgentConfig, FAILED, MergeEngine, run_from_dict, run_to_dict
from .errors import SchemaError
from .geometry import Layout, Placement
from .matching import MatchPolicy, match_orders
from .memory import MemoryStore
from .model import load_fleet, load_orders
from .planners import HeuristicPlanner, RemotePlanner, ScriptedPlanner
from .prompting import render_views

EXIT_OK = 0
EXIT_RUN_FAILED = 1
EXIT_USAGE = 2
EXIT_IO_SCHEMA = 3

_POLICY_NAMES = {"smallest-fit": "SmallestFit", "first-id": "FirstId"}


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        _fail_io(f"cannot read {path}: {e}")


def _fail_io(message: str, path: str | None = None) -> None:
    doc = {"error": {"code": "io_schema", "message": message}}
    if path is not None:
        doc["error"]["path"] = path
    print(json.dumps(doc), file=sys.stderr)
    raise SystemExit(EXIT_IO_SCHEMA)


def _load_models(args):
    try:
        fleet = load_fleet(_read(args.fleet))
        book = load_orders(_read(args.orders))
    except SchemaError as e:
        _fail_io(str(e), e.path)
    except ValueError as e:
        _fail_io(str(e))
    return fleet, book


def _policy(args) -> MatchPolicy:
    return MatchPolicy(
        device_preference=_POLICY_NAMES[args.policy],
        allow_yaw_swap=args.allow_yaw_swap,
    )


def cmd_validate(args) -> int:
    fleet, book = _load_models(args)
    print(json.dumps({"ok": True, "devices": len(fleet.devices), "orders": len(book.orders)}))
    return EXIT_OK


def cmd_match(args) -> int:
    fleet, book = _load_models(args)
    result = match_orders(book, fleet, _policy(args))
    print(json.dumps(result.to_dict(), indent=2))
    return EXIT_OK


def _planner_from_spec(spec: str):
    if spec == "heuristic":
        return HeuristicPlanner()
    if spec.startswith("scripted:"):
        path = spec.split(":", 1)[1]
        try:
            return ScriptedPlanner.from_file(path)
        except (OSError, ValueError, KeyError) as e:
            _fail_io(f"cannot load scripted answers from {path}: {e}")
    if spec == "remote":
        import os

        endpoint = os.environ.get("PRINTMERGE_PLANNER_ENDPOINT")
        model = os.environ.get("PRINTMERGE_PLANNER_MODEL")
        if not endpoint or not model:
            _fail_io(
                "remote planner needs PRINTMERGE_PLANNER_ENDPOINT and "
                "PRINTMERGE_PLANNER_MODEL in the environment"
            )
        return RemotePlanner(
            endpoint=endpoint,
            model=model,
            api_key=os.environ.get("PRINTMERGE_PLANNER_API_KEY"),
        )
    _fail_io(f"unknown planner {spec!r}")


def cmd_merge(args) -> int:
    fleet, book = _load_models(args)
    planner = _planner_from_spec(args.planner)
    memory = None
    if args.memory:
        memory_dir = Path(args.memory)
        memory_dir.mkdir(parents=True, exist_ok=True)
        memory = MemoryStore(memory_dir / "memory.jsonl")
    config = AgentConfig(
        clearance_mm=args.clearance,
        max_iterations=args.max_iters,
        include_images=not args.no_images,
        batch_window_count=args.window_count or len(book.orders) or 1,
    )
    engine = MergeEngine(config=config, memory=memory, planner=planner)
    outcome = engine.process_order_stream(list(book.orders), fleet, planner, _policy(args))
    doc = {
        "runs": [run_to_dict(r, include_volatile=False) for r in outcome.runs],
        "unassigned": [{"order_id": oid, "reason": reason} for oid, reason in outcome.unassigned],
    }
    print(json.dumps(doc, indent=2))
    if any(r.status == FAILED for r in outcome.runs):
        return EXIT_RUN_FAILED
    return EXIT_OK


def cmd_render(args) -> int:
    try:
        doc = json.loads(_read(args.run))
        runs = doc["runs"] if "runs" in doc else [doc]
        runs = [run_from_dict(r) for r in runs]
    except (ValueError, KeyError) as e:
        _fail_io(f"cannot parse run trace {args.run}: {e}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for run in runs:
        for rec in run.iterations:
            if rec.positions is None:
                continue
            placements = tuple(
                Placement(order_id=pid, center=pos, dims=dims)
                for (pid, dims), pos in zip(run.parts, rec.positions)
            )
            layout = Layout(
                device_id=run.device_id, placements=placements, clearance_mm=run.clearance_mm
            )
            for label, b64 in render_views(layout, run.volume):
                name = f"{run.run_id}_iter{rec.index:02d}_{label}.png"
                (out_dir / name).write_bytes(base64.b64decode(b64))
                written.append(name)
    print(json.dumps({"written": written}))
    return EXIT_OK


def cmd_serve(args) -> int:
    from .config import load_config
    from .service import serve

    try:
        config = load_config(args.config)
    except (OSError, ValueError) as e:
        _fail_io(f"cannot load config {args.config}: {e}")
    serve(config)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="printmerge")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_args(p):
        p.add_argument("--fleet", required=True, help="fleet JSON file")
        p.add_argument("--orders", required=True, help="order book JSON file")
        p.add_argument("--policy", choices=sorted(_POLICY_NAMES), default="smallest-fit")
        p.add_argument("--allow-yaw-swap", action="store_true")

    p = sub.add_parser("validate", help="validate fleet and order documents")
    add_model_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("match", help="preview order-device assignments")
    add_model_args(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("merge", help="run merges headless")
    add_model_args(p)
    p.add_argument("--planner", default="heuristic", help="heuristic | remote | scripted:FILE")
    p.add_argument("--clearance", type=float, default=2.0)
    p.add_argument("--max-iters", type=int, default=10)
    p.add_argument("--memory", help="memory store directory")
    p.add_argument("--window-count", type=int, help="batch window size (default: whole book)")
    p.add_argument("--no-images", action="store_true", help="skip view rendering in prompts")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("render", help="emit view images for a run trace")
    p.add_argument("--run", required=True, help="run trace JSON (single run or merge output)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--config", required=True, help="TOML config file")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
