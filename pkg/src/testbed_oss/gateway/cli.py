"""Operator CLI.

`serve` runs the gateway; `scenario`/`replay` execute a script against an
in-process gateway (or a remote one via --base-url); `demo` plays the
bundled layered end-to-end scenario, optionally paced against the wall
clock. Every REST route is also mirrored as a subcommand of the same name
taking its path parameters as flags plus an optional --body JSON document.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import os
import sys
import time

from ..platform import Platform
from ..sim.config import SimConfig
from ..store import FileStore, MemoryStore
from .app import create_app
from .routes import ROUTES
from .scenario import load_script, parse_script, run_scenario

ENV_STORE = "OSS_STORE"
ENV_PORT = "OSS_PORT"
ENV_SEED = "OSS_SEED"
ENV_INVENTORY = "OSS_INVENTORY"
ENV_REALTIME_MS = "OSS_REALTIME_MS"


def _build_platform(args) -> Platform:
    store = FileStore(args.store) if args.store else MemoryStore()
    inventory = args.inventory
    config = SimConfig(realtime_ms_per_sim_s=args.realtime_ms)
    return Platform(store=store, seed=args.seed, inventory=inventory, config=config)


def _client(args):
    if getattr(args, "base_url", None):
        import httpx

        return httpx.Client(base_url=args.base_url, timeout=30.0)
    from fastapi.testclient import TestClient

    return TestClient(create_app(_build_platform(args)))


def _print(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def cmd_serve(args) -> int:
    import uvicorn

    app = create_app(_build_platform(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _run_script(args, steps) -> int:
    client = _client(args)
    realtime = args.realtime_ms
    if realtime > 0:
        paced = []
        for step in steps:
            paced.append(step)
        report_steps = []
        saved_ok = True
        for step in paced:
            result = run_scenario([step], client)
            report_steps.extend(result["steps"])
            if "advance" in step:
                time.sleep(step["advance"] * realtime / 1000.0)
            if not result["ok"]:
                saved_ok = False
                break
        report = {"ok": saved_ok, "steps": report_steps,
                  "log_hash": client.request("GET", "/sim/events", params={"cursor": 0}).json()["log_hash"]}
    else:
        report = run_scenario(steps, client)
    for step in report["steps"]:
        mark = "ok  " if step["ok"] else "FAIL"
        print(f"{mark} [{step['index']:3d}] {step['detail']}")
    print(f"{'PASS' if report['ok'] else 'FAIL'}  event-log hash {report['log_hash']}")
    return 0 if report["ok"] else 1


def cmd_scenario(args) -> int:
    return _run_script(args, load_script(args.script))


def cmd_demo(args) -> int:
    text = importlib.resources.files("testbed_oss.scenarios").joinpath("e2e_layers.jsonl").read_text()
    return _run_script(args, parse_script(text))


def cmd_route(args, route) -> int:
    client = _client(args)
    path = route.path
    for key, value in vars(args).items():
        token = "{" + key + "}"
        if token in path:
            path = path.replace(token, str(value))
    body = json.loads(args.body) if args.body else None
    params = dict(kv.split("=", 1) for kv in (args.query or []))
    headers = dict(kv.split("=", 1) for kv in (args.header or []))
    response = client.request(route.verb, path, json=body, params=params, headers=headers)
    _print(response.json())
    return 0 if response.status_code < 400 else 1


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--store", default=os.environ.get(ENV_STORE), help="document store directory (default: in-memory)")
    parser.add_argument("--seed", type=int, default=int(os.environ.get(ENV_SEED, "0")))
    parser.add_argument("--inventory", default=os.environ.get(ENV_INVENTORY), help="builtin inventory name (e.g. lab22)")
    parser.add_argument("--realtime-ms", type=float, default=float(os.environ.get(ENV_REALTIME_MS, "0")),
                        help="wall milliseconds per sim second when pacing demos")
    parser.add_argument("--base-url", default=None, help="talk to a running gateway instead of in-process")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="testbed-oss", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP gateway")
    _common(serve)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=int(os.environ.get(ENV_PORT, "8080")))
    serve.set_defaults(func=cmd_serve)

    for name in ("scenario", "replay"):
        scenario = sub.add_parser(name, help="run a scenario script (JSON lines)")
        _common(scenario)
        scenario.add_argument("script")
        scenario.set_defaults(func=cmd_scenario)

    demo = sub.add_parser("demo", help="run the bundled layered end-to-end scenario")
    _common(demo)
    demo.set_defaults(func=cmd_demo)

    for route in ROUTES:
        route_parser = sub.add_parser(route.name, help=f"{route.verb} {route.path}")
        _common(route_parser)
        for segment in route.path.split("/"):
            if segment.startswith("{") and segment.endswith("}"):
                route_parser.add_argument(segment[1:-1])
        route_parser.add_argument("--body", default=None, help="JSON request body")
        route_parser.add_argument("--query", action="append", help="query parameter key=value")
        route_parser.add_argument("--header", action="append", help="header key=value")
        route_parser.set_defaults(func=lambda args, r=route: cmd_route(args, r))

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
