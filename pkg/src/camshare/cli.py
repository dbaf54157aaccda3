"""Command-line entry points: serve, scenario, validate, bench, replay.

Reports go to stdout (add --json for machine-readable output);
diagnostics go to stderr. Exit codes: 0 success, 2 bad input,
3 environment problem, 4 scenario semantics.
"""
from __future__ import annotations

import errno
import json
import os
import sys

import click

from . import __version__

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ENVIRONMENT = 3
EXIT_SCENARIO = 4

CONFIG_ENV_VAR = "CAMSHARE_CONFIG"


def _fail(code: int, message: str):
    click.echo(message, err=True)
    sys.exit(code)


def _load_scene_or_exit(path: str):
    from .scene import SceneError, load_scene
    try:
        return load_scene(path)
    except SceneError as exc:
        _fail(EXIT_INPUT, f"scene error: {exc}")


def _load_config_or_exit(path: str | None):
    from .config import load_config
    path = path or os.environ.get(CONFIG_ENV_VAR)
    try:
        return load_config(path)
    except (ValueError, OSError) as exc:
        _fail(EXIT_INPUT, f"config error: {exc}")


def _report(data: dict, as_json: bool, text_lines: list[str]):
    if as_json:
        click.echo(json.dumps(data, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            click.echo(line)


@click.group()
@click.version_option(__version__, prog_name="camshare")
def main():
    """Shared camera-control engine for a simulated 6-DoF arm camera."""


@main.command()
@click.option("--scene", "scene_path", required=True, type=str)
@click.option("--config", "config_path", type=str, default=None)
@click.option("--listen", default=None, help="HOST:PORT (default from config)")
def serve(scene_path, config_path, listen):
    """Run the live session service (REST + WebSocket protocol)."""
    import uvicorn

    from .engine import Engine
    from .service import create_app

    scene = _load_scene_or_exit(scene_path)
    config = _load_config_or_exit(config_path)
    host = config.session.listen_host
    port = config.session.listen_port
    if listen:
        try:
            host, port_s = listen.rsplit(":", 1)
            port = int(port_s)
        except ValueError:
            _fail(EXIT_INPUT, f"bad --listen value '{listen}'; expected HOST:PORT")

    # probe the address first so bind failures exit cleanly with the port named
    import socket
    probe = socket.socket()
    try:
        probe.bind((host, port))
    except OSError as exc:
        probe.close()
        if exc.errno == errno.EADDRINUSE:
            _fail(EXIT_ENVIRONMENT, f"port {port} already in use")
        _fail(EXIT_ENVIRONMENT, f"cannot bind {host}:{port}: {exc}")
    probe.close()

    engine = Engine(scene, config)
    app = create_app(engine)
    click.echo(f"camshare session service listening on {host}:{port}", err=True)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    sys.exit(EXIT_OK)


@main.command()
@click.option("--scene", "scene_path", required=True, type=str)
@click.option("--scenario", "scenario_path", required=True, type=str)
@click.option("--config", "config_path", type=str, default=None)
@click.option("--out", "out_path", type=str, default=None, help="JSONL log path")
@click.option("--ticks", type=int, default=None,
              help="override the scenario's tick count")
@click.option("--json", "as_json", is_flag=True)
def scenario(scene_path, scenario_path, config_path, out_path, ticks, as_json):
    """Run a scripted scenario headless and write its session log."""
    from .engine import Engine
    from .kinematics import InvalidInputError
    from .scene import SceneError
    from .scenarios import load_scenario, scenario_parts

    scene = _load_scene_or_exit(scene_path)
    config = _load_config_or_exit(config_path)
    config.solver.test_mode = True
    try:
        data = load_scenario(scenario_path)
        actor, commands, default_ticks = scenario_parts(data)
    except SceneError as exc:
        _fail(EXIT_INPUT, f"scenario error: {exc}")

    n_ticks = ticks if ticks is not None else default_ticks
    engine = Engine(scene, config, actor=actor, scripted_commands=commands)
    try:
        engine.run_ticks(n_ticks)
    except InvalidInputError as exc:
        _fail(EXIT_SCENARIO, f"scenario semantics error: {exc}")

    if out_path:
        engine.write_log(out_path)
    errors = engine.error_diagnostics()
    payload = {"ticks": n_ticks, "snapshot_hash": engine.snapshot_hash(),
               "error_diagnostics": errors, "log": out_path}
    _report(payload, as_json, [
        f"ran {n_ticks} ticks",
        f"snapshot hash {payload['snapshot_hash'][:16]}",
        f"error diagnostics: {len(errors)}",
    ] + ([f"log written to {out_path}"] if out_path else []))
    sys.exit(EXIT_OK if not errors else EXIT_SCENARIO)


@main.command()
@click.option("--scene", "scene_path", required=True, type=str)
@click.option("--scenario", "scenario_path", type=str, default=None)
@click.option("--config", "config_path", type=str, default=None)
@click.option("--json", "as_json", is_flag=True)
def validate(scene_path, scenario_path, config_path, as_json):
    """Validate scene, scenario, and config files."""
    from .scene import SceneError, load_scene
    from .scenarios import load_scenario, scenario_parts

    problems = []
    checked = []
    try:
        load_scene(scene_path)
        checked.append({"file": scene_path, "kind": "scene", "ok": True})
    except SceneError as exc:
        problems.append(str(exc))
        checked.append({"file": scene_path, "kind": "scene", "ok": False,
                        "error": str(exc)})
    if scenario_path:
        try:
            scenario_parts(load_scenario(scenario_path))
            checked.append({"file": scenario_path, "kind": "scenario", "ok": True})
        except (SceneError, ValueError) as exc:
            problems.append(str(exc))
            checked.append({"file": scenario_path, "kind": "scenario", "ok": False,
                            "error": str(exc)})
    if config_path:
        from .config import load_config
        try:
            load_config(config_path)
            checked.append({"file": config_path, "kind": "config", "ok": True})
        except (ValueError, OSError) as exc:
            problems.append(str(exc))
            checked.append({"file": config_path, "kind": "config", "ok": False,
                            "error": str(exc)})

    _report({"ok": not problems, "checked": checked}, as_json,
            [f"{c['kind']} {c['file']}: {'ok' if c['ok'] else c['error']}"
             for c in checked])
    sys.exit(EXIT_OK if not problems else EXIT_INPUT)


@main.command()
@click.option("--scene", "scene_path", required=True, type=str)
@click.option("--config", "config_path", type=str, default=None)
@click.option("--iters", type=int, default=1000)
@click.option("--seed", type=int, default=0)
@click.option("--json", "as_json", is_flag=True)
def bench(scene_path, config_path, iters, seed, as_json):
    """Measure solve latency over a representative request sequence."""
    from .engine import bench_solver

    scene = _load_scene_or_exit(scene_path)
    config = _load_config_or_exit(config_path)
    config.solver.test_mode = True      # measure full solves, not budget caps
    report = bench_solver(scene, config, iters=iters, seed=seed)
    soft_budget, gate = 10.0, 25.0
    report["soft_budget_ms"] = soft_budget
    report["gate_ms"] = gate
    report["pass"] = report["p95_ms"] < gate
    verdict = "PASS" if report["pass"] else "FAIL"
    soft = "within" if report["p95_ms"] < soft_budget else "over"
    _report(report, as_json, [
        f"solve latency over {iters} ticks (seed {seed}):",
        f"  p50 {report['p50_ms']:.2f} ms  p95 {report['p95_ms']:.2f} ms  "
        f"max {report['max_ms']:.2f} ms",
        f"  request hash {report['request_hash'][:16]}",
        f"  p95 {soft} the {soft_budget:.0f} ms soft budget; "
        f"gate {gate:.0f} ms: {verdict}",
    ])
    sys.exit(EXIT_OK if report["pass"] else EXIT_ENVIRONMENT)


@main.command()
@click.option("--log", "log_path", required=True, type=str)
@click.option("--json", "as_json", is_flag=True)
def replay(log_path, as_json):
    """Re-run a recorded session and verify snapshot-stream equality."""
    from .recording import ReplayError, replay as run_replay

    try:
        result = run_replay(log_path)
    except ReplayError as exc:
        _fail(EXIT_INPUT, f"replay refused: {exc}")

    for w in result.warnings:
        click.echo(f"warning: {w}", err=True)
    payload = {"ticks": result.ticks, "matches": result.matches,
               "original_hash": result.original_hash,
               "replay_hash": result.replay_hash,
               "warnings": result.warnings}
    _report(payload, as_json, [
        f"replayed {result.ticks} ticks",
        f"original {result.original_hash[:16]}  replay {result.replay_hash[:16]}",
        "snapshot streams match" if result.matches else "SNAPSHOT STREAMS DIFFER",
    ])
    sys.exit(EXIT_OK if result.matches else EXIT_SCENARIO)


if __name__ == "__main__":
    main()
