"""Command line front door.

Every command is a thin client of the library: serve wires a session server
to the operator bridge, the rest are offline utilities over recorded stores.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path

import click
import uvicorn

from .runtime import (
    ServerConfig,
    SessionPipeline,
    SessionServer,
    build_detector,
    build_library,
    build_llm,
    build_transcriber,
    create_bridge_app,
    load_config,
    load_scene,
    run_replay,
)
from .services import create_stub_app, load_llm_fixtures
from .sim import SimClient, load_bundled_scenario, load_scenario
from .store import AS_FAST, Pacing, SessionReader, check_session
from .wire import DERIVED_KINDS


def _load_config(path: Path | None) -> ServerConfig:
    if path is None:
        return ServerConfig()
    try:
        return load_config(path)
    except ValueError as exc:
        raise click.ClickException(str(exc))


@click.group()
@click.version_option(package_name="taskguide")
def main() -> None:
    """Record, assist, and replay guided-task sessions."""


# -- serve -------------------------------------------------------------------


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="JSON config file (defaults apply when omitted).")
@click.option("--port", type=int, default=None, help="Override the sensor listen port.")
@click.option("--ws-port", type=int, default=None, help="Override the operator bridge port.")
@click.option("--store-root", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Override where session recordings are written.")
def serve(config_path: Path | None, port: int | None, ws_port: int | None, store_root: Path | None) -> None:
    """Run a live session: sensor socket in, commands out, operator bridge on ws."""
    config = _load_config(config_path)
    overrides = {}
    if port is not None:
        overrides["listen_port"] = port
    if ws_port is not None:
        overrides["ws_port"] = ws_port
    if store_root is not None:
        overrides["store_root"] = store_root
    if overrides:
        config = config.model_copy(update=overrides)

    server = SessionServer(config, log=click.echo)
    server.start()

    bridge = uvicorn.Server(uvicorn.Config(
        create_bridge_app(server), host=config.ws_host, port=config.ws_port, log_level="warning",
    ))
    bridge_thread = threading.Thread(target=bridge.run, daemon=True)
    bridge_thread.start()
    click.echo(f"operator bridge on ws://{config.ws_host}:{config.ws_port}/ws")

    try:
        while not server.wait(0.2):
            pass
    except KeyboardInterrupt:
        click.echo("stopping; finishing the session with what has arrived")
        server.stop()
        server.wait(30.0)
    finally:
        bridge.should_exit = True
        bridge_thread.join(timeout=5.0)
        server.close()

    if server.error is not None:
        raise click.ClickException(f"session failed: {server.error}")
    report = server.pipeline.report
    click.echo(f"session {server.pipeline.session_id or '(none)'} finished: "
               f"{report.envelopes_in} envelopes in, {report.commands_out} commands out")
    if server.pipeline.session_dir is not None:
        click.echo(f"recorded to {server.pipeline.session_dir}")


# -- replay ------------------------------------------------------------------


@main.command()
@click.argument("session_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Backend/geometry config to re-derive with.")
@click.option("--store-root", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Where the re-derived session is written (default: alongside the input).")
@click.option("--real-time", is_flag=True, help="Pace envelopes at recorded speed instead of as fast as possible.")
@click.option("--time-scale", type=float, default=1.0, show_default=True,
              help="Speed factor for --real-time (2.0 = twice as fast).")
def replay(session_dir: Path, config_path: Path | None, store_root: Path | None,
           real_time: bool, time_scale: float) -> None:
    """Re-derive a recorded session offline through a fresh pipeline."""
    config = _load_config(config_path)
    root = store_root if store_root is not None else session_dir.parent
    pipeline = SessionPipeline(
        store_root=root,
        library=build_library(config),
        mode=config.mode,
        llm=build_llm(config.llm),
        detector=build_detector(config.detector),
        transcriber=build_transcriber(config.asr),
        geometry=config.geometry,
    )
    if time_scale <= 0:
        raise click.BadParameter("--time-scale must be > 0", param_hint="--time-scale")
    pacing = Pacing("real_time", scale=1.0 / time_scale) if real_time else AS_FAST
    started = time.monotonic()
    try:
        new_dir, report = run_replay(session_dir, pipeline, pacing)
    except (ValueError, RuntimeError) as exc:
        raise click.ClickException(str(exc))
    elapsed = time.monotonic() - started
    click.echo(f"replayed {report.envelopes_in} envelopes in {elapsed:.2f}s")
    click.echo(f"commands={report.commands_out} detections={report.detection_results} "
               f"llm={report.llm_completions}")
    click.echo(f"derived session at {new_dir}")


# -- store utilities -----------------------------------------------------------


@main.group()
def store() -> None:
    """Inspect recorded sessions."""


@store.command()
@click.argument("session_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
def check(session_dir: Path) -> None:
    """Verify a recording is internally consistent; exit 1 if not."""
    report = check_session(session_dir)
    status = "ok" if report.ok else "BROKEN"
    close = "clean" if report.clean_close else "torn"
    click.echo(f"{session_dir}: {status} (session {report.session_id or '?'}, {close} close)")
    for problem in report.all_problems():
        click.echo(f"  problem: {problem}")
    for s in report.streams:
        if s.torn_tail_bytes:
            click.echo(f"  stream {s.stream_id} ({s.name}): {s.torn_tail_bytes} torn tail bytes dropped")
    if not report.ok:
        raise SystemExit(1)


@store.command()
@click.argument("session_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
def info(session_dir: Path) -> None:
    """Summarize a recording: streams, counts, and time extents."""
    try:
        reader = SessionReader(session_dir)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    catalog = reader.catalog
    click.echo(f"session {catalog.manifest.session_id}")
    click.echo(f"epoch_utc_us {catalog.manifest.epoch_utc_us}  clean_close {catalog.clean_close}")
    for desc in sorted(catalog.manifest.streams, key=lambda d: d.stream_id):
        stats = catalog.stats[desc.stream_id]
        span = ""
        if stats.count and stats.last_time_ns is not None and stats.first_time_ns is not None:
            span = f"  {(stats.last_time_ns - stats.first_time_ns) / 1e9:.3f}s"
        click.echo(f"  {desc.stream_id:>5}  {desc.name:<24} {desc.kind.value:<18} "
                   f"{stats.count:>7} msgs{span}")


@store.command()
@click.argument("session_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--stream", "stream_ref", required=True, help="Stream id or name to dump.")
@click.option("--limit", type=int, default=None, help="Stop after this many envelopes.")
def dump(session_dir: Path, stream_ref: str, limit: int | None) -> None:
    """Print a stream's envelopes, decoding derived streams as JSON."""
    try:
        reader = SessionReader(session_dir)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    by_name = {d.name: d for d in reader.manifest.streams}
    by_id = {d.stream_id: d for d in reader.manifest.streams}
    desc = by_name.get(stream_ref) or (by_id.get(int(stream_ref)) if stream_ref.isdigit() else None)
    if desc is None:
        raise click.ClickException(f"no stream {stream_ref!r} in this session")
    shown = 0
    for env in reader.iter_stream(desc.stream_id):
        if limit is not None and shown >= limit:
            break
        shown += 1
        if desc.kind in DERIVED_KINDS:
            body = json.dumps(json.loads(bytes(env.payload)), ensure_ascii=False)
        else:
            body = f"<{len(env.payload)} bytes>"
        click.echo(f"{env.originating_time}  {body}")


# -- sim -------------------------------------------------------------------------


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=7600, show_default=True)
@click.option("--scenario", "scenario_ref", default="coffee", show_default=True,
              help="Bundled scenario name or a path to a scenario JSON file.")
@click.option("--time-scale", type=float, default=1.0, show_default=True,
              help="Wall seconds per scenario second; 0 sends as fast as possible.")
def sim(host: str, port: int, scenario_ref: str, time_scale: float) -> None:
    """Play a scripted headset against a running server."""
    try:
        if Path(scenario_ref).exists():
            scenario = load_scenario(Path(scenario_ref))
        else:
            scenario = load_bundled_scenario(scenario_ref)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    try:
        client = SimClient(host, port, scenario, time_scale=time_scale)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    try:
        report = client.run()
    except OSError as exc:
        raise click.ClickException(f"cannot reach server at {host}:{port}: {exc}")
    click.echo(f"scenario {scenario.name!r} played in {report.duration_s:.2f}s as session {report.session_id}")
    for name in sorted(report.sent):
        click.echo(f"  sent {name}: {report.sent[name]}")
    click.echo(f"  received {report.commands_received} commands "
               f"({json.dumps(report.commands_by_type, sort_keys=True)})")
    for text in report.speaks:
        click.echo(f"  heard: {text}")


# -- stub services ------------------------------------------------------------------


@main.command("stub-services")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=7700, show_default=True)
@click.option("--fixtures", "fixtures_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="LLM fixture file served by /llm/complete.")
@click.option("--scene", "scene_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Sphere scene the stub detector segments.")
@click.option("--delay", type=float, default=0.0, show_default=True,
              help="Artificial response latency in seconds.")
def stub_services(host: str, port: int, fixtures_path: Path | None,
                  scene_path: Path | None, delay: float) -> None:
    """Serve HTTP stand-ins for the remote assist services."""
    try:
        fixtures = load_llm_fixtures(fixtures_path) if fixtures_path else None
        scene = load_scene(scene_path) if scene_path else None
    except ValueError as exc:
        raise click.ClickException(str(exc))
    app = create_stub_app(llm_fixtures=fixtures, scene=scene, delay_s=delay)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
