"""Operator entry points: serve the API, run scenarios, replay logs.

Exit codes: 0 ok, 1 scenario assertion failed, 2 configuration or log error.
"""

from __future__ import annotations

import logging
import os
import socket
import sys

import click

from .errors import BindFailed, ConfigInvalid, CorruptLog, ScenarioInvalid, SubquestError
from .events import read_log, replay
from .gateway import ENV_PREFIX, Gateway, gateway_config_from, provider_from_config

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2

logger = logging.getLogger("subquest")


@click.group()
@click.option("--log-level", default="INFO", show_default=True, help="Root log level.")
def main(log_level: str) -> None:
    """Task-exploration service: decompose, steer, summarize."""
    logging.basicConfig(level=log_level.upper(), format="%(asctime)s %(name)s %(message)s")
    # request-per-line noise drowns the reports this CLI prints
    logging.getLogger("httpx").setLevel(logging.WARNING)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--data-dir", default="./data", show_default=True, help="Event log directory.")
@click.option("--provider", default=None, help="http or scripted (overrides env).")
@click.option("--script", default=None, help="Scripted provider rules file.")
@click.option("--base-url", default=None, help="HTTP provider base URL.")
@click.option("--model", default=None, help="HTTP provider model name.")
@click.option("--ui-dir", default=None, help="Serve a built web UI from this directory at /ui.")
def serve(
    host: str,
    port: int,
    data_dir: str,
    provider: str | None,
    script: str | None,
    base_url: str | None,
    model: str | None,
    ui_dir: str | None,
) -> None:
    """Run the HTTP API until interrupted."""
    from .api import create_app
    from .events import EventLog
    from .service import SessionService

    config = dict(os.environ)
    overrides = {
        "PROVIDER": provider,
        "SCRIPT": script,
        "BASE_URL": base_url,
        "MODEL": model,
    }
    for key, value in overrides.items():
        if value is not None:
            config[f"{ENV_PREFIX}{key}"] = value

    try:
        provider_handle = provider_from_config(config)
        gateway_config = gateway_config_from(config)
        store = EventLog(data_dir)
    except (ConfigInvalid, OSError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    _check_bindable(host, port)

    gateway = Gateway(provider_handle, max_in_flight=gateway_config.max_in_flight)
    service = SessionService(gateway, store, config=gateway_config)
    restored = service.restore()
    if restored:
        logger.info("restored %d session(s) from %s", restored, data_dir)

    app = create_app(service, ui_dir=ui_dir)

    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="info")


def _check_bindable(host: str, port: int) -> None:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        click.echo(f"bind error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    finally:
        probe.close()


@main.command()
@click.argument("path", type=click.Path())
def scenario(path: str) -> None:
    """Run a scripted scenario and report per-step results."""
    from .scenario import run_scenario

    try:
        report = run_scenario(path)
    except (ScenarioInvalid, ConfigInvalid) as exc:
        click.echo(f"scenario error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    for line in report.lines():
        click.echo(line)
    sys.exit(EXIT_OK if report.ok else EXIT_ASSERTION)


@main.command(name="replay")
@click.argument("path", type=click.Path())
def replay_cmd(path: str) -> None:
    """Rebuild and print the final state an event log describes."""
    try:
        state = replay(read_log(path))
    except CorruptLog as exc:
        click.echo(f"corrupt log: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except SubquestError as exc:
        click.echo(f"replay error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    click.echo(f"session {state.session_id}")
    click.echo(f"root [{state.root.status.value}] {state.root.title}")
    if state.root.error_detail:
        click.echo(f"  note: {state.root.error_detail}")
    for child in state.children:
        click.echo(f"  {child.id.value} [{child.status.value}] {child.title}")
        for text in child.selected_texts():
            click.echo(f"    [x] {text}")
    click.echo(f"context (rev {state.context.revision}): {state.context.text or '(none)'}")
    click.echo(f"summary: {state.summary or '(none)'}")


if __name__ == "__main__":
    main()
