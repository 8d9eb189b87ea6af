import signal
import threading
from enum import Enum
from pathlib import Path
from typing import Annotated

import typer
import uvicorn

from . import __version__, config, utils
from .exceptions import (
    ConfigurationError,
    LogFormatError,
    ParameterMismatchError,
    ReplayError,
)
from .models.policy_model import EventKind
from .services import simulation
from .services.iteration_log import read_log, report_csv, report_summary, serialize
from .services.monitor import Monitor
from .services.policy import bandwidth_factor

EXIT_OPERATIONAL = 1
EXIT_USAGE = 2

cli = typer.Typer(
    help="Measure the stability of a multi-homed internet pipe.",
    no_args_is_help=True,
    add_completion=False,
)


class ReportFormat(str, Enum):
    csv = "csv"
    summary = "summary"


def fail(message: str, code: int):
    utils.pretty_print("error", message)
    raise typer.Exit(code)


def version_callback(value: bool):
    if value:
        typer.echo(f"pipewatch {__version__}")
        raise typer.Exit()


@cli.callback()
def main(
    version: Annotated[
        bool,
        typer.Option(
            "--version", callback=version_callback, is_eager=True, help="Show version."
        ),
    ] = False,
):
    pass


def load_config_or_exit(path: Path | None):
    resolved = config.resolve_config_path(path)
    if resolved is None:
        fail("no config file given", EXIT_USAGE)
    try:
        return config.load_app_config(resolved)
    except ConfigurationError as e:
        fail(str(e), EXIT_USAGE)


def open_monitor_or_exit(monitor: Monitor):
    try:
        monitor.open()
    except ParameterMismatchError as e:
        fail(str(e), EXIT_USAGE)
    except (LogFormatError, ReplayError) as e:
        fail(f"cannot resume {monitor.log.path}: {e}", EXIT_OPERATIONAL)
    except OSError as e:
        fail(f"cannot open log {monitor.log.path}: {e}", EXIT_OPERATIONAL)


@cli.command()
def run(
    config_path: Annotated[
        Path | None, typer.Option("--config", help="JSON config file.")
    ] = None,
):
    """Probe all lines every interval until SIGINT or SIGTERM."""
    app_config = load_config_or_exit(config_path)
    monitor = Monitor(app_config)
    open_monitor_or_exit(monitor)

    stop = threading.Event()

    def request_stop(signum, frame):
        utils.pretty_print("task", f"Received {signal.Signals(signum).name}, finishing iteration...")
        stop.set()

    signal.signal(signal.SIGINT, request_stop)
    signal.signal(signal.SIGTERM, request_stop)

    monitor.start()
    while not stop.wait(timeout=1.0):
        pass
    monitor.shutdown()


@cli.command()
def serve(
    config_path: Annotated[
        Path | None, typer.Option("--config", help="JSON config file.")
    ] = None,
    host: Annotated[str, typer.Option(help="Bind address of the status API.")] = config.HOST,
    port: Annotated[int, typer.Option(help="Port of the status API.")] = config.PORT,
):
    """Run the measurement loop behind a read-only HTTP status API."""
    from .main import app

    app_config = load_config_or_exit(config_path)
    monitor = Monitor(app_config)
    open_monitor_or_exit(monitor)
    app.state.monitor = monitor
    uvicorn.run(app, host=host, port=port)


@cli.command("simulate")
def simulate_cmd(
    scenario: Annotated[Path, typer.Option("--scenario", help="JSON scenario file.")],
    out: Annotated[Path, typer.Option("--out", help="JSONL iteration log to write.")],
    with_outcomes: Annotated[
        bool, typer.Option("--with-outcomes", help="Include per-probe outcomes.")
    ] = False,
):
    """Run a scripted scenario offline and write its iteration log."""
    try:
        loaded = simulation.load_scenario(scenario)
        result = simulation.simulate(loaded, with_outcomes=with_outcomes)
    except ConfigurationError as e:
        fail(str(e), EXIT_USAGE)

    text = serialize(result.header) + "".join(serialize(r) for r in result.records)
    try:
        utils.write_text_atomic(out, text)
    except OSError as e:
        fail(f"cannot write {out}: {e}", EXIT_OPERATIONAL)

    removed = sum(1 for event in result.events if event.kind == EventKind.line_removed)
    utils.pretty_print(
        "task",
        f"Simulated {loaded.length} iterations of {loaded.params.n} lines "
        f"({removed} line removals) into {out}",
    )


@cli.command()
def report(
    log: Annotated[Path, typer.Option("--log", help="JSONL iteration log.")],
    format: Annotated[
        ReportFormat, typer.Option("--format", help="Output format.")
    ] = ReportFormat.csv,
):
    """Export the stability percentages of a log."""
    try:
        contents = read_log(log)
    except OSError as e:
        fail(f"cannot read {log}: {e.strerror or e}", EXIT_OPERATIONAL)
    except LogFormatError as e:
        fail(f"{log}: {e}", EXIT_OPERATIONAL)

    if format == ReportFormat.csv:
        typer.echo(report_csv(contents), nl=False)
    else:
        typer.echo(report_summary(contents), nl=False)


@cli.command("replay")
def replay_cmd(
    log: Annotated[Path, typer.Option("--log", help="JSONL iteration log.")],
    config_path: Annotated[
        Path | None,
        typer.Option("--config", help="Also require the log to match this config."),
    ] = None,
):
    """Recompute every logged index from the logged ticks and compare."""
    try:
        contents = read_log(log)
    except OSError as e:
        fail(f"cannot read {log}: {e.strerror or e}", EXIT_OPERATIONAL)
    except LogFormatError as e:
        fail(f"{log}: {e}", EXIT_OPERATIONAL)

    header = contents.header
    if header is None:
        if contents.records:
            fail(f"{log} has no header record", EXIT_OPERATIONAL)
        utils.pretty_print("replay", f"{log} is empty, nothing to verify")
        return

    try:
        for other in contents.headers[1:]:
            if not other.params.same_formula(header.params):
                raise ParameterMismatchError(
                    f"{log} mixes parameter sets: k={header.params.k},z={header.params.z} "
                    f"and k={other.params.k},z={other.params.z}"
                )
        if header.bandwidth_factors is not None and len(header.bandwidth_factors) != header.params.n:
            raise ParameterMismatchError(
                f"header carries {len(header.bandwidth_factors)} bandwidth factors for n={header.params.n}"
            )
        if config_path is not None:
            app_config = load_config_or_exit(config_path)
            if not header.params.same_formula(app_config.params):
                raise ParameterMismatchError(
                    f"log has n,m,k,z={header.params.n},{header.params.m},"
                    f"{header.params.k},{header.params.z}, config has "
                    f"{app_config.params.n},{app_config.params.m},"
                    f"{app_config.params.k},{app_config.params.z}"
                )
            expected_bwf = bandwidth_factor(app_config.bandwidths, app_config.scale_base)
            if header.bandwidth_factors is not None and header.bandwidth_factors != expected_bwf:
                raise ParameterMismatchError(
                    f"log has bandwidth factors {header.bandwidth_factors}, config gives {expected_bwf}"
                )
    except ParameterMismatchError as e:
        fail(f"parameter mismatch: {e}", EXIT_USAGE)

    try:
        mismatch = simulation.verify_records(header, contents.records)
    except ReplayError as e:
        fail(f"replay failed at {e}", EXIT_OPERATIONAL)

    if mismatch is not None:
        fail(f"first divergent iteration {mismatch.iteration}: {mismatch}", EXIT_OPERATIONAL)

    utils.pretty_print(
        "replay", f"{len(contents.records)} iterations of {log} reproduce exactly"
    )
