import asyncio
import socket
import time
from collections.abc import Sequence
from typing import Protocol

import httpx

from ..exceptions import ConfigurationError, InputDomainError
from ..models.probe_model import FailureKind, LineBinding, ProbeOutcome, ProbeTarget


class ProbeTransport(Protocol):
    """Anything that can answer "did this target respond via this line within the timeout"."""

    async def probe(
        self,
        line: LineBinding,
        target: ProbeTarget,
        timeout: float,
        iteration: int,
    ) -> ProbeOutcome: ...


class HttpProbeTransport:
    """
    Real transport: one HTTP GET per probe, leaving through the line's source binding.

    A probe succeeds once the status line and headers of a 2xx or 3xx response
    have arrived; the body is never read. Redirects are not followed. Each probe
    opens its own connection so consecutive probes do not share a warm socket.
    """

    def __init__(
        self,
        verify_tls: bool = True,
        mock_transport: httpx.AsyncBaseTransport | None = None,
    ):
        self.verify_tls = verify_tls
        self._mock_transport = mock_transport
        self._ssl_context = httpx.create_ssl_context(verify=verify_tls)

    def _transport_for(self, line: LineBinding) -> httpx.AsyncBaseTransport:
        if self._mock_transport is not None:
            return self._mock_transport

        socket_options = None
        if line.source_interface:
            # Linux only; needs CAP_NET_RAW
            socket_options = [
                (
                    socket.SOL_SOCKET,
                    socket.SO_BINDTODEVICE,
                    line.source_interface.encode(),
                )
            ]
        return httpx.AsyncHTTPTransport(
            verify=self._ssl_context,
            local_address=line.source_address,
            socket_options=socket_options,
            retries=0,
        )

    async def probe(
        self,
        line: LineBinding,
        target: ProbeTarget,
        timeout: float,
        iteration: int = 0,
    ) -> ProbeOutcome:
        status_code = None
        failure_kind = FailureKind.none
        start = time.perf_counter()

        try:
            async with asyncio.timeout(timeout):
                async with httpx.AsyncClient(
                    transport=self._transport_for(line),
                    follow_redirects=False,
                    timeout=httpx.Timeout(timeout),
                ) as client:
                    async with client.stream("GET", target.url) as response:
                        status_code = response.status_code
        except (TimeoutError, httpx.TimeoutException):
            failure_kind = FailureKind.timeout
        except (httpx.TransportError, OSError):
            # DNS failure, refused connection, TLS failure and bind errors alike
            failure_kind = FailureKind.connect_error

        elapsed = time.perf_counter() - start

        if failure_kind == FailureKind.none and not 200 <= status_code < 400:
            failure_kind = FailureKind.http_error

        return ProbeOutcome(
            line=line.id,
            target=target.label,
            success=failure_kind == FailureKind.none,
            elapsed=elapsed,
            failure_kind=failure_kind,
            status_code=status_code,
        )


async def probe_one(
    line: LineBinding,
    target: ProbeTarget,
    timeout: float,
    transport: ProbeTransport,
    iteration: int = 0,
) -> ProbeOutcome:
    """Run a single probe; whatever goes wrong ends up as an unsuccessful outcome."""
    start = time.perf_counter()
    try:
        return await transport.probe(line, target, timeout, iteration)
    except Exception:
        return ProbeOutcome(
            line=line.id,
            target=target.label,
            success=False,
            elapsed=time.perf_counter() - start,
            failure_kind=FailureKind.connect_error,
        )


def compute_tick(outcomes: Sequence[ProbeOutcome], m: int) -> int:
    """
    Count the successful probes of one line.

    :return: The tick, in 0..m.
    :raises InputDomainError: If there are not exactly m outcomes or they mix lines.
    """
    if len(outcomes) != m:
        raise InputDomainError(f"expected {m} probe outcomes, got {len(outcomes)}")
    if len({outcome.line for outcome in outcomes}) > 1:
        raise InputDomainError("probe outcomes belong to more than one line")
    return sum(1 for outcome in outcomes if outcome.success)


def _check_probe_setup(lines: Sequence[LineBinding], targets: Sequence[ProbeTarget]):
    if not lines:
        raise ConfigurationError("no lines to probe")
    if not targets:
        raise ConfigurationError("no probe targets configured")
    if len({line.id for line in lines}) != len(lines):
        raise ConfigurationError("line ids must be unique")
    if len({target.label for target in targets}) != len(targets):
        raise ConfigurationError("target labels must be unique")


async def probe_iteration(
    lines: Sequence[LineBinding],
    targets: Sequence[ProbeTarget],
    timeout: float,
    transport: ProbeTransport,
    iteration: int = 0,
) -> tuple[list[int], list[ProbeOutcome]]:
    """
    Probe every target through every line, all n*m probes at once.

    :return: One tick per line, in the order of `lines`, and all outcomes
        grouped by line in the same order.
    """
    _check_probe_setup(lines, targets)

    per_line = await asyncio.gather(
        *(
            asyncio.gather(
                *(
                    probe_one(line, target, timeout, transport, iteration)
                    for target in targets
                )
            )
            for line in lines
        )
    )

    ticks = [compute_tick(outcomes, len(targets)) for outcomes in per_line]
    outcomes = [outcome for line_outcomes in per_line for outcome in line_outcomes]
    return ticks, outcomes


def probe_iteration_sync(
    lines: Sequence[LineBinding],
    targets: Sequence[ProbeTarget],
    timeout: float,
    transport: ProbeTransport,
    iteration: int = 0,
) -> tuple[list[int], list[ProbeOutcome]]:
    """Blocking wrapper for use from scheduler threads."""
    return asyncio.run(probe_iteration(lines, targets, timeout, transport, iteration))
