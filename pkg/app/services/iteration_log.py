import csv
import io
import json
import os
import threading
from collections.abc import Sequence
from datetime import datetime
from pathlib import Path
from typing import Annotated

from pydantic import BaseModel, Field, TypeAdapter, ValidationError

from .. import __version__, utils
from ..exceptions import LogFormatError
from ..models.policy_model import WeightTable
from ..models.probe_model import ProbeOutcome
from ..models.record_model import IterationRecord, LineRecord, LogHeader
from ..models.stability_model import StabilityParams, StabilitySnapshot
from .policy import FULL_TIER_FLOOR, weights_document

LogEntry = Annotated[LogHeader | IterationRecord, Field(discriminator="kind")]
_entry_adapter = TypeAdapter(LogEntry)


def make_header(
    params: StabilityParams,
    scale_base: int,
    line_names: Sequence[str],
    bandwidth_factors: Sequence[int] | None,
    created_at: datetime,
    failover_floor: float = 0.0,
) -> LogHeader:
    return LogHeader(
        version=__version__,
        params=params,
        scale_base=scale_base,
        lines=list(line_names),
        bandwidth_factors=list(bandwidth_factors) if bandwidth_factors else None,
        failover_floor=failover_floor,
        created_at=created_at,
    )


def make_record(
    snapshot: StabilitySnapshot,
    table: WeightTable,
    timestamp: datetime,
    outcomes: Sequence[ProbeOutcome] | None = None,
) -> IterationRecord:
    return IterationRecord(
        iteration=snapshot.iteration,
        timestamp=timestamp,
        lines=[
            LineRecord(
                tick=state.tick,
                status=state.status,
                historical=state.historical,
                stability=state.stability,
                bwf=weight.bwf,
                rw=weight.rw,
                in_service=weight.in_service,
            )
            for state, weight in zip(snapshot.lines, table.lines)
        ],
        consistency=snapshot.consistency,
        pipe_stability=snapshot.pipe_stability,
        outcomes=list(outcomes) if outcomes is not None else None,
    )


def serialize(entry: LogHeader | IterationRecord) -> str:
    return entry.model_dump_json(by_alias=True, exclude_none=True) + "\n"


class IterationLog:
    """
    Append-only JSONL writer.

    Every entry is encoded first and handed to a single ``write`` call on an
    ``O_APPEND`` descriptor, then fsynced, so a crash leaves either the whole
    line or nothing.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._fd: int | None = None

    def open(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
        return self

    def __enter__(self):
        return self.open()

    def __exit__(self, *exc_info):
        self.close()

    def append(self, entry: LogHeader | IterationRecord):
        if self._fd is None:
            raise RuntimeError(f"iteration log {self.path} is not open")
        data = serialize(entry).encode("utf-8")
        with self._lock:
            size = os.fstat(self._fd).st_size
            written = os.write(self._fd, data)
            if written != len(data):
                # drop the partial line so the log stays parseable
                os.ftruncate(self._fd, size)
                raise OSError(f"short write to {self.path}: {written} of {len(data)} bytes")
            os.fsync(self._fd)

    def close(self):
        with self._lock:
            if self._fd is not None:
                os.fsync(self._fd)
                os.close(self._fd)
                self._fd = None


class LogContents(BaseModel):
    headers: list[LogHeader] = Field(default_factory=list)
    records: list[IterationRecord] = Field(default_factory=list)

    @property
    def header(self) -> LogHeader | None:
        return self.headers[0] if self.headers else None


def parse_log(lines: Sequence[str]) -> LogContents:
    contents = LogContents()
    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            entry = _entry_adapter.validate_json(line)
        except ValidationError as e:
            first = e.errors()[0]
            location = ".".join(str(part) for part in first["loc"])
            raise LogFormatError(line_number, f"{location}: {first['msg']}")
        if isinstance(entry, LogHeader):
            contents.headers.append(entry)
            continue

        expected = _line_count(contents)
        if expected and len(entry.lines) != expected:
            raise LogFormatError(
                line_number, f"record has {len(entry.lines)} lines, expected {expected}"
            )
        contents.records.append(entry)
    return contents


def read_log(path: str | Path) -> LogContents:
    with Path(path).open("r", encoding="utf-8") as handle:
        return parse_log(handle.readlines())


################################################################################
#################################### Report ####################################
################################################################################


def _percent(value: float) -> float:
    return round(value * 100, 6)


def _line_count(contents: LogContents) -> int:
    if contents.header is not None:
        return contents.header.params.n
    if contents.records:
        return len(contents.records[0].lines)
    return 0


def report_csv(contents: LogContents) -> str:
    """
    The stability percentages over time: iteration, timestamp, S_1..S_n, IS (all x100).

    Pure function of the log, so the same log always yields the same bytes.
    """
    n = _line_count(contents)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["iteration", "timestamp", *(f"S_{i}" for i in range(1, n + 1)), "IS"]
    )
    for record in contents.records:
        writer.writerow(
            [
                record.iteration,
                record.timestamp.isoformat(),
                *(_percent(line.stability) for line in record.lines),
                _percent(record.pipe_stability),
            ]
        )
    return buffer.getvalue()


def report_summary(contents: LogContents) -> str:
    """Per-line mean and minimum S and the share of iterations in the full-weight tier."""
    n = _line_count(contents)
    names = (
        contents.header.lines
        if contents.header is not None
        else [f"line{i}" for i in range(1, n + 1)]
    )
    records = contents.records
    count = len(records)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["series", "name", "iterations", "mean", "min", "full_tier_share"])
    for i in range(n):
        values = [record.lines[i].stability for record in records]
        writer.writerow(
            [
                f"S_{i + 1}",
                names[i],
                count,
                _percent(sum(values) / count) if count else "",
                _percent(min(values)) if count else "",
                round(sum(v >= FULL_TIER_FLOOR for v in values) / count, 6) if count else "",
            ]
        )
    pipe = [record.pipe_stability for record in records]
    writer.writerow(
        [
            "IS",
            "pipe",
            count,
            _percent(sum(pipe) / count) if count else "",
            _percent(min(pipe)) if count else "",
            round(sum(v >= FULL_TIER_FLOOR for v in pipe) / count, 6) if count else "",
        ]
    )
    return buffer.getvalue()


def write_weights(path: str | Path, table: WeightTable, line_names: Sequence[str]):
    """Rewrite the weight-table file as a whole; pollers never see a partial table."""
    document = weights_document(table, line_names)
    utils.write_text_atomic(path, json.dumps(document, indent=2) + "\n")
