import threading
from collections import deque
from collections.abc import Callable
from datetime import datetime, timezone

from apscheduler.schedulers.background import BackgroundScheduler
from apscheduler.triggers.interval import IntervalTrigger
from pydantic import BaseModel, ConfigDict

from .. import config as app_config
from .. import utils
from ..exceptions import ParameterMismatchError
from ..models.config_model import AppConfig
from ..models.policy_model import AdmissionDecision, PolicyEvent, WeightTable
from ..models.record_model import IterationRecord, LogHeader
from ..models.stability_model import StabilitySnapshot
from . import policy
from .iteration_log import (
    IterationLog,
    make_header,
    make_record,
    read_log,
    write_weights,
)
from .probing import HttpProbeTransport, ProbeTransport, probe_iteration_sync
from .simulation import replay, tick_log
from .stability import TickHistory, step

MEASURE_JOB_ID = "measure"


class MonitorState(BaseModel):
    model_config = ConfigDict(frozen=True)

    snapshot: StabilitySnapshot
    table: WeightTable
    decision: AdmissionDecision


class Monitor:
    """
    The measurement loop: probe, compute indices, derive weights, persist.

    Iterations run as a single APScheduler interval job that never overlaps
    with itself. The first one starts as soon as the scheduler does.
    """

    def __init__(
        self,
        config: AppConfig,
        transport: ProbeTransport | None = None,
        clock: Callable[[], datetime] = utils.get_current_timestamp,
    ):
        self.config = config
        self.params = config.params
        self.transport = transport or HttpProbeTransport(verify_tls=config.verify_tls)
        self.clock = clock
        self.bwf = policy.bandwidth_factor(config.bandwidths, config.scale_base)

        self.history = TickHistory(self.params)
        self.log = IterationLog(config.log_path)
        self.events: deque[PolicyEvent] = deque(maxlen=app_config.EVENT_BUFFER_SIZE)
        self.scheduler = BackgroundScheduler()

        self._state: MonitorState | None = None
        self._lock = threading.Lock()
        self._opened = False

    def _header(self) -> LogHeader:
        return make_header(
            self.params,
            self.config.scale_base,
            self.config.line_names,
            self.bwf,
            created_at=self.clock(),
            failover_floor=self.config.failover_floor,
        )

    def _check_header(self, header: LogHeader):
        if not header.params.same_formula(self.params):
            raise ParameterMismatchError(
                f"{self.log.path} was written with n,m,k,z="
                f"{header.params.n},{header.params.m},{header.params.k},{header.params.z}, "
                f"config has {self.params.n},{self.params.m},{self.params.k},{self.params.z}"
            )
        if header.scale_base != self.config.scale_base or (
            header.bandwidth_factors is not None and header.bandwidth_factors != self.bwf
        ):
            raise ParameterMismatchError(
                f"{self.log.path} was written with other bandwidth factors"
            )

    def _resume(self):
        contents = read_log(self.log.path)
        if contents.header is None:
            raise ParameterMismatchError(f"{self.log.path} has records but no header")
        for header in contents.headers:
            self._check_header(header)
        if not contents.records:
            return

        snapshots = replay(tick_log(contents.records), self.params)
        self.history = TickHistory.from_ticks(
            [record.ticks for record in contents.records], self.params
        )
        table, _ = policy.build_weight_table(
            snapshots[-1], self.bwf, failover_floor=self.config.failover_floor
        )
        decision = policy.admission_decision(snapshots[-1], self.config.admission_threshold)
        self._state = MonitorState(snapshot=snapshots[-1], table=table, decision=decision)
        utils.pretty_print(
            "log",
            f"Resuming {self.log.path} after iteration {self.history.iteration}",
        )

    def open(self):
        """Load an existing log (if any) and open it for appending."""
        if self._opened:
            return
        path = self.log.path
        resume = path.exists() and path.stat().st_size > 0
        if resume:
            self._resume()
        self.log.open()
        if not resume:
            self.log.append(self._header())
        self._opened = True

    def run_iteration(self) -> IterationRecord:
        config = self.config
        iteration = self.history.iteration + 1

        ticks, outcomes = probe_iteration_sync(
            config.lines, config.targets, self.params.timeout, self.transport, iteration
        )
        timestamp = self.clock()
        utils.pretty_print(
            "probe",
            f"iteration {iteration}: "
            + ", ".join(
                f"{line.name}={tick}/{self.params.m}"
                for line, tick in zip(config.lines, ticks)
            ),
        )

        # step on a copy; the history only advances once the record is on disk
        history = self.history.copy()
        snapshot = step(history, ticks, self.params)
        previous = self._state
        table, events = policy.build_weight_table(
            snapshot,
            self.bwf,
            previous.table if previous else None,
            config.failover_floor,
        )
        decision = policy.admission_decision(snapshot, config.admission_threshold)
        events += policy.admission_events(decision, previous.decision if previous else None)

        record = make_record(
            snapshot, table, timestamp, outcomes if config.record_outcomes else None
        )
        self.log.append(record)

        with self._lock:
            self.history = history
            self._state = MonitorState(snapshot=snapshot, table=table, decision=decision)
            self.events.extend(events)

        utils.pretty_print(
            "step",
            f"iteration {iteration}: C={snapshot.consistency} "
            f"IS={snapshot.pipe_stability:.4f} "
            + " ".join(
                f"{line.name}:S={state.stability:.4f}/Rw={weight.rw}"
                for line, state, weight in zip(config.lines, snapshot.lines, table.lines)
            ),
        )
        for event in events:
            utils.pretty_print(
                "event",
                f"{event.kind.value}"
                + (f" line {event.line}" if event.line else "")
                + f" at iteration {event.iteration}: {event.detail}",
            )

        write_weights(config.weights_path, table, config.line_names)
        return record

    def _run_scheduled_iteration(self):
        try:
            self.run_iteration()
        except Exception as e:
            # a failed iteration must not stop the loop
            utils.pretty_print("error", f"iteration failed: {type(e).__name__}: {e}")

    def start(self):
        self.open()
        self.scheduler.add_job(
            self._run_scheduled_iteration,
            IntervalTrigger(seconds=self.params.interval),
            id=MEASURE_JOB_ID,
            next_run_time=datetime.now(timezone.utc),
            max_instances=1,
            coalesce=True,
        )
        self.scheduler.start()
        utils.pretty_print(
            "task",
            f"Measuring {self.params.n} lines against {self.params.m} targets "
            f"every {self.params.interval:g}s",
        )

    def shutdown(self):
        """Stop scheduling; an iteration in flight finishes and is persisted first."""
        if self.scheduler.running:
            self.scheduler.shutdown(wait=True)
        self.log.close()
        utils.pretty_print("task", "Measurement loop stopped")

    def state(self) -> MonitorState | None:
        with self._lock:
            return self._state

    def recent_events(self, limit: int) -> list[PolicyEvent]:
        with self._lock:
            events = list(self.events)
        return events[-limit:]
