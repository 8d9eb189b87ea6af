"""
Offline pipeline: a synthetic probe transport driven by scripted link models.

Each line follows its `LinkModel` phases. A fixed-tick phase lets exactly the
first t targets answer; a probability phase draws one Bernoulli per target from
a generator seeded with (seed, iteration, line, target), so results never
depend on the order probes execute in.
"""

import asyncio
from collections.abc import Iterable, Sequence
from datetime import timedelta
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..exceptions import ConfigurationError, InputDomainError, ReplayError
from ..models.policy_model import AdmissionDecision, PolicyEvent, WeightTable
from ..models.probe_model import FailureKind, LineBinding, ProbeOutcome, ProbeTarget
from ..models.record_model import IterationRecord, LogHeader
from ..models.scenario_model import Scenario
from ..models.stability_model import StabilityParams, StabilitySnapshot
from . import policy
from .iteration_log import make_header, make_record
from .probing import probe_iteration
from .stability import TickHistory, step


def target_succeeds(scenario: Scenario, iteration: int, line: int, target: int) -> bool:
    """Outcome of probing target `target` (1-based) via `line` at `iteration`."""
    phase = scenario.models[line - 1].phase_at(iteration)
    if phase.tick is not None:
        return target <= phase.tick
    rng = np.random.default_rng([scenario.seed, iteration, line, target])
    return bool(rng.random() < phase.probability)


class SimulatedTransport:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._target_index = {
            target.label: index for index, target in enumerate(scenario.targets, start=1)
        }

    async def probe(
        self,
        line: LineBinding,
        target: ProbeTarget,
        timeout: float,
        iteration: int,
    ) -> ProbeOutcome:
        success = target_succeeds(
            self.scenario, iteration, line.id, self._target_index[target.label]
        )
        return ProbeOutcome(
            line=line.id,
            target=target.label,
            success=success,
            elapsed=0.0 if success else timeout,
            failure_kind=FailureKind.none if success else FailureKind.timeout,
        )


class SimulationResult(BaseModel):
    header: LogHeader
    snapshots: list[StabilitySnapshot] = Field(default_factory=list)
    tables: list[WeightTable] = Field(default_factory=list)
    decisions: list[AdmissionDecision] = Field(default_factory=list)
    events: list[PolicyEvent] = Field(default_factory=list)
    records: list[IterationRecord] = Field(default_factory=list)

    @property
    def ticks(self) -> list[list[int]]:
        return [list(snapshot.ticks) for snapshot in self.snapshots]


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read scenario {path}: {e.strerror or e}")
    try:
        return Scenario.model_validate_json(text)
    except ValidationError as e:
        raise ConfigurationError(f"invalid scenario {path}:\n{e}")


async def _simulate(scenario: Scenario, with_outcomes: bool) -> SimulationResult:
    params = scenario.params
    bwf = policy.bandwidth_factor(scenario.bandwidths, scenario.scale_base)
    result = SimulationResult(
        header=make_header(
            params,
            scenario.scale_base,
            scenario.line_names,
            bwf,
            created_at=scenario.start_time,
            failover_floor=scenario.failover_floor,
        )
    )

    transport = SimulatedTransport(scenario)
    targets = scenario.targets
    history = TickHistory(params)
    table = None
    decision = None

    for iteration in range(1, scenario.length + 1):
        ticks, outcomes = await probe_iteration(
            scenario.lines, targets, params.timeout, transport, iteration
        )
        snapshot = step(history, ticks, params)
        table, events = policy.build_weight_table(
            snapshot, bwf, table, scenario.failover_floor
        )
        new_decision = policy.admission_decision(snapshot, scenario.admission_threshold)
        events += policy.admission_events(new_decision, decision)
        decision = new_decision

        result.snapshots.append(snapshot)
        result.tables.append(table)
        result.decisions.append(decision)
        result.events.extend(events)
        result.records.append(
            make_record(
                snapshot,
                table,
                scenario.start_time + timedelta(seconds=iteration * params.interval),
                outcomes if with_outcomes else None,
            )
        )

    return result


def simulate(scenario: Scenario, with_outcomes: bool = False) -> SimulationResult:
    """
    Run a scenario end to end: synthetic probes, stability indices, weights.

    Identical scenarios (seed included) produce identical results.
    """
    if not isinstance(scenario, Scenario):
        raise ConfigurationError("simulate needs a Scenario")
    return asyncio.run(_simulate(scenario, with_outcomes))


def tick_log(records: Iterable[IterationRecord]) -> list[tuple[int, list[int]]]:
    return [(record.iteration, record.ticks) for record in records]


def replay(
    tick_log: Sequence[tuple[int, Sequence[int]]], params: StabilityParams
) -> list[StabilitySnapshot]:
    """
    Re-derive snapshots from recorded tick vectors.

    :raises ReplayError: At the first iteration that is out of sequence or malformed.
    """
    history = TickHistory(params)
    snapshots = []
    for expected, (iteration, ticks) in enumerate(tick_log, start=1):
        if iteration != expected:
            raise ReplayError(
                expected, f"log continues with iteration {iteration}, expected {expected}"
            )
        try:
            snapshots.append(step(history, list(ticks), params))
        except InputDomainError as e:
            raise ReplayError(iteration, str(e))
    return snapshots


class ReplayMismatch(BaseModel):
    model_config = ConfigDict(frozen=True)

    iteration: int
    field: str
    logged: Any
    recomputed: Any

    def __str__(self) -> str:
        return (
            f"iteration {self.iteration}: {self.field} logged {self.logged!r}, "
            f"recomputed {self.recomputed!r}"
        )


def verify_records(
    header: LogHeader, records: Sequence[IterationRecord]
) -> ReplayMismatch | None:
    """
    Check every logged value that is a function of the ticks against a fresh replay.

    :return: The first mismatch, or None when the log is self-consistent.
    :raises ReplayError: When the records themselves cannot be replayed.
    """
    params = header.params
    for record in records:
        if len(record.lines) != params.n:
            raise ReplayError(
                record.iteration,
                f"{len(record.lines)} lines recorded, header declares n={params.n}",
            )

    snapshots = replay(tick_log(records), params)
    tables = []
    if header.bandwidth_factors is not None:
        table = None
        for snapshot in snapshots:
            table, _ = policy.build_weight_table(
                snapshot, header.bandwidth_factors, table, header.failover_floor
            )
            tables.append(table)

    for index, (record, snapshot) in enumerate(zip(records, snapshots)):
        j = record.iteration
        for logged, state in zip(record.lines, snapshot.lines):
            for name, logged_value, value in (
                (f"L[{state.line}]", logged.status, state.status),
                (f"H[{state.line}]", logged.historical, state.historical),
                (f"S[{state.line}]", logged.stability, state.stability),
            ):
                if logged_value != value:
                    return ReplayMismatch(
                        iteration=j, field=name, logged=logged_value, recomputed=value
                    )
        if record.consistency != snapshot.consistency:
            return ReplayMismatch(
                iteration=j, field="C", logged=record.consistency, recomputed=snapshot.consistency
            )
        if record.pipe_stability != snapshot.pipe_stability:
            return ReplayMismatch(
                iteration=j,
                field="IS",
                logged=record.pipe_stability,
                recomputed=snapshot.pipe_stability,
            )
        if tables:
            for logged, weight in zip(record.lines, tables[index].lines):
                if logged.rw != weight.rw:
                    return ReplayMismatch(
                        iteration=j, field=f"Rw[{weight.line}]", logged=logged.rw, recomputed=weight.rw
                    )
    return None
