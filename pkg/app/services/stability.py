"""
Stability indices of a multi-line internet pipe.

Every iteration j yields one tick T[i][j] per line i (the number of stable servers
that answered, 0..m). From the tick history this module derives

* the line status L (alive mask),
* the historical status H (worst tick over the last k+1 iterations),
* the iteration consistence R and its windowed sum C (pipe-wide, z terms),
* the per-line stability index S and the pipe stability index IS.

Ticks before iteration 1 are virtual and equal to m. All factors are integers;
S and IS come from a single true division, so equal inputs give bit-identical
floats whichever path computed them.
"""

from collections import deque
from collections.abc import Sequence
from typing import Protocol

from ..exceptions import ConfigurationError, InputDomainError
from ..models.stability_model import LineState, StabilityParams, StabilitySnapshot


class TickSource(Protocol):
    n: int
    m: int

    def tick(self, line: int, iteration: int) -> int: ...


def check_tick(tick: int, m: int, line: int | None = None):
    if isinstance(tick, bool) or not isinstance(tick, int):
        raise InputDomainError(f"tick must be an integer, got {tick!r}")
    if not 0 <= tick <= m:
        where = f" on line {line}" if line is not None else ""
        raise InputDomainError(f"tick {tick}{where} is outside 0..{m}")


def check_tick_vector(tick_vector: Sequence[int], params: StabilityParams):
    if len(tick_vector) != params.n:
        raise InputDomainError(
            f"expected {params.n} ticks, got {len(tick_vector)}"
        )
    for line, tick in enumerate(tick_vector, start=1):
        check_tick(tick, params.m, line)


class TickHistory:
    """
    Ring buffer of ticks for all lines plus the running iteration-consistence window.

    The buffers start filled with the virtual pre-history (tick m, R = 1), so
    iteration 1 needs no special case. Only the last `params.retention`
    iterations stay addressable.

    Single writer: `append` must not run concurrently with itself or readers.
    """

    def __init__(self, params: StabilityParams):
        self.params = params
        self.iteration = 0
        self._ticks = [
            deque([params.m] * params.retention, maxlen=params.retention)
            for _ in range(params.n)
        ]
        self._consistence = deque([1] * params.z, maxlen=params.z)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def m(self) -> int:
        return self.params.m

    @property
    def consistency(self) -> int:
        """C at the newest iteration."""
        return sum(self._consistence)

    def tick(self, line: int, iteration: int) -> int:
        if not 1 <= line <= self.n:
            raise InputDomainError(f"line {line} is outside 1..{self.n}")
        if iteration <= 0:
            return self.m
        if iteration > self.iteration:
            raise InputDomainError(
                f"iteration {iteration} has not been recorded yet (latest {self.iteration})"
            )
        age = self.iteration - iteration
        if age >= self.params.retention:
            raise InputDomainError(f"iteration {iteration} was evicted from the history")
        return self._ticks[line - 1][-1 - age]

    def window(self, line: int, depth: int) -> list[int]:
        """The newest `depth` ticks of a line, newest first."""
        buffer = self._ticks[line - 1]
        return [buffer[-1 - age] for age in range(depth)]

    def append(self, tick_vector: Sequence[int]):
        check_tick_vector(tick_vector, self.params)
        unchanged = all(
            buffer[-1] == tick for buffer, tick in zip(self._ticks, tick_vector)
        )
        for buffer, tick in zip(self._ticks, tick_vector):
            buffer.append(tick)
        self._consistence.append(int(unchanged))
        self.iteration += 1

    def copy(self) -> "TickHistory":
        """An independent history with the same contents; appends to it leave this one alone."""
        clone = type(self)(self.params)
        clone.iteration = self.iteration
        clone._ticks = [deque(buffer, maxlen=buffer.maxlen) for buffer in self._ticks]
        clone._consistence = deque(self._consistence, maxlen=self._consistence.maxlen)
        return clone

    @classmethod
    def from_ticks(
        cls, ticks: Sequence[Sequence[int]], params: StabilityParams
    ) -> "TickHistory":
        history = cls(params)
        for tick_vector in ticks:
            history.append(tick_vector)
        return history


class RecordedTicks:
    """Complete tick record from iteration 1 on, with the virtual pre-history in front."""

    def __init__(self, ticks: Sequence[Sequence[int]], params: StabilityParams):
        for tick_vector in ticks:
            check_tick_vector(tick_vector, params)
        self.n = params.n
        self.m = params.m
        self._ticks = [list(vector) for vector in ticks]

    def tick(self, line: int, iteration: int) -> int:
        if iteration <= 0:
            return self.m
        return self._ticks[iteration - 1][line - 1]


################################################################################
################################## Equations ###################################
################################################################################


def line_status(tick: int, m: int) -> int:
    """L: 0 when the line answered no probe at all, 1 otherwise."""
    check_tick(tick, m)
    return 0 if tick <= 0 else 1


def historical_status(history: TickSource, line: int, iteration: int, k: int) -> int:
    """
    H: the minimum tick of a line over iterations j, j-1, ..., j-k.

    The current tick is part of the window, so it holds k+1 values.

    :return: The worst tick seen in the window.
    :rtype: int
    """
    return min(history.tick(line, p) for p in range(iteration, iteration - k - 1, -1))


def iteration_consistence(history: TickSource, iteration: int) -> int:
    """R: 1 iff no line changed its tick between iteration r-1 and r."""
    return int(
        all(
            history.tick(line, iteration) == history.tick(line, iteration - 1)
            for line in range(1, history.n + 1)
        )
    )


def consistency_value(history: TickSource, iteration: int, z: int) -> int:
    """C: sum of R over the z iterations j, j-1, ..., j-z+1."""
    if iteration < 1:
        raise InputDomainError(f"iteration must be >= 1, got {iteration}")
    return sum(
        iteration_consistence(history, r) for r in range(iteration, iteration - z, -1)
    )


def _line_factors(
    history: TickSource, line: int, iteration: int, params: StabilityParams
) -> tuple[int, int, int]:
    tick = history.tick(line, iteration)
    return (
        line_status(tick, params.m),
        history.tick(line, iteration - 1),
        historical_status(history, line, iteration, params.k),
    )


def line_stability(
    history: TickSource, line: int, iteration: int, params: StabilityParams
) -> float:
    """S = L * T[j-1] * H * C / (z * m^2)."""
    status, previous, historical = _line_factors(history, line, iteration, params)
    consistency = consistency_value(history, iteration, params.z)
    return (status * previous * historical * consistency) / (params.z * params.m**2)


def pipe_stability(
    history: TickSource, iteration: int, params: StabilityParams
) -> float:
    """IS = sum(L) * sum(H) * C / (z * m * n^2)."""
    lines = range(1, params.n + 1)
    status_sum = sum(line_status(history.tick(i, iteration), params.m) for i in lines)
    historical_sum = sum(historical_status(history, i, iteration, params.k) for i in lines)
    consistency = consistency_value(history, iteration, params.z)
    return (status_sum * historical_sum * consistency) / (
        params.z * params.m * params.n**2
    )


################################################################################
################################ Composition ###################################
################################################################################


def step(
    history: TickHistory,
    tick_vector: Sequence[int],
    params: StabilityParams | None = None,
) -> StabilitySnapshot:
    """
    Record one iteration and compute its snapshot incrementally.

    The vector is validated before anything is stored, so a rejected vector
    leaves the history untouched.

    :return: The :class:`StabilitySnapshot` of the new iteration.
    :raises InputDomainError: On a wrong vector length or an out-of-range tick.
    """
    params = params or history.params
    if not params.same_formula(history.params):
        raise ConfigurationError("step parameters differ from the history's parameters")

    history.append(tick_vector)

    consistency = history.consistency
    states = []
    status_sum = 0
    historical_sum = 0
    for line in range(1, params.n + 1):
        tick, previous = history.window(line, 2)
        status = line_status(tick, params.m)
        historical = min(history.window(line, params.k + 1))
        states.append(
            LineState(
                line=line,
                tick=tick,
                status=status,
                historical=historical,
                stability=(status * previous * historical * consistency)
                / (params.z * params.m**2),
            )
        )
        status_sum += status
        historical_sum += historical

    return StabilitySnapshot(
        iteration=history.iteration,
        lines=tuple(states),
        consistency=consistency,
        pipe_stability=(status_sum * historical_sum * consistency)
        / (params.z * params.m * params.n**2),
    )


def oracle_recompute(
    full_history: Sequence[Sequence[int]], iteration: int, params: StabilityParams
) -> StabilitySnapshot:
    """
    Recompute an iteration's snapshot from the complete tick record.

    Uses the equations directly and keeps no state between calls; it is the
    reference the incremental `step` is checked against.
    """
    if not 1 <= iteration <= len(full_history):
        raise InputDomainError(
            f"iteration {iteration} is outside the recorded 1..{len(full_history)}"
        )
    ticks = RecordedTicks(full_history[:iteration], params)

    states = []
    for line in range(1, params.n + 1):
        status, _, historical = _line_factors(ticks, line, iteration, params)
        states.append(
            LineState(
                line=line,
                tick=ticks.tick(line, iteration),
                status=status,
                historical=historical,
                stability=line_stability(ticks, line, iteration, params),
            )
        )

    return StabilitySnapshot(
        iteration=iteration,
        lines=tuple(states),
        consistency=consistency_value(ticks, iteration, params.z),
        pipe_stability=pipe_stability(ticks, iteration, params),
    )
