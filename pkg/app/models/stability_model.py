from pydantic import BaseModel, ConfigDict, Field, model_validator

DEFAULT_TICKS_PER_ITERATION = 10
DEFAULT_HISTORY_DEPTH = 10
DEFAULT_INTERVAL_SECONDS = 60.0
DEFAULT_TIMEOUT_SECONDS = 5.0


class StabilityParams(BaseModel):
    """
    Constants of the stability computation plus loop timing.

    * `n`: number of lines.
    * `m`: ticks per iteration, i.e. the number of stable servers probed.
    * `k`: depth of the historical-status window (the window holds k+1 ticks).
    * `z`: depth of the consistency window (z iteration-consistence terms).
    * `interval`: seconds between two iterations.
    * `timeout`: seconds a single probe may take.
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    m: int = Field(default=DEFAULT_TICKS_PER_ITERATION, ge=1)
    k: int = Field(default=DEFAULT_HISTORY_DEPTH, ge=1)
    z: int = Field(default=DEFAULT_HISTORY_DEPTH, ge=1)
    interval: float = Field(default=DEFAULT_INTERVAL_SECONDS, gt=0)
    timeout: float = Field(default=DEFAULT_TIMEOUT_SECONDS, gt=0)

    @property
    def retention(self) -> int:
        """Number of iterations a tick history keeps per line."""
        return max(self.k, self.z) + 2

    def same_formula(self, other: "StabilityParams") -> bool:
        """Whether two parameter sets produce identical indices for the same ticks."""
        return (self.n, self.m, self.k, self.z) == (
            other.n,
            other.m,
            other.k,
            other.z,
        )


class LineState(BaseModel):
    model_config = ConfigDict(frozen=True)

    line: int = Field(ge=1)
    tick: int = Field(ge=0)
    status: int = Field(ge=0, le=1)
    historical: int = Field(ge=0)
    stability: float = Field(ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_mask(self):
        if self.status == 0 and self.stability != 0.0:
            raise ValueError(f"line {self.line} is down but has S={self.stability}")
        return self


class StabilitySnapshot(BaseModel):
    """Everything one iteration produced: per-line L, H, S and the global C and IS."""

    model_config = ConfigDict(frozen=True)

    iteration: int = Field(ge=1)
    lines: tuple[LineState, ...]
    consistency: int = Field(ge=0)
    pipe_stability: float = Field(ge=0.0, le=1.0)

    @property
    def ticks(self) -> tuple[int, ...]:
        return tuple(state.tick for state in self.lines)

    @property
    def stabilities(self) -> tuple[float, ...]:
        return tuple(state.stability for state in self.lines)

    def line(self, line_id: int) -> LineState:
        return self.lines[line_id - 1]


def with_counts(data, n: int | None, m: int | None):
    """
    Fill `n` and `m` of a raw params mapping from the lengths of the lists they count.

    Used by the ``before`` validators of the config and scenario models so files
    may omit both. Values that are present are left alone and checked later.
    """
    if not isinstance(data, dict):
        return data
    params = data.get("params") or {}
    if isinstance(params, StabilityParams):
        params = params.model_dump()
    params = dict(params)
    if n is not None:
        params.setdefault("n", n)
    if m is not None:
        params.setdefault("m", m)
    return {**data, "params": params}
