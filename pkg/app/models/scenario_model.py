from datetime import datetime, timezone

from pydantic import BaseModel, Field, model_validator

from .config_model import DEFAULT_ADMISSION_THRESHOLD, DEFAULT_SCALE_BASE
from .probe_model import LineBinding, ProbeTarget
from .stability_model import StabilityParams, with_counts

SIMULATION_EPOCH = datetime(2000, 1, 1, tzinfo=timezone.utc)


class Phase(BaseModel):
    """A stretch of iterations with either a fixed tick or a per-target success probability."""

    duration: int = Field(ge=1)
    tick: int | None = Field(default=None, ge=0)
    probability: float | None = Field(default=None, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_kind(self):
        if (self.tick is None) == (self.probability is None):
            raise ValueError("a phase needs exactly one of 'tick' or 'probability'")
        return self


class LinkModel(BaseModel):
    line: int = Field(ge=1)
    phases: list[Phase] = Field(min_length=1)

    def phase_at(self, iteration: int) -> Phase:
        """
        Retrieve the phase active at an iteration (1-based).

        When the phases are exhausted the last one repeats.

        :return: The active :class:`Phase`.
        """
        remaining = iteration
        for phase in self.phases:
            if remaining <= phase.duration:
                return phase
            remaining -= phase.duration
        return self.phases[-1]


class Scenario(BaseModel):
    params: StabilityParams
    models: list[LinkModel] = Field(min_length=1)
    lines: list[LineBinding] = Field(default_factory=list)
    seed: int = Field(default=0, ge=0, lt=2**64)
    length: int = Field(ge=0)
    scale_base: int = Field(default=DEFAULT_SCALE_BASE, ge=1)
    admission_threshold: float = Field(
        default=DEFAULT_ADMISSION_THRESHOLD, ge=0.0, le=1.0
    )
    failover_floor: float = Field(default=0.0, ge=0.0, le=1.0)
    start_time: datetime = SIMULATION_EPOCH

    @model_validator(mode="before")
    @classmethod
    def fill_counts(cls, data):
        if not isinstance(data, dict):
            return data
        models = data.get("models")
        return with_counts(data, len(models) if isinstance(models, list) else None, None)

    @model_validator(mode="after")
    def check_models(self):
        n, m = self.params.n, self.params.m

        ids = sorted(model.line for model in self.models)
        if ids != list(range(1, n + 1)):
            raise ValueError(f"link models must cover lines 1..{n} exactly once, got {ids}")
        for model in self.models:
            for phase in model.phases:
                if phase.tick is not None and phase.tick > m:
                    raise ValueError(
                        f"line {model.line}: fixed tick {phase.tick} exceeds m={m}"
                    )
        self.models = sorted(self.models, key=lambda model: model.line)

        if not self.lines:
            self.lines = [
                LineBinding(id=i, name=f"line{i}", bandwidth=1.0) for i in range(1, n + 1)
            ]
        elif sorted(line.id for line in self.lines) != list(range(1, n + 1)):
            raise ValueError(f"scenario lines must have ids 1..{n}")
        self.lines = sorted(self.lines, key=lambda line: line.id)
        return self

    @property
    def targets(self) -> list[ProbeTarget]:
        return [
            ProbeTarget(url=f"http://target{t}.sim.invalid/", label=f"t{t}")
            for t in range(1, self.params.m + 1)
        ]

    @property
    def bandwidths(self) -> list[float]:
        return [line.bandwidth for line in self.lines]

    @property
    def line_names(self) -> list[str]:
        return [line.name for line in self.lines]
