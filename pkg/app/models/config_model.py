from pathlib import Path

from pydantic import BaseModel, Field, model_validator

from .probe_model import LineBinding, ProbeTarget
from .stability_model import StabilityParams, with_counts

DEFAULT_SCALE_BASE = 10
DEFAULT_ADMISSION_THRESHOLD = 0.90


class AppConfig(BaseModel):
    params: StabilityParams
    lines: list[LineBinding] = Field(min_length=1)
    targets: list[ProbeTarget] = Field(min_length=1)
    scale_base: int = Field(default=DEFAULT_SCALE_BASE, ge=1)
    admission_threshold: float = Field(
        default=DEFAULT_ADMISSION_THRESHOLD, ge=0.0, le=1.0
    )
    failover_floor: float = Field(default=0.0, ge=0.0, le=1.0)
    log_path: Path = Path("pipewatch.jsonl")
    weights_path: Path = Path("weights.json")
    record_outcomes: bool = True
    verify_tls: bool = True

    @model_validator(mode="before")
    @classmethod
    def fill_counts(cls, data):
        if not isinstance(data, dict):
            return data
        lines = data.get("lines")
        targets = data.get("targets")
        return with_counts(
            data,
            len(lines) if isinstance(lines, list) else None,
            len(targets) if isinstance(targets, list) else None,
        )

    @model_validator(mode="after")
    def check_counts(self):
        if self.params.n != len(self.lines):
            raise ValueError(
                f"params.n={self.params.n} but {len(self.lines)} lines are configured"
            )
        if self.params.m != len(self.targets):
            raise ValueError(
                f"params.m={self.params.m} but {len(self.targets)} targets are configured"
            )

        ids = sorted(line.id for line in self.lines)
        if ids != list(range(1, self.params.n + 1)):
            raise ValueError(f"line ids must be 1..{self.params.n} without gaps, got {ids}")
        if len({line.name for line in self.lines}) != len(self.lines):
            raise ValueError("line names must be unique")
        if len({target.label for target in self.targets}) != len(self.targets):
            raise ValueError("target labels must be unique")

        self.lines = sorted(self.lines, key=lambda line: line.id)
        return self

    @property
    def bandwidths(self) -> list[float]:
        return [line.bandwidth for line in self.lines]

    @property
    def line_names(self) -> list[str]:
        return [line.name for line in self.lines]
