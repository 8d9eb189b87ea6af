from datetime import datetime
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from .probe_model import ProbeOutcome
from .stability_model import StabilityParams


class LogHeader(BaseModel):
    """First record of every iteration log; replay uses it to detect parameter drift."""

    model_config = ConfigDict(populate_by_name=True)

    kind: Literal["header"] = "header"
    version: str
    params: StabilityParams
    scale_base: int = Field(ge=1)
    lines: list[str]
    bandwidth_factors: list[int] | None = None
    failover_floor: float = 0.0
    created_at: datetime


class LineRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    tick: int
    status: int = Field(alias="L")
    historical: int = Field(alias="H")
    stability: float = Field(alias="S")
    bwf: int = Field(alias="Bwf")
    rw: int = Field(alias="Rw")
    in_service: bool


class IterationRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    kind: Literal["iteration"] = "iteration"
    iteration: int = Field(ge=1)
    timestamp: datetime
    lines: list[LineRecord]
    consistency: int = Field(alias="C")
    pipe_stability: float = Field(alias="IS")
    outcomes: list[ProbeOutcome] | None = None

    @property
    def ticks(self) -> list[int]:
        return [line.tick for line in self.lines]
