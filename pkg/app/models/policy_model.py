from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Tier(str, Enum):
    full = "full"
    half = "half"
    third = "third"
    out = "out"


class EventKind(str, Enum):
    line_removed = "line-removed"
    line_restored = "line-restored"
    tier_changed = "tier-changed"
    admission_granted = "admission-granted"
    admission_denied = "admission-denied"


class LineWeight(BaseModel):
    model_config = ConfigDict(frozen=True)

    line: int = Field(ge=1)
    bwf: int = Field(ge=1)
    rw: int = Field(ge=0)
    in_service: bool
    tier: Tier
    stability: float = Field(ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_weight(self):
        if self.rw > self.bwf:
            raise ValueError(f"line {self.line}: Rw={self.rw} exceeds Bwf={self.bwf}")
        if (self.rw == 0) == self.in_service:
            raise ValueError(
                f"line {self.line}: Rw={self.rw} contradicts in_service={self.in_service}"
            )
        return self


class WeightTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    iteration: int = Field(ge=1)
    lines: tuple[LineWeight, ...]

    @property
    def weights(self) -> tuple[int, ...]:
        return tuple(weight.rw for weight in self.lines)

    def line(self, line_id: int) -> LineWeight:
        return self.lines[line_id - 1]


class PolicyEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: EventKind
    line: int | None = None
    iteration: int = Field(ge=1)
    detail: str = ""


class AdmissionDecision(BaseModel):
    """Advice on whether a critical connection (e.g. a VPN) should be established now."""

    model_config = ConfigDict(frozen=True)

    iteration: int = Field(ge=1)
    grant: bool
    best_line: int = Field(ge=1)
    pipe_stability: float
    threshold: float
