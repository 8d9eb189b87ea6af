import ipaddress
from enum import Enum

import httpx
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class FailureKind(str, Enum):
    none = "none"
    timeout = "timeout"
    connect_error = "connect-error"
    http_error = "http-error"


class ProbeTarget(BaseModel):
    model_config = ConfigDict(frozen=True)

    url: str
    label: str = Field(min_length=1)

    @field_validator("url")
    @classmethod
    def check_url(cls, value: str) -> str:
        try:
            url = httpx.URL(value)
        except httpx.InvalidURL as e:
            raise ValueError(f"'{value}' is not a valid URL: {e}")
        if url.scheme not in ("http", "https"):
            raise ValueError(f"'{value}' must use http or https")
        if not url.host:
            raise ValueError(f"'{value}' has no host")
        return value


class LineBinding(BaseModel):
    """
    One uplink of the gateway.

    `source` is either a local IP address or an interface name; probes for this
    line leave through it. Routing on the host must honour source binding,
    pipewatch installs no policy routes itself.
    """

    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=1)
    name: str = Field(min_length=1)
    source: str | None = None
    bandwidth: float = Field(gt=0, description="Mbps")

    @property
    def source_address(self) -> str | None:
        """The source as an IP literal, or None when it names an interface."""
        if self.source is None:
            return None
        try:
            return str(ipaddress.ip_address(self.source))
        except ValueError:
            return None

    @property
    def source_interface(self) -> str | None:
        if self.source is None or self.source_address is not None:
            return None
        return self.source


class ProbeOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    line: int = Field(ge=1)
    target: str
    success: bool
    elapsed: float = Field(ge=0.0)
    failure_kind: FailureKind = FailureKind.none
    status_code: int | None = None

    @model_validator(mode="after")
    def check_failure_kind(self):
        if self.success != (self.failure_kind == FailureKind.none):
            raise ValueError(
                f"success={self.success} contradicts failure_kind={self.failure_kind.value}"
            )
        return self
