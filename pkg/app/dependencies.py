from typing import Annotated

from fastapi import Depends, HTTPException, Request

from .services.monitor import Monitor


def get_monitor(request: Request) -> Monitor:
    monitor = getattr(request.app.state, "monitor", None)
    if monitor is None:
        raise HTTPException(status_code=503, detail="Measurement loop is not running")
    return monitor


# function dependencies
MonitorDep = Annotated[Monitor, Depends(get_monitor)]
