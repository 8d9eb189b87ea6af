from typing import Annotated

from fastapi import APIRouter, HTTPException, Query

from ..dependencies import MonitorDep
from ..models.policy_model import PolicyEvent
from ..models.status_model import StatusPublic
from ..services.monitor import Monitor, MonitorState
from ..services.policy import weights_document

router = APIRouter(tags=["Status"])


def read_state(monitor: Monitor) -> MonitorState:
    state = monitor.state()
    if state is None:
        raise HTTPException(status_code=404, detail="No iteration has completed yet")
    return state


@router.get("/status")
async def read_status(monitor: MonitorDep) -> StatusPublic:
    """
    ## Retrieve the latest iteration

    ### Returns

    * `StatusPublic`: The latest stability snapshot, weight table and admission advice.

    ### Raises

    * `HTTPException`: If no iteration has completed yet.
    """
    state = read_state(monitor)
    return StatusPublic(
        snapshot=state.snapshot, weights=state.table, admission=state.decision
    )


@router.get("/weights")
async def read_weights(monitor: MonitorDep) -> dict[str, dict]:
    """
    ## Retrieve the current weight table

    Same document as the weights output file, keyed by line name.

    ### Raises

    * `HTTPException`: If no iteration has completed yet.
    """
    state = read_state(monitor)
    return weights_document(state.table, monitor.config.line_names)


@router.get("/events")
async def read_events(
    monitor: MonitorDep,
    limit: Annotated[int, Query(ge=1, le=1000)] = 100,
) -> list[PolicyEvent]:
    """
    ## Retrieve recent policy events

    ### Parameters

    * `limit`: `int` Maximum number of events, newest last. Defaults to `100`.
    """
    return monitor.recent_events(limit)
