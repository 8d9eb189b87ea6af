from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import RedirectResponse

from .config import load_app_config, resolve_config_path
from .exceptions import ConfigurationError
from .routers import status
from .services.monitor import Monitor


@asynccontextmanager
async def lifespan(app: FastAPI):
    monitor = getattr(app.state, "monitor", None)
    if monitor is None:
        path = resolve_config_path(None)
        if path is None:
            raise ConfigurationError("no config file given")
        monitor = Monitor(load_app_config(path))
        app.state.monitor = monitor
    monitor.start()
    yield
    monitor.shutdown()


app = FastAPI(
    lifespan=lifespan,
    title="pipewatch",
    description="""### stability of a multi-homed internet pipe""",
)

app.include_router(status.router)


# Hidden Routes
@app.get("/", response_class=RedirectResponse, include_in_schema=False)
async def root(request: Request):
    return RedirectResponse(request.url_for("swagger_ui_html"))
