import os
from pathlib import Path

from colorama import Fore, Style
from dotenv import load_dotenv
from pydantic import ValidationError

from . import utils
from .exceptions import ConfigurationError
from .models.config_model import AppConfig

load_dotenv()

# Config file used by `serve` and as the `run` default
CONFIG_PATH = os.environ.get("PIPEWATCH_CONFIG", None)

# Optional overrides of the paths in the config file
LOG_PATH = os.environ.get("PIPEWATCH_LOG_PATH", None)
WEIGHTS_PATH = os.environ.get("PIPEWATCH_WEIGHTS_PATH", None)

# Status API bind address
HOST = os.environ.get("PIPEWATCH_HOST", "127.0.0.1")
PORT = int(os.environ.get("PIPEWATCH_PORT", "8000"))

# Number of policy events the status API keeps in memory
EVENT_BUFFER_SIZE = 100


def warn_missing_config():
    utils.pretty_print(
        "warning",
        f"{Style.BRIGHT}{Fore.RED}PIPEWATCH_CONFIG{Style.RESET_ALL} is not set! "
        "Please pass --config or configure it as an environment variable.",
    )


if not CONFIG_PATH:
    warn_missing_config()


def resolve_config_path(path: str | Path | None) -> Path | None:
    if path is not None:
        return Path(path)
    if CONFIG_PATH:
        return Path(CONFIG_PATH)
    return None


def load_app_config(path: str | Path) -> AppConfig:
    """
    Read and validate the JSON config file, then apply environment overrides.

    :raises ConfigurationError: If the file is unreadable or invalid.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e.strerror or e}")

    try:
        config = AppConfig.model_validate_json(text)
    except ValidationError as e:
        raise ConfigurationError(f"invalid config {path}:\n{e}")

    overrides = {}
    if LOG_PATH:
        overrides["log_path"] = Path(LOG_PATH)
    if WEIGHTS_PATH:
        overrides["weights_path"] = Path(WEIGHTS_PATH)
    return config.model_copy(update=overrides) if overrides else config
