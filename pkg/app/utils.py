import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from colorama import Back, Fore, Style

TOPIC_COLORS = {
    "error": Back.RED,
    "warning": Back.RED,
    "event": Back.MAGENTA,
    "policy": Back.BLUE,
    "replay": Back.CYAN,
}


def get_current_timestamp():
    return datetime.now(timezone.utc)


def pretty_print(topic: str, message: str):
    color = TOPIC_COLORS.get(topic.lower(), Back.YELLOW)
    msg = (
        f"{(9 - len(topic)) * ' '}{Style.BRIGHT}{color}{Fore.WHITE} {topic.upper()} {Style.RESET_ALL}  "
        + message
    )
    # stdout is reserved for report output
    print(msg, file=sys.stderr)


def write_text_atomic(path: str | Path, text: str):
    """Replace `path` with `text` so readers never observe a half-written file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
