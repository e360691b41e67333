import functools
import hashlib
import logging
import os
import time
from typing import Any, Callable, Optional

logger = logging.getLogger(__name__)


def setup_logging(level: Optional[str] = None) -> None:
    """Configure root logging once, honouring RIPALM_LOG_LEVEL."""
    level = (level or os.environ.get("RIPALM_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


class Stopwatch:
    """Monotonic wall clock started at construction."""

    def __init__(self):
        self.started = time.perf_counter()

    @property
    def seconds(self) -> float:
        return time.perf_counter() - self.started


def time_execution(func: Callable) -> Callable:
    """Log the wall time of a command under the logger of the module defining it, failures included."""
    log = logging.getLogger(func.__module__)

    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> Any:
        watch = Stopwatch()
        try:
            return func(*args, **kwargs)
        finally:
            log.info(f"{func.__name__} finished in {format_duration(watch.seconds)}")
    return wrapper


def instance_id(problem: str, label: str, seed: Optional[int]) -> str:
    """Deterministic short id for a generated instance."""
    data = f"{problem}:{label}:{seed}"
    digest = hashlib.sha256(data.encode()).hexdigest()
    return f"{problem}-{label}-s{seed}-{digest[:8]}"


def file_checksum(path: str) -> str:
    """sha256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def format_duration(seconds: float) -> str:
    """Format a duration in seconds to a human-readable string."""
    if seconds < 1:
        return f"{seconds * 1000:.1f} ms"
    if seconds < 60:
        return f"{seconds:.2f} s"
    if seconds < 3600:
        minutes, rest = divmod(seconds, 60)
        return f"{int(minutes)} min {rest:.0f} s"
    hours, rest = divmod(seconds, 3600)
    return f"{int(hours)} h {int(rest // 60)} min"


def format_sci(value: Optional[float]) -> str:
    if value is None or value != value:
        return "-"
    return f"{value:.2e}"
