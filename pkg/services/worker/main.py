"""
In-process worker pool for verification suites and audit ensembles.

Results always come back in submission order so reports are deterministic
regardless of scheduling.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from services.waves.core.config import get_settings
from services.waves.core.logging_config import get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class WorkerPool:
    """Thin wrapper around ThreadPoolExecutor with lifecycle logging."""

    def __init__(self, max_workers: Optional[int] = None, name: str = "waves") -> None:
        self.max_workers = max_workers or get_settings().MAX_WORKERS
        self.name = name
        self._executor: Optional[ThreadPoolExecutor] = None

    def __enter__(self) -> "WorkerPool":
        self._executor = ThreadPoolExecutor(max_workers=self.max_workers, thread_name_prefix=self.name)
        logger.info("Worker pool %s ready with %d threads", self.name, self.max_workers)
        return self

    def __exit__(self, *exc) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None
        logger.info("Worker pool %s shut down", self.name)

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        """Apply ``fn`` to every item; ordered results, first exception re-raised."""
        if self._executor is None or self.max_workers == 1:
            return [fn(item) for item in items]
        return list(self._executor.map(fn, items))
