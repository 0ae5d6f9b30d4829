from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Generic, Iterable, List, Optional, TypeVar

from dbar_akns.errors import DbarError
from dbar_akns.logger import warn


__all__ = ["TaskOutcome", "map_ordered"]


T = TypeVar("T")
R = TypeVar("R")


@dataclass
class TaskOutcome(Generic[T, R]):
    """Result of one task; exactly one of value / error is set."""
    item: T
    value: Optional[R] = None
    error: Optional[DbarError] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _run(fn: Callable[[T], R], item: T) -> TaskOutcome:
    try:
        return TaskOutcome(item, fn(item))
    except DbarError as e:
        warn(f"task {item!r} failed: {type(e).__name__}: {e}")
        return TaskOutcome(item, error=e)


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[TaskOutcome]:
    """Run fn over items on a thread pool and return outcomes in input order.

    Domain errors are captured per item so completed results survive; any
    other exception propagates.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [_run(fn, item) for item in items]

    with ThreadPoolExecutor(max_workers=min(workers, len(items)), thread_name_prefix="dbar") as pool:
        futures = [pool.submit(_run, fn, item) for item in items]
        return [f.result() for f in futures]
