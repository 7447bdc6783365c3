"""Deterministic fan-out helper for the parallel pipeline stages."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(
    fn: Callable[[T], R],
    items: Sequence[T],
    workers: int,
    initializer: Callable | None = None,
    initargs: tuple = (),
) -> list[R]:
    """Apply fn to every item, returning results in item order.

    workers == 1 runs serially in-process (running the initializer locally);
    higher counts use a process pool with the initializer run once per
    worker. Results are collected in submission order, so output never
    depends on scheduling.
    """

    if workers <= 1 or len(items) <= 1:
        if initializer is not None:
            initializer(*initargs)
        return [fn(item) for item in items]
    with ProcessPoolExecutor(
        max_workers=min(workers, len(items)), initializer=initializer, initargs=initargs
    ) as pool:
        return list(pool.map(fn, items))
