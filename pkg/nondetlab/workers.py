"""Fan-out helper for embarrassingly parallel work."""

import asyncio
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def run_parallel(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """Apply ``fn`` to every item, using up to ``workers`` threads.

    Results come back in input order, never completion order, so callers
    get identical output for any worker count.

    Args:
        fn: Pure function of one item
        items: Work items
        workers: Thread count (1 runs inline)

    Returns:
        ``[fn(item) for item in items]``
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    return asyncio.run(_gather(fn, items, workers))


async def _gather(fn: Callable[[T], R], items: list[T], workers: int) -> list[R]:
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        tasks = [loop.run_in_executor(pool, fn, item) for item in items]
        return list(await asyncio.gather(*tasks))
