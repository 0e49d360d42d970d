import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np

T = TypeVar('T')
R = TypeVar('R')

THREADS_ENV_VAR = 'SM_THREADS'


def pairwise_sum(values: Iterable):
    """
    Sum in a fixed pairwise tree order.

    The tree shape depends only on the number of values, so the result is
    reproducible regardless of how the values were produced.

    :param values: Numbers (float, complex or Fraction)
    :return: Their sum, 0 for an empty input
    """
    items = list(values)
    if not items:
        return 0
    while len(items) > 1:
        paired = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            paired.append(items[-1])
        items = paired
    return items[0]


def pairwise_array_sum(values: np.ndarray) -> float:
    """ Pairwise tree sum of a 1D float/complex array """
    values = np.asarray(values)
    if values.size == 0:
        return 0.0
    while values.size > 1:
        if values.size % 2:
            tail = values[-1:]
            values = values[:-1:2] + values[1::2]
            values = np.concatenate([values, tail])
        else:
            values = values[0::2] + values[1::2]
    return values[0].item()


def resolve_threads(threads: Optional[int] = None) -> int:
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        threads = int(env)
    if threads is None:
        threads = os.cpu_count() or 1
    return max(1, int(threads))


def ordered_map(func: Callable[[T], R], items: Sequence[T], threads: Optional[int] = 1) -> List[R]:
    """
    Map func over items, optionally on a thread pool; output order follows input order.
    """
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
