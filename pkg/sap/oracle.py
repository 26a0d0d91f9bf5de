"""Brute-force polygon counts by canonical backtracking.

Each polygon is walked exactly once: from its least vertex (the lowest vertex of
its leftmost column), which is moved to the origin, with the first step going
East. The walk may then only visit vertices with ``x > 0`` or with ``x == 0``
and ``y > 0`` until it steps back onto the origin. Counts are kept per
perimeter and bounding box, so the same search also yields per-rectangle counts
to compare against :py:func:`sap.engine.sweep_width`.

The inner search is compiled with :py:func:`numba.njit` and releases the GIL, so
the walk prefixes fanned out over a thread pool run side by side.
"""

import logging
import typing
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit  # type: ignore

from .base import config
from .errors import BudgetError
from .misc import even_range
from .series import ExactSeries

logger = logging.getLogger(__name__)

GROWTH_ESTIMATE = 2.638
"""Approximate branching rate of the search."""

_STEPS = ((1, 0), (0, 1), (-1, 0), (0, -1))


@njit(nogil=True, cache=True)
def _count_extensions(xs0, ys0, n_max, counts):  # pragma: no cover - compiled
    """Extend one walk prefix into every closed canonical walk of length <= n_max.

    ``counts[n, h, w]`` receives closed walks of length ``n`` whose bounding box
    has ``h`` rows and ``w`` columns of vertices.
    """
    dx = np.array((1, 0, -1, 0))
    dy = np.array((0, 1, 0, -1))
    offset = n_max + 1
    size = 2 * n_max + 3
    visited = np.zeros((size, size), dtype=np.uint8)

    xs = np.zeros(n_max + 1, dtype=np.int64)
    ys = np.zeros(n_max + 1, dtype=np.int64)
    tried = np.zeros(n_max + 1, dtype=np.int64)

    start = len(xs0) - 1
    for i in range(len(xs0)):
        xs[i] = xs0[i]
        ys[i] = ys0[i]
        visited[xs0[i] + offset, ys0[i] + offset] = 1

    depth = start
    while depth >= start:
        if tried[depth] == 4:
            if depth > start:
                visited[xs[depth] + offset, ys[depth] + offset] = 0
            tried[depth] = 0
            depth -= 1
            continue

        direction = tried[depth]
        tried[depth] += 1
        nx = xs[depth] + dx[direction]
        ny = ys[depth] + dy[direction]
        steps = depth + 1

        if nx == 0 and ny == 0:
            if steps >= 4:
                x_max = 0
                y_min = 0
                y_max = 0
                for i in range(depth + 1):
                    x_max = max(x_max, xs[i])
                    y_min = min(y_min, ys[i])
                    y_max = max(y_max, ys[i])
                counts[steps, y_max - y_min + 1, x_max + 1] += 1
            continue

        if steps >= n_max:
            continue
        if nx < 0 or (nx == 0 and ny < 0):
            continue
        if visited[nx + offset, ny + offset]:
            continue
        if nx + abs(ny) > n_max - steps:
            continue

        depth += 1
        xs[depth] = nx
        ys[depth] = ny
        tried[depth] = 0
        visited[nx + offset, ny + offset] = 1


def walk_prefixes(length) -> typing.List[typing.List[typing.Tuple[int, int]]]:
    """Self-avoiding canonical walk prefixes of ``length`` steps (at most 3)."""
    prefixes = [[(0, 0), (1, 0)]]
    for _ in range(length - 1):
        extended = []
        for prefix in prefixes:
            x, y = prefix[-1]
            for step_x, step_y in _STEPS:
                nx, ny = x + step_x, y + step_y
                if nx < 0 or (nx == 0 and ny <= 0) or (nx, ny) in prefix:
                    continue
                extended.append(prefix + [(nx, ny)])
        prefixes = extended
    return prefixes


def estimated_nodes(n_max) -> int:
    """Rough size of the search tree for ``n_max``."""
    return int(GROWTH_ESTIMATE**n_max)


def _check_budget(n_max, budget):
    budget = config.getint("oracle", "budget") if budget is None else budget
    if n_max > budget:
        nodes = estimated_nodes(n_max)
        raise BudgetError(
            f"n_max={n_max} exceeds the oracle budget {budget}"
            f" (about {nodes:.3g} search nodes)",
            estimated_nodes=nodes,
        )


def count_table(n_max, threads=1, budget=None) -> np.ndarray:
    """Closed canonical walks by ``[perimeter, rows, columns]``."""
    _check_budget(n_max, budget)
    side = n_max // 2 + 2
    counts = np.zeros((n_max + 1, side, side), dtype=np.int64)
    if n_max < 4:
        return counts

    length = min(config.getint("oracle", "prefix_length"), 3, n_max - 1)
    prefixes = walk_prefixes(length)

    def run(prefix):
        local = np.zeros_like(counts)
        xs = np.array([x for x, _ in prefix], dtype=np.int64)
        ys = np.array([y for _, y in prefix], dtype=np.int64)
        _count_extensions(xs, ys, n_max, local)
        return local

    logger.debug("oracle n_max=%d over %d prefixes", n_max, len(prefixes))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            partials = list(executor.map(run, prefixes))
    else:
        partials = [run(prefix) for prefix in prefixes]

    for partial in partials:
        counts += partial
    return counts


def brute_force_series(n_max, threads=1, budget=None) -> ExactSeries:
    """``p_n`` for every even ``4 <= n <= n_max``."""
    counts = count_table(n_max, threads, budget)
    return ExactSeries({n: int(counts[n].sum()) for n in even_range(4, n_max)})


def brute_force_series_bbox(
    n_max, width, length, threads=1, budget=None
) -> typing.Dict[int, typing.Dict[int, int]]:
    """Counts of polygons whose bounding box is exactly ``width`` x ``L``.

    Returns ``{L: {n: count}}`` for ``1 <= L <= length``; ``width`` and ``L``
    count rows and columns of vertices.
    """
    counts = count_table(n_max, threads, budget)
    side = counts.shape[1]
    table = {}
    for columns in range(1, length + 1):
        table[columns] = {
            n: int(counts[n, width, columns]) if width < side and columns < side else 0
            for n in even_range(4, n_max)
        }
    return table
