"""Compiled kernels of the transfer-matrix site update.

A state map is stored as parallel arrays (see
:py:class:`sap.engine.BoundaryStateMap`): sorted ``int64`` keys, the
structural minimum degree of every entry, and CSR offsets into one ``uint64``
coefficient block with a row per stored degree and a column per modulus.

A site update runs three passes over these arrays:

1. :py:func:`site_pairs` lists every ``(source, target, k, cap)`` move that
   survives pruning; a polygon closing at the vertex is listed under the pseudo
   key :py:data:`CLOSED`,
2. :py:func:`target_windows` sizes the degree window of each distinct target,
3. :py:func:`scatter` adds the shifted source windows into the targets.

Every kernel releases the GIL, so partitions of one site run side by side in a
thread pool.
"""

import numpy as np
from numba import njit  # type: ignore

CLOSED = -1
"""Pseudo target key of polygons that close at the current vertex."""

LOWER = 1
UPPER = 2
BOTH_FLAGS = 3

# scratch rows
_UPPER, _PARENT, _STACK, _REACH, _EDGES, _WORK, _TARGET = range(7)


@njit(nogil=True, cache=True)
def _unpack(key, slots, edges):  # pragma: no cover - compiled
    key >>= 2
    for pos in range(slots):
        edges[pos] = key & 3
        key >>= 2


@njit(nogil=True, cache=True)
def _pack(edges, slots, flags):  # pragma: no cover - compiled
    key = 0
    for pos in range(slots - 1, -1, -1):
        key = (key << 2) | edges[pos]
    return (key << 2) | flags


@njit(nogil=True, cache=True)
def _match(edges, slots, upper, parent, stack):  # pragma: no cover - compiled
    """Partner of every lower end and the lower end of its enclosing pair."""
    depth = 0
    for pos in range(slots):
        upper[pos] = -1
        parent[pos] = -1
        state = edges[pos]
        if state == LOWER:
            if depth > 0:
                parent[pos] = stack[depth - 1]
            stack[depth] = pos
            depth += 1
        elif state == UPPER:
            depth -= 1
            upper[stack[depth]] = pos


@njit(nogil=True, cache=True)
def _end_row(pos, kink):  # pragma: no cover - compiled
    if pos < kink:
        return pos + 1
    if pos == kink:
        return kink + 1
    return pos


@njit(nogil=True, cache=True)
def _bound(
    edges, slots, kink, width, flags, column, lengthwise, scratch
):  # pragma: no cover - compiled
    """Completion lower bound; ``kink`` is -1 for the layout between columns."""
    upper = scratch[_UPPER]
    parent = scratch[_PARENT]
    reach = scratch[_REACH]
    _match(edges, slots, upper, parent, scratch[_STACK])
    for pos in range(slots):
        reach[pos] = 0

    cost = 0
    furthest = -1
    low = slots + 1
    high = -1
    # children have larger lower ends than their parents
    for pos in range(slots - 1, -1, -1):
        if edges[pos] != LOWER:
            continue
        top = upper[pos]
        y_lo = _end_row(pos, kink)
        y_hi = _end_row(top, kink)
        x_lo = 1 if pos < kink else 0
        x_hi = 1 if top < kink else 0
        furthest_here = reach[pos]
        if x_lo > furthest_here:
            furthest_here = x_lo
        if x_hi > furthest_here:
            furthest_here = x_hi
        cost += abs(y_hi - y_lo) + 2 * furthest_here - x_lo - x_hi

        enclosing = parent[pos]
        if enclosing >= 0:
            if furthest_here + 1 > reach[enclosing]:
                reach[enclosing] = furthest_here + 1
        elif furthest_here > furthest:
            furthest = furthest_here

        low = min(low, min(y_lo, y_hi))
        high = max(high, max(y_lo, y_hi))

    if furthest < 0:
        return 0
    if (flags & 1) == 0:
        cost += max(0, 2 * (low - 1))
    if (flags & 2) == 0:
        cost += max(0, 2 * (width - high))
    if lengthwise:
        cost += 2 * max(0, width - (column + furthest))
    return cost


@njit(nogil=True, cache=True)
def _emit(
    work, slots, kink, flags, steps, simplify, top_row, out_keys, out_steps, count
):  # pragma: no cover - compiled
    if simplify and not top_row:
        moved = work[kink + 1]
        above = work[kink + 2]
        if moved != 0:
            if above == 0:
                work[kink + 1] = 0
                work[kink + 2] = moved
            elif not (moved == LOWER and above == UPPER):
                return count
    out_keys[count] = _pack(work, slots, flags)
    out_steps[count] = steps
    return count + 1


@njit(nogil=True, cache=True)
def _insert(
    edges, work, slots, pos, lower, upper, flags, simplify, out_keys, out_steps, count
):  # pragma: no cover - compiled
    """Splice a new loop at ``(pos, pos + 1)`` into the pair ``(lower, upper)``."""
    for slot in range(slots):
        work[slot] = edges[slot]
    if lower < pos and upper > pos + 1:
        work[pos] = UPPER
        work[pos + 1] = LOWER
    elif upper < pos:
        work[upper] = LOWER
        work[pos] = UPPER
        work[pos + 1] = UPPER
    else:
        work[pos] = LOWER
        work[pos + 1] = LOWER
        work[lower] = UPPER
    return _emit(work, slots, pos, flags, 2, simplify, False, out_keys, out_steps, count)


@njit(nogil=True, cache=True)
def _moves(
    key, row, width, seed_allowed, simplify, scratch, out_keys, out_steps
):  # pragma: no cover - compiled
    """Targets of ``key`` at the vertex in ``row``; returns ``(count, closed)``."""
    # pylint: disable=too-many-branches, too-many-statements
    slots = width + 1
    edges = scratch[_EDGES]
    work = scratch[_WORK]
    _unpack(key, slots, edges)
    flags = key & 3
    kink = row - 1
    below = edges[kink]
    left = edges[kink + 1]
    top_row = row == width
    touch = 0
    if row == 1:
        touch |= 1
    if top_row:
        touch |= 2
    count = 0

    if below == 0 and left == 0:
        out_keys[0] = key
        out_steps[0] = 0
        count = 1
        if top_row:
            return count, False

        empty = True
        for pos in range(slots):
            if edges[pos] != 0:
                empty = False
                break
        if empty:
            if seed_allowed:
                for pos in range(slots):
                    work[pos] = 0
                work[kink] = LOWER
                work[kink + 1] = UPPER
                count = _emit(
                    work, slots, kink, flags | touch, 2, simplify, False, out_keys, out_steps, count
                )
            return count, False

        upper = scratch[_UPPER]
        parent = scratch[_PARENT]
        _match(edges, slots, upper, parent, scratch[_STACK])
        enclosing = -1
        for pos in range(kink):
            if edges[pos] == LOWER and upper[pos] > kink + 1:
                enclosing = pos
        if enclosing >= 0:
            count = _insert(
                edges, work, slots, kink, enclosing, upper[enclosing],
                flags | touch, simplify, out_keys, out_steps, count,
            )
        for pos in range(slots):
            if edges[pos] == LOWER and parent[pos] == enclosing:
                count = _insert(
                    edges, work, slots, kink, pos, upper[pos],
                    flags | touch, simplify, out_keys, out_steps, count,
                )
        return count, False

    if below == 0 or left == 0:
        state = below if below != 0 else left
        for pos in range(slots):
            work[pos] = edges[pos]
        work[kink] = state
        work[kink + 1] = 0
        count = _emit(
            work, slots, kink, flags | touch, 1, simplify, top_row, out_keys, out_steps, count
        )
        if not top_row:
            for pos in range(slots):
                work[pos] = edges[pos]
            work[kink] = 0
            work[kink + 1] = state
            count = _emit(
                work, slots, kink, flags | touch, 1, simplify, top_row, out_keys, out_steps, count
            )
        return count, False

    if below == LOWER and left == UPPER:
        remaining = False
        for pos in range(slots):
            work[pos] = edges[pos]
            if pos != kink and pos != kink + 1 and edges[pos] != 0:
                remaining = True
        if not remaining:
            return 0, (flags | touch) == BOTH_FLAGS
        work[kink] = 0
        work[kink + 1] = 0
        count = _emit(
            work, slots, kink, flags | touch, 0, simplify, top_row, out_keys, out_steps, count
        )
        return count, False

    return 0, False


@njit(nogil=True, cache=True)
def key_moves(key, row, width, seed_allowed, simplify):  # pragma: no cover - compiled
    """Targets and step counts of one packed key, plus whether it closes."""
    scratch = np.empty((7, width + 2), dtype=np.int64)
    size = (width + 1) // 2 + 3
    targets = np.empty(size, dtype=np.int64)
    steps = np.empty(size, dtype=np.int64)
    count, closed = _moves(key, row, width, seed_allowed, simplify, scratch, targets, steps)
    return targets[:count].copy(), steps[:count].copy(), closed


@njit(nogil=True, cache=True)
def key_bound(key, kink, width, column, lengthwise):  # pragma: no cover - compiled
    """Completion lower bound of one packed key."""
    slots = width + 1
    scratch = np.empty((7, width + 2), dtype=np.int64)
    edges = scratch[_TARGET]
    _unpack(key, slots, edges)
    return _bound(edges, slots, kink, width, key & 3, column, lengthwise, scratch)


@njit(nogil=True, cache=True)
def site_pairs(
    sources,
    keys,
    starts,
    row,
    column,
    width,
    seed_allowed,
    simplify,
    prune,
    lengthwise,
    max_degree,
    out_sources,
    out_keys,
    out_steps,
    out_caps,
):  # pragma: no cover - compiled
    """List the surviving moves of the entries at ``sources``.

    Returns the number of moves. Outputs are only written when they are
    non-empty, so a first call with empty outputs sizes them.
    """
    # pylint: disable=too-many-arguments, too-many-locals
    slots = width + 1
    scratch = np.empty((7, width + 2), dtype=np.int64)
    size = (width + 1) // 2 + 3
    targets = np.empty(size, dtype=np.int64)
    steps = np.empty(size, dtype=np.int64)
    emit = len(out_keys) > 0
    edges = scratch[_TARGET]

    count = 0
    for index in range(len(sources)):
        source = sources[index]
        start = starts[source]
        moves, closed = _moves(
            keys[source], row, width, seed_allowed, simplify, scratch, targets, steps
        )
        if closed:
            if start <= max_degree:
                if emit:
                    out_sources[count] = source
                    out_keys[count] = CLOSED
                    out_steps[count] = 0
                    out_caps[count] = max_degree
                count += 1
            continue

        for move in range(moves):
            target = targets[move]
            k = steps[move]
            cap = max_degree
            if prune:
                _unpack(target, slots, edges)
                cap -= _bound(edges, slots, row, width, target & 3, column, lengthwise, scratch)
            if start + k > cap:
                continue
            if emit:
                out_sources[count] = source
                out_keys[count] = target
                out_steps[count] = k
                out_caps[count] = cap
            count += 1
    return count


@njit(nogil=True, cache=True)
def target_windows(
    sources, steps, caps, inverse, starts, offsets, targets
):  # pragma: no cover - compiled
    """Lowest and highest degree written into each of ``targets`` entries."""
    low = np.empty(targets, dtype=np.int64)
    high = np.empty(targets, dtype=np.int64)
    for target in range(targets):
        low[target] = 1 << 62
        high[target] = -1
    for pair in range(len(sources)):
        source = sources[pair]
        top = starts[source] + offsets[source + 1] - offsets[source] - 1
        lo = starts[source] + steps[pair]
        hi = min(caps[pair], top + steps[pair])
        target = inverse[pair]
        if lo < low[target]:
            low[target] = lo
        if hi > high[target]:
            high[target] = hi
    return low, high


@njit(nogil=True, cache=True)
def scatter(
    sources, steps, caps, inverse, starts, offsets, coeffs, low, target_offsets, moduli, out
):  # pragma: no cover - compiled
    """``out[target] += x**k * coeffs[source]`` for every move, modulo each modulus."""
    count = len(moduli)
    for pair in range(len(sources)):
        source = sources[pair]
        top = starts[source] + offsets[source + 1] - offsets[source] - 1
        lo = starts[source] + steps[pair]
        hi = min(caps[pair], top + steps[pair])
        target = inverse[pair]
        src = offsets[source]
        dst = target_offsets[target] + lo - low[target]
        for row in range(hi - lo + 1):
            for index in range(count):
                value = out[dst + row, index] + coeffs[src + row, index]
                if value >= moduli[index]:
                    value -= moduli[index]
                out[dst + row, index] = value


@njit(nogil=True, cache=True)
def gather(order, offsets, coeffs, new_offsets, out):  # pragma: no cover - compiled
    """Copy the windows of entries ``order[i]`` into position ``i`` of ``out``."""
    for position in range(len(order)):
        source = order[position]
        src = offsets[source]
        dst = new_offsets[position]
        for row in range(offsets[source + 1] - src):
            for index in range(coeffs.shape[1]):
                out[dst + row, index] = coeffs[src + row, index]
