"""Transfer-matrix sweep over strips of fixed width.

Polygons are counted with the finite-lattice method: for every strip width
``W`` from 2 to ``W_max`` a sweep counts the polygons whose bounding box is
exactly ``W`` rows by ``L`` columns, for ``W <= L <= 2 W_max - W + 1``, and
:py:func:`enumerate_polygons` adds these up (rectangles with ``L > W`` twice,
once per orientation). Every polygon of perimeter ``n <= 4 W_max - 2`` fits in
one of these rectangles.

A sweep moves a kinked boundary line through the strip, one vertex at a time,
column by column and bottom to top within a column (see
:py:mod:`sap.signature` for the slot layout). For each boundary signature it
keeps a truncated generating function in the number of steps. Loop ends carry
future connectivity: a lower and an upper end must still be joined to each
other on the unprocessed side. Hence two incoming ends may only be joined when
they form the pair ``12``, and a new partial loop must be spliced into one of
the loops reachable from the kink.

The state map is array-backed and every site update runs in the compiled
kernels of :py:mod:`sap.kernels`. Parallel updates partition the states by the
occupancy of the slots away from the kink. That occupancy never changes at a
site, so partitions write disjoint target states and the merged result does
not depend on the schedule.
"""

import contextlib
import functools
import logging
import time
import typing
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import checkpoint, kernels
from .base import config as sap_config
from .errors import CapacityError, InconsistencyError
from .modular import (
    TruncatedPoly,
    add_shifted,
    check_moduli,
    required_moduli,
    select_moduli,
    subtract,
)
from .series import ExactSeries, ResidueSeries, crt_series
from .signature import occupancy_mask, unpack

logger = logging.getLogger(__name__)

CLOSED = kernels.CLOSED
"""Pseudo target returned by :py:func:`transitions` when a polygon closes."""

MAX_WIDTH = 29
"""Widest strip whose packed keys fit a signed 64-bit integer."""


@dataclass(frozen=True)
class SweepConfig:
    """Parameters of one strip sweep.

    ``max_length`` defaults to ``2 W_max - W + 1`` and ``max_degree`` to the
    perimeter cutoff ``4 W_max - 2``. ``moduli`` defaults to the fewest
    default moduli able to hold every count up to ``max_degree``.
    """

    width: int
    max_width: int
    moduli: typing.Optional[typing.Tuple[int, ...]] = None
    seed_column_only: bool = True
    kink_simplification: bool = False
    pruning: bool = True
    max_length: typing.Optional[int] = None
    max_degree: typing.Optional[int] = None

    def __post_init__(self):
        if self.width < 2:
            raise ValueError(f"width {self.width} < 2")
        if self.width > self.max_width:
            raise ValueError(f"width {self.width} exceeds max width {self.max_width}")
        if self.width > MAX_WIDTH:
            raise ValueError(f"width {self.width} exceeds the supported {MAX_WIDTH}")
        if self.max_length is None:
            object.__setattr__(self, "max_length", 2 * self.max_width - self.width + 1)
        if self.max_degree is None:
            object.__setattr__(self, "max_degree", 4 * self.max_width - 2)
        if self.max_length < self.width:
            raise ValueError(f"max length {self.max_length} below width {self.width}")
        if self.max_degree % 2:
            raise ValueError(f"max degree {self.max_degree} is odd")
        if self.moduli is None:
            moduli = select_moduli("auto", self.max_degree, force=True)
        else:
            moduli = check_moduli(self.moduli)
        object.__setattr__(self, "moduli", moduli)

    def harvests_at(self, column) -> bool:
        """Whether polygons closing in ``column`` are collected."""
        first = self.width if self.seed_column_only else 1
        return first <= column <= self.max_length


@dataclass
class WidthStats:
    """Resource peaks of one sweep."""

    width: int
    peak_entries: int = 0
    peak_terms: int = 0
    seconds: float = 0.0

    def observe(self, state):
        """Fold the size of a state map into the peaks."""
        self.peak_entries = max(self.peak_entries, len(state))
        self.peak_terms = max(self.peak_terms, state.term_count())


class BoundaryStateMap:
    """Truncated generating functions keyed by packed signature.

    Entries are stored column-wise: ``keys`` ascending, ``starts[i]`` the
    structural minimum degree of entry ``i`` and
    ``coeffs[offsets[i]:offsets[i + 1]]`` its coefficient window, one row per
    degree and one column per modulus. Indexing returns a
    :py:class:`~sap.modular.TruncatedPoly` copy.
    """

    __slots__ = ("width", "moduli", "max_degree", "keys", "starts", "offsets", "coeffs")

    def __init__(self, width, entries=None, moduli=None, max_degree=None):
        entries = {} if entries is None else dict(entries)
        keys = sorted(key for key, poly in entries.items() if not poly.is_zero)
        if entries:
            first = next(iter(entries.values()))
            moduli = first.moduli if moduli is None else moduli
            max_degree = first.max_degree if max_degree is None else max_degree

        moduli = () if moduli is None else tuple(moduli)
        windows = [entries[key].window for key in keys]
        offsets = np.zeros(len(keys) + 1, dtype=np.int64)
        np.cumsum(windows, out=offsets[1:])
        if keys:
            coeffs = np.concatenate([entries[key].coeffs.T for key in keys])
        else:
            coeffs = np.zeros((0, len(moduli)), dtype=np.uint64)

        self.width = width
        self.moduli = moduli
        self.max_degree = 0 if max_degree is None else max_degree
        self.keys = np.array(keys, dtype=np.int64)
        self.starts = np.array([entries[key].min_degree for key in keys], dtype=np.int64)
        self.offsets = offsets
        self.coeffs = np.ascontiguousarray(coeffs, dtype=np.uint64)

    @classmethod
    def from_arrays(cls, width, moduli, max_degree, keys, starts, offsets, coeffs):
        """Wrap already sorted arrays without copying them."""
        state = cls.__new__(cls)
        state.width = width
        state.moduli = tuple(moduli)
        state.max_degree = max_degree
        state.keys = keys
        state.starts = starts
        state.offsets = offsets
        state.coeffs = coeffs
        return state

    def __len__(self):
        return len(self.keys)

    def __iter__(self):
        return iter(self.keys.tolist())

    def _index(self, key):
        index = int(np.searchsorted(self.keys, key))
        if index < len(self.keys) and self.keys[index] == key:
            return index
        return -1

    def __contains__(self, key):
        return self._index(key) >= 0

    def __getitem__(self, key):
        index = self._index(key)
        if index < 0:
            raise KeyError(key)
        window = self.coeffs[self.offsets[index] : self.offsets[index + 1]]
        return TruncatedPoly(
            self.moduli, self.max_degree, int(self.starts[index]), window.T.copy()
        )

    def items(self):
        """``(key, polynomial)`` pairs in ascending key order."""
        return [(key, self[key]) for key in self]

    def term_count(self) -> int:
        """Stored coefficients per modulus, summed over all entries."""
        return int(self.offsets[-1])

    def signatures(self):
        """Decoded signatures of all entries."""
        return [unpack(key, self.width) for key in self]


@dataclass
class RectangleResult:
    """Polygons harvested by one sweep, by the column they closed in."""

    config: SweepConfig
    harvested: typing.Dict[int, TruncatedPoly] = field(default_factory=dict)
    stats: typing.Optional[WidthStats] = None

    @property
    def per_length(self) -> typing.Dict[int, TruncatedPoly]:
        """Contributions of ``W x L`` rectangles for ``W <= L <= L_max``.

        With free seeding a polygon is harvested in every column at or right
        of its last one, so harvests are cumulative and per-length counts are
        their successive differences.
        """
        config = self.config
        zero = TruncatedPoly.zero(config.moduli, config.max_degree)
        lengths = range(config.width, config.max_length + 1)
        if config.seed_column_only:
            return {L: self.harvested[L] for L in lengths if L in self.harvested}

        result = {}
        for L in lengths:
            current = self.harvested.get(L, zero)
            previous = self.harvested.get(L - 1, zero)
            difference = subtract(current, previous)
            if not difference.is_zero:
                result[L] = difference
        return result


@dataclass
class Enumeration:
    """Output of :py:func:`enumerate_polygons`."""

    max_width: int
    moduli: typing.Tuple[int, ...]
    series: ExactSeries
    residues: typing.List[ResidueSeries]
    widths: typing.List[WidthStats]


def initial_state(config) -> BoundaryStateMap:
    """The empty boundary with weight one."""
    unit = TruncatedPoly.monomial(config.moduli, config.max_degree)
    return BoundaryStateMap(config.width, {0: unit})


def transitions(key, row, width, seed_allowed, simplify):
    """Targets of one source signature at the vertex in ``row``.

    Returns ``(target_key, k)`` pairs, ``k`` being the number of new edges.
    A polygon that closes with both borders touched yields ``(CLOSED, 0)``.
    """
    targets, steps, closed = kernels.key_moves(key, row, width, seed_allowed, simplify)
    if closed:
        return ((CLOSED, 0),)
    return tuple(zip(targets.tolist(), steps.tolist()))


def partition(state, row, config, chunks) -> typing.List[np.ndarray]:
    """Split a state map into index arrays of whole occupancy groups.

    Entries sharing the occupancy of every slot the vertex in ``row`` cannot
    change stay in the same part; groups are ordered by that occupancy mask.
    """
    count = len(state)
    if chunks <= 1 or count < 2:
        return [np.arange(count, dtype=np.int64)]

    excluded = {row - 1, row}
    if config.kink_simplification:
        excluded.add(row + 1)
    masks = occupancy_mask(state.keys, config.width, excluded)

    order = np.argsort(masks, kind="stable")
    ends = np.append(np.flatnonzero(np.diff(masks[order])) + 1, count)
    share = -(-count // chunks)
    picks = np.searchsorted(ends, share * np.arange(1, chunks))
    cuts = np.unique(np.concatenate(([0], ends[np.minimum(picks, len(ends) - 1)], [count])))
    return [order[begin:end] for begin, end in zip(cuts[:-1], cuts[1:])]


class _Part(typing.NamedTuple):
    keys: np.ndarray
    starts: np.ndarray
    offsets: np.ndarray
    coeffs: np.ndarray


def _update_part(sources, state, row, column, config, seed_allowed):
    """Targets written by the entries at ``sources`` and the polygons they close."""
    moduli = np.array(config.moduli, dtype=np.uint64)
    harvest = TruncatedPoly.zero(config.moduli, config.max_degree)
    args = (
        state.keys,
        state.starts,
        row,
        column,
        config.width,
        seed_allowed,
        config.kink_simplification,
        config.pruning,
        config.seed_column_only,
        config.max_degree,
    )
    empty = np.empty(0, dtype=np.int64)
    count = kernels.site_pairs(sources, *args, empty, empty, empty, empty)
    pair_sources, targets, steps, caps = (np.empty(count, dtype=np.int64) for _ in range(4))
    kernels.site_pairs(sources, *args, pair_sources, targets, steps, caps)

    keys, inverse = np.unique(targets, return_inverse=True)
    inverse = inverse.reshape(-1).astype(np.int64)
    low, high = kernels.target_windows(
        pair_sources, steps, caps, inverse, state.starts, state.offsets, len(keys)
    )
    offsets = np.zeros(len(keys) + 1, dtype=np.int64)
    np.cumsum(high - low + 1, out=offsets[1:])
    coeffs = np.zeros((offsets[-1], len(moduli)), dtype=np.uint64)
    kernels.scatter(
        pair_sources,
        steps,
        caps,
        inverse,
        state.starts,
        state.offsets,
        state.coeffs,
        low,
        offsets,
        moduli,
        coeffs,
    )

    if len(keys) and keys[0] == CLOSED:
        closed = coeffs[: offsets[1]]
        harvest = TruncatedPoly(config.moduli, config.max_degree, int(low[0]), closed.T.copy())
        keys, low, coeffs = keys[1:], low[1:], coeffs[offsets[1] :]
        offsets = offsets[1:] - offsets[1]
    return _Part(keys, low, offsets, coeffs), harvest


def _merge(parts, config) -> BoundaryStateMap:
    if len(parts) == 1:
        part = parts[0]
        return BoundaryStateMap.from_arrays(
            config.width, config.moduli, config.max_degree, *part
        )

    keys = np.concatenate([part.keys for part in parts])
    starts = np.concatenate([part.starts for part in parts])
    windows = np.concatenate([np.diff(part.offsets) for part in parts])
    coeffs = np.concatenate([part.coeffs for part in parts])
    offsets = np.zeros(len(keys) + 1, dtype=np.int64)
    np.cumsum(windows, out=offsets[1:])

    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    if np.any(keys[1:] == keys[:-1]):
        raise InconsistencyError("two partitions wrote the same target state")
    merged_offsets = np.zeros(len(keys) + 1, dtype=np.int64)
    np.cumsum(windows[order], out=merged_offsets[1:])
    merged = np.empty((merged_offsets[-1], len(config.moduli)), dtype=np.uint64)
    kernels.gather(order, offsets, coeffs, merged_offsets, merged)
    return BoundaryStateMap.from_arrays(
        config.width, config.moduli, config.max_degree, keys, starts[order], merged_offsets, merged
    )


def update_site(state, row, column, config, executor=None, chunks=1):
    """Move the kink past the vertex in ``row`` of ``column``.

    Returns the new state map and the polygons that closed at this vertex (the
    zero polynomial when none did or when ``column`` is not harvested).
    """
    seed_allowed = column == 1 or not config.seed_column_only
    parts = partition(state, row, config, chunks)
    work = functools.partial(
        _update_part, state=state, row=row, column=column, config=config, seed_allowed=seed_allowed
    )
    if executor is None or len(parts) == 1:
        outputs = list(map(work, parts))
    else:
        outputs = list(executor.map(work, parts))

    harvest = TruncatedPoly.zero(config.moduli, config.max_degree)
    for _, closed in outputs:
        add_shifted(harvest, closed, 0)
    if not config.harvests_at(column):
        harvest = TruncatedPoly.zero(config.moduli, config.max_degree)
    return _merge([part for part, _ in outputs], config), harvest


def finish_column(state, column, config) -> BoundaryStateMap:
    """Rotate every signature into the next column.

    Once the first column is done, the empty signature can no longer start a
    polygon unless seeding is free, so it is dropped.
    """
    keys, starts, offsets, coeffs = state.keys, state.starts, state.offsets, state.coeffs
    if config.seed_column_only and len(keys) and keys[0] == 0:
        keys, starts, coeffs = keys[1:], starts[1:], coeffs[offsets[1] :]
        offsets = offsets[1:] - offsets[1]
    rotated = (keys & 3) | ((keys >> 2) << 4)
    return BoundaryStateMap.from_arrays(
        state.width, state.moduli, state.max_degree, rotated, starts, offsets, coeffs
    )


def sweep_from(
    state,
    config,
    column=1,
    row=1,
    harvested=None,
    stats=None,
    executor=None,
    chunks=1,
    on_site=None,
    on_column=None,
    on_checkpoint=None,
) -> RectangleResult:
    """Continue a sweep whose next vertex is ``row`` of ``column``.

    ``row`` may be ``W + 1`` for a state that only needs its column finished.
    ``on_checkpoint(state, column, harvested, stats)`` runs at every column
    boundary.
    """
    # pylint: disable=too-many-arguments
    harvested = {} if harvested is None else harvested
    stats = WidthStats(config.width) if stats is None else stats

    while column <= config.max_length and len(state):
        for site_row in range(row, config.width + 1):
            state, harvest = update_site(state, site_row, column, config, executor, chunks)
            if not harvest.is_zero:
                total = harvested.setdefault(
                    column, TruncatedPoly.zero(config.moduli, config.max_degree)
                )
                add_shifted(total, harvest, 0)
            stats.observe(state)
            if on_site is not None:
                on_site(site_row, column, state)

        logger.debug("width %d column %d: %d states", config.width, column, len(state))
        state = finish_column(state, column, config)
        column, row = column + 1, 1
        if on_checkpoint is not None:
            on_checkpoint(state, column, harvested, stats)
        if on_column is not None:
            on_column(column - 1)

    return RectangleResult(config, harvested, stats)


@contextlib.contextmanager
def _executor(threads):
    if threads <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="sap") as executor:
        yield executor


def _chunks(threads):
    if threads <= 1:
        return 1
    return threads * sap_config.getint("enumerate", "partitions_per_thread")


def sweep_width(
    config,
    threads=1,
    on_site=None,
    on_column=None,
    checkpoint_dir=None,
    executor=None,
) -> RectangleResult:
    """Sweep one strip, optionally resuming from and saving checkpoints.

    A resumed sweep continues the peaks and the wall time stored in the
    checkpoint.
    """
    started = time.perf_counter()
    state, column, row, harvested = initial_state(config), 1, 1, {}
    stats = WidthStats(config.width)

    on_checkpoint = None
    if checkpoint_dir is not None:
        path = checkpoint.width_path(checkpoint_dir, config.width)
        if path.exists():
            snapshot = checkpoint.checkpoint_load(path, config)
            state, column, row = snapshot.state, snapshot.column, snapshot.row
            harvested = snapshot.harvested
            if snapshot.stats is not None:
                stats = snapshot.stats
            logger.info("resuming width %d at column %d", config.width, column)

        def on_checkpoint(state, column, harvested, stats):
            stats.seconds = previous + time.perf_counter() - started
            snapshot = checkpoint.Snapshot(config, state, column, 1, harvested, stats)
            checkpoint.checkpoint_save(snapshot, path)

    previous = stats.seconds
    logger.info("sweeping width %d up to length %d", config.width, config.max_length)
    with contextlib.ExitStack() as stack:
        if executor is None:
            executor = stack.enter_context(_executor(threads))
        result = sweep_from(
            state,
            config,
            column,
            row,
            harvested,
            stats=stats,
            executor=executor,
            chunks=_chunks(threads),
            on_site=on_site,
            on_column=on_column,
            on_checkpoint=on_checkpoint,
        )

    result.stats.seconds = previous + time.perf_counter() - started
    logger.info(
        "width %d done: peak %d states, %d terms, %.2fs",
        config.width,
        result.stats.peak_entries,
        result.stats.peak_terms,
        result.stats.seconds,
    )
    return result


def _residue_series(totals, index, max_degree):
    modulus = totals.moduli[index]
    terms = {}
    for n in range(max_degree + 1):
        residue = totals.coefficient(n)[index]
        if n % 2 or n < 4:
            if residue:
                raise InconsistencyError(f"nonzero count at n={n} modulo {modulus}")
            continue
        terms[n] = residue
    return ResidueSeries(modulus, terms)


def enumerate_polygons(
    max_width,
    moduli="auto",
    threads=1,
    pruning=True,
    kink_simplification=False,
    seed_column_only=True,
    checkpoint_dir=None,
    force=False,
    on_column=None,
) -> Enumeration:
    """Count polygons of perimeter up to ``4 max_width - 2``.

    Raises :py:class:`~sap.errors.CapacityError` when the moduli cannot hold
    the largest count, unless ``force``. When more moduli are given than the
    counts need, the reconstruction from the needed prefix must agree with the
    reconstruction from all of them.
    """
    if max_width < 2:
        raise ValueError(f"max width {max_width} < 2")
    if max_width > MAX_WIDTH:
        raise ValueError(f"max width {max_width} exceeds the supported {MAX_WIDTH}")
    max_degree = 4 * max_width - 2
    moduli = select_moduli(moduli, max_degree, force)

    totals = TruncatedPoly.zero(moduli, max_degree)
    widths = []
    with _executor(threads) as executor:
        for width in range(2, max_width + 1):
            config = SweepConfig(
                width=width,
                max_width=max_width,
                moduli=moduli,
                seed_column_only=seed_column_only,
                kink_simplification=kink_simplification,
                pruning=pruning,
            )
            result = sweep_width(
                config,
                threads=threads,
                on_column=on_column,
                checkpoint_dir=checkpoint_dir,
                executor=executor,
            )
            for length, poly in result.per_length.items():
                add_shifted(totals, poly, 0)
                if length > width:
                    add_shifted(totals, poly, 0)
            widths.append(result.stats)

    residues = [_residue_series(totals, i, max_degree) for i in range(len(moduli))]
    series = crt_series(residues)

    try:
        needed = required_moduli(moduli, max_degree)
    except CapacityError:
        needed = len(moduli)
    if needed < len(moduli):
        partial = crt_series(residues[:needed])
        mismatch = partial.first_difference(series)
        if mismatch is not None:
            raise InconsistencyError(f"redundant moduli disagree at n={mismatch}")

    return Enumeration(max_width, moduli, series, residues, widths)
