"""Lower bounds on the steps needed to complete a partial polygon.

After the vertex in row ``r`` of column ``c`` has been processed, every occupied
boundary slot ends at an unprocessed vertex. With kink index ``K = r``:

* slots below ``K`` are horizontal edges leaving column ``c``; they end in
  row ``pos + 1`` of column ``c + 1``,
* slot ``K`` is the vertical kink edge; it ends in row ``K + 1`` of column ``c``,
* slots above ``K`` are horizontal edges entering column ``c``; they end in row
  ``pos`` of column ``c``.

Passing ``kink=None`` places slot ``pos`` in row ``pos`` of column ``c``, which
is the layout between two columns.

Each matched pair of loop ends still has to be joined through unprocessed
vertices. The joining path needs at least the vertical distance between its
end rows. It also has to pass to the right of every path nested inside it, so
the column it reaches is at least one more than the furthest column reached by
any nested pair; each column beyond its ends costs two horizontal steps. On
top of the closure cost come detours to the bottom and top borders when those
have not been touched yet, and, when polygons are only started in the first
column, the extension needed to span at least ``W`` columns.
"""

import typing
from dataclasses import dataclass

from . import kernels
from .signature import Signature, _pair_edges, match_pairs, pack


class PruneBound(typing.NamedTuple):
    """Additive components of a completion lower bound."""

    closure: int
    bottom: int
    top: int
    lengthwise: int

    @property
    def total(self) -> int:
        """Sum of all components."""
        return self.closure + self.bottom + self.top + self.lengthwise


@dataclass(frozen=True)
class PruneDecision:
    """Outcome of :py:func:`should_prune`."""

    discard: bool
    """Drop the whole entry."""

    cap: int
    """Highest degree worth keeping when the entry survives."""


def endpoint(pos, kink=None) -> typing.Tuple[int, int]:
    """Row and column offset of the vertex a boundary slot ends at."""
    if kink is None:
        return pos, 0
    if pos < kink:
        return pos + 1, 1
    if pos == kink:
        return kink + 1, 0
    return pos, 0


def _closure(edges, kink):
    """Closure cost and the furthest column offset any pair must reach."""
    pairs, parents = _pair_edges(edges)
    reach = [0] * len(pairs)
    cost = 0
    furthest = None
    for index in reversed(range(len(pairs))):
        lower, upper, _ = pairs[index]
        y_lo, x_lo = endpoint(lower, kink)
        y_hi, x_hi = endpoint(upper, kink)
        reach[index] = max(reach[index], x_lo, x_hi)
        cost += abs(y_hi - y_lo) + 2 * reach[index] - x_lo - x_hi

        parent = parents[index]
        if parent >= 0:
            reach[parent] = max(reach[parent], reach[index] + 1)
        elif furthest is None or reach[index] > furthest:
            furthest = reach[index]
    return cost, furthest


def closure_cost(signature, kink=None) -> int:
    """Steps needed to join every matched pair of loop ends.

    Between columns a pair of height ``h`` spans ``upper - lower`` rows and
    reaches ``h`` columns right of the boundary.
    """
    if kink is None:
        pairing = match_pairs(signature.edges)
        return sum(
            pair.upper - pair.lower + 2 * height
            for pair, height in zip(pairing.pairs, pairing.heights())
        )
    return _closure(signature.edges, kink)[0]


def boundary_cost(signature, width=None, kink=None) -> typing.Tuple[int, int]:
    """Detour steps still needed to touch the bottom and top rows."""
    if signature.is_empty:
        return 0, 0
    occupied = signature.occupied

    width = signature.width if width is None else width
    rows = [endpoint(pos, kink)[0] for pos in occupied]
    bottom = 0 if signature.touched_bottom else max(0, 2 * (min(rows) - 1))
    top = 0 if signature.touched_top else max(0, 2 * (width - max(rows)))
    return bottom, top


def lengthwise_cost(column, width) -> int:
    """Steps needed to extend a polygon reaching ``column`` to ``width`` columns."""
    return 2 * max(0, width - column)


def prune_bound(signature, column, config, kink=None) -> PruneBound:
    """All components of the completion bound for one signature."""
    closure, furthest = _closure(signature.edges, kink)
    bottom, top = boundary_cost(signature, config.width, kink)
    lengthwise = 0
    if config.seed_column_only and furthest is not None:
        lengthwise = lengthwise_cost(column + furthest, config.width)
    return PruneBound(closure, bottom, top, lengthwise)


def completion_bound(key, kink, column, config) -> int:
    """Total bound for a packed key; the engine's hot-path form of :py:func:`prune_bound`."""
    return int(
        kernels.key_bound(
            key, -1 if kink is None else kink, config.width, column, config.seed_column_only
        )
    )


def decide(min_degree, bound, max_degree) -> PruneDecision:
    """Discard when even the lowest degree cannot be completed within the cutoff."""
    return PruneDecision(min_degree + bound > max_degree, max_degree - bound)


def should_prune(entry, column, config, kink=None) -> PruneDecision:
    """Pruning decision for a ``(signature, polynomial)`` entry.

    The signature may be given packed. Degrees above the returned cap cannot
    contribute to any count up to ``config.max_degree``.
    """
    signature, poly = entry
    key = signature if isinstance(signature, int) else pack(signature)
    bound = completion_bound(key, kink, column, config)
    return decide(poly.min_degree, bound, config.max_degree)


def minimal_completion(signature, row, column, config) -> typing.Optional[int]:
    """Fewest steps that complete ``signature`` into a harvested polygon.

    ``signature`` is the boundary right after the vertex in ``row`` of
    ``column`` was processed. The unpruned engine is run from that state with a
    single unit term; the lowest harvested degree is the exact minimum.
    """
    # pylint: disable=import-outside-toplevel, cyclic-import
    from . import engine
    from .modular import TruncatedPoly

    width = config.width
    max_length = max(config.max_length, column + width + 2)
    search = engine.SweepConfig(
        width=width,
        max_width=config.max_width,
        max_length=max_length,
        max_degree=2 * width * max_length,
        moduli=config.moduli[:1],
        seed_column_only=config.seed_column_only,
        kink_simplification=False,
        pruning=False,
    )

    key = pack(signature) if isinstance(signature, Signature) else signature
    unit = TruncatedPoly.monomial(search.moduli, search.max_degree)
    state = engine.BoundaryStateMap(width, {key: unit})
    result = engine.sweep_from(state, search, column=column, row=row + 1)
    degrees = [poly.min_degree for poly in result.harvested.values() if not poly.is_zero]
    return min(degrees, default=None)
