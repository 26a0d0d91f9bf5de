"""Boundary signatures of partially built polygons.

A transfer-matrix sweep cuts the lattice with a boundary line that crosses
``W + 1`` edge slots. Each slot is either empty or carries one end of a loop
that still has to be closed on the unprocessed side of the boundary. Reading
the slots from the bottom up, every :py:attr:`EdgeState.UPPER` end is joined in
the future to the nearest unmatched :py:attr:`EdgeState.LOWER` end below it, so
the sequence behaves like balanced parentheses.

Positions are 0-based slot indices throughout the package. The boundary line
has a single kink; before the vertex in row ``r`` (1-based) is processed the
kink index is ``K = r - 1`` and the slots read::

    [h'_1 .. h'_{r-1}, v, h_r .. h_W]

where ``h'`` are horizontal edges already leaving the current column, ``v`` is
the vertical edge entering row ``r`` from below and ``h`` are horizontal edges
entering the current column. Between columns the kink sits at index 0 and slot
0 is always empty.

Signatures are value objects. The hot paths of :py:mod:`sap.engine` never build
:py:class:`Signature` instances and work on packed integer keys instead: bits
0 and 1 hold the bottom and top touch flags, slot ``i`` occupies bits
``2 + 2i`` and ``3 + 2i``.
"""

import enum
import typing
from dataclasses import dataclass

import numpy as np

from .errors import DecodeError, SignatureError

FLAG_BOTTOM = 1
FLAG_TOP = 2
FLAG_MASK = FLAG_BOTTOM | FLAG_TOP


class EdgeState(enum.IntEnum):
    """State of one boundary edge slot."""

    EMPTY = 0
    LOWER = 1
    UPPER = 2


@dataclass(frozen=True)
class Signature:
    """Ordered edge states (bottom to top) plus border touch flags."""

    edges: typing.Tuple[EdgeState, ...]
    touched_bottom: bool = False
    touched_top: bool = False

    def __post_init__(self):
        try:
            edges = tuple(EdgeState(int(state)) for state in self.edges)
        except ValueError as exc:
            raise SignatureError(f"invalid edge state in {self.edges!r}") from exc
        if len(edges) < 2:
            raise SignatureError("a signature needs at least two edge slots")
        object.__setattr__(self, "edges", edges)
        _pair_edges(edges)

    @classmethod
    def from_string(cls, text, touched_bottom=False, touched_top=False):
        """Build a signature from a digit string such as ``"1122"``."""
        try:
            edges = tuple(EdgeState(int(char)) for char in text)
        except ValueError as exc:
            raise SignatureError(f"invalid signature string {text!r}") from exc
        return cls(edges, touched_bottom, touched_top)

    def __str__(self):
        return "".join(str(int(state)) for state in self.edges)

    @property
    def width(self) -> int:
        """Strip width ``W``; a signature has ``W + 1`` slots."""
        return len(self.edges) - 1

    @property
    def occupied(self) -> typing.Tuple[int, ...]:
        """Positions of all occupied slots."""
        return tuple(pos for pos, state in enumerate(self.edges) if state)

    @property
    def is_empty(self) -> bool:
        """Whether no slot is occupied."""
        return not any(self.edges)

    @property
    def flags(self) -> int:
        """Touch flags packed the same way as in compact keys."""
        return (FLAG_BOTTOM if self.touched_bottom else 0) | (
            FLAG_TOP if self.touched_top else 0
        )


class LoopPair(typing.NamedTuple):
    """A matched pair of loop ends and the number of pairs enclosing it."""

    lower: int
    upper: int
    level: int


@dataclass(frozen=True)
class LoopPairing:
    """Non-crossing pairing of loop ends induced by a signature.

    ``pairs`` are ordered by their lower end. ``parents[i]`` is the index of
    the innermost pair enclosing ``pairs[i]`` or ``-1`` for top-level pairs.
    """

    pairs: typing.Tuple[LoopPair, ...]
    parents: typing.Tuple[int, ...]

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def spans(self) -> typing.List[typing.Tuple[int, int]]:
        """Pairs as bare ``(lower, upper)`` tuples."""
        return [(pair.lower, pair.upper) for pair in self.pairs]

    def children(self, index) -> typing.List[int]:
        """Indices of pairs whose innermost enclosing pair is ``index``."""
        return [child for child, parent in enumerate(self.parents) if parent == index]

    def heights(self) -> typing.List[int]:
        """Depth of pair nesting inside each pair (0 for innermost pairs)."""
        heights = [0] * len(self.pairs)
        # children always follow their parents in lower-end order
        for index in reversed(range(len(self.pairs))):
            parent = self.parents[index]
            if parent >= 0:
                heights[parent] = max(heights[parent], heights[index] + 1)
        return heights

    def innermost_enclosing(self, lower, upper=None) -> int:
        """Index of the innermost pair strictly enclosing an interval, or -1."""
        upper = lower if upper is None else upper
        found = -1
        for index, pair in enumerate(self.pairs):
            if pair.lower < lower and pair.upper > upper:
                found = index
        return found


def _pair_edges(edges):
    """Stack scan returning ``(pairs, parents)``; validates balance."""
    stack = []
    pairs = []
    parents = []
    open_index = {}
    for pos, state in enumerate(edges):
        if state == EdgeState.LOWER:
            open_index[pos] = len(pairs)
            parents.append(open_index[stack[-1]] if stack else -1)
            pairs.append([pos, None, len(stack)])
            stack.append(pos)
        elif state == EdgeState.UPPER:
            if not stack:
                raise SignatureError(f"unmatched upper loop end at position {pos}")
            lower = stack.pop()
            pairs[open_index[lower]][1] = pos
        elif state != EdgeState.EMPTY:
            raise SignatureError(f"invalid edge state {state!r} at position {pos}")

    if stack:
        raise SignatureError(f"unmatched lower loop end at position {stack[-1]}")

    return tuple(LoopPair(*pair) for pair in pairs), tuple(parents)


def match_pairs(signature) -> LoopPairing:
    """Match every lower loop end with its upper partner.

    Accepts a :py:class:`Signature` or a plain sequence of edge states.
    """
    edges = signature.edges if isinstance(signature, Signature) else tuple(signature)
    pairs, parents = _pair_edges(edges)
    return LoopPairing(pairs, parents)


def reachable_loops(signature, insert_pos) -> typing.List[typing.Tuple[int, int]]:
    """Loops a new partial loop inserted at ``(insert_pos, insert_pos + 1)`` can join.

    These are the innermost loop enclosing the insertion point, if any, and the
    loops directly nested inside it (the top-level loops when nothing encloses
    the insertion point). Loops nested deeper, or lying outside the enclosing
    loop, cannot be reached without crossing another loop.
    """
    edges = signature.edges if isinstance(signature, Signature) else tuple(signature)
    if insert_pos < 0 or insert_pos + 1 >= len(edges):
        raise SignatureError(f"insertion position {insert_pos} out of range")
    if edges[insert_pos] or edges[insert_pos + 1]:
        raise SignatureError(f"insertion positions {insert_pos}, {insert_pos + 1} are occupied")

    pairing = match_pairs(edges)
    if not pairing.pairs:
        raise SignatureError("cannot join a loop in an empty signature")

    enclosing = pairing.innermost_enclosing(insert_pos, insert_pos + 1)
    indices = pairing.children(enclosing)
    if enclosing >= 0:
        indices.insert(0, enclosing)

    return [(pairing.pairs[i].lower, pairing.pairs[i].upper) for i in indices]


def insert_loop(edges, pos, pair) -> typing.List[int]:
    """Edge states after a new loop at ``(pos, pos + 1)`` joins ``pair``.

    The joined loop is split in two: the lower end of the new loop connects to
    one of its ends and the upper end to the other, whichever way keeps the
    pairing non-crossing. The result is re-encoded from the new pair set.
    """
    lower, upper = pair
    existing = [(span.lower, span.upper) for span in _pair_edges(edges)[0]]
    if (lower, upper) not in existing:
        raise SignatureError(f"{pair} is not a loop of {list(edges)}")

    spans = [span for span in existing if span != (lower, upper)]
    if lower < pos and upper > pos + 1:
        spans += [(lower, pos), (pos + 1, upper)]
    elif upper < pos:
        spans += [(lower, pos + 1), (upper, pos)]
    elif lower > pos + 1:
        spans += [(pos, upper), (pos + 1, lower)]
    else:
        raise SignatureError(f"loop {pair} overlaps insertion point {pos}")

    result = [EdgeState.EMPTY] * len(edges)
    for a, b in spans:
        result[a] = EdgeState.LOWER
        result[b] = EdgeState.UPPER
    return [int(state) for state in result]


def edges_key(edges, flags=0) -> int:
    """Pack raw edge states and flags into a compact key."""
    key = 0
    for state in reversed(edges):
        key = (key << 2) | int(state)
    return (key << 2) | flags


def key_edges(key, width) -> typing.List[int]:
    """Unpack the edge states of a key without validation."""
    key >>= 2
    edges = []
    for _ in range(width + 1):
        edges.append(key & 3)
        key >>= 2
    return edges


def pack(signature) -> int:
    """Compact integer key of a signature; all-empty and unflagged packs to 0."""
    return edges_key(signature.edges, signature.flags)


def unpack(key, width) -> Signature:
    """Decode a compact key for strip width ``width``."""
    if key < 0:
        raise DecodeError(f"negative key {key}")
    if key >> (2 * (width + 1) + 2):
        raise DecodeError(f"key {key:#x} has bits beyond {width + 1} edge slots")

    edges = key_edges(key, width)
    if 3 in edges:
        raise DecodeError(f"key {key:#x} holds the unused edge value 3")

    try:
        return Signature(
            tuple(edges),
            touched_bottom=bool(key & FLAG_BOTTOM),
            touched_top=bool(key & FLAG_TOP),
        )
    except SignatureError as exc:
        raise DecodeError(f"key {key:#x} is not a balanced signature") from exc


def rotate(key) -> int:
    """Move to the next column: every edge slot shifts up by one.

    The topmost slot must be empty; slot 0 becomes the empty vertical edge
    below row 1.
    """
    return (key & FLAG_MASK) | ((key >> 2) << 4)


def occupancy_mask(key, width, excluded=()):
    """Bit mask of occupied slots, ignoring the positions in ``excluded``.

    ``key`` may also be an array of packed keys, giving an array of masks.
    """
    slots = np.arange(width + 1, dtype=np.int64)
    keys = np.asarray(key, dtype=np.int64)
    occupied = ((keys[..., None] >> (2 + 2 * slots)) & 3) != 0
    occupied &= ~np.isin(slots, list(excluded))
    masks = occupied.astype(np.int64) @ (np.int64(1) << slots)
    return int(masks) if np.ndim(masks) == 0 else masks


def iter_signatures(width, flags=False) -> typing.Iterator[Signature]:
    """All valid signatures with ``width + 1`` slots, by backtracking."""
    slots = width + 1

    def extend(prefix, depth):
        remaining = slots - len(prefix)
        if remaining == 0:
            if depth == 0:
                yield tuple(prefix)
            return
        if depth + 1 < remaining:
            yield from extend(prefix + [EdgeState.LOWER], depth + 1)
        if depth > 0:
            yield from extend(prefix + [EdgeState.UPPER], depth - 1)
        if depth < remaining:
            yield from extend(prefix + [EdgeState.EMPTY], depth)

    flag_choices = [(False, False), (True, False), (False, True), (True, True)]
    for edges in extend([], 0):
        for bottom, top in flag_choices if flags else flag_choices[:1]:
            yield Signature(edges, bottom, top)
