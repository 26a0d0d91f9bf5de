import pytest

from sap.errors import DecodeError, SignatureError
from sap.signature import (
    EdgeState,
    LoopPair,
    Signature,
    insert_loop,
    iter_signatures,
    match_pairs,
    occupancy_mask,
    pack,
    reachable_loops,
    rotate,
    unpack,
)


def sig(text, bottom=False, top=False):
    return Signature.from_string(text, bottom, top)


def test_string_round_trip():
    assert str(sig("1002")) == "1002"
    assert sig("1002").width == 3
    assert sig("1002").occupied == (0, 3)


@pytest.mark.parametrize("text", ["21", "1", "112", "1220", "13"])
def test_invalid_signatures(text):
    with pytest.raises(SignatureError):
        sig(text)


def test_match_single_loop():
    assert match_pairs(sig("12")).pairs == (LoopPair(0, 1, 0),)


def test_match_nested():
    assert match_pairs(sig("1122")).pairs == (LoopPair(0, 3, 0), LoopPair(1, 2, 1))


def test_match_against_stack_scan():
    pairing = match_pairs(sig("1110200022"))
    assert pairing.spans() == [(0, 9), (1, 8), (2, 4)]
    assert [pair.level for pair in pairing] == [0, 1, 2]
    assert pairing.parents == (-1, 0, 1)
    assert pairing.heights() == [2, 1, 0]


def test_children_and_enclosing():
    pairing = match_pairs(sig("112121022"))
    assert pairing.spans() == [(0, 8), (1, 2), (3, 4), (5, 7)]
    assert pairing.children(0) == [1, 2, 3]
    assert pairing.innermost_enclosing(6) == 3
    assert pairing.innermost_enclosing(0) == -1


def test_reachable_beside_single_loop():
    assert reachable_loops(sig("1200"), 2) == [(0, 1)]


def test_reachable_inside_single_loop():
    assert reachable_loops(sig("1002"), 1) == [(0, 3)]


def test_nested_loop_is_unreachable():
    assert reachable_loops(sig("112200"), 4) == [(0, 3)]


def test_enclosing_sibling_and_nested_sibling():
    edges = [1, 2, 1, 1, 1, 2, 2, 0, 0, 1, 2, 2]
    assert reachable_loops(edges, 7) == [(2, 11), (3, 6), (9, 10)]


def test_reachable_requires_empty_slots():
    with pytest.raises(SignatureError):
        reachable_loops(sig("1200"), 1)
    with pytest.raises(SignatureError):
        reachable_loops(sig("0000"), 1)


@pytest.mark.parametrize(
    "source, pos, pair, target",
    [
        ("1200", 2, (0, 1), "1122"),
        ("0012", 0, (2, 3), "1122"),
        ("1002", 1, (0, 3), "1212"),
        ("120012", 2, (4, 5), "121122"),
        ("112002", 3, (0, 5), "112212"),
    ],
)
def test_insert_loop(source, pos, pair, target):
    result = insert_loop([int(c) for c in source], pos, pair)
    assert "".join(map(str, result)) == target
    match_pairs(result)


def test_insert_loop_rejects_unknown_pair():
    with pytest.raises(SignatureError):
        insert_loop([1, 2, 0, 0], 2, (0, 3))


def test_empty_signature_packs_to_zero():
    assert pack(sig("000")) == 0
    assert unpack(0, 2) == sig("000")


def test_pack_unpack_all_signatures():
    keys = set()
    for signature in iter_signatures(4, flags=True):
        key = pack(signature)
        assert unpack(key, 4) == signature
        keys.add(key)
    assert len(keys) == len(list(iter_signatures(4, flags=True)))


def test_signature_counts():
    # Motzkin numbers: 1, 2, 4, 9, 21, 51
    assert [len(list(iter_signatures(w))) for w in range(1, 6)] == [2, 4, 9, 21, 51]


@pytest.mark.parametrize("key", [-1, 0b11 << 2, 0b10 << 2, 1 << 20])
def test_unpack_malformed(key):
    with pytest.raises(DecodeError):
        unpack(key, 2)


def test_rotate_shifts_slots():
    key = pack(sig("1200", bottom=True))
    assert unpack(rotate(key), 3) == sig("0120", bottom=True)


def test_occupancy_mask():
    key = pack(sig("1212"))
    assert occupancy_mask(key, 3) == 0b1111
    assert occupancy_mask(key, 3, {1, 2}) == 0b1001


def test_edge_state_values():
    assert [int(state) for state in EdgeState] == [0, 1, 2]
