from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from sap import engine
from sap.errors import CapacityError
from sap.modular import DEFAULT_MODULI, TruncatedPoly
from sap.signature import (
    FLAG_BOTTOM,
    FLAG_MASK,
    FLAG_TOP,
    edges_key,
    insert_loop,
    iter_signatures,
    key_edges,
    occupancy_mask,
    pack,
    reachable_loops,
    unpack,
)

POLYGONS = {
    4: 1,
    6: 2,
    8: 7,
    10: 28,
    12: 124,
    14: 588,
    16: 2938,
    18: 15268,
    20: 81826,
    22: 449572,
}


def known(max_width):
    return {n: p for n, p in POLYGONS.items() if n <= 4 * max_width - 2}


def test_config_defaults():
    config = engine.SweepConfig(width=3, max_width=5)
    assert config.max_length == 8
    assert config.max_degree == 18
    assert config.moduli == DEFAULT_MODULI[:1]
    assert config.harvests_at(3) and config.harvests_at(8)
    assert not config.harvests_at(2)


@pytest.mark.parametrize("width, max_width", [(1, 3), (4, 3), (30, 30)])
def test_config_rejects_widths(width, max_width):
    with pytest.raises(ValueError):
        engine.SweepConfig(width=width, max_width=max_width)


def test_initial_state():
    state = engine.initial_state(engine.SweepConfig(width=2, max_width=2))
    assert len(state) == 1
    assert str(state.signatures()[0]) == "000"
    assert state[0].residue_terms(0) == {0: 1}


def test_seed_in_first_column():
    targets = engine.transitions(0, 1, 2, True, False)
    assert targets == ((0, 0), (edges_key([1, 2, 0], FLAG_BOTTOM), 2))


def test_no_seed_outside_first_column():
    assert engine.transitions(0, 1, 2, False, False) == ((0, 0),)


def test_insertion_inside_loop():
    targets = dict(engine.transitions(edges_key([1, 0, 0, 2]), 2, 3, False, False))
    assert targets[edges_key([1, 2, 1, 2])] == 2
    assert targets[edges_key([1, 0, 0, 2])] == 0


def test_single_end_moves_across_or_up():
    targets = engine.transitions(edges_key([1, 0, 2]), 2, 2, False, False)
    assert targets == ((edges_key([1, 2, 0], FLAG_TOP), 1),)
    targets = engine.transitions(edges_key([0, 1, 0, 2]), 1, 3, False, False)
    assert set(targets) == {
        (edges_key([1, 0, 0, 2], FLAG_BOTTOM), 1),
        (edges_key([0, 1, 0, 2], FLAG_BOTTOM), 1),
    }


def test_join_closes_polygon():
    key = edges_key([1, 2, 0], FLAG_TOP)
    assert engine.transitions(key, 1, 2, False, False) == ((engine.CLOSED, 0),)


def test_join_without_both_borders_is_dropped():
    assert engine.transitions(edges_key([1, 2, 0, 0]), 1, 3, False, False) == ()


def test_join_of_nested_loops():
    key = edges_key([1, 1, 2, 2])
    assert engine.transitions(key, 2, 3, False, False) == ((edges_key([1, 0, 0, 2]), 0),)


@pytest.mark.parametrize(
    "edges, row", [([1, 1, 2, 2], 1), ([1, 2, 1, 2], 2), ([1, 1, 2, 2], 3)]
)
def test_forbidden_kink_pairs(edges, row):
    assert engine.transitions(edges_key(edges), row, 3, False, False) == ()


def signature_model(key, row, width, seed_allowed, simplify):
    """Targets of one key built from the signature helpers."""
    flags = key & FLAG_MASK
    edges = key_edges(key, width)
    kink = row - 1
    below, left = edges[kink], edges[kink + 1]
    top_row = row == width
    touch = (FLAG_BOTTOM if row == 1 else 0) | (FLAG_TOP if top_row else 0)

    moves = []
    if not below and not left:
        moves.append((edges, 0, flags))
        if not top_row and any(edges):
            for pair in reachable_loops(edges, kink):
                moves.append((insert_loop(edges, kink, pair), 2, flags | touch))
        elif not top_row and seed_allowed:
            seed = list(edges)
            seed[kink], seed[kink + 1] = 1, 2
            moves.append((seed, 2, flags | touch))
    elif not below or not left:
        state = below or left
        moves.append((edges[:kink] + [state, 0] + edges[kink + 2 :], 1, flags | touch))
        if not top_row:
            moves.append((edges[:kink] + [0, state] + edges[kink + 2 :], 1, flags | touch))
    elif (below, left) == (1, 2):
        joined = edges[:kink] + [0, 0] + edges[kink + 2 :]
        if not any(joined):
            return {(engine.CLOSED, 0)} if flags | touch == FLAG_MASK else set()
        moves.append((joined, 0, flags | touch))

    targets = set()
    for new, k, new_flags in moves:
        new = list(new)
        if simplify and not top_row:
            moved, above = new[kink + 1], new[kink + 2]
            if moved and not above:
                new[kink + 1], new[kink + 2] = 0, moved
            elif moved and (moved, above) != (1, 2):
                continue
        targets.add((edges_key(new, new_flags), k))
    return targets


@pytest.mark.parametrize("width", [2, 3, 4, 5])
@pytest.mark.parametrize("simplify", [False, True])
def test_compiled_moves_match_signature_model(width, simplify):
    for signature in iter_signatures(width, flags=True):
        key = pack(signature)
        for row in range(1, width + 1):
            for seed_allowed in (False, True):
                expected = signature_model(key, row, width, seed_allowed, simplify)
                moves = engine.transitions(key, row, width, seed_allowed, simplify)
                assert len(moves) == len(expected)
                assert set(moves) == expected, (str(signature), row)


@pytest.mark.parametrize("width", [2, 3, 4, 5])
@pytest.mark.parametrize("simplify", [False, True])
def test_only_kink_slots_change_occupancy(width, simplify):
    for signature in iter_signatures(width, flags=True):
        key = pack(signature)
        for row in range(1, width + 1):
            excluded = {row - 1, row}
            if simplify:
                excluded.add(row + 1)
            mask = occupancy_mask(key, width, excluded)
            for target, _ in engine.transitions(key, row, width, True, simplify):
                if target != engine.CLOSED:
                    assert occupancy_mask(target, width, excluded) == mask, (str(signature), row)


def test_state_map_round_trips_polynomials():
    config = engine.SweepConfig(width=3, max_width=4)
    moduli, top = config.moduli, config.max_degree
    polys = {
        edges_key([1, 2, 0, 0], FLAG_BOTTOM): TruncatedPoly.from_terms(moduli, top, {2: 1, 4: 3}),
        edges_key([1, 0, 0, 2]): TruncatedPoly.from_terms(moduli, top, {3: 2}),
        edges_key([0, 1, 2, 0]): TruncatedPoly.zero(moduli, top),
    }
    state = engine.BoundaryStateMap(3, polys)
    assert len(state) == 2
    assert list(state) == sorted(key for key, poly in polys.items() if not poly.is_zero)
    assert state.term_count() == 4
    for key in state:
        assert state[key] == polys[key]
        assert state[key].min_degree == polys[key].min_degree
    assert edges_key([0, 1, 2, 0]) not in state
    with pytest.raises(KeyError):
        state[edges_key([0, 1, 2, 0])]


def test_enumeration_rejects_wide_strips():
    with pytest.raises(ValueError):
        engine.enumerate_polygons(engine.MAX_WIDTH + 1)


def test_update_site_harvest():
    config = engine.SweepConfig(width=2, max_width=2)
    unit = engine.initial_state(config)[0]
    state = engine.BoundaryStateMap(2, {edges_key([1, 2, 0], FLAG_TOP): unit})

    new, harvest = engine.update_site(state, 1, 2, config)
    assert len(new) == 0
    assert harvest.residue_terms(0) == {0: 1}

    new, harvest = engine.update_site(state, 1, 1, config)
    assert len(new) == 0
    assert harvest.is_zero


def test_width_two_rectangles():
    result = engine.sweep_width(engine.SweepConfig(width=2, max_width=2))
    per_length = result.per_length
    assert sorted(per_length) == [2, 3]
    assert per_length[2].residue_terms(0) == {4: 1}
    assert per_length[3].residue_terms(0) == {6: 1}
    assert result.stats.peak_entries >= 1


def test_free_seeding_matches_first_column_seeding():
    for width in (2, 3, 4):
        seeded = engine.sweep_width(engine.SweepConfig(width=width, max_width=4))
        free = engine.sweep_width(
            engine.SweepConfig(width=width, max_width=4, seed_column_only=False)
        )
        assert free.per_length == seeded.per_length


@pytest.mark.parametrize("max_width", [2, 3, 4, 6])
def test_enumerate_known_counts(max_width):
    result = engine.enumerate_polygons(max_width)
    assert result.series.terms == known(max_width)
    assert [stats.width for stats in result.widths] == list(range(2, max_width + 1))


def test_pruning_does_not_change_counts():
    for max_width in (3, 4, 5):
        pruned = engine.enumerate_polygons(max_width)
        full = engine.enumerate_polygons(max_width, pruning=False)
        assert pruned.series == full.series
        for a, b in zip(pruned.widths, full.widths):
            assert a.peak_entries <= b.peak_entries


def test_kink_simplification_does_not_change_counts():
    for max_width in (3, 4, 5):
        plain = engine.enumerate_polygons(max_width)
        simple = engine.enumerate_polygons(max_width, kink_simplification=True)
        assert simple.series == plain.series
        assert max(s.peak_entries for s in simple.widths) <= max(
            s.peak_entries for s in plain.widths
        )


def test_free_seeding_enumeration():
    assert engine.enumerate_polygons(4, seed_column_only=False).series.terms == known(4)


def test_threads_are_deterministic():
    single = engine.enumerate_polygons(5, threads=1)
    multi = engine.enumerate_polygons(5, threads=4)
    assert multi.series == single.series
    assert [r.terms for r in multi.residues] == [r.terms for r in single.residues]


def test_partitions_write_disjoint_targets():
    config = engine.SweepConfig(width=4, max_width=4)
    captured = {}

    def on_site(row, column, state):
        if (row, column) == (2, 3):
            captured["state"] = state

    engine.sweep_width(config, on_site=on_site)
    state = captured["state"]
    parts = engine.partition(state, 3, config, 8)
    assert len(parts) > 1
    assert sorted(np.concatenate(parts).tolist()) == list(range(len(state)))

    seen = set()
    for part in parts:
        written, _ = engine._update_part(part, state, 3, 3, config, False)
        targets = set(written.keys.tolist())
        assert not seen & targets
        seen |= targets

    with ThreadPoolExecutor(max_workers=4) as executor:
        parallel, _ = engine.update_site(state, 3, 3, config, executor, chunks=8)
    serial, _ = engine.update_site(state, 3, 3, config)
    assert set(parallel) == set(serial)
    assert all(parallel[key] == serial[key] for key in serial)


def test_redundant_moduli_agree(small_moduli):
    result = engine.enumerate_polygons(4, moduli=small_moduli + DEFAULT_MODULI[:1])
    assert result.series.terms == known(4)
    assert len(result.residues) == 3


def test_small_moduli_reconstruct(small_moduli):
    result = engine.enumerate_polygons(5, moduli=small_moduli)
    assert result.series.terms == known(5)
    assert [r.modulus for r in result.residues] == list(small_moduli)


def test_insufficient_moduli():
    with pytest.raises(CapacityError):
        engine.enumerate_polygons(4, moduli=(101,))


def test_signatures_decode():
    config = engine.SweepConfig(width=3, max_width=3)
    states = []
    engine.sweep_width(config, on_site=lambda row, column, state: states.append(state))
    for state in states:
        for key in state:
            assert unpack(key, 3).width == 3


@pytest.mark.slow
def test_consistency_under_extension():
    previous = engine.enumerate_polygons(3).series
    for max_width in range(4, 9):
        current = engine.enumerate_polygons(max_width).series
        assert current.restricted(previous.max_n) == previous
        previous = current


@pytest.mark.slow
def test_determinism_at_width_seven():
    single = engine.enumerate_polygons(7, threads=1)
    multi = engine.enumerate_polygons(7, threads=4)
    assert multi.series == single.series


@pytest.mark.slow
def test_variants_at_width_six():
    plain = engine.enumerate_polygons(6)
    assert engine.enumerate_polygons(6, pruning=False).series == plain.series
    assert engine.enumerate_polygons(6, kink_simplification=True).series == plain.series
