import pytest

from sap import engine, oracle
from sap.errors import BudgetError

POLYGONS = {4: 1, 6: 2, 8: 7, 10: 28, 12: 124, 14: 588, 16: 2938, 18: 15268}


def test_walk_prefixes_are_canonical():
    prefixes = oracle.walk_prefixes(2)
    assert sorted(p[-1] for p in prefixes) == [(1, -1), (1, 1), (2, 0)]
    for prefix in oracle.walk_prefixes(3):
        assert len(set(prefix)) == len(prefix) == 4


@pytest.mark.parametrize("n_max", [4, 6, 10])
def test_small_series(n_max):
    series = oracle.brute_force_series(n_max)
    assert series.terms == {n: p for n, p in POLYGONS.items() if n <= n_max}


def test_series_to_eighteen_threaded():
    assert oracle.brute_force_series(18, threads=4).terms == POLYGONS


def test_bounding_box_counts():
    table = oracle.brute_force_series_bbox(8, width=2, length=4)
    assert table[2][4] == 1
    assert table[3][6] == 1
    assert table[4][8] == 1
    assert table[1] == {4: 0, 6: 0, 8: 0}


def test_bounding_boxes_match_rectangle_sweeps():
    max_width = 4
    n_max = 4 * max_width - 2
    for width in range(2, max_width + 1):
        config = engine.SweepConfig(width=width, max_width=max_width)
        per_length = engine.sweep_width(config).per_length
        table = oracle.brute_force_series_bbox(n_max, width, config.max_length)
        for length in range(width, config.max_length + 1):
            expected = {n: c for n, c in table[length].items() if c}
            assert per_length[length].residue_terms(0) == expected


def test_budget_is_enforced():
    with pytest.raises(BudgetError) as info:
        oracle.brute_force_series(30)
    assert info.value.estimated_nodes == oracle.estimated_nodes(30)
    with pytest.raises(BudgetError):
        oracle.brute_force_series(12, budget=10)


@pytest.mark.slow
def test_agrees_with_transfer_matrix():
    assert oracle.brute_force_series(22, threads=4) == engine.enumerate_polygons(6).series
