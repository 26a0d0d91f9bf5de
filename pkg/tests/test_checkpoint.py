import pytest

from sap import checkpoint, engine
from sap.errors import CheckpointError, CheckpointMismatchError
from sap.modular import TruncatedPoly
from sap.signature import FLAG_BOTTOM, edges_key


@pytest.fixture
def config():
    return engine.SweepConfig(width=3, max_width=4)


def make_snapshot(config):
    moduli, top = config.moduli, config.max_degree
    state = engine.BoundaryStateMap(
        config.width,
        {
            edges_key([1, 2, 0, 0], FLAG_BOTTOM): TruncatedPoly.from_terms(moduli, top, {2: 1, 4: 3}),
            edges_key([1, 0, 0, 2], FLAG_BOTTOM): TruncatedPoly.from_terms(moduli, top, {3: 2}),
        },
    )
    harvested = {3: TruncatedPoly.from_terms(moduli, top, {8: 4})}
    return checkpoint.Snapshot(config, state, column=4, row=1, harvested=harvested)


def test_round_trip(config):
    snapshot = make_snapshot(config)
    restored = checkpoint.decode(checkpoint.encode(snapshot), config)
    assert restored.config == config
    assert restored.column == 4
    assert set(restored.state) == set(snapshot.state)
    for key in snapshot.state:
        assert restored.state[key] == snapshot.state[key]
        assert restored.state[key].min_degree == snapshot.state[key].min_degree
    assert restored.harvested == snapshot.harvested


def test_stats_round_trip(config):
    snapshot = make_snapshot(config)
    snapshot.stats = engine.WidthStats(3, peak_entries=17, peak_terms=40, seconds=1.5)
    restored = checkpoint.decode(checkpoint.encode(snapshot), config)
    assert restored.stats == snapshot.stats


def test_empty_state_round_trip(config):
    snapshot = checkpoint.Snapshot(config, engine.BoundaryStateMap(3), column=9)
    restored = checkpoint.decode(checkpoint.encode(snapshot), config)
    assert len(restored.state) == 0
    assert restored.column == 9


def test_encoding_is_deterministic(config):
    assert checkpoint.encode(make_snapshot(config)) == checkpoint.encode(make_snapshot(config))


def test_wrong_width_is_refused(config, tmp_path):
    path = tmp_path / "w3.ckpt"
    checkpoint.checkpoint_save(make_snapshot(config), path)
    with pytest.raises(CheckpointMismatchError):
        checkpoint.checkpoint_load(path, engine.SweepConfig(width=4, max_width=4))


def test_other_configuration_is_refused(config, tmp_path):
    path = tmp_path / "w3.ckpt"
    checkpoint.checkpoint_save(make_snapshot(config), path)
    with pytest.raises(CheckpointMismatchError):
        checkpoint.checkpoint_load(path, engine.SweepConfig(width=3, max_width=4, pruning=False))


def test_truncated_file_is_refused(config, tmp_path):
    data = checkpoint.encode(make_snapshot(config))
    path = tmp_path / "w3.ckpt"
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(CheckpointError):
        checkpoint.checkpoint_load(path, config)


def test_corrupt_file_is_refused(config):
    data = bytearray(checkpoint.encode(make_snapshot(config)))
    data[40] ^= 0xFF
    with pytest.raises(CheckpointError):
        checkpoint.decode(bytes(data))


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        checkpoint.checkpoint_load(tmp_path / "absent.ckpt")


def test_width_path(tmp_path):
    assert checkpoint.width_path(tmp_path, 7).name == "width-07.ckpt"


def test_resume_mid_sweep(tmp_path):
    config = engine.SweepConfig(width=4, max_width=5)
    expected = engine.sweep_width(config)
    saved = {}

    def on_checkpoint(state, column, harvested, stats):
        if column == 4:
            saved["data"] = checkpoint.encode(
                checkpoint.Snapshot(config, state, column, 1, harvested, stats)
            )

    engine.sweep_from(engine.initial_state(config), config, on_checkpoint=on_checkpoint)
    checkpoint.width_path(tmp_path, 4).write_bytes(saved["data"])

    resumed = engine.sweep_width(config, checkpoint_dir=tmp_path)
    assert resumed.per_length == expected.per_length
    assert resumed.stats.peak_entries == expected.stats.peak_entries
    assert resumed.stats.peak_terms == expected.stats.peak_terms


def test_enumeration_resumes_from_checkpoints(tmp_path):
    first = engine.enumerate_polygons(5, checkpoint_dir=tmp_path)
    assert sorted(path.name for path in tmp_path.iterdir()) == [
        f"width-{width:02d}.ckpt" for width in range(2, 6)
    ]
    again = engine.enumerate_polygons(5, checkpoint_dir=tmp_path)
    assert again.series == first.series
    for before, after in zip(first.widths, again.widths):
        assert before.peak_entries > 0
        assert after.peak_entries == before.peak_entries
        assert after.peak_terms == before.peak_terms
        assert after.seconds > 0


def test_mismatched_checkpoint_directory(tmp_path):
    engine.enumerate_polygons(3, checkpoint_dir=tmp_path)
    with pytest.raises(CheckpointMismatchError):
        engine.enumerate_polygons(3, checkpoint_dir=tmp_path, pruning=False)
