"""Binary checkpoints of a strip sweep.

One file per strip width holds everything needed to resume a sweep at a column
boundary: the state map, the next sweep position, the polygons harvested so
far and a hash of the sweep configuration. All integers are little-endian.

Layout::

    magic         8 bytes  b"SAPCKPT\\0"
    header        <HHHHHH  version, width, max width, column, row, moduli count
    moduli        <Q each
    <IIB          max length, max degree, flag byte (seed column only, simplify, pruning)
    config hash   32 bytes SHA-256 of the canonical config dump
    <QQd          peak entries, peak terms, seconds so far
    <QQ           entry count E, coefficient row count R
    keys          E x <i8, strictly ascending
    starts        E x <u4, structural minimum degrees
    windows       E x <u4, stored degrees per entry (at least one)
    coefficients  R x moduli count <u8, degree-major
    <I            harvest count, then per column:
                  <III column, min degree and window, coefficients
    digest        32 bytes SHA-256 of everything above

Harvest coefficients are stored modulus-major as ``<u8``. Files are written to a
temporary name and moved into place, so a reader never sees half a file.
"""

import hashlib
import json
import logging
import struct
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import engine, schemas
from .base import config as sap_config
from .errors import CheckpointError, CheckpointMismatchError
from .misc import atomic_write
from .modular import TruncatedPoly

logger = logging.getLogger(__name__)

MAGIC = b"SAPCKPT\0"
VERSION = 2

_HEADER = struct.Struct("<HHHHHH")
_TRAILER = struct.Struct("<IIB")
_STATS = struct.Struct("<QQd")
_COUNTS = struct.Struct("<QQ")
_HARVEST = struct.Struct("<III")
_HARVEST_COUNT = struct.Struct("<I")
_DIGEST_SIZE = 32


@dataclass
class Snapshot:
    """A sweep paused at a column boundary."""

    config: "engine.SweepConfig"
    state: "engine.BoundaryStateMap"
    column: int
    row: int = 1
    harvested: typing.Dict[int, TruncatedPoly] = field(default_factory=dict)
    stats: typing.Optional["engine.WidthStats"] = None


def config_hash(config) -> bytes:
    """SHA-256 of the canonical JSON dump of a sweep configuration."""
    dumped = schemas.sweep_config.dump(config)
    canonical = json.dumps(dumped, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).digest()


def width_path(directory, width) -> Path:
    """Checkpoint file of one strip width inside ``directory``."""
    pattern = sap_config.get("checkpoint", "filename")
    return Path(directory) / pattern.format(width=width)


def _flag_byte(config):
    return (
        (1 if config.seed_column_only else 0)
        | (2 if config.kink_simplification else 0)
        | (4 if config.pruning else 0)
    )


def _poly_bytes(poly):
    return poly.coeffs.astype("<u8", copy=False).tobytes()


def encode(snapshot) -> bytes:
    """Serialize a snapshot, digest included."""
    config = snapshot.config
    chunks = [
        MAGIC,
        _HEADER.pack(
            VERSION,
            config.width,
            config.max_width,
            snapshot.column,
            snapshot.row,
            len(config.moduli),
        ),
        struct.pack(f"<{len(config.moduli)}Q", *config.moduli),
        _TRAILER.pack(config.max_length, config.max_degree, _flag_byte(config)),
        config_hash(config),
    ]

    stats = snapshot.stats or engine.WidthStats(config.width)
    state = snapshot.state
    chunks.append(_STATS.pack(stats.peak_entries, stats.peak_terms, stats.seconds))
    chunks.append(_COUNTS.pack(len(state), state.term_count()))
    chunks.append(state.keys.astype("<i8").tobytes())
    chunks.append(state.starts.astype("<u4").tobytes())
    chunks.append(np.diff(state.offsets).astype("<u4").tobytes())
    chunks.append(state.coeffs.astype("<u8").tobytes())

    harvested = {c: p for c, p in snapshot.harvested.items() if not p.is_zero}
    chunks.append(_HARVEST_COUNT.pack(len(harvested)))
    for column in sorted(harvested):
        poly = harvested[column]
        chunks.append(_HARVEST.pack(column, poly.min_degree, poly.window))
        chunks.append(_poly_bytes(poly))

    body = b"".join(chunks)
    return body + hashlib.sha256(body).digest()


class _Reader:
    """Cursor over a verified checkpoint body."""

    def __init__(self, data):
        self.data = data
        self.offset = 0

    def take(self, size):
        if self.offset + size > len(self.data):
            raise CheckpointError("checkpoint ends early")
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt):
        return fmt.unpack(self.take(fmt.size))

    def array(self, dtype, count):
        raw = self.take(np.dtype(dtype).itemsize * count)
        return np.frombuffer(raw, dtype=dtype)

    def poly(self, moduli, max_degree, min_degree, window):
        raw = self.take(8 * window * len(moduli))
        coeffs = np.frombuffer(raw, dtype="<u8").astype(np.uint64)
        coeffs = coeffs.reshape(len(moduli), window)
        if not window:
            return TruncatedPoly.zero(moduli, max_degree)
        return TruncatedPoly(moduli, max_degree, min_degree, coeffs)


def _read_state(reader, config):
    entries, rows = reader.unpack(_COUNTS)
    keys = reader.array("<i8", entries).astype(np.int64)
    starts = reader.array("<u4", entries).astype(np.int64)
    windows = reader.array("<u4", entries).astype(np.int64)
    if np.any(keys[1:] <= keys[:-1]):
        raise CheckpointError("checkpoint keys are not strictly ascending")
    if np.any(windows == 0):
        raise CheckpointError("checkpoint holds an empty entry")

    offsets = np.zeros(entries + 1, dtype=np.int64)
    np.cumsum(windows, out=offsets[1:])
    if offsets[-1] != rows:
        raise CheckpointError(f"checkpoint windows sum to {offsets[-1]}, not {rows}")
    count = len(config.moduli)
    coeffs = reader.array("<u8", rows * count).astype(np.uint64).reshape(rows, count)
    return engine.BoundaryStateMap.from_arrays(
        config.width, config.moduli, config.max_degree, keys, starts, offsets, coeffs
    )


def decode(data, expected=None) -> Snapshot:
    """Parse checkpoint bytes, verifying the digest and configuration."""
    # pylint: disable=too-many-locals
    if len(data) < len(MAGIC) + _DIGEST_SIZE:
        raise CheckpointError("checkpoint is truncated")
    body, digest = data[:-_DIGEST_SIZE], data[-_DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checkpoint digest mismatch (truncated or corrupt file)")

    reader = _Reader(body)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointError("not a checkpoint file")

    version, width, max_width, column, row, count = reader.unpack(_HEADER)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    moduli = struct.unpack(f"<{count}Q", reader.take(8 * count))
    max_length, max_degree, flags = reader.unpack(_TRAILER)
    stored_hash = reader.take(_DIGEST_SIZE)

    config = engine.SweepConfig(
        width=width,
        max_width=max_width,
        moduli=moduli,
        seed_column_only=bool(flags & 1),
        kink_simplification=bool(flags & 2),
        pruning=bool(flags & 4),
        max_degree=max_degree,
        max_length=max_length,
    )
    if config_hash(config) != stored_hash:
        raise CheckpointError("checkpoint header does not match its config hash")

    if expected is not None:
        if expected.width != width:
            raise CheckpointMismatchError(
                f"checkpoint is for width {width}, not {expected.width}"
            )
        if config_hash(expected) != stored_hash:
            raise CheckpointMismatchError("checkpoint was written with another configuration")

    peak_entries, peak_terms, seconds = reader.unpack(_STATS)
    stats = engine.WidthStats(width, peak_entries, peak_terms, seconds)
    state = _read_state(reader, config)

    (harvests,) = reader.unpack(_HARVEST_COUNT)
    harvested = {}
    for _ in range(harvests):
        harvest_column, min_degree, window = reader.unpack(_HARVEST)
        harvested[harvest_column] = reader.poly(moduli, max_degree, min_degree, window)

    if reader.offset != len(body):
        raise CheckpointError("trailing bytes after checkpoint body")

    return Snapshot(config, state, column, row, harvested, stats)


def checkpoint_save(snapshot, path):
    """Write a snapshot atomically."""
    data = encode(snapshot)
    try:
        with atomic_write(path) as stream:
            stream.write(data)
    except OSError as exc:
        raise CheckpointError(f"cannot write checkpoint {path}: {exc}") from exc
    logger.info(
        "saved width %d at column %d (%d states) to %s",
        snapshot.config.width,
        snapshot.column,
        len(snapshot.state),
        path,
    )


def checkpoint_load(path, expected=None) -> Snapshot:
    """Read a snapshot; ``expected`` is the configuration it must match."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    snapshot = decode(data, expected)
    logger.info("loaded width %d at column %d from %s", snapshot.config.width, snapshot.column, path)
    return snapshot
