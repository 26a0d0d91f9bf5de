"""Miscellaneous utility functions."""

import os
import typing
import tempfile
import contextlib
from pathlib import Path

# pylint: disable=invalid-name


@contextlib.contextmanager
def atomic_write(path, mode="wb"):
    """Write to a temporary sibling of ``path`` and move it into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode) as stream:
            yield stream
            stream.flush()
            os.fsync(stream.fileno())
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def parse_int_list(text) -> typing.Tuple[int, ...]:
    """Parse ``"2,3,4"`` or ``"4-8"`` into a tuple of integers."""
    values = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "-" in item[1:]:
            lo, hi = item.split("-", 1)
            values.extend(range(int(lo), int(hi) + 1))
        else:
            values.append(int(item))
    return tuple(values)


def even_range(lo, hi) -> range:
    """Even integers in ``[lo, hi]``."""
    return range(lo + (lo % 2), hi + 1, 2)
