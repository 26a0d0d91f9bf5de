"""Exact and residue polygon series and their text files.

Two line-oriented formats are shared by every command:

* exact series: ``n p_n`` per line,
* residue series: ``n residue modulus`` per line.

Blank lines and lines starting with ``#`` are ignored. Only even ``n`` may
appear, strictly ascending without gaps. JSON renditions dump the same fields
through :py:mod:`sap.schemas`.
"""

import json
import typing
from dataclasses import dataclass, field

from .errors import ModulusError, SeriesError, SeriesParseError
from .modular import check_moduli, crt_reconstruct


def _check_terms(terms):
    for n, value in terms.items():
        if n < 0 or n % 2:
            raise SeriesError(f"term n={n} is not a nonnegative even index")
        if value < 0:
            raise SeriesError(f"term n={n} is negative")


@dataclass(frozen=True)
class ExactSeries:
    """Polygon counts ``p_n`` for even ``n``; odd terms are implicitly zero."""

    terms: typing.Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        terms = {int(n): int(p) for n, p in sorted(self.terms.items())}
        _check_terms(terms)
        object.__setattr__(self, "terms", terms)

    def __getitem__(self, n):
        if n % 2:
            return 0
        return self.terms[n]

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def items(self):
        """``(n, p_n)`` pairs in ascending ``n``."""
        return self.terms.items()

    @property
    def max_n(self) -> int:
        """Largest index present (-1 when empty)."""
        return max(self.terms, default=-1)

    def restricted(self, n_max):
        """Terms with ``n <= n_max``."""
        return ExactSeries({n: p for n, p in self.terms.items() if n <= n_max})

    def residues(self, modulus):
        """Reduce every term modulo ``modulus``."""
        return ResidueSeries(modulus, {n: p % modulus for n, p in self.terms.items()})

    def first_difference(self, other) -> typing.Optional[int]:
        """Smallest ``n`` at which two series disagree over their common range."""
        top = min(self.max_n, other.max_n)
        indices = sorted(set(self.terms) | set(other.terms))
        for n in indices:
            if n > top:
                break
            if self.terms.get(n) != other.terms.get(n):
                return n
        return None


@dataclass(frozen=True)
class ResidueSeries:
    """Polygon counts reduced modulo one modulus."""

    modulus: int
    terms: typing.Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        (modulus,) = check_moduli([self.modulus])
        terms = {int(n): int(r) for n, r in sorted(self.terms.items())}
        _check_terms(terms)
        for n, residue in terms.items():
            if residue >= modulus:
                raise ModulusError(f"term n={n}: residue {residue} >= {modulus}")
        object.__setattr__(self, "modulus", modulus)
        object.__setattr__(self, "terms", terms)


def crt_series(residue_series) -> ExactSeries:
    """Combine residue series for pairwise coprime moduli into exact counts."""
    residue_series = list(residue_series)
    if not residue_series:
        raise ModulusError("no residue series given")

    indices = set(residue_series[0].terms)
    for series in residue_series[1:]:
        if set(series.terms) != indices:
            raise ModulusError(
                f"residue series modulo {series.modulus} covers different terms"
            )

    moduli = [series.modulus for series in residue_series]
    return ExactSeries(
        {
            n: crt_reconstruct([series.terms[n] for series in residue_series], moduli)
            for n in sorted(indices)
        }
    )


def _data_lines(text):
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, stripped.split()


def _parse_rows(text, fields_per_line):
    previous = None
    for lineno, tokens in _data_lines(text):
        if len(tokens) != fields_per_line:
            raise SeriesParseError(
                f"expected {fields_per_line} fields, found {len(tokens)}", lineno
            )
        try:
            values = [int(token) for token in tokens]
        except ValueError as exc:
            raise SeriesParseError(f"non-integer field in {tokens}", lineno) from exc

        n = values[0]
        if n < 0 or n % 2:
            raise SeriesParseError(f"n={n} is not a nonnegative even index", lineno)
        if previous is not None:
            if n == previous:
                raise SeriesParseError(f"duplicate entry for n={n}", lineno)
            if n < previous:
                raise SeriesParseError(f"n={n} is not ascending", lineno)
            if n != previous + 2:
                raise SeriesParseError(f"missing entry for n={previous + 2}", lineno)
        if any(value < 0 for value in values[1:]):
            raise SeriesParseError("negative value", lineno)

        previous = n
        yield lineno, values


def parse_exact_series(text) -> ExactSeries:
    """Parse the ``n p_n`` format."""
    return ExactSeries({n: p for _, (n, p) in _parse_rows(text, 2)})


def parse_residue_series(text) -> ResidueSeries:
    """Parse the ``n residue modulus`` format; the modulus must not change."""
    modulus = None
    terms = {}
    for lineno, (n, residue, line_modulus) in _parse_rows(text, 3):
        if modulus is None:
            modulus = line_modulus
        elif line_modulus != modulus:
            raise SeriesParseError(
                f"modulus {line_modulus} differs from {modulus}", lineno
            )
        if residue >= line_modulus:
            raise SeriesParseError(f"residue {residue} >= modulus {line_modulus}", lineno)
        terms[n] = residue

    if modulus is None:
        raise SeriesParseError("no residue lines found")
    try:
        return ResidueSeries(modulus, terms)
    except ModulusError as exc:
        raise SeriesParseError(str(exc)) from exc


def format_exact_series(series, header=None) -> str:
    """Render the canonical ``n p_n`` text."""
    lines = [f"# {line}" for line in (header or [])]
    lines += [f"{n} {p}" for n, p in series.items()]
    return "\n".join(lines) + "\n"


def format_residue_series(series, header=None) -> str:
    """Render the canonical ``n residue modulus`` text."""
    lines = [f"# {line}" for line in (header or [])]
    lines += [f"{n} {r} {series.modulus}" for n, r in series.terms.items()]
    return "\n".join(lines) + "\n"


def loads(text):
    """Parse any series text: JSON, residue or exact lines."""
    # pylint: disable=import-outside-toplevel
    from marshmallow import ValidationError  # type: ignore

    from . import schemas

    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SeriesParseError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
        schema = schemas.residue_series if "modulus" in data else schemas.exact_series
        try:
            return schema.load(data)
        except ValidationError as exc:
            raise SeriesParseError(f"invalid series: {exc.messages}") from exc

    first = next(_data_lines(text), None)
    if first is not None and len(first[1]) == 3:
        return parse_residue_series(text)
    return parse_exact_series(text)


def read_series(path):
    """Read an exact or residue series file."""
    with open(path, encoding="utf-8") as stream:
        return loads(stream.read())


def read_exact_series(path) -> ExactSeries:
    """Read a file that must hold an exact series."""
    series = read_series(path)
    if not isinstance(series, ExactSeries):
        raise SeriesParseError(f"{path} holds a residue series, not exact counts")
    return series


def read_residue_series(path) -> ResidueSeries:
    """Read a file that must hold a residue series."""
    series = read_series(path)
    if not isinstance(series, ResidueSeries):
        raise SeriesParseError(f"{path} holds exact counts, not residues")
    return series
