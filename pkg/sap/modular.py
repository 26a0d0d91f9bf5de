"""Word-size modular arithmetic and degree-truncated polynomials.

Polygon counts outgrow machine words long before the enumeration is done, so
every generating function is carried modulo a few pairwise coprime moduli below
:math:`2^{62}` and the exact integers are recovered at the end by the Chinese
remainder theorem (:py:func:`crt_reconstruct`).

:py:class:`TruncatedPoly` stores its residues in a :py:mod:`numpy` ``uint64``
array with one row per modulus. Only the window of degrees between the
structural minimum degree and the highest degree written so far is kept. Two
residues below :math:`2^{62}` add without overflowing 64 bits, which is all
:py:func:`add_shifted` needs.
"""

import functools
import logging
import math
import operator
import typing

import numpy as np

from .errors import CapacityError, ModulusError

logger = logging.getLogger(__name__)

MAX_MODULUS = 2**62

DEFAULT_MODULI = (2**62, 2**62 - 1, 2**62 - 3)
"""Default moduli; pairwise coprime."""


def mod_add(a, b, modulus) -> int:
    """``(a + b) mod m`` for residues in ``[0, m)``."""
    total = a + b
    return total - modulus if total >= modulus else total


def mod_mul(a, b, modulus) -> int:
    """``(a * b) mod m``; Python integers give the double-width product."""
    if modulus == MAX_MODULUS:
        return (a * b) & (MAX_MODULUS - 1)
    return (a * b) % modulus


def check_moduli(moduli) -> typing.Tuple[int, ...]:
    """Validate a moduli list and return it as a tuple."""
    moduli = tuple(int(m) for m in moduli)
    if not moduli:
        raise ModulusError("at least one modulus is required")
    for m in moduli:
        if m < 2 or m > MAX_MODULUS:
            raise ModulusError(f"modulus {m} outside [2, 2**62]")
    for i, a in enumerate(moduli):
        for b in moduli[i + 1 :]:
            if math.gcd(a, b) != 1:
                raise ModulusError(f"moduli {a} and {b} are not coprime")
    return moduli


def crt_reconstruct(residues, moduli=None) -> int:
    """Unique ``x`` in ``[0, prod(m))`` with ``x = r_i (mod m_i)``.

    ``residues`` is either a list of ``(residue, modulus)`` pairs or, when
    ``moduli`` is given, a list of residues of the same length.
    """
    if moduli is None:
        pairs = [tuple(item) for item in residues]
    else:
        residues, moduli = list(residues), list(moduli)
        if len(residues) != len(moduli):
            raise ModulusError(
                f"{len(residues)} residues given for {len(moduli)} moduli"
            )
        pairs = list(zip(residues, moduli))

    moduli = check_moduli(m for _, m in pairs)
    product = functools.reduce(operator.mul, moduli, 1)

    result = 0
    for (residue, m) in pairs:
        if not 0 <= residue < m:
            raise ModulusError(f"residue {residue} outside [0, {m})")
        cofactor = product // m
        result += residue * cofactor * pow(cofactor, -1, m)
    return result % product


def capacity_bound(max_degree) -> int:
    """A priori upper bound on ``p_n`` for ``n <= max_degree``.

    Polygons are closed walks, so ``p_n`` is below the ``3**n`` non-reversing
    walks of the same length.
    """
    return 3**max_degree


def required_moduli(moduli, max_degree) -> int:
    """Fewest leading moduli whose product exceeds :py:func:`capacity_bound`."""
    bound = capacity_bound(max_degree)
    product = 1
    for count, m in enumerate(moduli, start=1):
        product *= m
        if product > bound:
            return count
    raise CapacityError(
        f"product of {len(moduli)} moduli is below 3**{max_degree}",
        required=bound,
        available=product,
    )


def select_moduli(choice, max_degree, force=False) -> typing.Tuple[int, ...]:
    """Resolve a moduli choice.

    ``choice`` is ``"auto"`` (or ``None``) for the fewest default moduli that
    bound every count up to ``max_degree``, or an explicit list. Insufficient
    capacity raises :py:class:`~sap.errors.CapacityError` unless ``force``.
    """
    if choice is None or choice == "auto":
        try:
            return DEFAULT_MODULI[: required_moduli(DEFAULT_MODULI, max_degree)]
        except CapacityError:
            if not force:
                raise
            logger.warning("default moduli cannot bound degree %d", max_degree)
            return DEFAULT_MODULI

    if isinstance(choice, str):
        choice = [item for item in choice.split(",") if item.strip()]
    moduli = check_moduli(int(m) for m in choice)
    try:
        required_moduli(moduli, max_degree)
    except CapacityError:
        if not force:
            raise
        logger.warning("moduli %s cannot bound degree %d", moduli, max_degree)
    return moduli


class TruncatedPoly:
    """Polynomial in the step variable with residue coefficients.

    ``coeffs[i, d - min_degree]`` is the coefficient of ``x**d`` modulo
    ``moduli[i]``. ``min_degree`` is structural: it is the lowest degree any
    contribution was ever added at, never read back from the residues, since an
    exact count can vanish modulo a single modulus. The zero polynomial has an
    empty window and ``min_degree == max_degree + 1``.
    """

    __slots__ = ("moduli", "max_degree", "min_degree", "coeffs")

    def __init__(self, moduli, max_degree, min_degree=None, coeffs=None):
        self.moduli = tuple(moduli)
        self.max_degree = max_degree
        if coeffs is None:
            coeffs = np.zeros((len(self.moduli), 0), dtype=np.uint64)
            min_degree = max_degree + 1
        self.min_degree = min_degree
        self.coeffs = coeffs

    @classmethod
    def zero(cls, moduli, max_degree):
        """The zero polynomial."""
        return cls(moduli, max_degree)

    @classmethod
    def monomial(cls, moduli, max_degree, degree=0, value=1):
        """``value * x**degree``; zero when ``degree`` exceeds the cap."""
        if degree > max_degree:
            return cls.zero(moduli, max_degree)
        column = np.array([[value % m] for m in moduli], dtype=np.uint64)
        return cls(moduli, max_degree, degree, column)

    @classmethod
    def from_terms(cls, moduli, max_degree, terms):
        """Build from a ``{degree: exact integer}`` mapping."""
        poly = cls.zero(moduli, max_degree)
        for degree, value in sorted(terms.items()):
            add_shifted(poly, cls.monomial(moduli, max_degree, degree, value), 0)
        return poly

    def __repr__(self):
        return (
            f"TruncatedPoly(moduli={self.moduli}, max_degree={self.max_degree},"
            f" terms={self.residue_terms(0)})"
        )

    def __eq__(self, other):
        if not isinstance(other, TruncatedPoly):
            return NotImplemented
        return (
            self.moduli == other.moduli
            and self.max_degree == other.max_degree
            and all(
                self.residue_terms(i) == other.residue_terms(i)
                for i in range(len(self.moduli))
            )
        )

    __hash__ = None  # type: ignore

    @property
    def is_zero(self) -> bool:
        """Whether nothing was ever added below the degree cap."""
        return self.coeffs.shape[1] == 0

    @property
    def window(self) -> int:
        """Number of stored degrees."""
        return self.coeffs.shape[1]

    @property
    def top_degree(self) -> int:
        """Highest stored degree (``min_degree - 1`` when zero)."""
        return self.min_degree + self.window - 1

    def copy(self):
        """Independent copy."""
        return TruncatedPoly(
            self.moduli, self.max_degree, self.min_degree, self.coeffs.copy()
        )

    def coefficient(self, degree) -> typing.Tuple[int, ...]:
        """Residues of the coefficient of ``x**degree``, one per modulus."""
        offset = degree - self.min_degree
        if offset < 0 or offset >= self.window:
            return (0,) * len(self.moduli)
        return tuple(int(value) for value in self.coeffs[:, offset])

    def residue_terms(self, index) -> typing.Dict[int, int]:
        """Nonzero ``{degree: residue}`` terms for one modulus."""
        row = self.coeffs[index]
        return {
            self.min_degree + offset: int(value)
            for offset, value in enumerate(row)
            if value
        }


def _column(moduli):
    return np.array(moduli, dtype=np.uint64)[:, None]


def add_shifted(target, source, k, cap=None):
    """``target += x**k * source`` in place, dropping degrees above the cap.

    The cap is the smaller of ``target.max_degree`` and ``cap``. Returns
    ``target``.
    """
    if target.moduli != source.moduli:
        raise ModulusError(f"moduli mismatch: {target.moduli} != {source.moduli}")
    if k not in (0, 1, 2):
        raise ValueError(f"step count {k} not in 0..2")
    if source.is_zero:
        return target

    limit = target.max_degree if cap is None else min(cap, target.max_degree)
    lo = source.min_degree + k
    hi = min(limit, source.top_degree + k)
    if lo > hi:
        return target

    if target.is_zero:
        target.min_degree = lo
        target.coeffs = source.coeffs[:, : hi - lo + 1].copy()
        return target

    new_lo = min(target.min_degree, lo)
    new_hi = max(target.top_degree, hi)
    if new_lo != target.min_degree or new_hi != target.top_degree:
        grown = np.zeros((len(target.moduli), new_hi - new_lo + 1), dtype=np.uint64)
        offset = target.min_degree - new_lo
        grown[:, offset : offset + target.window] = target.coeffs
        target.coeffs = grown
        target.min_degree = new_lo

    view = target.coeffs[:, lo - new_lo : hi - new_lo + 1]
    view += source.coeffs[:, : hi - lo + 1]
    moduli = _column(target.moduli)
    np.subtract(view, moduli, out=view, where=view >= moduli)
    return target


def subtract(minuend, subtrahend):
    """``minuend - subtrahend`` as a new polynomial.

    Meant for differences of cumulative counts, where every exact coefficient
    of the result is nonnegative. The result keeps the lower of the two
    structural minimum degrees.
    """
    if minuend.moduli != subtrahend.moduli:
        raise ModulusError(
            f"moduli mismatch: {minuend.moduli} != {subtrahend.moduli}"
        )
    if subtrahend.is_zero:
        return minuend.copy()

    lo = min(minuend.min_degree, subtrahend.min_degree)
    hi = max(minuend.top_degree, subtrahend.top_degree)
    moduli = _column(minuend.moduli)
    result = np.zeros((len(minuend.moduli), hi - lo + 1), dtype=np.uint64)

    if not minuend.is_zero:
        offset = minuend.min_degree - lo
        result[:, offset : offset + minuend.window] = minuend.coeffs

    offset = subtrahend.min_degree - lo
    view = result[:, offset : offset + subtrahend.window]
    # residues are below 2**62, so adding the modulus first cannot wrap
    view += moduli - subtrahend.coeffs
    np.subtract(view, moduli, out=view, where=view >= moduli)
    return TruncatedPoly(minuend.moduli, minuend.max_degree, lo, result)
