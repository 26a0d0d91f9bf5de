"""Asymptotic analysis of polygon series.

Polygon counts behave as ``p_n = mu**n * n**(-5/2) * sum_i a_i / n**i`` for
even ``n``, with no non-analytic corrections. Two estimates are built on that
form:

* :py:func:`fit_amplitudes` fixes ``mu`` and solves for ``a_0 .. a_k`` exactly
  on the ``k + 1`` largest terms of a window; ``a_0`` is the amplitude ``B``,
* :py:func:`estimate_xc2` extrapolates ratios ``p_n / p_{n-2}`` with the
  exponent fixed at its known value to find ``x_c**2 = 1 / mu**2``.

Terms span dozens of orders of magnitude, so every solve runs in
:py:mod:`mpmath` at the precision configured in ``[analysis] precision``.
Results are :py:class:`mpmath.mpf` numbers.
"""

import logging
import typing
from dataclasses import dataclass

import mpmath  # type: ignore
from mpmath import mp, mpf  # type: ignore

from .base import config, getints
from .errors import AnalysisError
from .series import ExactSeries

logger = logging.getLogger(__name__)

EXPONENT = mpf(5) / 2
"""Power of ``n`` in the leading asymptotic term."""

CONJECTURED_POLYNOMIAL = (581, 7, -13)
"""Coefficients of ``581 y**2 + 7 y - 13`` in ``y = x_c**2``."""


@dataclass(frozen=True)
class AsymptoticFit:
    """Amplitudes from one exact solve."""

    mu: typing.Any
    k: int
    window: typing.Tuple[int, ...]
    coefficients: typing.Tuple[typing.Any, ...]
    residual: typing.Any
    holdout: typing.Optional[typing.Any] = None

    @property
    def amplitude(self):
        """The leading amplitude ``B = a_0``."""
        return self.coefficients[0]


@dataclass(frozen=True)
class BRow:
    """One amplitude estimate against ``1 / n_last``."""

    n_last: int
    inv_n: typing.Any
    k: int
    a0: typing.Any


@dataclass(frozen=True)
class XcEstimate:
    """Critical point estimate with its convergence diagnostics."""

    xc2: typing.Any
    n_last: int
    orders: typing.Tuple[int, ...]
    estimates: typing.Tuple[typing.Any, ...]
    spread: typing.Any
    drift: typing.Any
    converged: bool
    conjectured: typing.Any

    @property
    def mu(self):
        """Growth constant ``1 / x_c``."""
        return 1 / mpmath.sqrt(self.xc2) if self.xc2 > 0 else mpf("nan")


def _precision():
    return config.getint("analysis", "precision")


def _even_terms(series) -> typing.Dict[int, typing.Any]:
    terms = series.terms if isinstance(series, ExactSeries) else dict(series)
    return {n: terms[n] for n in sorted(terms) if n % 2 == 0 and terms[n]}


def conjectured_xc2(method="quadratic"):
    """Positive root of ``581 y**2 + 7 y - 13``, the conjectured ``x_c**2``.

    ``method`` is ``"quadratic"`` for the closed form or ``"bisect"`` for a
    bracketing root search; both agree to working precision.
    """
    a, b, c = (mpf(value) for value in CONJECTURED_POLYNOMIAL)
    with mp.workdps(_precision()):
        if method == "quadratic":
            root = (-b + mpmath.sqrt(b * b - 4 * a * c)) / (2 * a)
        elif method == "bisect":
            root = mpmath.findroot(
                lambda y: (a * y + b) * y + c,
                (mpf(0), mpf(1)),
                solver="bisect",
                maxsteps=2 * mp.prec,
            )
        else:
            raise ValueError(f"unknown root method {method!r}")
    return root


def conjectured_mu():
    """Growth constant implied by :py:func:`conjectured_xc2`."""
    with mp.workdps(_precision()):
        return 1 / mpmath.sqrt(conjectured_xc2())


def resolve_mu(mu):
    """Accept ``"conjectured"``, a number or a decimal string."""
    if isinstance(mu, str) and mu == "conjectured":
        return conjectured_mu()
    with mp.workdps(_precision()):
        value = mpf(mu)
    if value <= 0:
        raise AnalysisError(f"mu must be positive, got {mu}")
    return value


def _scaled(p, n, mu):
    return mpf(p) * mu ** (-n) * mpf(n) ** EXPONENT


def fit_amplitudes(series, mu, k, n_last=None) -> AsymptoticFit:
    """Solve for ``a_0 .. a_k`` on the ``k + 1`` largest even terms up to ``n_last``."""
    if k < 0:
        raise AnalysisError(f"correction order k={k} is negative")
    terms = _even_terms(series)
    with mp.workdps(_precision()):
        mu = resolve_mu(mu)
        indices = [n for n in terms if n_last is None or n <= n_last]
        if len(indices) < k + 1:
            raise AnalysisError(
                f"k={k} needs {k + 1} terms, only {len(indices)} available"
            )
        window = indices[-(k + 1) :]

        matrix = mpmath.matrix([[mpf(1) / mpf(n) ** i for i in range(k + 1)] for n in window])
        rhs = mpmath.matrix([_scaled(terms[n], n, mu) for n in window])
        try:
            solution = mpmath.lu_solve(matrix, rhs)
        except ZeroDivisionError as exc:
            raise AnalysisError(f"singular system for window {window}") from exc

        coefficients = tuple(solution[i] for i in range(k + 1))

        def model(n):
            return mpmath.fsum(a / mpf(n) ** i for i, a in enumerate(coefficients))

        residual = max(abs(model(n) - rhs[row]) / abs(rhs[row]) for row, n in enumerate(window))

        holdout = None
        below = window[0] - 2
        if below in terms:
            expected = _scaled(terms[below], below, mu)
            holdout = abs(model(below) - expected) / abs(expected)

    return AsymptoticFit(mu, k, tuple(window), coefficients, residual, holdout)


def estimate_B_sequence(series, mu, k_range, min_n=None) -> typing.List[BRow]:
    """Amplitude estimates ``a_0`` against ``1 / n_last`` for every ``k``.

    Rows are ordered by ``k`` then ``n_last``; windows starting below
    ``min_n`` are skipped.
    """
    # pylint: disable=invalid-name
    min_n = config.getint("analysis", "min_window_n") if min_n is None else min_n
    indices = list(_even_terms(series))
    rows = []
    with mp.workdps(_precision()):
        mu = resolve_mu(mu)
        for k in k_range:
            for position in range(k, len(indices)):
                if indices[position - k] < min_n:
                    continue
                n_last = indices[position]
                fit = fit_amplitudes(series, mu, k, n_last)
                rows.append(BRow(n_last, 1 / mpf(n_last), k, fit.amplitude))
    return rows


def write_b_table(rows, stream):
    """Write amplitude rows as tab separated values with a header."""
    stream.write("n_last\tinv_n\tk\ta0\n")
    for row in rows:
        stream.write(
            f"{row.n_last}\t{mpmath.nstr(row.inv_n, 12)}\t{row.k}\t{mpmath.nstr(row.a0, 15)}\n"
        )


def _biased_ratios(terms):
    ratios = []
    for n, p in terms.items():
        previous = terms.get(n - 2)
        if previous:
            correction = (mpf(n) / mpf(n - 2)) ** EXPONENT
            ratios.append((n, mpf(p) / mpf(previous) * correction))
    return ratios


def _extrapolate(ratios, order):
    window = ratios[-(order + 1) :]
    matrix = mpmath.matrix([[mpf(1) / mpf(n) ** i for i in range(order + 1)] for n, _ in window])
    rhs = mpmath.matrix([ratio for _, ratio in window])
    try:
        solution = mpmath.lu_solve(matrix, rhs)
    except ZeroDivisionError as exc:
        raise AnalysisError(f"singular ratio fit of order {order}") from exc
    if solution[0] == 0:
        raise AnalysisError(f"ratio fit of order {order} has no leading term")
    return 1 / solution[0]


def estimate_xc2(series, orders=None, tolerance=None) -> XcEstimate:
    """Biased ratio extrapolation of the critical point ``x_c**2``.

    The ratios ``p_n / p_{n-2} * (n / (n - 2))**(5/2)`` tend to ``1 / x_c**2``
    with corrections in powers of ``1 / n``. Each order ``j`` fits a degree-``j``
    polynomial in ``1 / n`` exactly through the last ``j + 1`` ratios. The
    estimate from the highest order is reported; ``spread`` is the range over
    all orders and ``drift`` the change when the window ends one term earlier.
    """
    orders = tuple(getints("analysis", "xc_orders") if orders is None else orders)
    tolerance = config.getfloat("analysis", "tolerance") if tolerance is None else tolerance
    terms = _even_terms(series)
    if len(terms) < 12:
        raise AnalysisError(f"need at least 12 even terms, got {len(terms)}")

    with mp.workdps(_precision()):
        ratios = _biased_ratios(terms)
        orders = tuple(order for order in orders if order + 2 <= len(ratios))
        if not orders:
            raise AnalysisError("no extrapolation order fits the available ratios")

        estimates = tuple(_extrapolate(ratios, order) for order in orders)
        xc2 = estimates[-1]
        spread = max(estimates) - min(estimates)
        drift = abs(xc2 - _extrapolate(ratios[:-1], orders[-1]))
        converged = bool(0 < xc2 < 1 and spread < tolerance and drift < tolerance)

    if not converged:
        logger.info("x_c^2 estimate %s did not converge", mpmath.nstr(xc2, 12))
    return XcEstimate(
        xc2=xc2,
        n_last=ratios[-1][0],
        orders=orders,
        estimates=estimates,
        spread=spread,
        drift=drift,
        converged=converged,
        conjectured=conjectured_xc2(),
    )
