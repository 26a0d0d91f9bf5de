"""Helpers for generating warnings about moduli capacity and series fits."""

from .base import config
from .modular import capacity_bound


def capacity_shortfall(moduli, max_degree):
    """Get a warning when the moduli cannot hold every count up to ``max_degree``."""
    product = 1
    for modulus in moduli:
        product *= modulus

    bound = capacity_bound(max_degree)
    if product > bound:
        return None

    return (
        f"{len(moduli)} moduli (product ~2**{product.bit_length() - 1}) cannot bound"
        f" counts up to n={max_degree} (3**{max_degree} ~2**{bound.bit_length() - 1});"
        f" reconstructed terms near n={max_degree} may be wrapped."
    )


def xc_not_converged(estimate):
    """Get a warning for a critical point estimate that did not settle."""
    if estimate.converged:
        return None

    tolerance = config.getfloat("analysis", "tolerance")
    if not 0 < estimate.xc2 < 1:
        return f"x_c^2 estimate {float(estimate.xc2):.6g} lies outside (0, 1)."

    return (
        f"x_c^2 estimate did not settle: spread {float(estimate.spread):.3g},"
        f" drift {float(estimate.drift):.3g} (tolerance {tolerance:g})."
    )


def fit_unstable(fit, tolerance=1e-6):
    """Get a warning when an amplitude fit misses the term just below its window."""
    if fit.holdout is None or abs(fit.holdout) <= tolerance:
        return None

    return (
        f"amplitude fit with k={fit.k} predicts n={fit.window[0] - 2}"
        f" with relative error {float(fit.holdout):.3g}."
    )
