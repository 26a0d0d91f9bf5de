""":py:mod:`marshmallow` schemas for sweep configurations, series and reports.

The following schema classes and their corresponding instances are used in this
project to serialize Python objects to and from JSON representations: the
``--format json`` output of :py:mod:`sap.cli`, run manifests, and the canonical
configuration dump hashed into checkpoint headers (:py:mod:`sap.checkpoint`).

Multiprecision analysis results (:py:mod:`mpmath` numbers) are dumped as
decimal strings so no digits are lost on the way through JSON.

:note: See :py:mod:`marshmallow` for more details on marshalling.

"""

# pylint: disable=invalid-name, too-few-public-methods, unused-argument

import mpmath  # type: ignore
from marshmallow import Schema, fields, post_load, validate  # type: ignore

from . import series as series_
from . import engine


class MultiPrecision(fields.Field):
    """Field rendering :py:mod:`mpmath` numbers as decimal strings."""

    def __init__(self, digits=20, **kwargs):
        super().__init__(**kwargs)
        self.digits = digits

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        return mpmath.nstr(value, self.digits)

    def _deserialize(self, value, attr, data, **kwargs):
        return mpmath.mpf(value)


class SweepConfigSchema(Schema):
    """:py:mod:`marshmallow` schema for :py:class:`sap.engine.SweepConfig`."""

    width = fields.Int(required=True, validate=validate.Range(min=2))
    """Strip width ``W`` in vertices."""

    max_width = fields.Int(required=True, validate=validate.Range(min=2))
    """Largest width ``W_max`` of the enumeration."""

    max_length = fields.Int(required=True)
    """Longest rectangle ``L_max = 2 W_max - W + 1``."""

    max_degree = fields.Int(required=True)
    """Perimeter cutoff ``N``."""

    moduli = fields.List(fields.Int(), required=True)
    """Residue moduli carried by every polynomial."""

    seed_column_only = fields.Bool(required=True)
    """Whether new polygons may only start in the first column."""

    kink_simplification = fields.Bool(required=True)
    """Whether kink states are canonicalized after each site."""

    pruning = fields.Bool(required=True)
    """Whether completion bounds discard states and coefficients."""

    @post_load
    def make_config(self, data, **kwargs):
        """Build the config object."""
        data["moduli"] = tuple(data["moduli"])
        return engine.SweepConfig(**data)


class WidthStatsSchema(Schema):
    """:py:mod:`marshmallow` schema for :py:class:`sap.engine.WidthStats`."""

    width = fields.Int()
    """Strip width."""

    peak_entries = fields.Int()
    """Largest number of boundary states held at once."""

    peak_terms = fields.Int()
    """Largest number of stored coefficients (per modulus) held at once."""

    seconds = fields.Float()
    """Wall time spent on this width."""


class RunManifestSchema(Schema):
    """Machine-readable record of one command-line run."""

    command = fields.List(fields.Str())
    """Command line as given."""

    config = fields.Dict()
    """Echo of the effective options."""

    moduli = fields.List(fields.Int())
    """Moduli used, if any."""

    max_width = fields.Int(allow_none=True)
    """``W_max`` for enumeration runs."""

    wall_time = fields.Float()
    """Total wall time in seconds."""

    widths = fields.List(fields.Nested(WidthStatsSchema))
    """Per-width resource peaks."""

    exit_code = fields.Int()
    """Exit code the run returned."""


class SeriesTermSchema(Schema):
    """One exact term."""

    n = fields.Int(required=True, validate=validate.Range(min=0))
    p = fields.Int(required=True, validate=validate.Range(min=0))


class ExactSeriesSchema(Schema):
    """:py:mod:`marshmallow` schema for :py:class:`sap.series.ExactSeries`."""

    terms = fields.Method("dump_terms", "load_terms", required=True)

    def dump_terms(self, obj):
        """Terms as a list of ``{n, p}`` records."""
        return [{"n": n, "p": p} for n, p in obj.terms.items()]

    def load_terms(self, value):
        """Terms back to a mapping."""
        terms = SeriesTermSchema(many=True).load(value)
        return {term["n"]: term["p"] for term in terms}

    @post_load
    def make_series(self, data, **kwargs):
        """Build the series object."""
        return series_.ExactSeries(data["terms"])


class ResidueTermSchema(Schema):
    """One residue term."""

    n = fields.Int(required=True, validate=validate.Range(min=0))
    residue = fields.Int(required=True, validate=validate.Range(min=0))


class ResidueSeriesSchema(Schema):
    """:py:mod:`marshmallow` schema for :py:class:`sap.series.ResidueSeries`."""

    modulus = fields.Int(required=True)
    terms = fields.Method("dump_terms", "load_terms", required=True)

    def dump_terms(self, obj):
        """Terms as a list of ``{n, residue}`` records."""
        return [{"n": n, "residue": r} for n, r in obj.terms.items()]

    def load_terms(self, value):
        """Terms back to a mapping."""
        terms = ResidueTermSchema(many=True).load(value)
        return {term["n"]: term["residue"] for term in terms}

    @post_load
    def make_series(self, data, **kwargs):
        """Build the series object."""
        return series_.ResidueSeries(data["modulus"], data["terms"])


class AsymptoticFitSchema(Schema):
    """:py:mod:`marshmallow` schema for :py:class:`sap.analysis.AsymptoticFit`."""

    mu = MultiPrecision()
    """Growth constant the fit was biased with."""

    k = fields.Int()
    """Number of correction terms."""

    window = fields.List(fields.Int())
    """Indices ``n`` entering the linear system."""

    coefficients = fields.List(MultiPrecision())
    """Amplitudes ``a_0 .. a_k``."""

    amplitude = MultiPrecision()
    """Leading amplitude ``B = a_0``."""

    residual = MultiPrecision(digits=5)
    """Largest relative residual of the solve."""

    holdout = MultiPrecision(digits=5, allow_none=True)
    """Relative error predicting the term just below the window."""


class XcEstimateSchema(Schema):
    """:py:mod:`marshmallow` schema for :py:class:`sap.analysis.XcEstimate`."""

    xc2 = MultiPrecision()
    mu = MultiPrecision()
    n_last = fields.Int()
    orders = fields.List(fields.Int())
    estimates = fields.List(MultiPrecision())
    spread = MultiPrecision(digits=5)
    drift = MultiPrecision(digits=5)
    converged = fields.Bool()
    conjectured = MultiPrecision()


class BTableRowSchema(Schema):
    """One row of the amplitude table."""

    n_last = fields.Int()
    inv_n = MultiPrecision(digits=12)
    k = fields.Int()
    a0 = MultiPrecision(digits=15)


sweep_config = SweepConfigSchema()
"""Schema instance for one sweep configuration."""

width_stats = WidthStatsSchema()
"""Schema instance for per-width statistics."""

manifest = RunManifestSchema()
"""Schema instance for run manifests."""

exact_series = ExactSeriesSchema()
"""Schema instance for exact series."""

residue_series = ResidueSeriesSchema()
"""Schema instance for residue series."""

asymptotic_fit = AsymptoticFitSchema()
"""Schema instance for amplitude fits."""

xc_estimate = XcEstimateSchema()
"""Schema instance for critical point estimates."""

b_table = BTableRowSchema(many=True)
"""Schema instance for amplitude tables."""
