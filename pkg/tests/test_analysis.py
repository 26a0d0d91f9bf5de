import io

import pytest
from mpmath import mp, mpf

from sap import analysis
from sap.errors import AnalysisError
from sap.series import ExactSeries

XC2 = 0.1436806292698685
AMPLITUDE = mpf("0.56230129")


def synthetic(coefficients, n_range, mu=None):
    """``mu**n * n**(-5/2) * sum_i a_i / n**i`` for even ``n``."""
    with mp.workdps(60):
        mu = analysis.conjectured_mu() if mu is None else mpf(mu)
        return {
            n: mu**n
            * mpf(n) ** (-analysis.EXPONENT)
            * sum(mpf(a) / mpf(n) ** i for i, a in enumerate(coefficients))
            for n in n_range
        }


def test_conjectured_root():
    assert float(analysis.conjectured_xc2()) == pytest.approx(XC2, abs=1e-16)
    assert abs(analysis.conjectured_xc2() - analysis.conjectured_xc2("bisect")) < mpf(10) ** -50
    assert float(analysis.conjectured_mu()) == pytest.approx(XC2**-0.5, rel=1e-15)


def test_conjectured_root_method():
    with pytest.raises(ValueError):
        analysis.conjectured_xc2("newton")


@pytest.mark.parametrize("k", [0, 2, 5])
def test_fit_recovers_single_amplitude(k):
    data = synthetic([0.5], range(10, 62, 2))
    fit = analysis.fit_amplitudes(data, "conjectured", k)
    assert abs(fit.amplitude - mpf("0.5")) < mpf(10) ** -30
    assert fit.window == tuple(range(60 - 2 * k, 62, 2))
    assert fit.holdout < mpf(10) ** -30


def test_fit_recovers_corrections():
    data = synthetic([0.5, -0.3, 0.2], range(10, 62, 2), mu="2.6")
    fit = analysis.fit_amplitudes(data, "2.6", 2)
    assert [float(a) for a in fit.coefficients] == pytest.approx([0.5, -0.3, 0.2], abs=1e-25)
    assert fit.residual < mpf(10) ** -30


def test_fit_respects_n_last():
    data = synthetic([0.5, 0.1], range(10, 62, 2))
    fit = analysis.fit_amplitudes(data, "conjectured", 1, n_last=30)
    assert fit.window == (28, 30)


def test_fit_errors():
    data = synthetic([0.5], range(10, 16, 2))
    with pytest.raises(AnalysisError):
        analysis.fit_amplitudes(data, "conjectured", 3)
    with pytest.raises(AnalysisError):
        analysis.fit_amplitudes(data, "conjectured", -1)
    with pytest.raises(AnalysisError):
        analysis.fit_amplitudes(data, "-2", 0)


def test_b_sequence_is_constant_on_model_data():
    data = synthetic([AMPLITUDE, 0.2, -0.1], range(4, 40, 2))
    rows = analysis.estimate_B_sequence(data, "conjectured", range(2, 5), min_n=10)
    assert rows
    assert {row.k for row in rows} == {2, 3, 4}
    for row in rows:
        assert abs(row.a0 - AMPLITUDE) < mpf(10) ** -25
        assert float(row.inv_n) == pytest.approx(1 / row.n_last)
        assert row.n_last - 2 * row.k >= 10


def test_write_b_table():
    rows = [analysis.BRow(20, 1 / mpf(20), 4, AMPLITUDE)]
    stream = io.StringIO()
    analysis.write_b_table(rows, stream)
    lines = stream.getvalue().splitlines()
    assert lines[0] == "n_last\tinv_n\tk\ta0"
    fields = lines[1].split("\t")
    assert fields[0] == "20" and fields[2] == "4"
    assert float(fields[1]) == pytest.approx(0.05)
    assert float(fields[3]) == pytest.approx(0.56230129)


def test_xc_estimate_on_synthetic_series():
    data = synthetic([0.5, 0.05, -0.02], range(4, 64, 2))
    estimate = analysis.estimate_xc2(data)
    assert abs(float(estimate.xc2) - XC2) < 1e-8
    assert estimate.converged
    assert estimate.n_last == 62
    assert estimate.orders == (2, 3, 4, 5, 6)
    assert float(estimate.mu) == pytest.approx(XC2**-0.5, rel=1e-7)
    assert float(estimate.conjectured) == pytest.approx(XC2, abs=1e-16)


def test_xc_estimate_flags_garbled_series():
    data = synthetic([0.5], range(4, 64, 2))
    garbled = dict(zip(data, reversed(list(data.values()))))
    estimate = analysis.estimate_xc2(garbled)
    assert not estimate.converged


@pytest.mark.parametrize("scale", [7, 10**12, 3**40])
def test_xc_estimate_ignores_overall_scale(scale):
    terms = {n: int(v) for n, v in synthetic([10**6, 3], range(4, 64, 2)).items()}
    base = analysis.estimate_xc2(ExactSeries(terms))
    scaled = analysis.estimate_xc2(ExactSeries({n: p * scale for n, p in terms.items()}))
    with mp.workdps(60):
        assert abs(scaled.xc2 - base.xc2) < mpf(10) ** -35
        for a, b in zip(scaled.estimates, base.estimates):
            assert abs(a - b) < mpf(10) ** -35
    assert scaled.n_last == base.n_last


def test_xc_estimate_needs_terms():
    with pytest.raises(AnalysisError):
        analysis.estimate_xc2(ExactSeries({4: 1, 6: 2, 8: 7}))


def test_exact_series_input():
    series = ExactSeries({n: int(v) for n, v in synthetic([10**6], range(4, 40, 2)).items()})
    estimate = analysis.estimate_xc2(series, orders=(2, 3))
    assert 0 < estimate.xc2 < 1


@pytest.mark.slow
def test_enumerated_series_acceptance():
    from sap import engine

    series = engine.enumerate_polygons(17).series
    estimate = analysis.estimate_xc2(series)
    assert abs(float(estimate.xc2) - XC2) < 1e-5
    for k in range(4, 9):
        fit = analysis.fit_amplitudes(series, "conjectured", k)
        assert abs(float(fit.amplitude) - 0.56230129) < 1e-4
