from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special

from fracbam.errors import AccuracyError, DomainError
from fracbam.mittag_leffler import (
    MlOrder,
    frac_integral_identity_residual,
    mainardi_enclosure,
    ml_array,
    ml_one,
    ml_two,
)
from ml_oracle_table import ML_ORACLE


# {{{ reference values


@pytest.mark.parametrize("delta, rho, z, expected", ML_ORACLE)
def test_series_oracle(delta, rho, z, expected):
    got = ml_one(delta, z) if rho == 1.0 else ml_two(delta, rho, z)
    assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize(
    "delta, rho, z, expected",
    [
        # 200-digit series values.
        (0.9, 1.0, -5.0, 0.034431324804098418323),
        (0.9, 0.9, -2.0, 0.1105980242932084855),
        (0.5, 1.0, -1.0, 0.42758357615580700441),
    ],
)
def test_frozen_points(delta, rho, z, expected):
    assert ml_two(delta, rho, z) == pytest.approx(expected, rel=1e-13)


def test_exponential_case():
    z = np.linspace(-30.0, 5.0, 701)
    got = np.array([ml_one(1.0, v) for v in z])
    np.testing.assert_allclose(got, np.exp(z), rtol=1e-12, atol=0.0)


def test_half_order_is_erfcx():
    x = np.logspace(-3, 3, 61)
    got = np.array([ml_one(0.5, -v) for v in x])
    np.testing.assert_allclose(got, special.erfcx(x), rtol=1e-13)


@pytest.mark.parametrize("rho", [1.0, 2.0, 3.0])
def test_order_one_closed_forms(rho):
    # E_{1,2}(z) = (e^z - 1)/z and E_{1,3}(z) = (e^z - 1 - z)/z^2.
    for z in (-40.0, -7.5, -0.3, 0.4, 3.0):
        if rho == 1.0:
            ref = math.exp(z)
        elif rho == 2.0:
            ref = math.expm1(z) / z
        else:
            ref = (math.expm1(z) - z) / z**2
        assert ml_two(1.0, rho, z) == pytest.approx(ref, rel=1e-12)


def test_value_at_zero():
    for rho in (0.5, 1.0, 1.7):
        assert ml_two(0.6, rho, 0.0) == pytest.approx(1.0 / math.gamma(rho), rel=1e-15)
        assert ml_array(0.6, rho, 0.0) == pytest.approx(1.0 / math.gamma(rho), rel=1e-15)


# }}}


# {{{ properties


@pytest.mark.parametrize("delta", [0.02, 0.1, 0.5, 0.9, 1.0])
def test_monotone_decreasing_on_negative_axis(delta):
    # exp(-x) underflows beyond x ~ 745; fractional orders decay algebraically.
    x = np.logspace(0, 2.8 if delta == 1.0 else 6.0, 80)
    vals = np.array([ml_one(delta, -v) for v in x])
    assert np.all(vals > 0.0)
    assert np.all(np.diff(vals) < 0.0)


@pytest.mark.parametrize("delta", [0.3, 0.7, 0.95])
def test_large_argument_asymptotics(delta):
    # E_delta(-x) ~ 1 / (x Gamma(1 - delta)) for large x.
    x = 1e8
    assert ml_one(delta, -x) * x * math.gamma(1.0 - delta) == pytest.approx(1.0, rel=1e-6)


def test_recurrence_in_rho():
    # E_{a,b}(z) = 1/Gamma(b) + z E_{a,a+b}(z).
    for a, b, z in [(0.4, 1.0, -3.2), (0.8, 0.6, -12.0), (0.6, 1.3, 2.5)]:
        lhs = ml_two(a, b, z)
        rhs = 1.0 / math.gamma(b) + z * ml_two(a, a + b, z)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("delta, rho", [(0.05, 1.0), (0.3, 0.3), (0.5, 1.5), (0.9, 0.9), (0.9, 1.9), (1.0, 1.0)])
def test_array_matches_scalar(delta, rho):
    z = np.concatenate([-np.logspace(-4, 6, 200), [0.0], np.linspace(0.1, 1.0, 5)])
    got = ml_array(delta, rho, z)
    ref = np.array([ml_two(delta, rho, v) for v in z])
    np.testing.assert_allclose(got, ref, rtol=1e-13, atol=1e-14)


def test_array_preserves_shape():
    z = -np.arange(6.0).reshape(2, 3)
    assert ml_array(0.7, 1.0, z).shape == (2, 3)
    assert np.ndim(ml_array(0.7, 1.0, -1.0)) == 0


def test_domain_errors():
    with pytest.raises(DomainError):
        ml_one(0.0, -1.0)
    with pytest.raises(DomainError):
        ml_one(1.5, -1.0)
    with pytest.raises(DomainError):
        ml_two(0.5, -1.0, -1.0)
    with pytest.raises(DomainError):
        ml_one(0.5, math.nan)
    with pytest.raises(DomainError):
        MlOrder(1.2)
    with pytest.raises(AccuracyError):
        ml_one(0.5, 50.0)


# }}}


# {{{ enclosure and identity


def test_mainardi_enclosure_brackets():
    for delta in (0.1, 0.5, 0.9):
        for c in (0.5, 2.0):
            for t in (0.0, 0.01, 1.0, 7.0, 300.0):
                enc = mainardi_enclosure(delta, c, t)
                assert enc.contains(ml_one(delta, -c * t**delta))


def test_mainardi_enclosure_at_zero_is_tight():
    enc = mainardi_enclosure(0.4, 3.0, 0.0)
    assert enc.lower == enc.upper == 1.0


def test_mainardi_enclosure_domain():
    with pytest.raises(DomainError):
        mainardi_enclosure(1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        mainardi_enclosure(0.5, 0.0, 1.0)
    with pytest.raises(DomainError):
        mainardi_enclosure(0.5, 1.0, -1.0)


@pytest.mark.parametrize(
    "sigma, gamma_param, beta_param, c, x",
    [
        (0.5, 1.0, 0.5, -1.5, 2.0),  # I^{1/2} E_{1/2}(c t^{1/2})
        (1.0, 1.0, 1.0, -2.0, 1.5),  # int_0^x e^{ct} dt
        (0.3, 0.7, 0.9, 0.8, 1.0),
        (1.5, 0.5, 0.6, -4.0, 3.0),
    ],
)
def test_identity_residual(sigma, gamma_param, beta_param, c, x):
    assert frac_integral_identity_residual(sigma, gamma_param, beta_param, c, x) < 1e-11


def test_identity_residual_exponential_closed_form():
    # sigma = gamma = beta = 1: int_0^x e^{ct} dt = x E_{1,2}(c x) = (e^{cx} - 1)/c.
    x, c = 1.5, -2.0
    assert x * ml_two(1.0, 2.0, c * x) == pytest.approx(math.expm1(c * x) / c, rel=1e-14)


# }}}
