from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.special import gamma

from conftest import example_network, scalar_network
from fracbam.errors import EquilibriumMissingError, MetadataError
from fracbam.model import find_equilibrium
from fracbam.solver import SolverConfig, simulate
from fracbam.stability import (
    certify_bounded,
    certify_unbounded,
    check_envelope,
    cl1_series_bound,
    g3_threshold_c,
    initial_deviation,
    measure_omega,
    trend_statistic,
)

# Independent evaluation with scipy.special.gamma and an fsolve equilibrium:
# xi = 5, a* = 6, c* = 1e-4, delta = 0.9, mu = 1.
G3_EX = 0.02186604798767618
BUDGET_EX = 0.97813395201232378
THRESHOLD_EX = 0.00020925199895474264
QUARTER_PI_EX = 0.72298383881942341
THETA_EX = 0.2260978728201702
THETA_BAR_EX = 0.345789195520927
# Measured (k1) supremum of the bounded aggregate kernel of the example.
OMEGA_EX = 0.38918111896860857


def _g3_formula(delta, xi, a_star, c_star, mu=1.0):
    g = gamma(1 + delta) * gamma(1 - delta)
    F = 1 / (xi * mu**delta) + 2**delta * gamma(1 - delta)
    return (1 + g) * F * a_star * c_star / xi


@pytest.fixture(scope="module")
def cert1():
    return certify_bounded(example_network("tanh"))


@pytest.fixture(scope="module")
def cert2():
    net = example_network("asinh")
    return certify_unbounded(net, find_equilibrium(net))


# {{{ bounded certificate


def test_bounded_example_constants(cert1):
    assert cert1.xi == 5.0 and cert1.a_star == 6.0 and cert1.c_star == 1e-4
    assert cert1.G3 == pytest.approx(G3_EX, rel=1e-12)
    assert cert1.G3 == pytest.approx(_g3_formula(0.9, 5.0, 6.0, 1e-4), rel=1e-12)
    assert cert1.omega_budget_bounded == pytest.approx(BUDGET_EX, rel=1e-12)
    assert cert1.omega_measured == pytest.approx(OMEGA_EX, rel=1e-6)
    assert cert1.verdict == "bounded-certified"
    assert all(cert1.flags.values())


def test_tight_constant_is_smaller(cert1):
    assert cert1.F_tight == pytest.approx(gamma(1.9) * cert1.F, rel=1e-14)
    assert cert1.F_tight < cert1.F


def test_no_neutral_term_gives_zero_g3():
    cert = certify_bounded(example_network(c=0.0))
    assert cert.G3 == 0.0 and cert.cl1_ratio == 0.0
    assert cert.certified


def test_zero_couplings_give_zero_omega():
    net = example_network().with_(d=np.zeros((2, 2, 2)), d_bar=np.zeros((2, 2, 2)))
    cert = certify_bounded(net)
    assert cert.omega_measured == 0.0
    assert cert.certified


def test_large_neutral_coefficient_uncertified():
    cert = certify_bounded(example_network(c=0.5))
    assert cert.verdict == "uncertified"
    assert cert.flags["A4_G3_lt_1"] is False


def test_g3_monotone_and_omega_independent_of_c():
    net = example_network()
    om = measure_omega(net)
    cs = [0.0, 1e-4, 1e-3, 2e-3, 4e-3]
    g3 = [certify_bounded(net.with_(c=c, c_bar=c), om).G3 for c in cs]
    assert np.all(np.diff(g3) > 0.0)
    assert measure_omega(net.with_(c=3e-3, c_bar=3e-3)) == om


def test_verdict_flips_where_g3_meets_the_omega_budget():
    net = example_network()
    om = measure_omega(net)
    # G3 is linear in c*, so the budget gate Omega < 1 - G3 flips here.
    flip = (1.0 - om) / _g3_formula(0.9, 5.0, 6.0, 1.0)
    assert certify_bounded(net.with_(c=0.999 * flip, c_bar=0.999 * flip), om).certified
    above = certify_bounded(net.with_(c=1.001 * flip, c_bar=1.001 * flip), om)
    assert not above.certified
    assert above.flags["A4_G3_lt_1"] and not above.flags["A4_omega_lt_budget"]


def test_g3_threshold():
    net = example_network()
    c1 = g3_threshold_c(net)
    assert c1 == pytest.approx(1.0 / _g3_formula(0.9, 5.0, 6.0, 1.0), rel=1e-12)
    assert certify_bounded(net.with_(c=c1, c_bar=c1), 0.0).G3 == pytest.approx(1.0, rel=1e-12)


def test_bounded_needs_bounds():
    with pytest.raises(MetadataError):
        certify_bounded(example_network("asinh"))


def test_permutation_invariant(cert1):
    perm = certify_bounded(example_network().permuted([1, 0], [1, 0]))
    assert perm.G3 == cert1.G3
    assert perm.omega_measured == pytest.approx(cert1.omega_measured, rel=1e-12)
    assert perm.verdict == cert1.verdict


def test_deterministic_report(cert1):
    again = certify_bounded(example_network("tanh"))
    assert again.to_report() == cert1.to_report()


def test_report_format(cert1):
    lines = cert1.to_report().splitlines()
    pairs = dict(line.split("=", 1) for line in lines)
    assert pairs["mode"] == "bounded"
    assert float(pairs["G3"]) == cert1.G3
    flag_lines = [line for line in lines if line.startswith("flag.")]
    assert flag_lines == sorted(flag_lines) and len(flag_lines) == len(cert1.flags)
    assert lines[-len(flag_lines):] == flag_lines
    assert all(line.split("=")[1] in ("true", "false") for line in flag_lines)


# }}}


# {{{ unbounded certificate


def test_unbounded_example_constants(cert2):
    assert cert2.c_threshold_unbounded == pytest.approx(THRESHOLD_EX, rel=1e-12)
    assert cert2.omega_budget_unbounded == pytest.approx(QUARTER_PI_EX, rel=1e-7)
    assert cert2.theta == pytest.approx(THETA_EX, rel=1e-7)
    assert cert2.theta_bar == pytest.approx(THETA_BAR_EX, rel=1e-7)
    assert cert2.h_hat_star == pytest.approx(0.2, rel=1e-10)
    assert cert2.eta == 1.0
    assert cert2.verdict == "unbounded-certified"


def test_unbounded_threshold_formula(cert2):
    g = gamma(1.9) * gamma(0.1)
    U = max(5.0 + 7.0, 6.0 + 8.0) * g / 5.0
    B = 1 + 5 * gamma(0.1) * 2**0.9
    assert cert2.c_threshold_unbounded == pytest.approx(1 / (2 * B * (1 + U)), rel=1e-12)


def test_local_data_flag_does_not_decide_verdict(cert2):
    assert cert2.flags["local_data_small"] is False
    assert cert2.V0 == pytest.approx(initial_deviation(example_network("asinh"),
                                                       find_equilibrium(example_network("asinh"))))
    assert cert2.certified


def test_unbounded_threshold_flip():
    net = example_network("asinh")
    eq = find_equilibrium(net)
    c_ok = 0.9 * THRESHOLD_EX
    c_bad = 1.1 * THRESHOLD_EX
    assert certify_unbounded(net.with_(c=c_ok, c_bar=c_ok), eq).certified
    bad = certify_unbounded(net.with_(c=c_bad, c_bar=c_bad), eq)
    assert not bad.certified and not bad.flags["A5_c_star_lt_threshold"]


def test_unbounded_needs_equilibrium():
    with pytest.raises(EquilibriumMissingError):
        certify_unbounded(example_network("asinh"), None)


# }}}


# {{{ envelopes


def test_envelope_example_one(cert1):
    net = example_network("tanh")
    eq = find_equilibrium(net)
    traj = simulate(net, SolverConfig(0.02, 10.0))
    rep = check_envelope(traj, eq, cert1.xi, net.delta)
    assert rep.passed and math.isfinite(rep.C_fit)
    assert rep.C_fit == pytest.approx(initial_deviation(net, eq), rel=1e-3)
    bound = cl1_series_bound(cert1, initial_deviation(net, eq), traj.times)
    assert np.all(rep.ratios <= bound)


def test_envelope_at_equilibrium_is_zero():
    net = example_network("tanh", "infinite")
    eq = find_equilibrium(net)
    traj = simulate(net.with_histories(list(eq.x_star), list(eq.y_star)), SolverConfig(0.02, 5.0))
    rep = check_envelope(traj, eq, 5.0, net.delta)
    assert rep.C_fit < 1e-8


def test_envelope_scalar_recovers_amplitude():
    net = scalar_network(0.9, 2.0, x0=1.5)
    traj = simulate(net, SolverConfig(0.01, 5.0))
    zero = find_equilibrium(net)
    rep = check_envelope(traj, zero, 2.0, 0.9)
    assert rep.C_fit == pytest.approx(1.5, rel=0.02)
    assert abs(rep.trend) < 0.02


def test_trend_statistic_signs():
    t = np.linspace(0.0, 10.0, 101)
    assert trend_statistic(t, np.ones_like(t), 1.0) == pytest.approx(0.0, abs=1e-12)
    up = trend_statistic(t, 1.0 + 0.1 * t, 2.0)
    assert up == pytest.approx(0.1 * (t[-1] - t[75]) / 2.0, rel=1e-10)


def test_series_bound_is_piecewise_nondecreasing(cert1):
    t = np.linspace(0.0, 5.0, 51)
    b = cl1_series_bound(cert1, 1.0, t)
    assert np.all(np.diff(b) >= 0.0)
    first = 3 * cert1.B * (1 + cert1.cl1_ratio) / (1 - cert1.omega_measured)
    assert b[5] == pytest.approx(first, rel=1e-14)


# }}}
