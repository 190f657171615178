from __future__ import annotations

import numpy as np
import pytest
from scipy import optimize

from conftest import example_network
from fracbam.errors import DomainError, MaxIterationError, NonContractionError
from fracbam.kernels import KernelSpec
from fracbam.model import (
    Activation,
    ConstantHistory,
    SampledHistory,
    a_priori_box,
    equilibrium_residual,
    find_equilibrium,
    shift_to_origin,
)
from fracbam.solver import SolverConfig, simulate

# Equilibria from scipy.optimize.fsolve on the balance equations (8 digits).
EQ_TANH = (0.20022825, 0.10729735, 0.08360168, 0.12534283)
EQ_ASINH = (0.20022907, 0.10729796, 0.08360445, 0.12534619)


def _fsolve_equilibrium(net):
    def F(v):
        x, y = v[: net.n1], v[net.n1 :]
        return -np.concatenate([net.a * x, net.a_bar * y]) + _maps(net, x, y)

    return optimize.fsolve(F, np.zeros(net.n), xtol=1e-14)


def _maps(net, x, y):
    gy = np.array([g(v) for g, v in zip(net.act_y, y)])
    gx = np.array([g(v) for g, v in zip(net.act_x, x)])
    kh = net.k.masses() * net.h.masses()
    khb = net.k_bar.masses() * net.h_bar.masses()
    fx = np.einsum("qps,q,s->p", net.d * kh, gy, gy) + net.I
    fy = np.einsum("pqr,p,r->q", net.d_bar * khb, gx, gx) + net.J
    return np.concatenate([fx, fy])


# {{{ validation


@pytest.mark.parametrize(
    "changes, field",
    [
        (dict(a=[-5.0, 7.0]), "a"),
        (dict(a_bar=[6.0, 0.0]), "a_bar"),
        (dict(c=1.0), "c"),
        (dict(mu=0.0), "mu"),
        (dict(delta=1.5), "delta"),
        (dict(d=np.zeros((2, 2, 3))), "d"),
        (dict(window="sliding"), "window"),
        (dict(I=[1.0, 2.0, 3.0]), "I"),
    ],
)
def test_field_level_validation(changes, field):
    with pytest.raises(DomainError, match=rf"^{field}\b"):
        example_network().with_(**changes)


def test_scalar_inputs_broadcast():
    net = example_network()
    assert isinstance(net.hist_x[0], ConstantHistory)
    assert net.k[(1, 1, 1)] == KernelSpec.exponential(5.0)
    assert len(net.act_x) == 2


def test_activation_metadata():
    assert Activation.named("tanh").bound == 1.0
    assert Activation.named("asinh").bound is None
    for kind in ("tanh", "asinh"):
        assert Activation.named(kind).spot_check()
    bad = Activation.custom(lambda v: 3.0 * v, 1.0)
    assert not bad.spot_check()
    with pytest.raises(DomainError):
        Activation.named("relu6")


def test_shifted_activation():
    g = Activation.named("tanh").shifted(0.5)
    assert float(g(0.25)) == pytest.approx(np.tanh(0.75))


# }}}


# {{{ equilibrium


@pytest.mark.parametrize("act, ref", [("tanh", EQ_TANH), ("asinh", EQ_ASINH)])
def test_equilibrium_frozen(act, ref):
    eq = find_equilibrium(example_network(act))
    np.testing.assert_allclose(eq.state, ref, atol=5e-9)
    assert eq.residual < 1e-12


@pytest.mark.parametrize("act", ["tanh", "asinh"])
def test_equilibrium_matches_fsolve(act):
    net = example_network(act)
    eq = find_equilibrium(net)
    np.testing.assert_allclose(eq.state, _fsolve_equilibrium(net), atol=1e-12)
    assert equilibrium_residual(net, eq.x_star, eq.y_star) < 1e-12


def test_equilibrium_inside_a_priori_box():
    net = example_network()
    bx, by = a_priori_box(net)
    eq = find_equilibrium(net)
    assert np.all(np.abs(eq.x_star) <= bx) and np.all(np.abs(eq.y_star) <= by)
    assert a_priori_box(example_network("asinh")) is None


def test_equilibrium_non_contraction():
    net = example_network()
    strong = net.with_(d=net.d * 1000.0, d_bar=net.d_bar * 1000.0)
    with pytest.raises(NonContractionError):
        find_equilibrium(strong)


def test_equilibrium_iteration_budget():
    with pytest.raises(MaxIterationError):
        find_equilibrium(example_network(), max_iter=5)


def test_equilibrium_callback_sees_iterates():
    seen = []
    eq = find_equilibrium(example_network(), callback=lambda k, x, y: seen.append(k))
    assert seen == list(range(eq.iterations + 1))


def test_equilibrium_permutation_equivariant():
    net = example_network()
    eq = find_equilibrium(net)
    perm = net.permuted([1, 0], [1, 0])
    eqp = find_equilibrium(perm)
    np.testing.assert_allclose(eqp.x_star, eq.x_star[::-1], atol=1e-12)
    np.testing.assert_allclose(eqp.y_star, eq.y_star[::-1], atol=1e-12)
    assert perm.permuted([1, 0], [1, 0]).equals(net)


def test_zero_equilibrium_shift_is_identity():
    net = example_network().with_(I=[0.0, 0.0], J=[0.0, 0.0])
    eq = find_equilibrium(net)
    assert shift_to_origin(net, eq) is net


@pytest.mark.parametrize("window", ["infinite", "finite"])
def test_shift_to_origin_reproduces_trajectory(window):
    net = example_network("asinh", window)
    eq = find_equilibrium(net)
    cfg = SolverConfig(0.05, 3.0)
    orig = simulate(net, cfg)
    shifted = simulate(shift_to_origin(net, eq), cfg)
    np.testing.assert_allclose(shifted.states + eq.state, orig.states, atol=1e-12)


# }}}


# {{{ histories


def test_sampled_history_matches_constant_prehistory():
    kern = KernelSpec.exponential(3.0)
    g = Activation.named("tanh")
    times = np.linspace(0.0, 2.0, 9)
    const = ConstantHistory(-0.7).prehistory_integral(kern, g, times)
    sampled = SampledHistory.from_function(lambda s: -0.7, 2.0, 20).prehistory_integral(kern, g, times)
    np.testing.assert_allclose(sampled, const, rtol=1e-13)
    np.testing.assert_allclose(const, np.tanh(-0.7) * np.exp(-3.0 * times) / 3.0, rtol=1e-14)


def test_sampled_history_linear_profile():
    # phi(s) = s on [-1, 0] and 0 before, identity activation, kernel e^{-s}:
    # at t = 0 the integral is int_0^1 e^{-s} (-s) ds.
    kern = KernelSpec.exponential(1.0)
    ident = Activation.custom(lambda v: v, 1.0)
    hist = SampledHistory((-1.0, 0.0), (-1.0, 0.0), 0.0)
    got = hist.prehistory_integral(kern, ident, np.array([0.0]))[0]
    ref = -(1.0 - 2.0 * np.exp(-1.0))
    assert got == pytest.approx(ref, rel=1e-13)


def test_history_validation():
    with pytest.raises(DomainError):
        SampledHistory((-1.0, -0.5), (0.0, 0.0), 0.0)
    with pytest.raises(DomainError):
        SampledHistory((0.0, -1.0), (0.0, 0.0), 0.0)


# }}}
