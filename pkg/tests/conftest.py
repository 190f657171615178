from __future__ import annotations

import numpy as np
import pytest

from fracbam.kernels import KernelSpec
from fracbam.model import Activation, BamNetwork

# Second-order couplings of the two-neuron example networks, 1-based (q, p, s)
# for d and (p, q, r) for d_bar.
D_ENTRIES = {(1, 1, 1): 1.3, (1, 1, 2): 0.5, (2, 1, 1): 1.0, (2, 1, 2): 0.25,
             (1, 2, 1): 0.75, (1, 2, 2): 1.0, (2, 2, 1): 0.5, (2, 2, 2): 0.4}
D_BAR_ENTRIES = {(1, 1, 1): 0.6, (1, 1, 2): 1.0, (2, 1, 1): 0.5, (2, 1, 2): 0.25,
                 (1, 2, 1): 1.0, (1, 2, 2): 1.4, (2, 2, 1): 0.75, (2, 2, 2): 1.25}

DRIVE_HISTORY = (-0.5, -1.0, -0.75, -1.5)
RESPONSE_HISTORY = (-1.0, -1.75, -1.0, -2.0)


def _tensor(entries) -> np.ndarray:
    out = np.zeros((2, 2, 2))
    for (i, j, k), v in entries.items():
        out[i - 1, j - 1, k - 1] = v
    return out


def example_network(activation: str = "tanh", window: str = "finite", delta: float = 0.9,
                    c: float = 1e-4) -> BamNetwork:
    return BamNetwork(
        n1=2, n2=2, a=[5.0, 7.0], a_bar=[6.0, 8.0], c=c, c_bar=c, mu=1.0, delta=delta,
        d=_tensor(D_ENTRIES), d_bar=_tensor(D_BAR_ENTRIES),
        k=KernelSpec.exponential(5.0), h=KernelSpec.exponential(5.0),
        k_bar=KernelSpec.exponential(6.0), h_bar=KernelSpec.exponential(6.0),
        act_x=Activation.named(activation), act_y=Activation.named(activation),
        I=[1.0, 0.75], J=[0.5, 1.0],
        hist_x=list(DRIVE_HISTORY[:2]), hist_y=list(DRIVE_HISTORY[2:]), window=window,
    )


def scalar_network(delta: float = 0.9, lam: float = 1.0, x0: float = 1.0, c: float = 0.0,
                   mu: float = 1.0) -> BamNetwork:
    """One neuron per layer, no coupling: each state solves ``D^delta x = -lam x``."""
    return BamNetwork(
        n1=1, n2=1, a=[lam], a_bar=[lam], c=c, c_bar=c, mu=mu, delta=delta,
        d=np.zeros((1, 1, 1)), d_bar=np.zeros((1, 1, 1)),
        k=KernelSpec.exponential(5.0), h=KernelSpec.exponential(5.0),
        k_bar=KernelSpec.exponential(6.0), h_bar=KernelSpec.exponential(6.0),
        act_x=Activation.named("tanh"), act_y=Activation.named("tanh"),
        I=[0.0], J=[0.0], hist_x=[x0], hist_y=[x0],
    )


@pytest.fixture
def ex1():
    return example_network("tanh", "finite")


@pytest.fixture
def ex2():
    return example_network("asinh", "finite")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(results, key=lambda r: r[0]):
        terminalreporter.write_line(line)
