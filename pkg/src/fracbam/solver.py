"""Fractional predictor-corrector for neutral Caputo systems with distributed delay.

The neutral variable ``z(t) = x(t) - c x(t - mu)`` satisfies
``D^delta z = f(t, x)``, i.e. the Volterra equation

.. math::

    z(t) = z(0) + \\frac{1}{\\Gamma(\\delta)} \\int_0^t (t-s)^{\\delta-1} f(s)\\, ds,

which is advanced with the Adams-Bashforth-Moulton product-integration
scheme. After each step the state is recovered as
``x_n = z_n + c x_{n-m}`` with ``m = mu / h`` so that the lagged value is
always a stored grid value (or a history sample).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BlowUpError, ConfigError
from .model import BamNetwork
from .quadrature import (
    corrector_first_weight,
    corrector_weights,
    kernel_hat_parts,
    window_weights,
    predictor_weights,
)

__all__ = [
    "SolverConfig",
    "Trajectory",
    "BamRhs",
    "integrate_neutral",
    "simulate",
    "caputo_residual",
    "l1_caputo",
    "BLOWUP_LIMIT",
]

BLOWUP_LIMIT = 1e12


@dataclass(frozen=True)
class SolverConfig:
    """Step size, horizon and memory policy.

    ``memory_policy="truncated"`` drops distributed-delay contributions older
    than ``memory_window``; each dropped integral is bounded by
    ``sup|g| * tail_mass(memory_window)`` of its kernel. The fractional
    memory of the Caputo operator itself is always kept in full.
    """

    h: float
    t_end: float
    corrector_iterations: int = 1
    memory_policy: str = "full"
    memory_window: float | None = None

    def __post_init__(self) -> None:
        if not (self.h > 0.0 and math.isfinite(self.h)):
            raise ConfigError(f"step h must be positive, got {self.h!r}")
        if not (self.t_end > 0.0 and math.isfinite(self.t_end)):
            raise ConfigError(f"t_end must be positive, got {self.t_end!r}")
        if int(self.corrector_iterations) < 1:
            raise ConfigError("corrector_iterations must be >= 1")
        if self.memory_policy not in ("full", "truncated"):
            raise ConfigError(f"memory_policy must be 'full' or 'truncated', got {self.memory_policy!r}")
        if self.memory_policy == "truncated" and not (
            self.memory_window is not None and self.memory_window > 0.0
        ):
            raise ConfigError("truncated memory needs a positive memory_window")
        steps = self.t_end / self.h
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError(f"t_end/h = {steps} must be an integer")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.h))

    def lag_steps(self, mu: float) -> int:
        """Steps per neutral delay; raises unless ``mu/h`` is an integer and ``h <= mu``."""
        if self.h > mu * (1 + 1e-12):
            raise ConfigError(f"step h={self.h} exceeds the neutral delay mu={mu}")
        m = mu / self.h
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            raise ConfigError(f"mu/h = {m} is not an integer; the neutral lag must land on the grid")
        return int(round(m))

    @property
    def window(self) -> float | None:
        return self.memory_window if self.memory_policy == "truncated" else None


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniform time grid with the states of all neurons.

    Attributes
    ----------
    times : numpy.ndarray
        ``t_k = k h``.
    states : numpy.ndarray
        Shape ``(len(times), n)``; columns ``x_1..x_n1, y_1..y_n2``.
    neutral_offset : int
        Steps per neutral delay ``mu``.
    z : numpy.ndarray
        The stepped neutral variable ``x(t) - c x(t - mu)``.
    c_vec : numpy.ndarray
        Per-column neutral coefficient.
    history_states : numpy.ndarray
        States on the grid ``-mu, ..., 0`` (row ``neutral_offset`` is ``t = 0``).
    n1 : int
        Number of ``x`` columns.
    labels : tuple of str
        Column labels.
    """

    times: np.ndarray
    states: np.ndarray
    neutral_offset: int
    z: np.ndarray
    c_vec: np.ndarray
    history_states: np.ndarray
    n1: int
    labels: tuple

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def x(self) -> np.ndarray:
        return self.states[:, : self.n1]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, self.n1 :]

    def lagged(self) -> np.ndarray:
        """States at ``t - mu`` for every grid time (history rows first)."""
        m = self.neutral_offset
        return np.vstack([self.history_states[:-1], self.states])[: len(self.times)] if m > 0 else self.states

    def to_csv(self, path, header: tuple | None = None) -> None:
        cols = ("t",) + tuple(header if header is not None else self.labels)
        data = np.column_stack([self.times, self.states])
        with open(path, "w", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            for row in data:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


# {{{ generic core


def integrate_neutral(
    f: Callable[[int, np.ndarray], np.ndarray],
    history_states: np.ndarray,
    c_vec: np.ndarray,
    delta: float,
    h: float,
    steps: int,
    corrector_iterations: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Advance ``D^delta [x - c x(t - mu)] = f`` with the ABM (PECE) scheme.

    Parameters
    ----------
    f : callable
        ``f(k, X)`` returns the right-hand side at step ``k`` given the state
        array ``X`` whose rows ``0..k`` are filled (row ``k`` holds the
        current candidate).
    history_states : numpy.ndarray
        Shape ``(m + 1, n)``: states at times ``-m h, ..., 0``.
    c_vec : numpy.ndarray
        Neutral coefficient per component.

    Returns
    -------
    X, Z : numpy.ndarray
        States and neutral variables, shape ``(steps + 1, n)``. The
        recovery identity ``X[k] == Z[k] + c_vec * X_lag[k]`` holds exactly.
    """
    hist = np.asarray(history_states, dtype=float)
    m = hist.shape[0] - 1
    n = hist.shape[1]
    c_vec = np.asarray(c_vec, dtype=float)
    X = np.empty((steps + 1, n))
    Z = np.empty((steps + 1, n))
    Fv = np.empty((steps + 1, n))

    def lag(k: int) -> np.ndarray:
        return hist[k] if k <= m else X[k - m]

    X[0] = hist[m]
    Z[0] = X[0] - c_vec * lag(0)
    Fv[0] = f(0, X)
    z0 = Z[0]
    bw = predictor_weights(steps, delta)
    aw = corrector_weights(steps, delta)
    cp = h**delta / math.gamma(delta + 1.0)
    cc = h**delta / math.gamma(delta + 2.0)
    for k in range(1, steps + 1):
        nprev = k - 1
        xl = lag(k)
        # Predictor: sum_{j=0}^{k-1} b_{k-1-j} f_j.
        zp = z0 + cp * (bw[nprev::-1] @ Fv[:k])
        # Corrector memory: a_{0,k} f_0 + sum_{j=1}^{k-1} a_{k-1-j} f_j.
        mem = corrector_first_weight(nprev, delta) * Fv[0]
        if k > 1:
            mem = mem + aw[k - 2 :: -1] @ Fv[1:k]
        X[k] = zp + c_vec * xl
        zc = zp
        for _ in range(corrector_iterations):
            fk = f(k, X)
            zc = z0 + cc * (fk + mem)
            X[k] = zc + c_vec * xl
        Z[k] = zc
        if not np.all(np.isfinite(X[k])) or np.max(np.abs(X[k])) > BLOWUP_LIMIT:
            raise BlowUpError(f"state magnitude exceeded {BLOWUP_LIMIT:g} at step {k} (t={k * h:g})")
        Fv[k] = f(k, X)
    return X, Z


def l1_caputo(Z: np.ndarray, delta: float, h: float, k: int) -> np.ndarray:
    """L1 approximation of ``D^delta Z`` at grid index ``k`` (per column)."""
    j = np.arange(k, dtype=float)
    b = (j + 1.0) ** (1.0 - delta) - j ** (1.0 - delta)
    diffs = Z[k:0:-1] - Z[k - 1 :: -1][:k]
    return (b @ diffs) * h ** (-delta) / math.gamma(2.0 - delta)


# }}}


# {{{ network right-hand side


class BamRhs:
    """Right-hand side of the network on a uniform grid.

    Every distributed-delay integral ``int_0^t kernel(s) g(y(t - s)) ds`` is
    the convolution of the kernel's hat-function weights with the stored
    activation samples (exact for piecewise-linear activation paths). Under
    the ``infinite`` window the pre-history part ``int_t^inf`` is added from
    the histories. Activation samples are cached row by row; rows before
    the current step are final once the stepper moves on.
    """

    def __init__(self, network: BamNetwork, h: float, steps: int, memory_window: float | None = None):
        self.net = network
        self.h = h
        self.steps = steps
        n1, n2 = network.n1, network.n2
        kern_y = []
        for fam in (network.k, network.h):
            for kern in fam.unique():
                if kern not in kern_y:
                    kern_y.append(kern)
        kern_x = []
        for fam in (network.k_bar, network.h_bar):
            for kern in fam.unique():
                if kern not in kern_x:
                    kern_x.append(kern)
        self.kern_y, self.kern_x = kern_y, kern_x
        parts_y = [kernel_hat_parts(kk, h, steps) for kk in kern_y]
        parts_x = [kernel_hat_parts(kk, h, steps) for kk in kern_x]
        self.Ly = np.array([p[0] for p in parts_y]).reshape(len(kern_y), steps + 1)
        self.Ry = np.array([p[1] for p in parts_y]).reshape(len(kern_y), steps + 1)
        self.Lx = np.array([p[0] for p in parts_x]).reshape(len(kern_x), steps + 1)
        self.Rx = np.array([p[1] for p in parts_x]).reshape(len(kern_x), steps + 1)
        self.cut = None if memory_window is None else int(math.floor(memory_window / h + 1e-9))
        self.ki = network.k.index_map(kern_y)
        self.hi = network.h.index_map(kern_y)
        self.kbi = network.k_bar.index_map(kern_x)
        self.hbi = network.h_bar.index_map(kern_x)
        self.Q = np.arange(n2)[:, None, None]
        self.S = np.arange(n2)[None, None, :]
        self.P = np.arange(n1)[:, None, None]
        self.R = np.arange(n1)[None, None, :]
        times = np.arange(steps + 1) * h
        self.Py = np.zeros((len(kern_y), steps + 1, n2))
        self.Px = np.zeros((len(kern_x), steps + 1, n1))
        if network.window == "infinite":
            for u, kk in enumerate(kern_y):
                for q in range(n2):
                    self.Py[u, :, q] = network.hist_y[q].prehistory_integral(
                        kk, network.act_y[q], times, memory_window
                    )
            for u, kk in enumerate(kern_x):
                for p in range(n1):
                    self.Px[u, :, p] = network.hist_x[p].prehistory_integral(
                        kk, network.act_x[p], times, memory_window
                    )
        self.Gx = np.zeros((steps + 1, n1))
        self.Gy = np.zeros((steps + 1, n2))
        self._cache_k = -1
        self._cache = None

    def _activate(self, k: int, X: np.ndarray) -> None:
        n1 = self.net.n1
        row = X[k]
        for p, g in enumerate(self.net.act_x):
            self.Gx[k, p] = g(row[p])
        for q, g in enumerate(self.net.act_y):
            self.Gy[k, q] = g(row[n1 + q])

    def prime(self, X: np.ndarray, upto: int) -> None:
        """Fill the activation cache from a finished state array."""
        for k in range(upto + 1):
            self._activate(k, X)
        self._cache_k = -1

    def __call__(self, k: int, X: np.ndarray) -> np.ndarray:
        net = self.net
        n1 = net.n1
        self._activate(k, X)
        if self._cache_k != k:
            wy = window_weights(self.Ly, self.Ry, k, self.cut)
            wx = window_weights(self.Lx, self.Rx, k, self.cut)
            hy = wy[:, 1:] @ self.Gy[k - 1 :: -1][:k]
            hx = wx[:, 1:] @ self.Gx[k - 1 :: -1][:k]
            self._cache = (hy + self.Py[:, k, :], hx + self.Px[:, k, :], wy[:, :1], wx[:, :1])
            self._cache_k = k
        base_y, base_x, cur_y, cur_x = self._cache
        Cy = base_y + cur_y * self.Gy[k][None, :]
        Cx = base_x + cur_x * self.Gx[k][None, :]
        Kc = Cy[self.ki, self.Q]
        Hc = Cy[self.hi, self.S]
        Kb = Cx[self.kbi, self.P]
        Hb = Cx[self.hbi, self.R]
        x = X[k, :n1]
        y = X[k, n1:]
        fx = -net.a * x + np.einsum("qps,qps,qps->p", net.d, Kc, Hc) + net.I
        fy = -net.a_bar * y + np.einsum("pqr,pqr,pqr->q", net.d_bar, Kb, Hb) + net.J
        return np.concatenate([fx, fy])


def history_grid(network: BamNetwork, h: float, m: int, histories=None) -> np.ndarray:
    """History values on ``-m h, ..., 0`` for every neuron."""
    hs = network.histories if histories is None else histories
    t = (np.arange(m + 1) - m) * h
    return np.column_stack([np.asarray(hh(t), dtype=float) * np.ones(m + 1) for hh in hs])


def _labels(network: BamNetwork) -> tuple:
    return tuple(f"x_{i + 1}" for i in range(network.n1)) + tuple(
        f"y_{i + 1}" for i in range(network.n2)
    )


# }}}


def simulate(network: BamNetwork, cfg: SolverConfig) -> Trajectory:
    """Simulate the network on ``[0, cfg.t_end]``.

    Raises
    ------
    ConfigError
        If ``mu / h`` is not an integer or ``h > mu``.
    BlowUpError
        If any state exceeds ``1e12`` in magnitude.
    """
    m = cfg.lag_steps(network.mu)
    steps = cfg.steps
    rhs = BamRhs(network, cfg.h, steps, cfg.window)
    hist = history_grid(network, cfg.h, m)
    X, Z = integrate_neutral(
        rhs, hist, network.c_vec, network.delta, cfg.h, steps, cfg.corrector_iterations
    )
    times = np.arange(steps + 1) * cfg.h
    return Trajectory(times, X, m, Z, network.c_vec, hist, network.n1, _labels(network))


def caputo_residual(traj: Trajectory, network: BamNetwork, t_index: int,
                    memory_window: float | None = None) -> float:
    """Max-abs defect between the L1 Caputo derivative of ``z`` and the right-hand side.

    The derivative of the stepped neutral variable is approximated at
    ``t_index`` with the L1 scheme and compared to the network right-hand
    side evaluated on the stored trajectory.
    """
    k = int(t_index)
    if not 1 <= k < len(traj.times):
        raise ConfigError(f"t_index must lie in [1, {len(traj.times) - 1}]")
    h = traj.h
    d = l1_caputo(traj.z, network.delta, h, k)
    rhs = BamRhs(network, h, len(traj.times) - 1, memory_window)
    rhs.prime(traj.states, k)
    return float(np.max(np.abs(d - rhs(k, traj.states))))
