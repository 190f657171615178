"""Drive-response synchronization under linear feedback.

The response copy of the network receives the controls
``-beta (z_p - x_p)`` and ``-beta_bar (w_q - y_q)``. Drive and response are
stepped together as one neutral system of twice the size, so the coupling
term always sees the drive at the current step. The error
``e = response - drive`` is assembled afterwards on the shared grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .model import BamNetwork, Equilibrium, find_equilibrium
from .solver import BamRhs, SolverConfig, Trajectory, history_grid, integrate_neutral, l1_caputo
from .stability import StabilityCertificate, certify_bounded, certify_unbounded

__all__ = ["FeedbackGains", "SyncRun", "synchronize", "sync_residual", "sync_certificate", "augmented_network"]


@dataclass(frozen=True)
class FeedbackGains:
    """Feedback gains ``beta`` (x layer) and ``beta_bar`` (y layer)."""

    beta: float
    beta_bar: float

    def __post_init__(self) -> None:
        if not (self.beta >= 0.0 and self.beta_bar >= 0.0):
            raise DomainError(f"gains must be nonnegative, got ({self.beta!r}, {self.beta_bar!r})")

    def vector(self, n1: int, n2: int) -> np.ndarray:
        return np.concatenate([np.full(n1, float(self.beta)), np.full(n2, float(self.beta_bar))])


@dataclass(frozen=True, eq=False)
class SyncRun:
    """Drive, response and error trajectories on one grid."""

    drive: Trajectory
    response: Trajectory
    error: Trajectory
    gains: FeedbackGains
    network: BamNetwork
    response_network: BamNetwork

    def error_norm(self) -> np.ndarray:
        """``max_i |e_i(t)|`` over all neurons of both layers."""
        return np.max(np.abs(self.error.states), axis=1)


def augmented_network(network: BamNetwork, gains: FeedbackGains) -> BamNetwork:
    """The network with ``a_p + beta`` and ``a_bar_q + beta_bar``."""
    return network.with_(a=network.a + gains.beta, a_bar=network.a_bar + gains.beta_bar)


def _error_labels(network: BamNetwork) -> tuple:
    return tuple(f"e_{i + 1}" for i in range(network.n1)) + tuple(
        f"ebar_{i + 1}" for i in range(network.n2)
    )


def synchronize(network: BamNetwork, drive_history, response_history, gains: FeedbackGains,
                cfg: SolverConfig) -> SyncRun:
    """Integrate the coupled drive-response pair.

    Parameters
    ----------
    drive_history, response_history : tuple or None
        Per-neuron histories (``x`` layer first, then ``y``); ``None`` keeps
        the histories stored in ``network``.

    Raises
    ------
    ConfigError
        As :func:`fracbam.solver.simulate`.
    BlowUpError
        If either copy blows up.
    """
    n = network.n
    drive = network if drive_history is None else network.with_histories(
        drive_history[: network.n1], drive_history[network.n1 :])
    if response_history is None:
        raise ConfigError("response history is required")
    resp = network.with_histories(response_history[: network.n1], response_history[network.n1 :])
    m = cfg.lag_steps(network.mu)
    steps = cfg.steps
    rhs_d = BamRhs(drive, cfg.h, steps, cfg.window)
    rhs_r = BamRhs(resp, cfg.h, steps, cfg.window)
    bvec = gains.vector(network.n1, network.n2)

    def f(k: int, X: np.ndarray) -> np.ndarray:
        fd = rhs_d(k, X[:, :n])
        fr = rhs_r(k, X[:, n:])
        return np.concatenate([fd, fr - bvec * (X[k, n:] - X[k, :n])])

    hist = np.hstack([history_grid(drive, cfg.h, m), history_grid(resp, cfg.h, m)])
    c2 = np.concatenate([network.c_vec, network.c_vec])
    X, Z = integrate_neutral(f, hist, c2, network.delta, cfg.h, steps, cfg.corrector_iterations)
    times = np.arange(steps + 1) * cfg.h
    labels = tuple(f"x_{i + 1}" for i in range(network.n1)) + tuple(
        f"y_{i + 1}" for i in range(network.n2))
    tr_d = Trajectory(times, X[:, :n], m, Z[:, :n], network.c_vec, hist[:, :n], network.n1, labels)
    tr_r = Trajectory(times, X[:, n:], m, Z[:, n:], network.c_vec, hist[:, n:], network.n1, labels)
    err = Trajectory(times, X[:, n:] - X[:, :n], m, Z[:, n:] - Z[:, :n], network.c_vec,
                     hist[:, n:] - hist[:, :n], network.n1, _error_labels(network))
    return SyncRun(tr_d, tr_r, err, gains, drive, resp)


def sync_residual(run: SyncRun, t_index: int) -> float:
    """Max-abs defect of the error system at one grid index.

    Compares the L1 Caputo derivative of the error's neutral variable with
    ``-beta e + F_response - F_drive``, where ``F`` is each copy's network
    right-hand side on the stored states.
    """
    k = int(t_index)
    times = run.error.times
    if not 1 <= k < len(times):
        raise ConfigError(f"t_index must lie in [1, {len(times) - 1}]")
    net = run.network
    h = run.error.h
    steps = len(times) - 1
    lhs = l1_caputo(run.error.z, net.delta, h, k)
    rd = BamRhs(run.network, h, steps)
    rr = BamRhs(run.response_network, h, steps)
    rd.prime(run.drive.states, k)
    rr.prime(run.response.states, k)
    bvec = run.gains.vector(net.n1, net.n2)
    rhs = rr(k, run.response.states) - rd(k, run.drive.states) - bvec * run.error.states[k]
    return float(np.max(np.abs(lhs - rhs)))


def sync_certificate(network: BamNetwork, gains: FeedbackGains, omega_measured: float | None = None,
                     mode: str = "bounded", eq: Equilibrium | None = None) -> StabilityCertificate:
    """Certificate of the gain-augmented network (``a + beta``, ``a_bar + beta_bar``).

    In ``unbounded`` mode the constants ``theta`` use the drive
    equilibrium, computed from ``network`` when ``eq`` is omitted.
    """
    aug = augmented_network(network, gains)
    if mode == "bounded":
        return certify_bounded(aug, omega_measured)
    if mode == "unbounded":
        if eq is None:
            eq = find_equilibrium(network)
        return certify_unbounded(aug, eq, omega_measured)
    raise DomainError(f"mode must be 'bounded' or 'unbounded', got {mode!r}")
