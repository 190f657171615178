"""Numerical validation of the fractional Halanay inequality.

The lemma concerns nonnegative solutions of

.. math::

    D^\\gamma_C [y(t) - c\\, y(t-\\mu)] \\le -r\\, y(t) + \\int_0^\\infty h(s)\\, y(t-s)\\, ds

and bounds them by ``Lambda E_gamma(-r t^gamma)``. Here the inequality is
replaced by equality (the extremal witness that dominates every
sub-solution with the same nonnegative data), the scalar system is
simulated, and the per-interval claim

.. math::

    (1 - M)\\frac{|y(t)|}{E_\\gamma(-r t^\\gamma)} \\le 3 B y_0 \\sum_{l=0}^{k} (V W c)^l,
    \\qquad t \\in [(k-1)\\mu, k\\mu],

is checked at every grid point, together with the sharper first-interval
bound ``[3 + c Gamma(1+gamma)Gamma(1-gamma)] y0`` on ``[0, mu]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EnvelopeViolationError
from .kernels import KernelSpec, check_condition_k1
from .mittag_leffler import gamma, ml_array
from .model import Activation, ConstantHistory, SampledHistory
from .quadrature import kernel_hat_parts, window_weights
from .solver import SolverConfig, integrate_neutral

__all__ = [
    "HalanayProblem",
    "HalanayReport",
    "envelope_history",
    "halanay_constants",
    "halanay_validate",
]

#: Horizon and resolution of the grid on which ``M`` is measured.
M_T_END = 10.0
M_POINTS = 1000

#: Relative slack granted to floating-point comparisons against the bounds.
BOUND_RTOL = 1e-9

_IDENTITY = Activation.custom(lambda v: v, 1.0)


def envelope_history(gamma_: float, r: float, mu: float, y0: float, fraction: float = 0.5,
                     samples: int = 200) -> SampledHistory:
    """History ``fraction * y0 * E_gamma(-r (s + mu)^gamma)`` on ``[-mu, 0]``.

    Before ``-mu`` the history stays at its value at ``-mu``, namely
    ``fraction * y0``.
    """
    t = np.linspace(-mu, 0.0, samples + 1)
    vals = fraction * y0 * ml_array(gamma_, 1.0, -r * (t + mu) ** gamma_)
    return SampledHistory(tuple(t), tuple(vals), float(vals[0]))


@dataclass(frozen=True, eq=False)
class HalanayProblem:
    """Data of one Halanay inequality.

    Attributes
    ----------
    gamma : float
        Order in ``(0, 1)``.
    r : float
        Decay rate, positive.
    c : float
        Neutral coefficient in ``[0, 1)``.
    mu : float
        Neutral delay, positive.
    kernel : KernelSpec
        Nonnegative summable kernel ``h``.
    history : ConstantHistory or SampledHistory
        Nonnegative history ``phi`` on ``(-inf, 0]``.
    y0 : float
        Envelope constant with ``|phi(s)| < y0 E_gamma(-r (s + mu)^gamma)`` on ``[-mu, 0]``.
    """

    gamma: float
    r: float
    c: float
    mu: float
    kernel: KernelSpec
    history: object
    y0: float

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise DomainError(f"gamma: must lie in (0, 1), got {self.gamma!r}")
        if not self.r > 0.0:
            raise DomainError(f"r: must be positive, got {self.r!r}")
        if not 0.0 <= self.c < 1.0:
            raise DomainError(f"c: must lie in [0, 1), got {self.c!r}")
        if not self.mu > 0.0:
            raise DomainError(f"mu: must be positive, got {self.mu!r}")
        if not self.y0 > 0.0:
            raise DomainError(f"y0: must be positive, got {self.y0!r}")
        if isinstance(self.history, (int, float)):
            object.__setattr__(self, "history", ConstantHistory(float(self.history)))
        s = np.linspace(-self.mu, 0.0, 401)
        phi = np.asarray(self.history(s), dtype=float) * np.ones_like(s)
        if np.any(phi < 0.0):
            raise DomainError("history: must be nonnegative")
        env = self.y0 * ml_array(self.gamma, 1.0, -self.r * (s + self.mu) ** self.gamma)
        if np.any(np.abs(phi) >= env):
            raise DomainError("history: must stay strictly below y0 E_gamma(-r (s + mu)^gamma) on [-mu, 0]")


@dataclass(eq=False)
class HalanayReport:
    """Constants of the lemma and, after validation, the simulated envelope.

    ``V_const`` is the displayed constant ``1/(r mu^gamma) + 2^gamma Gamma(1-gamma)``
    and ``V_tight = Gamma(1+gamma) V_const`` keeps the factor the lemma
    drops. Gates use the larger (``V_const``); ``gate_tight`` reports the
    other reading.
    """

    V_const: float
    V_tight: float
    B_const: float
    W_const: float
    M_measured: float
    gamma_product: float
    gate: bool
    gate_tight: bool
    series_ratio: float
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    y: np.ndarray = field(default_factory=lambda: np.zeros(0))
    envelope_ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lambda_partial_sums: np.ndarray = field(default_factory=lambda: np.zeros(0))
    first_interval_bound: float = math.nan
    worst_margin: float = math.nan

    def to_report(self) -> str:
        """Flat ``name=value`` text in the certificate format."""
        lines = []
        for key in ("V_const", "V_tight", "B_const", "W_const", "M_measured", "gamma_product",
                    "series_ratio", "first_interval_bound", "worst_margin"):
            lines.append(f"{key}={float(getattr(self, key)):.17g}")
        for k, val in enumerate(self.lambda_partial_sums, start=1):
            lines.append(f"lambda_partial_sum.{k}={float(val):.17g}")
        lines.append(f"flag.gate={'true' if self.gate else 'false'}")
        lines.append(f"flag.gate_tight={'true' if self.gate_tight else 'false'}")
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        """Write ``t,y,ratio`` at 17 significant digits."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,y,ratio\n")
            for t, yv, rv in zip(self.times, self.y, self.envelope_ratios):
                fh.write(f"{t:.17g},{yv:.17g},{rv:.17g}\n")


def _gates(V: float, g: float, c: float, M: float) -> bool:
    return (1.0 + g) * V * c < 1.0 and M < 1.0 - (1.0 + g) * V * c


def halanay_constants(problem: HalanayProblem, t_end: float = M_T_END,
                      points: int = M_POINTS) -> HalanayReport:
    """``V``, ``B``, ``W``, the measured ``M`` and the gate.

    ``M`` is the (k1) supremum of the kernel ``h`` with rate ``xi = r``,
    measured on ``points`` equispaced times in ``(0, t_end]``.
    """
    gm, r, mu, c = problem.gamma, problem.r, problem.mu, problem.c
    g = gamma(1.0 + gm) * gamma(1.0 - gm)
    V = 1.0 / (r * mu**gm) + 2.0**gm * gamma(1.0 - gm)
    V_tight = gamma(1.0 + gm) * V
    B = 1.0 + r * gamma(1.0 - gm) * (2.0 * mu) ** gm
    grid = np.linspace(t_end / points, t_end, points)
    M = check_condition_k1(problem.kernel, r, gm, grid).omega_star
    W = (1.0 + g) / (1.0 - M) if M < 1.0 else math.inf
    return HalanayReport(
        V_const=V, V_tight=V_tight, B_const=B, W_const=W, M_measured=M, gamma_product=g,
        gate=_gates(V, g, c, M), gate_tight=_gates(V_tight, g, c, M), series_ratio=V * W * c,
    )


def _simulate(problem: HalanayProblem, cfg: SolverConfig, rhs_slack: float):
    h = cfg.h
    m = cfg.lag_steps(problem.mu)
    steps = cfg.steps
    times = np.arange(steps + 1) * h
    left, right = kernel_hat_parts(problem.kernel, h, steps)
    window = cfg.window
    cut = None if window is None else int(math.floor(window / h + 1e-9))
    pre = problem.history.prehistory_integral(problem.kernel, _IDENTITY, times, window)
    hist = (np.arange(m + 1) - m) * h
    hist_states = (np.asarray(problem.history(hist), dtype=float) * np.ones(m + 1))[:, None]
    r = problem.r

    def f(k: int, Y: np.ndarray) -> np.ndarray:
        conv = window_weights(left, right, k, cut) @ Y[k::-1, 0]
        yk = Y[k, 0]
        return np.array([-r * yk + conv + pre[k] - rhs_slack * max(yk, 0.0)])

    Y, _ = integrate_neutral(f, hist_states, np.array([problem.c]), problem.gamma, h, steps,
                             cfg.corrector_iterations)
    return times, Y[:, 0]


def halanay_validate(problem: HalanayProblem, cfg: SolverConfig, rhs_slack: float = 0.0,
                     report: HalanayReport | None = None) -> HalanayReport:
    """Simulate the equality system and check the per-interval envelope bounds.

    Parameters
    ----------
    rhs_slack : float
        Nonnegative extra damping ``-rhs_slack * max(y, 0)``; positive values
        give strict sub-solutions of the inequality.
    report : HalanayReport, optional
        Precomputed constants; computed with :func:`halanay_constants` if
        omitted.

    Raises
    ------
    DomainError
        If the gate fails (the lemma does not apply) or ``rhs_slack < 0``.
    EnvelopeViolationError
        At the first grid point where a bound is exceeded.
    """
    if rhs_slack < 0.0:
        raise DomainError("rhs_slack must be nonnegative")
    rep = halanay_constants(problem) if report is None else report
    if not rep.gate:
        raise DomainError("the gate M < 1 - [1 + Gamma(1+gamma)Gamma(1-gamma)] V c fails")
    times, y = _simulate(problem, cfg, rhs_slack)
    ratios = np.abs(y) / ml_array(problem.gamma, 1.0, -problem.r * times**problem.gamma)
    k = np.maximum(1, np.ceil(times / problem.mu - 1e-12)).astype(int)
    q = rep.series_ratio
    kmax = int(k.max())
    partial = 3.0 * rep.B_const * problem.y0 * np.cumsum(q ** np.arange(kmax + 1))[1:]
    first = (3.0 + problem.c * rep.gamma_product) * problem.y0
    lhs = (1.0 - rep.M_measured) * ratios
    bound = partial[k - 1]
    bound = np.where(k == 1, np.minimum(bound, first), bound)
    bad = np.nonzero(lhs > bound * (1.0 + BOUND_RTOL))[0]
    if bad.size:
        i = int(bad[0])
        raise EnvelopeViolationError(
            f"(1-M) y/E = {lhs[i]:.6g} exceeds the bound {bound[i]:.6g} at t={times[i]:g}",
            i, float(times[i]),
        )
    rep.times = times
    rep.y = y
    rep.envelope_ratios = ratios
    rep.lambda_partial_sums = partial
    rep.first_interval_bound = first
    rep.worst_margin = float(np.max(lhs / bound)) if len(lhs) else 0.0
    return rep
