"""Mittag-Leffler stability certificates and decay-envelope checks.

Two certificates are provided. :func:`certify_bounded` covers bounded
activations; its central gate is

.. math::

    G_3 = [1 + \\Gamma(1+\\delta)\\Gamma(1-\\delta)]\\, F\\, \\frac{a^* c^*}{\\xi} < 1,
    \\qquad \\Omega < 1 - G_3,

with ``F = 1/(xi mu^delta) + 2^delta Gamma(1-delta)``. :func:`certify_unbounded`
covers Lipschitz activations without a bound and is local in the initial
data. ``Omega`` always comes from a measurement of the kernel condition
(k1), see :func:`fracbam.kernels.check_condition_k1`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EquilibriumMissingError, MetadataError
from .kernels import aggregate_kernel, check_condition_k1
from .mittag_leffler import gamma, ml_array
from .model import BamNetwork, Equilibrium

__all__ = [
    "StabilityCertificate",
    "EnvelopeReport",
    "measure_omega",
    "certify_bounded",
    "certify_unbounded",
    "check_envelope",
    "g3_threshold_c",
    "trend_statistic",
    "initial_deviation",
    "cl1_series_bound",
]

#: Default horizon and resolution of the (k1) measurement grid.
K1_T_END = 10.0
K1_POINTS = 1000


@dataclass(eq=False)
class StabilityCertificate:
    """All constants of a bounded or unbounded certificate.

    Constants that do not apply to the chosen mode are ``nan``. ``flags`` maps
    each checked assumption to a boolean and ``verdict`` is one of
    ``bounded-certified``, ``unbounded-certified`` or ``uncertified``.
    """

    mode: str
    delta: float
    mu: float
    a: float
    a_bar: float
    xi: float
    a_star: float
    c_star: float
    gamma_product: float
    F: float
    F_tight: float
    B: float
    G3: float
    omega_budget_bounded: float
    omega_measured: float
    W: float = math.nan
    W_star: float = math.nan
    cl1_ratio: float = math.nan
    A: float = math.nan
    U: float = math.nan
    B_star: float = math.nan
    c_threshold_unbounded: float = math.nan
    lambda_ratio: float = math.nan
    lambda_sum: float = math.nan
    theta: float = math.nan
    theta_bar: float = math.nan
    nu: float = math.nan
    nu_bar: float = math.nan
    pi_const: float = math.nan
    kappa: float = math.nan
    h_hat_star: float = math.nan
    omega_budget_unbounded: float = math.nan
    eta: float = math.nan
    V0: float = math.nan
    flags: dict = field(default_factory=dict)
    verdict: str = "uncertified"

    @property
    def certified(self) -> bool:
        return self.verdict != "uncertified"

    def to_report(self) -> str:
        """Flat ``name=value`` text: constants first, then one ``flag.<name>`` per assumption."""
        lines = []
        for key, val in asdict(self).items():
            if key == "flags":
                continue
            if isinstance(val, float):
                lines.append(f"{key}={val:.17g}")
            else:
                lines.append(f"{key}={val}")
        for key in sorted(self.flags):
            lines.append(f"flag.{key}={'true' if self.flags[key] else 'false'}")
        return "\n".join(lines) + "\n"


def _base_constants(network: BamNetwork) -> dict:
    delta, mu = network.delta, network.mu
    a_min = float(np.min(network.a))
    ab_min = float(np.min(network.a_bar))
    xi = min(a_min, ab_min)
    a_star = max(a_min, ab_min)
    c_star = max(network.c, network.c_bar)
    g = gamma(1.0 + delta) * gamma(1.0 - delta) if delta < 1.0 else math.inf
    F = 1.0 / (xi * mu**delta) + 2.0**delta * gamma(1.0 - delta) if delta < 1.0 else math.inf
    # F as displayed drops a factor Gamma(1+delta) <= 1; keep both, gate on the larger.
    F_tight = gamma(1.0 + delta) * F
    F_gate = max(F, F_tight)
    B = 1.0 + xi * gamma(1.0 - delta) * (2.0 * mu) ** delta if delta < 1.0 else math.inf
    G3 = (1.0 + g) * F_gate * a_star * c_star / xi if c_star > 0.0 else 0.0
    return dict(
        delta=delta, mu=mu, a=a_min, a_bar=ab_min, xi=xi, a_star=a_star, c_star=c_star,
        gamma_product=g, F=F, F_tight=F_tight, B=B, G3=G3, omega_budget_bounded=1.0 - G3,
    )


def g3_threshold_c(network: BamNetwork) -> float:
    """Neutral coefficient ``c*`` at which ``G3 = 1``: ``xi / (a* F [1 + Gamma(1+delta)Gamma(1-delta)])``."""
    k = _base_constants(network.with_(c=0.0, c_bar=0.0))
    return k["xi"] / (k["a_star"] * max(k["F"], k["F_tight"]) * (1.0 + k["gamma_product"]))


def measure_omega(network: BamNetwork, mode: str = "bounded", xi: float | None = None,
                  t_end: float = K1_T_END, points: int = K1_POINTS) -> float:
    """Measured (k1) supremum for the network's aggregate kernel."""
    agg = aggregate_kernel(network, mode)
    K = agg if mode == "bounded" else agg.K_star
    if xi is None:
        xi = _base_constants(network)["xi"]
    grid = np.linspace(t_end / points, t_end, points)
    return check_condition_k1(K, xi, network.delta, grid).omega_star


def certify_bounded(network: BamNetwork, omega_measured: float | None = None) -> StabilityCertificate:
    """Certificate for bounded activations.

    Gates: ``G3 < 1``, ``Omega < 1 - G3``, ``c* < 1`` and summability of the
    series with ratio ``F W a* c* / xi`` where ``W = (1 + Gamma(1+delta)Gamma(1-delta)) / (1 - Omega)``.

    Raises
    ------
    MetadataError
        If an activation has no bound.
    """
    if any(a.bound is None for a in network.activations):
        raise MetadataError("bounded certificate needs a bound for every activation")
    k = _base_constants(network)
    if omega_measured is None:
        omega_measured = measure_omega(network, "bounded", k["xi"])
    om = float(omega_measured)
    W = (1.0 + k["gamma_product"]) / (1.0 - om) if om < 1.0 else math.inf
    W_star = (3.0 + k["c_star"] * k["a_star"] / k["xi"] * k["gamma_product"]) / (1.0 - om) if om < 1.0 else math.inf
    F_gate = max(k["F"], k["F_tight"])
    ratio = F_gate * W * k["a_star"] * k["c_star"] / k["xi"] if k["c_star"] > 0.0 else 0.0
    flags = {
        "A1_kernels_integrable": True,
        "A2_bounded": True,
        "A3_lipschitz": True,
        "A4_G3_lt_1": k["G3"] < 1.0,
        "A4_omega_lt_budget": om < k["omega_budget_bounded"],
        "A4_c_star_lt_1": k["c_star"] < 1.0,
        "cl1_series_convergent": ratio < 1.0,
    }
    flags = {key: bool(v) for key, v in flags.items()}
    cert = StabilityCertificate(
        mode="bounded", omega_measured=om, W=W, W_star=W_star, cl1_ratio=ratio, flags=flags, **k
    )
    cert.verdict = "bounded-certified" if all(flags.values()) else "uncertified"
    return cert


def _theta_nu(d, fam_k, fam_h, lip, gvals):
    """``theta = sum |d| [L_a h_hat |g_c| + L_c k_hat |g_a|]`` and ``nu = sum |d| L_a L_c``."""
    theta = 0.0
    nu = 0.0
    for idx in np.ndindex(*d.shape):
        dv = abs(float(d[idx]))
        if dv == 0.0:
            continue
        a, _, c = idx
        kh = fam_k[idx].total_mass()
        hh = fam_h[idx].total_mass()
        theta += dv * (lip[a] * hh * abs(gvals[c]) + lip[c] * kh * abs(gvals[a]))
        nu += dv * lip[a] * lip[c]
    return theta, nu


def initial_deviation(network: BamNetwork, eq: Equilibrium) -> float:
    """``V0 = max(sum_p sup|phi_p - x_p*|, sum_q sup|phi_bar_q - y_q*|)``."""
    u0 = sum(hh.sup_abs_deviation(v) for hh, v in zip(network.hist_x, eq.x_star))
    v0 = sum(hh.sup_abs_deviation(v) for hh, v in zip(network.hist_y, eq.y_star))
    return float(max(u0, v0))


def certify_unbounded(
    network: BamNetwork, eq: Equilibrium | None, omega_measured: float | None = None
) -> StabilityCertificate:
    """Local certificate for Lipschitz (possibly unbounded) activations.

    Gates: ``Omega pi < 1/4``, ``c* < min(1, 1/(2 B* (1 + U)))``, convergence
    of the series with ratio ``2 B* c* (1 + U)`` and
    ``Omega (pi + eta kappa h_hat*) < 1/2`` for the chosen ``eta``. The
    smallness of the data, ``V0 Lambda < eta / 4``, is reported as the
    separate flag ``local_data_small`` and does not enter the verdict,
    which concerns the network rather than one initial condition.

    Raises
    ------
    EquilibriumMissingError
        If ``eq`` is ``None``.
    """
    if eq is None:
        raise EquilibriumMissingError("unbounded certificate needs the equilibrium")
    k = _base_constants(network)
    if omega_measured is None:
        omega_measured = measure_omega(network, "unbounded", k["xi"])
    om = float(omega_measured)
    L = np.array([a.lipschitz for a in network.act_y])
    M = np.array([a.lipschitz for a in network.act_x])
    gy = np.array([g(v) for g, v in zip(network.act_y, eq.y_star)], dtype=float)
    gx = np.array([g(v) for g, v in zip(network.act_x, eq.x_star)], dtype=float)
    theta, nu = _theta_nu(network.d, network.k, network.h, L, gy)
    theta_bar, nu_bar = _theta_nu(network.d_bar, network.k_bar, network.h_bar, M, gx)
    pi_c = max(theta, theta_bar)
    kappa = max(nu, nu_bar)
    A = max(float(np.sum(network.a)), float(np.sum(network.a_bar)))
    U = A * k["gamma_product"] / k["xi"]
    F_gate = max(k["F"], k["F_tight"])
    B_star = max(k["B"], F_gate)
    thr = 1.0 / (2.0 * B_star * (1.0 + U))
    q = 2.0 * B_star * k["c_star"] * (1.0 + U)
    lam = 1.0 / (1.0 - q) if q < 1.0 else math.inf
    h_hat_star = aggregate_kernel(network, "unbounded").h_hat_star
    # Smallest eta = 2^-m (m >= 0) with Omega eta kappa h_hat* < 1/4.
    eta = 1.0
    prod = om * kappa * h_hat_star
    while prod * eta >= 0.25 and eta > 1e-300:
        eta *= 0.5
    V0 = initial_deviation(network, eq)
    budget = 1.0 / (4.0 * pi_c) if pi_c > 0.0 else math.inf
    flags = {
        "A1_kernels_integrable": True,
        "A3_lipschitz": True,
        "A5_omega_pi_lt_quarter": om * pi_c < 0.25,
        "A5_c_star_lt_threshold": k["c_star"] < min(1.0, thr),
        "lambda_series_convergent": q < 1.0,
        "proof_omega_pi_eta_lt_half": om * (pi_c + eta * kappa * h_hat_star) < 0.5,
        "local_data_small": V0 * lam < eta / 4.0,
    }
    flags = {key: bool(v) for key, v in flags.items()}
    cert = StabilityCertificate(
        mode="unbounded", omega_measured=om, A=A, U=U, B_star=B_star,
        c_threshold_unbounded=thr, lambda_ratio=q, lambda_sum=lam, theta=theta,
        theta_bar=theta_bar, nu=nu, nu_bar=nu_bar, pi_const=pi_c, kappa=kappa,
        h_hat_star=h_hat_star, omega_budget_unbounded=budget, eta=eta, V0=V0, flags=flags, **k,
    )
    structural = [v for key, v in flags.items() if key != "local_data_small"]
    cert.verdict = "unbounded-certified" if all(structural) else "uncertified"
    return cert


# {{{ envelope


def cl1_series_bound(cert: StabilityCertificate, V0: float, times) -> np.ndarray:
    """Proof-side bound on ``V(t) / E_delta(-xi t^delta)`` for a bounded certificate.

    On ``[(k-1) mu, k mu]`` the bound is
    ``3 B V0 sum_{l=0}^{k} r^l / (1 - Omega)`` with ``r = F W a* c* / xi``;
    ``k = max(1, ceil(t / mu))``.
    """
    t = np.asarray(times, dtype=float)
    k = np.maximum(1, np.ceil(t / cert.mu - 1e-12)).astype(int)
    r = cert.cl1_ratio
    if r == 1.0:
        partial = (k + 1).astype(float)
    else:
        partial = (1.0 - r ** (k + 1)) / (1.0 - r)
    return 3.0 * cert.B * V0 * partial / (1.0 - cert.omega_measured)


@dataclass(frozen=True, eq=False)
class EnvelopeReport:
    """Fit of ``V(t) <= C E_delta(-xi t^delta)`` along a trajectory.

    ``trend`` is the least-squares slope of the ratio over the final quarter
    of the grid, multiplied by that quarter's duration and divided by
    ``C_fit``; the ratio counts as non-increasing when ``trend <= 0.01``.
    """

    C_fit: float
    xi_used: float
    max_ratio: float
    passed: bool
    ratios: np.ndarray
    trend: float


#: Relative tolerance on the final-quarter trend of the envelope ratio.
TREND_TOL = 0.01


def trend_statistic(times: np.ndarray, ratios: np.ndarray, scale: float) -> float:
    """Normalized least-squares slope of ``ratios`` over the final quarter."""
    n = len(times)
    start = (3 * n) // 4
    tq, rq = times[start:], ratios[start:]
    if len(tq) < 2 or scale <= 0.0:
        return 0.0
    slope = np.polyfit(tq, rq, 1)[0]
    return float(slope * (tq[-1] - tq[0]) / scale)


def check_envelope(traj, eq: Equilibrium, xi: float, delta: float) -> EnvelopeReport:
    """Ratio ``V(t) / E_delta(-xi t^delta)`` with ``V = max(sum|x - x*|, sum|y - y*|)``."""
    u = np.abs(traj.x - eq.x_star[None, :]).sum(axis=1)
    v = np.abs(traj.y - eq.y_star[None, :]).sum(axis=1)
    V = np.maximum(u, v)
    env = ml_array(delta, 1.0, -xi * traj.times**delta)
    ratios = V / env
    max_ratio = float(np.max(ratios))
    trend = trend_statistic(traj.times, ratios, max_ratio)
    passed = bool(math.isfinite(max_ratio) and trend <= TREND_TOL)
    return EnvelopeReport(max_ratio, float(xi), max_ratio, passed, ratios, trend)


# }}}
