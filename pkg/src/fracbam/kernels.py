"""Distributed-delay kernels, their masses, and the kernel condition (k1).

A network carries four kernel families, ``k`` and ``h`` indexed by
``(q, p, s)`` and ``k_bar`` and ``h_bar`` indexed by ``(p, q, r)``. Each
family is a :class:`KernelFamily`: a default :class:`KernelSpec` plus
optional per-triple overrides. Indices are zero-based in code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, signal

from .errors import DivergenceError, DomainError, MetadataError, QuadratureError
from .mittag_leffler import ml_array
from .quadrature import cell_integrals

__all__ = [
    "KernelSpec",
    "KernelFamily",
    "KernelConditionReport",
    "AggregateKernel",
    "total_mass",
    "tail_mass",
    "aggregate_kernel",
    "check_condition_k1",
]


@dataclass(frozen=True)
class KernelSpec:
    """A nonnegative delay kernel.

    Use :meth:`exponential` for ``w exp(-rate t)`` or :meth:`table` for a
    piecewise-linear kernel given by samples. A table kernel is continued
    beyond its last sample by ``v_last exp(-tail_rate (t - t_last))`` when
    ``tail_rate`` is given and by zero otherwise.
    """

    form: str
    rate: float = 0.0
    weight: float = 1.0
    grid: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    tail_rate: float | None = None

    def __post_init__(self) -> None:
        if self.form == "exponential":
            if not (self.rate > 0.0 and math.isfinite(self.rate)):
                raise DomainError(f"exponential kernel needs rate > 0, got {self.rate!r}")
            if not (self.weight >= 0.0 and math.isfinite(self.weight)):
                raise DomainError(f"exponential kernel needs weight >= 0, got {self.weight!r}")
        elif self.form == "table":
            g = np.asarray(self.grid, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if g.ndim != 1 or g.size < 2 or g.shape != v.shape:
                raise DomainError("table kernel needs matching 1-d grid and values of length >= 2")
            if g[0] != 0.0 or np.any(np.diff(g) <= 0.0):
                raise DomainError("table kernel grid must start at 0 and increase strictly")
            if np.any(v < 0.0) or not np.all(np.isfinite(v)):
                raise DomainError("table kernel values must be finite and nonnegative")
            if self.tail_rate is not None and not self.tail_rate > 0.0:
                raise DomainError(f"tail_rate must be positive, got {self.tail_rate!r}")
        else:
            raise DomainError(f"unknown kernel form {self.form!r}")

    @classmethod
    def exponential(cls, rate: float, weight: float = 1.0) -> "KernelSpec":
        return cls("exponential", rate=float(rate), weight=float(weight))

    @classmethod
    def table(
        cls, grid: Iterable[float], values: Iterable[float], tail_rate: float | None = None
    ) -> "KernelSpec":
        return cls(
            "table",
            grid=tuple(float(v) for v in grid),
            values=tuple(float(v) for v in values),
            tail_rate=None if tail_rate is None else float(tail_rate),
        )

    # {{{ evaluation

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.form == "exponential":
            return self.weight * np.exp(-self.rate * t)
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        out = np.interp(t, g, v, right=0.0)
        if self.tail_rate is not None:
            beyond = t > g[-1]
            out = np.where(beyond, v[-1] * np.exp(-self.tail_rate * (t - g[-1])), out)
        return out

    def _table_cumulative(self) -> np.ndarray:
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        return np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(g))])

    def _table_tail_beyond(self) -> float:
        v = self.values
        if self.tail_rate is not None:
            return v[-1] / self.tail_rate
        if v[-1] > 1e-12 * max(v):
            raise DivergenceError(
                "table kernel does not decay to zero on its grid and declares no tail"
            )
        return 0.0

    def total_mass(self) -> float:
        if self.form == "exponential":
            return self.weight / self.rate
        return float(self._table_cumulative()[-1] + self._table_tail_beyond())

    def tail_mass(self, t) -> np.ndarray | float:
        """``int_t^inf kernel(s) ds``, vectorized over ``t >= 0``."""
        ta = np.asarray(t, dtype=float)
        if np.any(ta < 0.0):
            raise DomainError("tail_mass needs t >= 0")
        if self.form == "exponential":
            out = self.weight / self.rate * np.exp(-self.rate * ta)
        else:
            g = np.asarray(self.grid)
            v = np.asarray(self.values)
            cum = self._table_cumulative()
            beyond_mass = self._table_tail_beyond()
            tc = np.minimum(ta, g[-1])
            # Mass on [0, tc] of the linear interpolant.
            k = np.clip(np.searchsorted(g, tc, side="right") - 1, 0, g.size - 2)
            vt = np.interp(tc, g, v)
            head = cum[k] + 0.5 * (v[k] + vt) * (tc - g[k])
            out = cum[-1] - head + beyond_mass
            if self.tail_rate is not None:
                far = ta > g[-1]
                out = np.where(
                    far, v[-1] / self.tail_rate * np.exp(-self.tail_rate * (ta - g[-1])), out
                )
            else:
                out = np.where(ta > g[-1], 0.0, out)
        return float(out) if np.ndim(out) == 0 else out

    # }}}


def total_mass(kernel: KernelSpec) -> float:
    """Total mass ``int_0^inf kernel``."""
    return kernel.total_mass()


def tail_mass(kernel: KernelSpec, t):
    """Tail mass ``int_t^inf kernel``."""
    return kernel.tail_mass(t)


@dataclass(frozen=True, eq=False)
class KernelFamily:
    """Kernels addressed by an index triple, a default with overrides."""

    shape: tuple[int, int, int]
    default: KernelSpec
    overrides: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for idx in self.overrides:
            if len(idx) != 3 or any(not 0 <= i < n for i, n in zip(idx, self.shape)):
                raise DomainError(f"kernel override index {idx} outside shape {self.shape}")

    @classmethod
    def uniform(cls, shape: tuple[int, int, int], kernel: KernelSpec) -> "KernelFamily":
        return cls(tuple(shape), kernel, {})

    def __getitem__(self, idx: tuple[int, int, int]) -> KernelSpec:
        return self.overrides.get(tuple(idx), self.default)

    def indices(self):
        return np.ndindex(*self.shape)

    def unique(self) -> list[KernelSpec]:
        """Distinct kernels in first-appearance order (deterministic)."""
        out: list[KernelSpec] = []
        for idx in self.indices():
            k = self[idx]
            if k not in out:
                out.append(k)
        return out

    def index_map(self, kernels: list[KernelSpec]) -> np.ndarray:
        """Array of positions into ``kernels`` for every triple."""
        out = np.empty(self.shape, dtype=int)
        for idx in self.indices():
            out[idx] = kernels.index(self[idx])
        return out

    def masses(self) -> np.ndarray:
        out = np.empty(self.shape)
        for idx in self.indices():
            out[idx] = self[idx].total_mass()
        return out

    def permuted(self, perms: tuple[np.ndarray, np.ndarray, np.ndarray]) -> "KernelFamily":
        """Family after relabelling each axis by ``new[i] = old[perm[i]]``."""
        inv = [np.argsort(p) for p in perms]
        over = {
            tuple(int(inv[a][i]) for a, i in enumerate(idx)): k
            for idx, k in self.overrides.items()
        }
        return KernelFamily(self.shape, self.default, over)

    def equals(self, other: "KernelFamily") -> bool:
        return (
            self.shape == other.shape
            and all(self[idx] == other[idx] for idx in self.indices())
        )


# {{{ aggregate kernels


class AggregateKernel:
    """Pointwise maximum of nonnegative linear combinations of kernels.

    Each branch is a list of ``(coefficient, KernelSpec)`` pairs; the value at
    ``t`` is ``max_branch sum_j coef_j kernel_j(t)``. The bounded-activation
    aggregate ``K`` has two branches (one per layer); the unbounded aggregates
    ``K*``, ``k*`` and ``h*`` have one branch per raw kernel.
    """

    def __init__(self, branches: list[list[tuple[float, KernelSpec]]]) -> None:
        self.branches = [[(float(c), k) for c, k in br if c != 0.0] for br in branches]

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for br in self.branches:
            val = np.zeros_like(t)
            for c, k in br:
                val = val + c * k(t)
            out = np.maximum(out, val)
        return out

    def is_zero(self) -> bool:
        return all(len(br) == 0 for br in self.branches)

    def total_mass(self) -> float:
        return float(self.tail_mass(0.0))

    def tail_mass(self, t):
        """``int_t^inf K`` by cell-wise Gauss-Legendre plus an adaptive far tail."""
        ta = np.atleast_1d(np.asarray(t, dtype=float))
        if self.is_zero():
            out = np.zeros_like(ta)
            return float(out[0]) if np.ndim(t) == 0 else out
        order = np.argsort(ta)
        ts = ta[order]
        far = _far_tail(self, ts[-1])
        if ts.size > 1:
            cells = cell_integrals(self, ts)
            tails = far + np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
        else:
            tails = np.array([far])
        out = np.empty_like(ta)
        out[order] = tails
        return float(out[0]) if np.ndim(t) == 0 else out


def _far_tail(fn: Callable, t0: float) -> float:
    val, err = integrate.quad(lambda s: float(fn(s)), t0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=400)
    if not err <= 1e-10 * max(1.0, abs(val)):
        raise DivergenceError(f"kernel tail beyond t={t0} did not converge (err {err:.2e})")
    return val


@dataclass(frozen=True)
class UnboundedAggregates:
    """The section-4 aggregates ``K*``, ``k*``, ``h*`` and ``h_hat* = int h*``."""

    K_star: AggregateKernel
    k_star: AggregateKernel
    h_star: AggregateKernel
    h_hat_star: float


def _bound(acts, layer: str) -> float:
    bounds = [a.bound for a in acts]
    if any(b is None for b in bounds):
        raise MetadataError(f"bounded aggregate needs a bound for every {layer}-layer activation")
    return max(bounds)


def aggregate_kernel(network, mode: str = "bounded"):
    """Aggregate kernel of a network.

    ``mode="bounded"`` returns ``K(t)`` as the maximum of

    ``G sum_{q,p,s} |d_qps| [L_q h_hat_qps k_qps(t) + L_s k_hat_qps h_qps(t)]``

    and the mirrored sum over ``d_bar`` with ``G_bar`` and ``M_p``.
    ``mode="unbounded"`` returns :class:`UnboundedAggregates` built from the
    pointwise maxima of the raw kernels.
    """
    if mode == "bounded":
        G = _bound(network.act_y, "y")
        Gb = _bound(network.act_x, "x")
        L = np.array([a.lipschitz for a in network.act_y])
        M = np.array([a.lipschitz for a in network.act_x])
        br_x = _weighted_branch(network.d, network.k, network.h, L, G)
        br_y = _weighted_branch(network.d_bar, network.k_bar, network.h_bar, M, Gb)
        return AggregateKernel([br_x, br_y])
    if mode == "unbounded":
        fams = {"k": network.k, "h": network.h, "k_bar": network.k_bar, "h_bar": network.h_bar}
        raw = {name: [[(1.0, k)] for k in fam.unique()] for name, fam in fams.items()}
        K_star = AggregateKernel(raw["k"] + raw["h"] + raw["k_bar"] + raw["h_bar"])
        k_star = AggregateKernel(raw["k"] + raw["k_bar"])
        h_star = AggregateKernel(raw["h"] + raw["h_bar"])
        return UnboundedAggregates(K_star, k_star, h_star, h_star.total_mass())
    raise DomainError(f"mode must be 'bounded' or 'unbounded', got {mode!r}")


def _weighted_branch(d, fam_k, fam_h, lip, bound) -> list[tuple[float, KernelSpec]]:
    """Coefficients of ``bound sum |d_abc| [lip_a h_hat k(t) + lip_c k_hat h(t)]``.

    ``d`` is indexed ``(a, b, c)`` where ``a`` and ``c`` index the layer whose
    activations enter through ``k`` and ``h`` respectively.
    """
    coef: dict[KernelSpec, float] = {}
    order: list[KernelSpec] = []
    for idx in np.ndindex(*d.shape):
        dv = abs(float(d[idx]))
        if dv == 0.0:
            continue
        ka, hc = fam_k[idx], fam_h[idx]
        a, _, c = idx
        for kern, val in ((ka, lip[a] * hc.total_mass()), (hc, lip[c] * ka.total_mass())):
            if kern not in coef:
                coef[kern] = 0.0
                order.append(kern)
            coef[kern] += bound * dv * val
    return [(coef[k], k) for k in order]


# }}}


# {{{ condition (k1)


@dataclass(frozen=True, eq=False)
class KernelConditionReport:
    """Measured supremum of the (k1) ratio on a grid.

    Attributes
    ----------
    omega_star : float
        ``max_t LHS(t) / E_delta(-xi t^delta)`` over ``grid``.
    grid : numpy.ndarray
        Evaluation times.
    ratios : numpy.ndarray
        The ratio at each grid time.
    passed : bool or None
        ``omega_star <= budget`` when a budget was supplied.
    budget : float or None
        The supplied budget.
    mesh_points : int
        Number of quadrature cells of the final refinement level.
    """

    omega_star: float
    grid: np.ndarray
    ratios: np.ndarray
    passed: bool | None
    budget: float | None
    mesh_points: int


def _lhs_on_mesh(K, xi: float, delta: float, T: float, n: int, pre_history: bool) -> np.ndarray:
    """LHS of (k1) at the mesh points ``j T / n``.

    The inner integral ``int_0^w E_delta(-xi l^delta) K(w - l) dl`` is a sum of
    Gauss-Legendre cell rules written as FFT convolutions; the pre-history
    part ``int_w^inf K`` (with the Mittag-Leffler factor frozen at its value
    1 at the origin) is added when ``pre_history`` is set. The outer
    integral integrates ``(t-w)^(delta-1) E_{delta,delta}(-xi (t-w)^delta)``
    exactly against the piecewise-linear interpolant of the inner integral,
    through the antiderivatives ``P1(s) = s^delta E_{delta,delta+1}(-xi s^delta)``
    and ``P2(s) = s^(delta+1) E_{delta,delta+2}(-xi s^delta)``.
    """
    from .quadrature import GL_NODES, GL_WEIGHTS

    h = T / n
    mesh = np.arange(n + 1) * h
    phi = np.zeros(n + 1)
    for x, wq in zip(GL_NODES, GL_WEIGHTS):
        lam = (np.arange(n) + x) * h  # node x inside cell j
        e = ml_array(delta, 1.0, -xi * lam**delta)
        kv = np.asarray(K((np.arange(n) + 1.0 - x) * h), dtype=float)  # K(w_m - lam_j), m - j - 1 = index
        phi[1:] += wq * h * signal.fftconvolve(e, kv)[:n]
    if pre_history:
        phi += np.asarray(K.tail_mass(mesh), dtype=float)
    sd = mesh**delta
    P1 = sd * ml_array(delta, delta + 1.0, -xi * sd)
    P2 = sd * mesh * ml_array(delta, delta + 2.0, -xi * sd)
    I0 = np.diff(P1)
    I1 = h * P1[1:] - np.diff(P2)
    A = I1 / h  # weight on the left value of a cell at distance m
    B = I0 - A  # weight on the right value
    lhs = np.zeros(n + 1)
    lhs[1:] = signal.fftconvolve(phi[:-1], A)[:n] + signal.fftconvolve(phi[1:], B)[:n]
    return lhs


def check_condition_k1(
    K,
    xi: float,
    delta: float,
    grid,
    budget: float | None = None,
    pre_history: bool = True,
    rtol: float = 1e-4,
    max_cells: int = 2**17,
) -> KernelConditionReport:
    """Measure ``Omega* = sup_t LHS(t) / E_delta(-xi t^delta)`` for condition (k1).

    Parameters
    ----------
    K : callable
        Vectorized nonnegative kernel with a ``tail_mass(t)`` method
        (:class:`KernelSpec` or :class:`AggregateKernel`).
    xi, delta : float
        Decay rate and order.
    grid : array_like
        Strictly increasing positive evaluation times.
    budget : float, optional
        If given, ``passed = omega_star <= budget``.
    pre_history : bool
        Include the ``lambda < 0`` part of the inner integral, with the
        Mittag-Leffler factor frozen at ``E_delta(0) = 1``.
    rtol : float
        The mesh is halved until ``omega_star`` changes by less than
        ``rtol`` relative to its value.

    Raises
    ------
    QuadratureError
        If refinement does not settle within ``max_cells`` cells.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0.0) or np.any(np.diff(grid) <= 0.0):
        raise DomainError("grid must be a non-empty strictly increasing array of positive times")
    if not (xi > 0.0 and 0.0 < delta <= 1.0):
        raise DomainError("need xi > 0 and delta in (0, 1]")
    T = float(grid[-1])
    env = ml_array(delta, 1.0, -xi * grid**delta)
    n = 1024
    prev = None
    while True:
        lhs = _lhs_on_mesh(K, xi, delta, T, n, pre_history)
        ratios = np.interp(grid, np.linspace(0.0, T, n + 1), lhs) / env
        omega = float(np.max(ratios))
        if prev is not None and abs(omega - prev) <= rtol * abs(omega):
            break
        if omega == 0.0 and prev == 0.0:
            break
        if 2 * n > max_cells:
            raise QuadratureError(
                f"(k1) measurement did not settle: change {abs(omega - prev):.3e} at {n} cells"
            )
        prev = omega
        n *= 2
    passed = None if budget is None else bool(omega <= budget)
    return KernelConditionReport(omega, grid, ratios, passed, budget, n)


# }}}
