"""The higher-order BAM network, its activations, histories and equilibrium.

The network has ``n1`` neurons ``x_p`` and ``n2`` neurons ``y_q``:

.. math::

    D^\\delta[x_p(t) - c x_p(t-\\mu)] = -a_p x_p(t)
        + \\sum_{q,s} d_{qps} \\int_0^\\infty k_{qps}(\\omega) g_q(y_q(t-\\omega)) d\\omega
          \\int_0^\\infty h_{qps}(\\omega) g_s(y_s(t-\\omega)) d\\omega + I_p,

and symmetrically for ``y_q`` with ``a_bar``, ``c_bar``, ``d_bar[p, q, r]``,
kernels ``k_bar`` and ``h_bar`` and activations ``g_bar`` of the ``x`` layer.
In code ``act_y`` holds the ``g_q`` (applied to ``y``) and ``act_x`` the
``g_bar_p`` (applied to ``x``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, MaxIterationError, NonContractionError
from .kernels import KernelFamily, KernelSpec

__all__ = [
    "Activation",
    "ConstantHistory",
    "SampledHistory",
    "BamNetwork",
    "Equilibrium",
    "find_equilibrium",
    "shift_to_origin",
    "WINDOWS",
]

#: Conventions for the distributed-delay integrals: ``infinite`` integrates
#: over ``[0, inf)`` (history before time 0 contributes); ``finite`` over
#: ``[0, t]`` only.
WINDOWS = ("infinite", "finite")


# {{{ activations


_BUILTIN = {
    "tanh": (np.tanh, 1.0, 1.0),
    "asinh": (np.arcsinh, 1.0, None),
}


@dataclass(frozen=True)
class Activation:
    """An activation with its Lipschitz constant and optional bound.

    ``shift`` evaluates ``g(v + shift)``; it is how the equilibrium-shifted
    network is represented.
    """

    kind: str
    lipschitz: float
    bound: float | None = None
    fn: Callable | None = field(default=None, compare=False)
    shift: float = 0.0

    def __post_init__(self) -> None:
        if self.kind in _BUILTIN:
            if self.fn is not None:
                raise DomainError(f"builtin activation {self.kind!r} takes no custom fn")
        elif self.kind == "custom":
            if self.fn is None:
                raise DomainError("custom activation needs fn")
        else:
            raise DomainError(f"unknown activation kind {self.kind!r}")
        if not (self.lipschitz > 0.0 and math.isfinite(self.lipschitz)):
            raise DomainError(f"lipschitz must be positive, got {self.lipschitz!r}")
        if self.bound is not None and not self.bound >= 0.0:
            raise DomainError(f"bound must be nonnegative, got {self.bound!r}")

    @classmethod
    def named(cls, kind: str) -> "Activation":
        """Builtin activation: ``tanh`` (L=1, G=1) or ``asinh`` (L=1, unbounded)."""
        if kind not in _BUILTIN:
            raise DomainError(f"unknown activation {kind!r}; expected one of {sorted(_BUILTIN)}")
        _, lip, bound = _BUILTIN[kind]
        return cls(kind, lip, bound)

    @classmethod
    def custom(cls, fn: Callable, lipschitz: float, bound: float | None = None) -> "Activation":
        return cls("custom", float(lipschitz), bound, fn)

    def __call__(self, v):
        f = self.fn if self.kind == "custom" else _BUILTIN[self.kind][0]
        v = np.asarray(v, dtype=float)
        return f(v + self.shift) if self.shift != 0.0 else f(v)

    def shifted(self, by: float) -> "Activation":
        if by == 0.0:
            return self
        return replace(self, shift=self.shift + float(by))

    def spot_check(self, n: int = 2000, scale: float = 10.0, seed: int = 0) -> bool:
        """Check the Lipschitz constant and bound on random points."""
        rng = np.random.default_rng(seed)
        a = rng.uniform(-scale, scale, n)
        b = rng.uniform(-scale, scale, n)
        ga, gb = self(a), self(b)
        ok = np.all(np.abs(ga - gb) <= self.lipschitz * np.abs(a - b) * (1 + 1e-12) + 1e-15)
        if self.bound is not None:
            ok = ok and np.all(np.abs(ga) <= self.bound * (1 + 1e-12))
        return bool(ok)


# }}}


# {{{ histories


@dataclass(frozen=True)
class ConstantHistory:
    """History ``phi(t) = value`` for all ``t <= 0``."""

    value: float

    def __call__(self, t):
        return np.full(np.shape(t), float(self.value)) if np.ndim(t) else float(self.value)

    def shifted(self, by: float) -> "ConstantHistory":
        return ConstantHistory(self.value + by)

    def sup_abs_deviation(self, ref: float) -> float:
        return abs(self.value - ref)

    def prehistory_integral(self, kernel: KernelSpec, g: Activation, times: np.ndarray,
                            window: float | None = None) -> np.ndarray:
        """``int_t^W kernel(s) g(phi(t - s)) ds`` at each ``t`` (``W`` defaults to inf)."""
        gv = float(g(self.value))
        tails = np.asarray(kernel.tail_mass(times), dtype=float)
        if window is not None:
            tails = np.where(times < window, tails - kernel.tail_mass(window), 0.0)
        return gv * tails


@dataclass(frozen=True)
class SampledHistory:
    """History sampled on ``times`` (increasing, ending at 0), linearly interpolated.

    Before ``times[0]`` the history equals ``before``.
    """

    times: tuple[float, ...]
    values: tuple[float, ...]
    before: float

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2 or len(self.values) != t.size:
            raise DomainError("sampled history needs matching times and values (length >= 2)")
        if t[-1] != 0.0 or np.any(np.diff(t) <= 0.0):
            raise DomainError("sampled history times must increase strictly and end at 0")

    @classmethod
    def from_function(cls, fn: Callable, t_hist: float, n: int, before: float | None = None):
        t = np.linspace(-t_hist, 0.0, n + 1)
        v = np.asarray([fn(s) for s in t], dtype=float)
        return cls(tuple(t), tuple(v), float(v[0] if before is None else before))

    def __call__(self, t):
        return np.interp(t, self.times, self.values, left=self.before)

    def shifted(self, by: float) -> "SampledHistory":
        return SampledHistory(self.times, tuple(v + by for v in self.values), self.before + by)

    def sup_abs_deviation(self, ref: float) -> float:
        return float(max(np.max(np.abs(np.asarray(self.values) - ref)), abs(self.before - ref)))

    def prehistory_integral(self, kernel: KernelSpec, g: Activation, times: np.ndarray,
                            window: float | None = None) -> np.ndarray:
        from .quadrature import cell_integrals

        th = -np.asarray(self.times)[::-1]  # lags 0 .. T_hist, increasing
        T_hist = th[-1]
        out = np.empty(len(times))
        for i, t in enumerate(times):
            hi = T_hist + t if window is None else min(T_hist + t, window)
            if hi <= t:
                out[i] = 0.0
                continue
            edges = np.union1d(t + th[t + th <= hi], [t, hi])
            part = cell_integrals(lambda s: kernel(s) * g(self(t - s)), edges).sum()
            far = kernel.tail_mass(T_hist + t)
            if window is not None:
                far = max(0.0, far - kernel.tail_mass(window)) if window > T_hist + t else 0.0
            out[i] = part + float(g(self.before)) * far
        return out


def _as_history(h):
    if isinstance(h, (ConstantHistory, SampledHistory)):
        return h
    return ConstantHistory(float(h))


# }}}


# {{{ network


def _vec(v, n: int, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.size == 1 and n > 1:
        a = np.full(n, float(a[0]))
    if a.shape != (n,):
        raise DomainError(f"{name} must have length {n}, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BamNetwork:
    """Full parameterization of the neutral higher-order BAM network.

    Attributes
    ----------
    n1, n2 : int
        Layer sizes.
    a, a_bar : numpy.ndarray
        Positive dissipation rates ``a_p`` and ``a_bar_q``.
    c, c_bar : float
        Neutral coefficients in ``[0, 1)``.
    mu : float
        Neutral delay.
    delta : float
        Caputo order in ``(0, 1]``.
    d : numpy.ndarray
        Tensor ``d[q, p, s]`` of shape ``(n2, n1, n2)``.
    d_bar : numpy.ndarray
        Tensor ``d_bar[p, q, r]`` of shape ``(n1, n2, n1)``.
    k, h : KernelFamily
        Kernels ``k_qps`` and ``h_qps``.
    k_bar, h_bar : KernelFamily
        Kernels ``k_bar_pqr`` and ``h_bar_pqr``.
    act_x, act_y : tuple of Activation
        ``g_bar_p`` (applied to ``x_p``) and ``g_q`` (applied to ``y_q``).
    I, J : numpy.ndarray
        External inputs.
    hist_x, hist_y : tuple
        Per-neuron histories on ``(-inf, 0]``.
    window : str
        ``"infinite"`` or ``"finite"``, see :data:`WINDOWS`.
    """

    n1: int
    n2: int
    a: np.ndarray
    a_bar: np.ndarray
    c: float
    c_bar: float
    mu: float
    delta: float
    d: np.ndarray
    d_bar: np.ndarray
    k: KernelFamily
    h: KernelFamily
    k_bar: KernelFamily
    h_bar: KernelFamily
    act_x: tuple
    act_y: tuple
    I: np.ndarray
    J: np.ndarray
    hist_x: tuple
    hist_y: tuple
    window: str = "infinite"

    def __post_init__(self) -> None:
        n1, n2 = self.n1, self.n2
        if not (isinstance(n1, (int, np.integer)) and isinstance(n2, (int, np.integer)) and n1 > 0 and n2 > 0):
            raise DomainError("n1 and n2 must be positive integers")
        set_ = object.__setattr__
        set_(self, "a", _vec(self.a, n1, "a"))
        set_(self, "a_bar", _vec(self.a_bar, n2, "a_bar"))
        set_(self, "I", _vec(self.I, n1, "I"))
        set_(self, "J", _vec(self.J, n2, "J"))
        if np.any(self.a <= 0.0):
            raise DomainError("a: every a_p must be positive")
        if np.any(self.a_bar <= 0.0):
            raise DomainError("a_bar: every a_bar_q must be positive")
        for name in ("c", "c_bar"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise DomainError(f"{name} must lie in [0, 1), got {v!r}")
        if not (self.mu > 0.0 and math.isfinite(self.mu)):
            raise DomainError(f"mu must be positive, got {self.mu!r}")
        if not 0.0 < self.delta <= 1.0:
            raise DomainError(f"delta must lie in (0, 1], got {self.delta!r}")
        d = np.array(self.d, dtype=float)
        db = np.array(self.d_bar, dtype=float)
        if d.shape != (n2, n1, n2):
            raise DomainError(f"d must have shape {(n2, n1, n2)}, got {d.shape}")
        if db.shape != (n1, n2, n1):
            raise DomainError(f"d_bar must have shape {(n1, n2, n1)}, got {db.shape}")
        d.setflags(write=False)
        db.setflags(write=False)
        set_(self, "d", d)
        set_(self, "d_bar", db)
        for name, shape in (("k", d.shape), ("h", d.shape), ("k_bar", db.shape), ("h_bar", db.shape)):
            fam = getattr(self, name)
            if isinstance(fam, KernelSpec):
                fam = KernelFamily.uniform(shape, fam)
                set_(self, name, fam)
            if tuple(fam.shape) != shape:
                raise DomainError(f"kernel family {name} must have shape {shape}")
        for name, n in (("act_x", n1), ("act_y", n2)):
            acts = getattr(self, name)
            if isinstance(acts, Activation):
                acts = (acts,) * n
            acts = tuple(acts)
            if len(acts) != n:
                raise DomainError(f"{name} needs {n} activations")
            set_(self, name, acts)
        for name, n in (("hist_x", n1), ("hist_y", n2)):
            hs = getattr(self, name)
            if np.ndim(hs) == 0 and not isinstance(hs, (list, tuple)):
                hs = [hs] * n
            hs = tuple(_as_history(v) for v in hs)
            if len(hs) != n:
                raise DomainError(f"{name} needs {n} histories")
            set_(self, name, hs)
        if self.window not in WINDOWS:
            raise DomainError(f"window must be one of {WINDOWS}, got {self.window!r}")

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def histories(self) -> tuple:
        return self.hist_x + self.hist_y

    @property
    def activations(self) -> tuple:
        return self.act_x + self.act_y

    @property
    def c_vec(self) -> np.ndarray:
        return np.concatenate([np.full(self.n1, self.c), np.full(self.n2, self.c_bar)])

    def with_(self, **changes) -> "BamNetwork":
        """Copy with fields replaced (validated again)."""
        return replace(self, **changes)

    def with_histories(self, hist_x, hist_y) -> "BamNetwork":
        return replace(self, hist_x=tuple(hist_x), hist_y=tuple(hist_y))

    def permuted(self, perm_x: Sequence[int], perm_y: Sequence[int]) -> "BamNetwork":
        """Relabel neurons: new ``x_i`` is old ``x_{perm_x[i]}`` (likewise for ``y``)."""
        px, py = np.asarray(perm_x), np.asarray(perm_y)
        return replace(
            self,
            a=self.a[px], a_bar=self.a_bar[py], I=self.I[px], J=self.J[py],
            d=self.d[np.ix_(py, px, py)], d_bar=self.d_bar[np.ix_(px, py, px)],
            k=self.k.permuted((py, px, py)), h=self.h.permuted((py, px, py)),
            k_bar=self.k_bar.permuted((px, py, px)), h_bar=self.h_bar.permuted((px, py, px)),
            act_x=tuple(self.act_x[i] for i in px), act_y=tuple(self.act_y[i] for i in py),
            hist_x=tuple(self.hist_x[i] for i in px), hist_y=tuple(self.hist_y[i] for i in py),
        )

    def equals(self, other: "BamNetwork") -> bool:
        """Field-by-field equality (arrays compared exactly)."""
        arrays = ("a", "a_bar", "I", "J", "d", "d_bar")
        scalars = ("n1", "n2", "c", "c_bar", "mu", "delta", "window", "act_x", "act_y",
                   "hist_x", "hist_y")
        fams = ("k", "h", "k_bar", "h_bar")
        return (
            all(getattr(self, s) == getattr(other, s) for s in scalars)
            and all(np.array_equal(getattr(self, s), getattr(other, s)) for s in arrays)
            and all(getattr(self, s).equals(getattr(other, s)) for s in fams)
        )


# }}}


# {{{ equilibrium


@dataclass(frozen=True, eq=False)
class Equilibrium:
    """Constant solution ``(x*, y*)`` with its residual and iteration count."""

    x_star: np.ndarray
    y_star: np.ndarray
    residual: float
    iterations: int

    @property
    def state(self) -> np.ndarray:
        return np.concatenate([self.x_star, self.y_star])


def _mass_products(network: BamNetwork):
    kh = network.k.masses() * network.h.masses()
    khb = network.k_bar.masses() * network.h_bar.masses()
    return network.d * kh, network.d_bar * khb


def equilibrium_maps(network: BamNetwork):
    """The two right-hand sides ``Fx(y)`` and ``Fy(x)`` without the ``-a`` term."""
    Dx, Dy = _mass_products(network)

    def fx(y):
        gy = np.array([g(v) for g, v in zip(network.act_y, y)])
        return np.einsum("qps,q,s->p", Dx, gy, gy) + network.I

    def fy(x):
        gx = np.array([g(v) for g, v in zip(network.act_x, x)])
        return np.einsum("pqr,p,r->q", Dy, gx, gx) + network.J

    return fx, fy


def equilibrium_residual(network: BamNetwork, x, y) -> float:
    """Max violation of ``0 = -a x + Fx(y)`` and ``0 = -a_bar y + Fy(x)``."""
    fx, fy = equilibrium_maps(network)
    rx = -network.a * x + fx(y)
    ry = -network.a_bar * y + fy(x)
    return float(max(np.max(np.abs(rx)), np.max(np.abs(ry))))


def find_equilibrium(
    network: BamNetwork,
    tol: float = 1e-12,
    max_iter: int = 10000,
    damping: float = 0.5,
    callback: Callable | None = None,
) -> Equilibrium:
    """Damped fixed-point iteration for the equilibrium.

    Iterates ``x <- (1 - damping) x + damping Fx(y) / a`` and the mirrored
    ``y`` update (both from the previous iterate) until the residual
    drops below ``tol``. ``callback(k, x, y)`` sees every iterate.

    Raises
    ------
    NonContractionError
        If the residual fails to shrink over any window of 10 iterations.
    MaxIterationError
        If ``max_iter`` iterations do not reach ``tol``.
    """
    fx, fy = equilibrium_maps(network)
    x = np.zeros(network.n1)
    y = np.zeros(network.n2)
    history = []
    for it in range(max_iter + 1):
        res = equilibrium_residual(network, x, y)
        history.append(res)
        if callback is not None:
            callback(it, x, y)
        if res < tol:
            return Equilibrium(x.copy(), y.copy(), res, it)
        if not math.isfinite(res):
            raise NonContractionError(f"residual became non-finite at iteration {it}")
        if it >= 10 and not res < history[it - 10]:
            raise NonContractionError(
                f"residual did not shrink over iterations {it - 10}..{it}: "
                f"{history[it - 10]:.3e} -> {res:.3e}"
            )
        x, y = (
            (1.0 - damping) * x + damping * fx(y) / network.a,
            (1.0 - damping) * y + damping * fy(x) / network.a_bar,
        )
    raise MaxIterationError(f"no convergence to {tol} in {max_iter} iterations (residual {res:.3e})")


def a_priori_box(network: BamNetwork) -> tuple[np.ndarray, np.ndarray] | None:
    """Bounds ``|x_p| <= (sum |d| k_hat h_hat G^2 + |I_p|) / a_p`` for bounded activations."""
    if any(a.bound is None for a in network.activations):
        return None
    G = max(a.bound for a in network.act_y)
    Gb = max(a.bound for a in network.act_x)
    Dx, Dy = _mass_products(network)
    bx = (np.abs(Dx).sum(axis=(0, 2)) * G**2 + np.abs(network.I)) / network.a
    by = (np.abs(Dy).sum(axis=(0, 2)) * Gb**2 + np.abs(network.J)) / network.a_bar
    return bx, by


def shift_to_origin(network: BamNetwork, eq: Equilibrium) -> BamNetwork:
    """Network in the deviation coordinates ``u = x - x*``, ``v = y - y*``.

    Activations become ``g(v + y*)``, inputs ``I_p - a_p x_p*`` (and
    ``J_q - a_bar_q y_q*``) and histories ``phi - x*``. The shift is exact for
    both integration windows, so simulating the shifted network and adding
    the equilibrium reproduces the original trajectory.
    """
    xs, ys = eq.x_star, eq.y_star
    if np.all(xs == 0.0) and np.all(ys == 0.0):
        return network
    return replace(
        network,
        act_x=tuple(g.shifted(v) for g, v in zip(network.act_x, xs)),
        act_y=tuple(g.shifted(v) for g, v in zip(network.act_y, ys)),
        I=network.I - network.a * xs,
        J=network.J - network.a_bar * ys,
        hist_x=tuple(hh.shifted(-v) for hh, v in zip(network.hist_x, xs)),
        hist_y=tuple(hh.shifted(-v) for hh, v in zip(network.hist_y, ys)),
    )


# }}}
