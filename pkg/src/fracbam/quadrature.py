"""Quadrature weights shared by the solver and the kernel checks."""

from __future__ import annotations

import numpy as np

#: Gauss-Legendre rule on [0, 1] used for cell-wise kernel integrals.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
GL_NODES = 0.5 * (_GL_X + 1.0)
GL_WEIGHTS = 0.5 * _GL_W


def predictor_weights(n: int, delta: float) -> np.ndarray:
    """Rectangle product-integration weights ``(i+1)^delta - i^delta``, ``i = 0..n-1``.

    Computed as ``(i+1)^delta * (1 - (1 - 1/(i+1))^delta)`` through ``expm1``
    and ``log1p`` to avoid cancellation for large ``i``.
    """
    i = np.arange(n, dtype=float)
    u = 1.0 / (i + 1.0)
    with np.errstate(divide="ignore"):
        tail = -np.expm1(delta * np.log1p(-u))
    return (i + 1.0) ** delta * tail


def corrector_weights(n: int, delta: float) -> np.ndarray:
    """Second differences ``(i+2)^(delta+1) + i^(delta+1) - 2 (i+1)^(delta+1)``.

    These are the interior trapezoidal product-integration weights of the
    Adams-Moulton corrector, indexed by the distance ``i = 0..n-1`` to the
    new point. Evaluated stably as
    ``(i+1)^(delta+1) * [expm1(p log1p(u)) + expm1(p log1p(-u))]`` with
    ``u = 1/(i+1)`` and ``p = delta + 1``.
    """
    p = delta + 1.0
    i = np.arange(n, dtype=float)
    u = 1.0 / (i + 1.0)
    with np.errstate(divide="ignore"):
        inner = np.expm1(p * np.log1p(u)) + np.expm1(p * np.log1p(-u))
    return (i + 1.0) ** p * inner


def corrector_first_weight(n: int, delta: float) -> float:
    """Weight of the initial point in the corrector for step ``n -> n+1``."""
    return n ** (delta + 1.0) - (n - delta) * (n + 1.0) ** delta


def kernel_hat_parts(kernel, h: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Half-hat weights of the hat basis on the nodes ``i h``, ``i = 0..n``.

    ``left[i] = int_{ih}^{(i+1)h} kernel(s) (1 - s/h + i) ds`` is the part of
    hat ``i`` on the cell to its right and ``right[i]`` the part on the cell to
    its left, so ``left[n] = right[0] = 0``. Each cell is integrated with an
    8-point Gauss-Legendre rule.
    """
    left = np.zeros(n + 1)
    right = np.zeros(n + 1)
    if n == 0:
        return left, right
    s = (np.arange(n)[:, None] + GL_NODES[None, :]) * h
    ks = np.asarray(kernel(s), dtype=float) * GL_WEIGHTS[None, :] * h
    left[:-1] = (ks * (1.0 - GL_NODES)[None, :]).sum(axis=1)
    right[1:] = (ks * GL_NODES[None, :]).sum(axis=1)
    return left, right


def kernel_hat_weights(kernel, h: float, n: int) -> np.ndarray:
    """Weights ``w_i = int_0^{n h} kernel(s) phi_i(s) ds`` for the hat basis on ``i h``.

    Convolving these weights with grid samples integrates the kernel exactly
    against the piecewise-linear interpolant of the samples; the last node
    carries only its left half-hat.
    """
    left, right = kernel_hat_parts(kernel, h, n)
    return left + right


def window_weights(left: np.ndarray, right: np.ndarray, k: int, cut: int | None = None) -> np.ndarray:
    """Hat weights for ``int_0^{min(k, cut) h}`` indexed by lag ``i = 0..k``.

    ``left`` and ``right`` come from :func:`kernel_hat_parts` (a leading
    axis over several kernels is allowed). Interior nodes carry full hats
    and the node at the end of the window only its left half-hat.
    """
    end = k if cut is None else min(k, cut)
    w = np.zeros(left.shape[:-1] + (k + 1,))
    w[..., :end] = left[..., :end] + right[..., :end]
    w[..., end] = right[..., end]
    return w


def cell_integrals(fn, edges: np.ndarray) -> np.ndarray:
    """Gauss-Legendre integrals of a vectorized ``fn`` over consecutive cells."""
    lo = edges[:-1, None]
    width = (edges[1:] - edges[:-1])[:, None]
    vals = np.asarray(fn(lo + width * GL_NODES[None, :]), dtype=float)
    return (vals * GL_WEIGHTS[None, :] * width).sum(axis=1)
