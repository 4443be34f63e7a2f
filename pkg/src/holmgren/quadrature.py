"""Gauss-Legendre rules, segment integrals in the complex plane, Cauchy-FFT Taylor coefficients."""
from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np


class QuadratureError(RuntimeError):
    """Raised when a quadrature does not reach its tolerance."""


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``n``-point rule on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def composite_rule(n: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(n)
    edges = np.linspace(0.0, 1.0, panels + 1)
    nodes = (edges[:-1, None] + np.diff(edges)[:, None] * x[None, :]).ravel()
    weights = (np.diff(edges)[:, None] * w[None, :]).ravel()
    return nodes, weights


def segment_integral(f: Callable[[np.ndarray], np.ndarray], start, end,
                     n: int = 20, panels: int = 4) -> np.ndarray:
    """Integrate ``f`` along the straight segments ``[start, end]`` (vectorized).

    ``f`` receives an array of shape ``start.shape + (nodes,)`` and may return
    extra trailing axes (several integrands at once); the result keeps them.
    """
    start = np.asarray(start, dtype=complex)
    end = np.asarray(end, dtype=complex)
    start, end = np.broadcast_arrays(start, end)
    s, w = composite_rule(n, panels)
    delta = end - start
    eta = start[..., None] + delta[..., None] * s
    vals = np.asarray(f(eta))
    extra = vals.ndim - eta.ndim
    wshape = w.reshape(w.shape + (1,) * extra)
    total = np.sum(vals * wshape, axis=eta.ndim - 1)
    return total * delta.reshape(delta.shape + (1,) * extra)


def adaptive_segment_integral(f, start, end, tol: float = 1e-13, n: int = 20,
                              panels: int = 2, max_panels: int = 256) -> np.ndarray:
    """Batch-adaptive version of :func:`segment_integral`.

    The panel count is doubled for the whole batch until two successive
    estimates agree to ``tol`` relative to the batch scale.  Using one rule for
    the whole batch keeps the result a smooth function of the endpoints, which
    finite-difference stencils downstream rely on.
    """
    prev = segment_integral(f, start, end, n=n, panels=panels)
    while True:
        panels *= 2
        cur = segment_integral(f, start, end, n=n, panels=panels)
        scale = max(1.0, float(np.max(np.abs(cur)))) if cur.size else 1.0
        if cur.size == 0 or float(np.max(np.abs(cur - prev))) <= tol * scale:
            return cur
        if panels >= max_panels:
            raise QuadratureError(
                f"segment quadrature did not converge with {panels} panels "
                f"(last change {float(np.max(np.abs(cur - prev))):.3e})")
        prev = cur


def adaptive_gl(f: Callable[[np.ndarray], np.ndarray], a: complex, b: complex,
                tol: float = 1e-12, n: int = 16, depth: int = 40) -> complex:
    """Scalar adaptive Gauss-Legendre along ``[a, b]``; splits until halves agree."""
    x, w = gauss_legendre(n)

    def rule(lo, hi):
        eta = lo + (hi - lo) * x
        return complex(np.sum(w * f(eta)) * (hi - lo))

    def recurse(lo, hi, whole, level):
        mid = 0.5 * (lo + hi)
        left, right = rule(lo, mid), rule(mid, hi)
        if abs(left + right - whole) <= tol * max(1.0, abs(left + right)):
            return left + right
        if level >= depth:
            raise QuadratureError(f"adaptive quadrature exceeded depth on [{lo}, {hi}]")
        return recurse(lo, mid, left, level + 1) + recurse(mid, hi, right, level + 1)

    return recurse(complex(a), complex(b), rule(complex(a), complex(b)), 0)


def laurent_coefficients(f: Callable[[np.ndarray], np.ndarray], center: complex,
                         radius: float, n: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Laurent coefficients of ``f`` on the circle ``|z - center| = radius``.

    Returns ``(pos, neg)``: ``pos[k]`` approximates the coefficient of
    ``(z-center)^k`` for ``0 <= k < n/2`` and ``neg[k-1]`` that of
    ``(z-center)^{-k}``.  Trapezoid rule on the circle, so the error decays
    geometrically in ``n``.
    """
    theta = 2 * np.pi * np.arange(n) / n
    z = center + radius * np.exp(1j * theta)
    vals = np.asarray(f(z), dtype=complex)
    c = np.fft.fft(vals) / n
    half = n // 2
    k = np.arange(half)
    pos = c[:half] / radius ** k
    kneg = np.arange(1, half)
    neg = c[n - kneg] * radius ** kneg
    return pos, neg


class TaylorPatch:
    """Power series of a holomorphic function about ``center``.

    Used where the closed-form expression is a removable 0/0.  The series
    comes from :func:`laurent_coefficients` on a circle of radius
    ``fft_radius`` and is trusted inside ``use_radius``.  ``pole_excess`` is
    the largest negative-power term on the circle relative to the function
    scale there; it certifies that the singularity really is removable.
    """

    def __init__(self, f, center: complex, fft_radius: float, use_radius: float | None = None,
                 n: int = 64):
        self.center = complex(center)
        self.fft_radius = float(fft_radius)
        self.use_radius = float(use_radius if use_radius is not None else fft_radius / 2)
        pos, neg = laurent_coefficients(f, self.center, self.fft_radius, n)
        self.coeffs = pos
        kneg = np.arange(1, len(neg) + 1)
        scale = max(float(np.max(np.abs(pos * self.fft_radius ** np.arange(len(pos))))), 1e-300)
        self.pole_excess = float(np.max(np.abs(neg) * self.fft_radius ** (-kneg))) / scale
        self.scale = scale

    def __call__(self, z, derivative: int = 0):
        d = np.asarray(z, dtype=complex) - self.center
        c = self.coeffs
        for _ in range(derivative):
            c = c[1:] * np.arange(1, len(c))
        out = np.zeros_like(d)
        for coef in c[::-1]:
            out = out * d + coef
        return out

    def derivative_at_center(self, k: int) -> complex:
        from math import factorial
        return complex(self.coeffs[k]) * factorial(k)

    def inside(self, z) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) < self.use_radius
