"""Finite-difference jets of real plane fields, Wirtinger operators and flatness decay.

Derivatives use wide central stencils (half-width ``HALF_WIDTH``) built from
exact rational weights, followed by one Richardson level from steps ``h`` and
``h/2``.  Fields may declare ``numpy.longdouble`` evaluation; the stencil
arithmetic then runs in extended precision, which is what makes fourth
derivatives of the explicit kernel usable at step 1e-2.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Callable, Sequence

import numpy as np
from sympy import Rational
from sympy.calculus.finite_diff import finite_diff_weights

HALF_WIDTH = 6
DEFAULT_STEP = 1e-2
SINGULAR_GUARD = 1e-6
NOISE_FLOOR = 1e-15
MAX_ORDER = 4


class StencilError(ValueError):
    """A finite-difference stencil touches a declared singular point."""


class SingularEvaluationError(ValueError):
    """Evaluation requested within SINGULAR_GUARD of a declared singular point."""


@lru_cache(maxsize=None)
def fd_weights(derivative: int, half_width: int = HALF_WIDTH) -> tuple:
    """Exact central weights for ``d^k/dx^k`` on nodes ``-P..P`` (unit spacing)."""
    nodes = [Rational(j) for j in range(-half_width, half_width + 1)]
    w = finite_diff_weights(derivative, nodes, 0)[derivative][-1]
    return tuple(w)


def fd_weights_array(derivative: int, half_width: int, dtype) -> np.ndarray:
    return np.array([dtype(int(c.p)) / dtype(int(c.q)) for c in fd_weights(derivative, half_width)],
                    dtype=dtype)


def accuracy_order(derivative: int, half_width: int = HALF_WIDTH) -> int:
    """Truncation order of the symmetric ``2P+1`` point stencil for ``derivative``."""
    if derivative == 0:
        return 10 ** 6
    return 2 * half_width + 2 - 2 * ((derivative + 1) // 2)


class ScalarField2:
    """Real field on a plane domain.

    ``func(x, y)`` must be vectorized and pure.  Points closer than
    ``SINGULAR_GUARD`` to a declared singular point are refused.
    """

    def __init__(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray], smoothness: int = 4,
                 singular: Sequence[complex] = (), dtype=np.float64, name: str = "field"):
        self.func = func
        self.smoothness = int(smoothness)
        self.singular = tuple(complex(s) for s in singular)
        self.dtype = np.dtype(dtype).type
        self.name = name

    def distance_to_singular(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = np.full(np.broadcast(x, y).shape, np.inf)
        for s in self.singular:
            d = np.minimum(d, np.hypot(x - s.real, y - s.imag))
        return d

    def __call__(self, x, y):
        d = self.distance_to_singular(x, y)
        if np.any(d < SINGULAR_GUARD):
            idx = np.unravel_index(np.argmin(d), d.shape)
            bad = complex(np.asarray(x, dtype=float)[idx] if np.ndim(x) else x,
                          np.asarray(y, dtype=float)[idx] if np.ndim(y) else y)
            raise SingularEvaluationError(f"{self.name}: evaluation at {bad} is within "
                                          f"{SINGULAR_GUARD} of a singular point")
        return self.func(np.asarray(x, dtype=self.dtype), np.asarray(y, dtype=self.dtype))

    def at(self, z):
        z = np.asarray(z, dtype=complex)
        return self(z.real, z.imag)

    def scaled(self, factor: float) -> "ScalarField2":
        return ScalarField2(lambda x, y: factor * self.func(x, y), self.smoothness,
                            self.singular, self.dtype, f"{factor}*{self.name}")

    def __sub__(self, other: "ScalarField2") -> "ScalarField2":
        dtype = np.result_type(self.dtype, other.dtype).type
        return ScalarField2(lambda x, y: self.func(x, y) - other.func(x, y),
                            min(self.smoothness, other.smoothness),
                            self.singular + other.singular, dtype, f"{self.name}-{other.name}")


def polynomial_field(poly, name: str = "poly") -> ScalarField2:
    """Wrap an exact RealPoly2 as a long-double field (keeps order-4 jets near 1e-10)."""
    return ScalarField2(lambda x, y: poly(x, y), smoothness=10 ** 6, dtype=np.longdouble, name=name)


def explicit_kernel() -> ScalarField2:
    """``(1-|z|^2)^3 / |1-z|^4``: biharmonic in the disk, cubically flat on the circle minus 1."""

    def u(x, y):
        r2 = x * x + y * y
        d2 = (1 - x) ** 2 + y * y
        return (1 - r2) ** 3 / (d2 * d2)

    return ScalarField2(u, smoothness=10 ** 6, singular=(1 + 0j,), dtype=np.longdouble,
                        name="kernel")


@dataclass
class Jet2:
    """Partial derivatives ``d_x^a d_y^b u`` for ``a + b <= order`` at base points.

    Values are floats for a single point or arrays for a batch.  Each partial
    is stored once under its exponent pair, so mixed partials are symmetric by
    construction.
    """

    base: np.ndarray
    order: int
    partials: dict

    def __getitem__(self, ab: tuple[int, int]):
        a, b = ab
        if a + b > self.order:
            raise KeyError(f"partial {(a, b)} exceeds jet order {self.order}")
        return self.partials[(a, b)]

    @property
    def value(self):
        return self.partials[(0, 0)]

    def laplacian(self):
        return self[2, 0] + self[0, 2]

    def bilaplacian(self):
        return self[4, 0] + 2 * self[2, 2] + self[0, 4]

    def directional(self, direction: complex, k: int):
        """``k``-th derivative along the unit vector ``direction``."""
        nx, ny = direction.real, direction.imag
        return sum(comb(k, a) * nx ** a * ny ** (k - a) * self[a, k - a] for a in range(k + 1))


def wirtinger_power(jet: Jet2, m: int, n: int):
    """``d_z^m dbar_z^n u`` from the stored partials."""
    if m + n > jet.order:
        raise ValueError(f"jet order {jet.order} too low for d_z^{m} dbar^{n}")
    # (dx - i dy)^m (dx + i dy)^n / 2^(m+n) expanded in dx^a dy^b
    coeff = np.zeros(m + n + 1, dtype=complex)
    for j in range(m + 1):
        for k in range(n + 1):
            coeff[j + k] += comb(m, j) * comb(n, k) * (-1j) ** j * (1j) ** k
    total = 0
    for b, c in enumerate(coeff):
        if c != 0:
            total = total + c * np.asarray(jet[m + n - b, b], dtype=float)
    return total / 2 ** (m + n)


def wirtinger(jet: Jet2):
    """``(d_z u, dbar_z u)``."""
    return wirtinger_power(jet, 1, 0), wirtinger_power(jet, 0, 1)


def _check_stencil(field: ScalarField2, pts: np.ndarray, radius: float):
    if not field.singular:
        return
    d = field.distance_to_singular(pts.real, pts.imag)
    bad = d <= radius + SINGULAR_GUARD
    if np.any(bad):
        p = pts.ravel()[np.argmax(bad.ravel())]
        raise StencilError(f"{field.name}: stencil of radius {radius:.3g} at {complex(p)} "
                           f"touches a singular point")


def _raw_jets(field: ScalarField2, pts: np.ndarray, order: int, h, half_width: int) -> dict:
    dt = field.dtype
    offs = np.arange(-half_width, half_width + 1).astype(dt) * dt(h)
    x0 = np.asarray(pts.real, dtype=dt)[:, None, None]
    y0 = np.asarray(pts.imag, dtype=dt)[:, None, None]
    xs, ys = np.broadcast_arrays(x0 + offs[None, :, None], y0 + offs[None, None, :])
    vals = np.broadcast_to(np.asarray(field.func(xs, ys), dtype=dt), xs.shape)
    w = [fd_weights_array(k, half_width, dt) / dt(h) ** k for k in range(order + 1)]
    out = {}
    for a in range(order + 1):
        ax = np.tensordot(vals, w[a], axes=([1], [0]))
        for b in range(order + 1 - a):
            out[(a, b)] = np.tensordot(ax, w[b], axes=([1], [0]))
    return out


def jets_at(field: ScalarField2, points, order: int = MAX_ORDER, step: float = DEFAULT_STEP,
            half_width: int = HALF_WIDTH, richardson: bool = True) -> Jet2:
    """Batch version of :func:`jet_at`; ``points`` is an array of complex numbers."""
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must be in 0..{MAX_ORDER}")
    if step <= 0:
        raise ValueError("step must be positive")
    pts = np.atleast_1d(np.asarray(points, dtype=complex)).ravel()
    _check_stencil(field, pts, np.sqrt(2) * half_width * step)
    coarse = _raw_jets(field, pts, order, step, half_width)
    if richardson:
        fine = _raw_jets(field, pts, order, field.dtype(step) / 2, half_width)
        partials = {}
        for (a, b), v in coarse.items():
            p = min(accuracy_order(a, half_width), accuracy_order(b, half_width))
            if p > 100:
                partials[(a, b)] = fine[(a, b)]
            else:
                g = field.dtype(2) ** p
                partials[(a, b)] = (g * fine[(a, b)] - v) / (g - 1)
    else:
        partials = coarse
    partials = {k: np.asarray(v, dtype=float) for k, v in partials.items()}
    return Jet2(pts, order, partials)


def jet_at(field: ScalarField2, point, order: int = MAX_ORDER, step: float = DEFAULT_STEP,
           half_width: int = HALF_WIDTH) -> Jet2:
    """All partials up to ``order`` at one point by Richardson-extrapolated central differences."""
    j = jets_at(field, [point], order, step, half_width)
    return Jet2(complex(j.base[0]), order, {k: float(v[0]) for k, v in j.partials.items()})


def bilaplacian_residual(field: ScalarField2, grid, step: float = DEFAULT_STEP,
                         half_width: int = HALF_WIDTH) -> tuple[float, np.ndarray]:
    """Max of ``|Delta^2 u|`` over ``grid`` and the per-point values."""
    pts = np.atleast_1d(np.asarray(grid, dtype=complex)).ravel()
    if field.singular and np.any(field.distance_to_singular(pts.real, pts.imag) < 4 * step):
        raise StencilError(f"{field.name}: grid comes within 4*step of a singular point")
    vals = np.abs(jets_at(field, pts, 4, step, half_width).bilaplacian())
    return float(np.max(vals)), vals


def disk_grid(n: int = 20, radius: float = 0.8) -> np.ndarray:
    """Points of an ``n x n`` Cartesian grid on ``[-radius, radius]^2`` inside ``|z| <= radius``."""
    s = np.linspace(-radius, radius, n)
    z = (s[:, None] + 1j * s[None, :]).ravel()
    return z[np.abs(z) <= radius + 1e-12]


def normal_derivatives(field: ScalarField2, points, normals, step: float = DEFAULT_STEP,
                       half_width: int = HALF_WIDTH) -> np.ndarray:
    """``(u, d_n u, d_n^2 u)`` along unit ``normals`` via 1D stencils, shape ``(n, 3)``."""
    pts = np.atleast_1d(np.asarray(points, dtype=complex)).ravel()
    nrm = np.broadcast_to(np.asarray(normals, dtype=complex), pts.shape)
    _check_stencil(field, pts, half_width * step)
    dt = field.dtype

    def raw(h):
        offs = np.arange(-half_width, half_width + 1).astype(dt) * dt(h)
        x = np.asarray(pts.real, dtype=dt)[:, None] + np.asarray(nrm.real, dtype=dt)[:, None] * offs
        y = np.asarray(pts.imag, dtype=dt)[:, None] + np.asarray(nrm.imag, dtype=dt)[:, None] * offs
        vals = np.broadcast_to(np.asarray(field.func(x, y), dtype=dt), x.shape)
        return [vals @ (fd_weights_array(k, half_width, dt) / dt(h) ** k) for k in range(3)]

    coarse, fine = raw(step), raw(dt(step) / 2)
    out = np.empty((pts.size, 3))
    out[:, 0] = np.asarray(fine[0], dtype=float)
    for k in (1, 2):
        g = dt(2) ** accuracy_order(k, half_width)
        out[:, k] = np.asarray((g * fine[k] - coarse[k]) / (g - 1), dtype=float)
    return out


@dataclass
class CurveArc:
    """Boundary arc ``t in [0,1] -> point`` with an inward unit normal."""

    point: Callable[[np.ndarray], np.ndarray]
    normal: Callable[[np.ndarray], np.ndarray]
    exclude_endpoints: bool = True
    arc_id: str = "arc"

    def __post_init__(self):
        t = np.linspace(0, 1, 257)
        n = np.asarray(self.normal(t), dtype=complex)
        if np.max(np.abs(np.abs(n) - 1)) > 1e-12:
            raise ValueError(f"{self.arc_id}: normal is not unit length")
        p = np.asarray(self.point(t), dtype=complex)
        if np.min(np.abs(np.diff(p))) <= 0:
            raise ValueError(f"{self.arc_id}: parametrization is not injective on samples")

    @classmethod
    def circle(cls, theta0: float, theta1: float, radius: float = 1.0, center: complex = 0j,
               arc_id: str | None = None) -> "CurveArc":
        """Arc of the circle ``|z - center| = radius`` from ``theta0`` to ``theta1`` (ccw)."""
        def point(t):
            return center + radius * np.exp(1j * (theta0 + (theta1 - theta0) * np.asarray(t)))

        def normal(t):
            return -np.exp(1j * (theta0 + (theta1 - theta0) * np.asarray(t)))

        return cls(point, normal, True, arc_id or f"circle[{theta0:.6g},{theta1:.6g}]")

    def samples(self, n: int, margin: float = 0.0) -> np.ndarray:
        if self.exclude_endpoints:
            margin = max(margin, 1.0 / (2 * n))
        return np.linspace(margin, 1 - margin, n)


def default_ladder(k: int = 8, t0: float = 0.05) -> np.ndarray:
    return t0 * 0.5 ** np.arange(k)


@dataclass
class DecayReport:
    t: np.ndarray
    abs_u: np.ndarray
    abs_dnu: np.ndarray
    abs_dn2u: np.ndarray
    expected_order: int
    exponents: list
    verdicts: list
    noise_floor: list
    arc_id: str = "arc"
    thresholds: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.verdicts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# flatness decay on {self.arc_id}: max over arc samples of |u|, |d_n u|, "
                  f"|d_n^2 u| at inward distance t\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "abs_u", "abs_dnu", "abs_dn2u"])
        for row in zip(self.t, self.abs_u, self.abs_dnu, self.abs_dn2u):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"arc_id": self.arc_id, "expected_order": self.expected_order,
                "exponents": [None if e is None else float(e) for e in self.exponents],
                "thresholds": [float(x) for x in self.thresholds],
                "noise_floor": list(self.noise_floor), "verdicts": list(self.verdicts)}

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def fit_exponent(t: np.ndarray, values: np.ndarray) -> tuple[float | None, bool]:
    """Least-squares slope of ``log|value|`` against ``log t``; ``(None, True)`` at noise floor."""
    v = np.abs(np.asarray(values, dtype=float))
    keep = v >= NOISE_FLOOR
    if keep.sum() < 2:
        return None, True
    slope = np.polyfit(np.log(t[keep]), np.log(v[keep]), 1)[0]
    return float(slope), False


def flatness_decay(field: ScalarField2, arc: CurveArc, t_ladder=None, expected_order: int = 3,
                   samples: int = 9, margin: float = 0.0, step: float = DEFAULT_STEP) -> DecayReport:
    """Measure the decay of ``u``, ``d_n u``, ``d_n^2 u`` approaching ``arc`` along inward normals.

    Each ladder value records the maximum over ``samples`` arc points.  The
    verdict for the k-th quantity is a fitted exponent of at least
    ``expected_order - k - 0.2``, or values entirely at the noise floor.
    """
    t = default_ladder() if t_ladder is None else np.asarray(t_ladder, dtype=float)
    if t.size < 6:
        raise ValueError("the exponent fit needs at least 6 ladder points")
    if np.any(t <= 0):
        raise ValueError("ladder values must be positive")
    s = arc.samples(samples, margin)
    base = np.asarray(arc.point(s), dtype=complex)
    nrm = np.asarray(arc.normal(s), dtype=complex)
    probes = (base[None, :] + t[:, None] * nrm[None, :]).ravel()
    dirs = np.broadcast_to(nrm[None, :], (t.size, s.size)).ravel()
    vals = np.abs(normal_derivatives(field, probes, dirs, step)).reshape(t.size, s.size, 3)
    peak = vals.max(axis=1)
    exps, verdicts, floors, thresholds = [], [], [], []
    for k in range(3):
        e, at_floor = fit_exponent(t, peak[:, k])
        need = expected_order - k - 0.2
        exps.append(e)
        floors.append(at_floor)
        thresholds.append(need)
        verdicts.append(bool(at_floor or e >= need))
    return DecayReport(t, peak[:, 0], peak[:, 1], peak[:, 2], expected_order, exps, verdicts,
                       floors, arc.arc_id, thresholds)
