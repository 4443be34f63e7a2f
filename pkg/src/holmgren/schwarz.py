"""Schwarz functions of ellipses and rational-map domains, with their quadrature identities."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._poly import RealPoly2
from .polyrat import (PoleEvaluationError, RationalMap, conformal_check, poles_in_disk,
                      schwarz_pullback)
from .quadrature import gauss_legendre

BOUNDARY_TOL = 1e-10
BOUNDARY_SAMPLES = 256


class BranchPointError(ValueError):
    """Evaluation at a focus of the ellipse."""


class ContinuationError(RuntimeError):
    """Adjacent continuation values jumped by more than half the sheet separation."""


class QuadratureResolutionError(RuntimeError):
    """The polar area quadrature is not resolved."""


@dataclass(frozen=True)
class EllipseSpec:
    """Ellipse ``x^2/a^2 + y^2/b^2 = 1``; the Schwarz closed form is checked on construction."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a >= self.b > 0):
            raise ValueError(f"need a >= b > 0, got a={self.a}, b={self.b}")
        res = self.boundary_residual()
        if res >= BOUNDARY_TOL:
            raise ArithmeticError(f"ellipse Schwarz form fails its boundary check ({res:.3e})")

    @property
    def c(self) -> float:
        return float(np.sqrt(self.a ** 2 - self.b ** 2))

    @property
    def is_circle(self) -> bool:
        return self.a == self.b

    @property
    def foci(self) -> tuple[complex, ...]:
        return (0j,) if self.is_circle else (complex(self.c), complex(-self.c))

    def boundary(self, n: int = BOUNDARY_SAMPLES) -> np.ndarray:
        th = 2 * np.pi * np.arange(n) / n
        return self.a * np.cos(th) + 1j * self.b * np.sin(th)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return (z.real / self.a) ** 2 + (z.imag / self.b) ** 2 < 1

    def boundary_residual(self, n: int = BOUNDARY_SAMPLES) -> float:
        z = self.boundary(n)
        return float(np.max(np.abs(_ellipse_S(self.a, self.b, z, 1) - np.conj(z))))


def _ellipse_S(a: float, b: float, z, sheet: int):
    z = np.asarray(z, dtype=complex)
    if a == b:
        return a * a / z
    c = np.sqrt(a * a - b * b)
    root = np.sqrt(z - c) * np.sqrt(z + c)  # ~ z at infinity, cut on [-c, c]
    return ((a * a + b * b) * z - 2 * a * b * sheet * root) / (a * a - b * b)


@dataclass(frozen=True)
class SchwarzValue:
    z: complex
    value: complex
    sheet: int


def schwarz_ellipse(spec: EllipseSpec, z: complex, sheet: int = 1) -> SchwarzValue:
    """Schwarz function of the ellipse on the requested sheet.

    Sheet ``+1`` is the one agreeing with ``zbar`` on the ellipse.
    """
    if sheet not in (1, -1):
        raise ValueError("sheet must be +1 or -1")
    z = complex(z)
    if spec.is_circle:
        if z == 0:
            raise PoleEvaluationError("the circle's Schwarz function has a pole at 0")
        return SchwarzValue(z, complex(spec.a ** 2 / z), sheet)
    for f in spec.foci:
        if abs(z - f) < 1e-12 * max(1.0, spec.a):
            raise BranchPointError(f"z = {z} is a focus of the ellipse")
    return SchwarzValue(z, complex(_ellipse_S(spec.a, spec.b, z, sheet)), sheet)


def monodromy_probe(spec: EllipseSpec, loop_center: complex, loop_radius: float,
                    steps: int = 720, require_inside: bool = True) -> float:
    """Continue ``S`` around a circle and return ``|S_end - S_start|`` at the base point.

    Each step picks the sheet value nearest the previous one; a jump larger
    than half the local sheet separation aborts the continuation.
    """
    if steps < 8:
        raise ValueError("too few continuation steps")
    th = 2 * np.pi * np.arange(steps + 1) / steps
    loop = complex(loop_center) + loop_radius * np.exp(1j * th)
    loop[-1] = loop[0]
    for f in spec.foci:
        if np.min(np.abs(loop - f)) <= 1e-3:
            raise ValueError(f"loop passes within 1e-3 of the focus {f}")
    if require_inside and not np.all(spec.contains(loop)):
        raise ValueError("loop leaves the ellipse interior")
    if spec.is_circle:
        vals = spec.a ** 2 / loop
        return float(abs(vals[-1] - vals[0]))
    plus = _ellipse_S(spec.a, spec.b, loop, 1)
    minus = _ellipse_S(spec.a, spec.b, loop, -1)
    cur = plus[0]
    for k in range(1, steps + 1):
        cands = (plus[k], minus[k])
        nxt = min(cands, key=lambda s: abs(s - cur))
        if abs(nxt - cur) > 0.5 * abs(plus[k] - minus[k]):
            raise ContinuationError(f"continuation step {k} jumped; increase steps")
        cur = nxt
    return float(abs(cur - plus[0]))


def focus_loop_mismatch(spec: EllipseSpec, steps: int = 720) -> float:
    """Mismatch around the right focus (around 0 for a circle) on a loop inside the ellipse."""
    f = spec.foci[0]
    if spec.is_circle:
        return monodromy_probe(spec, 0j, 0.5 * spec.a, steps)
    room = min(spec.a - spec.c, spec.c, spec.b) * 0.9
    return monodromy_probe(spec, f, min(0.25 * spec.a, room), steps)


# -- rational-map domains ------------------------------------------------------

def rational_boundary_residual(phi: RationalMap, n: int = BOUNDARY_SAMPLES) -> float:
    """``sup |S(phi(zeta)) - conj(phi(zeta))|`` over ``n`` boundary samples."""
    zeta = np.exp(2j * np.pi * np.arange(n) / n)
    pull = schwarz_pullback(phi.to_float())
    return float(np.max(np.abs(pull(zeta) - np.conj(phi.to_float()(zeta)))))


@dataclass(frozen=True)
class QuadratureData:
    """Node functionals ``a h(node) + 2 Re(b d_z h(node))``.

    ``2 Re(b d_z h) = Re(b f')`` when ``h = Re f``, so ``b`` is the weight on the
    holomorphic derivative.
    """

    nodes: tuple
    value_weights: tuple
    derivative_weights: tuple

    def __post_init__(self):
        if not (len(self.nodes) == len(self.value_weights) == len(self.derivative_weights)):
            raise ValueError("nodes and weights must have equal length")

    def apply(self, h: RealPoly2) -> float:
        hx, hy = h.diff(0), h.diff(1)
        total = 0.0
        for z, a, b in zip(self.nodes, self.value_weights, self.derivative_weights):
            z = complex(z)
            val = float(h(z.real, z.imag))
            dz = 0.5 * (float(hx(z.real, z.imag)) - 1j * float(hy(z.real, z.imag)))
            total += a * val + 2 * (complex(b) * dz).real
        return total

    def to_json(self) -> dict:
        return {"nodes": [[complex(z).real, complex(z).imag] for z in self.nodes],
                "value_weights": [float(a) for a in self.value_weights],
                "derivative_weights": [[complex(b).real, complex(b).imag] for b in self.derivative_weights]}


@lru_cache(maxsize=None)
def _polar_rule(nr: int, nt: int):
    r, wr = gauss_legendre(nr)
    t, wt = gauss_legendre(nt)
    return r, wr, 2 * np.pi * t, 2 * np.pi * wt


def area_integral(phi: RationalMap, h: RealPoly2, nr: int = 256, nt: int = 512) -> float:
    """``int_Omega h dA = int_D h(phi) |phi'|^2 dA`` by tensor polar Gauss-Legendre."""
    phi = phi.to_float()
    dphi = phi.derivative()
    r, wr, t, wt = _polar_rule(nr, nt)
    zeta = r[:, None] * np.exp(1j * t[None, :])
    z = phi(zeta)
    jac = np.abs(dphi(zeta)) ** 2
    vals = np.asarray(h(z.real, z.imag)) * jac * r[:, None]
    return float(wr @ vals @ wt)


def resolved_area_integral(phi: RationalMap, h: RealPoly2, nr: int = 256, nt: int = 512,
                           tol: float = 1e-6) -> float:
    coarse = area_integral(phi, h, nr, nt)
    fine = area_integral(phi, h, 2 * nr, nt)
    if abs(fine - coarse) > tol:
        raise QuadratureResolutionError(f"radial refinement changed the area integral by "
                                        f"{abs(fine - coarse):.3e}")
    return fine


def default_test_functions(degree: int = 4) -> list[RealPoly2]:
    """Re and Im of ``z^k`` for ``k <= degree`` (the constant once)."""
    from ._poly import binomial_expand_2d
    out = []
    for k in range(degree + 1):
        re, im = binomial_expand_2d(k)
        out.append(re)
        if not im.is_zero():
            out.append(im)
    return out


def _nodes_inside(phi: RationalMap, nodes) -> bool:
    phi = phi.to_float()
    for z in nodes:
        eq = phi.numerator - phi.denominator * complex(z)
        if not any(abs(r) < 1 for r, _ in eq.roots()):
            return False
    return True


def fit_quadrature_data(phi: RationalMap, nodes, tests=None, derivative: bool = True,
                        nr: int = 256, nt: int = 512) -> QuadratureData:
    """Least-squares node weights reproducing the area integrals of ``tests``."""
    tests = default_test_functions() if tests is None else tests
    nodes = [complex(z) for z in nodes]
    if not _nodes_inside(phi, nodes):
        raise ValueError("quadrature nodes must lie inside the domain")
    rows, rhs = [], []
    for h in tests:
        hx, hy = h.diff(0), h.diff(1)
        row = []
        for z in nodes:
            row.append(float(h(z.real, z.imag)))
            if derivative:
                dz = 0.5 * (float(hx(z.real, z.imag)) - 1j * float(hy(z.real, z.imag)))
                row += [2 * dz.real, -2 * dz.imag]
        rows.append(row)
        rhs.append(resolved_area_integral(phi, h, nr, nt))
    sol = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)[0]
    k = 3 if derivative else 1
    a = tuple(float(sol[k * i]) for i in range(len(nodes)))
    b = tuple(complex(sol[k * i + 1], sol[k * i + 2]) if derivative else 0j for i in range(len(nodes)))
    return QuadratureData(tuple(nodes), a, b)


def quadrature_residual(phi: RationalMap, data: QuadratureData, tests=None, nr: int = 256,
                        nt: int = 512) -> tuple[float, list[float]]:
    """Max over ``tests`` of ``|int_Omega h dA - <h, data>|`` and the per-test residuals."""
    tests = default_test_functions() if tests is None else tests
    for h in tests:
        if not h.laplacian().is_zero():
            raise ValueError(f"test function {h.to_str()} is not harmonic")
    report = conformal_check(phi)
    if not report.ok:
        raise ValueError(f"map fails the conformal check: {report.reasons}")
    if not _nodes_inside(phi, data.nodes):
        raise ValueError("quadrature nodes must lie inside the domain")
    res = [abs(resolved_area_integral(phi, h, nr, nt) - data.apply(h)) for h in tests]
    return float(max(res)), res


# -- meromorphy ----------------------------------------------------------------

def meromorphy_report(source, steps: int = 720) -> dict:
    """``{"kind", "poles", "mismatch"}`` for a rational map or an ellipse.

    Rational maps list the poles of the pulled-back Schwarz function in the
    disk and their images; ellipses are routed through a focus loop.
    """
    if isinstance(source, EllipseSpec):
        mismatch = focus_loop_mismatch(source, steps)
        kind = "branched" if mismatch > 1e-3 else "meromorphic"
        poles = [{"zeta": None, "z": [0.0, 0.0], "order": 1}] if source.is_circle else []
        return {"kind": kind, "poles": poles, "mismatch": mismatch}
    phi = source.to_float()
    report = conformal_check(phi)
    if not report.ok:
        raise ValueError(f"map fails the conformal check: {report.reasons}")
    poles = []
    for p in poles_in_disk(schwarz_pullback(phi)):
        z = complex(phi(p.location))
        poles.append({"zeta": [p.location.real, p.location.imag], "z": [z.real, z.imag],
                      "order": p.order})
    return {"kind": "meromorphic", "poles": poles, "mismatch": 0.0}
