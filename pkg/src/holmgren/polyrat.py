"""Complex polynomials and rational maps of the disk.

Two coefficient modes coexist: floating (``complex``) for evaluation
pipelines, and exact Gaussian rationals (sympy's ``QQ_I``) for identity
checks.  Conversion between the two is always explicit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.distance import pdist
from sympy.polys.domains import QQ_I
from sympy.polys.euclidtools import dup_gcd
from sympy.polys.sqfreetools import dup_sqf_list

MAX_DEGREE = 20
ROOT_CLUSTER_TOL = 1e-10

_GaussType = type(QQ_I(0))


class PoleEvaluationError(ZeroDivisionError):
    """Evaluation of a rational function at a zero of its denominator."""


class RootFindingError(ArithmeticError):
    """Companion-matrix root finding failed."""


def gauss(re, im=0):
    """Exact Gaussian rational ``re + i im`` from ints/Fractions."""
    return QQ_I(Fraction(re), Fraction(im))


def _is_exact(c) -> bool:
    return isinstance(c, _GaussType)


def _to_gauss(c):
    if _is_exact(c):
        return c
    if isinstance(c, (int, Fraction)):
        return QQ_I(Fraction(c), 0)
    if isinstance(c, complex) or isinstance(c, float):
        c = complex(c)
        return QQ_I(Fraction(c.real), Fraction(c.imag))
    raise TypeError(f"cannot convert {c!r} to a Gaussian rational")


def _gauss_to_complex(c) -> complex:
    return complex(float(c.x), float(c.y))


def _gauss_conj(c):
    return QQ_I(c.x, -c.y)


def _is_zero(c) -> bool:
    return not c if _is_exact(c) else c == 0


@dataclass(frozen=True)
class ComplexPoly:
    """Polynomial with coefficients in ascending degree order.

    The zero polynomial is the empty tuple; otherwise the last coefficient is
    nonzero.
    """

    coefficients: tuple = ()

    def __post_init__(self):
        coeffs = list(self.coefficients)
        exact = any(_is_exact(c) for c in coeffs)
        coeffs = [_to_gauss(c) for c in coeffs] if exact else [complex(c) for c in coeffs]
        while coeffs and _is_zero(coeffs[-1]):
            coeffs.pop()
        if len(coeffs) - 1 > MAX_DEGREE:
            raise ValueError(f"degree {len(coeffs) - 1} exceeds the cap MAX_DEGREE={MAX_DEGREE}")
        object.__setattr__(self, "coefficients", tuple(coeffs))

    # -- structure -----------------------------------------------------------
    @classmethod
    def exact(cls, coeffs: Iterable) -> "ComplexPoly":
        return cls(tuple(_to_gauss(c) for c in coeffs))

    @property
    def is_exact(self) -> bool:
        return bool(self.coefficients) and _is_exact(self.coefficients[0])

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return not self.coefficients

    def to_float(self) -> "ComplexPoly":
        if not self.is_exact:
            return self
        return ComplexPoly(tuple(_gauss_to_complex(c) for c in self.coefficients))

    def to_exact(self) -> "ComplexPoly":
        return ComplexPoly.exact(self.coefficients)

    def as_array(self) -> np.ndarray:
        return np.array([_gauss_to_complex(c) if _is_exact(c) else c
                         for c in self.coefficients], dtype=complex)

    def _zero(self):
        return QQ_I(0, 0) if self.is_exact else 0j

    def _pair(self, other: "ComplexPoly"):
        if self.is_exact != other.is_exact and self.coefficients and other.coefficients:
            raise TypeError("mixing exact and floating polynomials; convert explicitly")
        return other

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other: "ComplexPoly") -> "ComplexPoly":
        self._pair(other)
        a, b = list(self.coefficients), list(other.coefficients)
        zero = self._zero() if self.coefficients else other._zero()
        n = max(len(a), len(b))
        a += [zero] * (n - len(a))
        b += [zero] * (n - len(b))
        return ComplexPoly(tuple(x + y for x, y in zip(a, b)))

    def __neg__(self) -> "ComplexPoly":
        return ComplexPoly(tuple(-c for c in self.coefficients))

    def __sub__(self, other: "ComplexPoly") -> "ComplexPoly":
        return self + (-other)

    def __mul__(self, other) -> "ComplexPoly":
        if not isinstance(other, ComplexPoly):
            return ComplexPoly(tuple(c * other for c in self.coefficients))
        self._pair(other)
        if self.is_zero() or other.is_zero():
            return ComplexPoly()
        zero = self._zero()
        out = [zero] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, x in enumerate(self.coefficients):
            for j, y in enumerate(other.coefficients):
                out[i + j] = out[i + j] + x * y
        return ComplexPoly(tuple(out))

    __rmul__ = __mul__

    def shift(self, k: int) -> "ComplexPoly":
        """Multiply by ``zeta**k``."""
        if self.is_zero():
            return self
        return ComplexPoly((self._zero(),) * k + self.coefficients)

    def derivative(self) -> "ComplexPoly":
        return ComplexPoly(tuple(c * k for k, c in enumerate(self.coefficients) if k > 0))

    def antiderivative(self) -> "ComplexPoly":
        """Antiderivative vanishing at 0."""
        if self.is_zero():
            return self
        if self.is_exact:
            coeffs = [self._zero()] + [c * QQ_I(Fraction(1, k + 1), 0)
                                       for k, c in enumerate(self.coefficients)]
        else:
            coeffs = [0j] + [c / (k + 1) for k, c in enumerate(self.coefficients)]
        return ComplexPoly(tuple(coeffs))

    def conj(self) -> "ComplexPoly":
        """Conjugate every coefficient."""
        if self.is_exact:
            return ComplexPoly(tuple(_gauss_conj(c) for c in self.coefficients))
        return ComplexPoly(tuple(c.conjugate() for c in self.coefficients))

    def reversed(self, degree: int | None = None) -> "ComplexPoly":
        """``zeta**degree * p(1/zeta)``."""
        degree = self.degree if degree is None else degree
        if self.is_zero():
            return self
        zero = self._zero()
        coeffs = list(self.coefficients) + [zero] * (degree + 1 - len(self.coefficients))
        return ComplexPoly(tuple(coeffs[::-1]))

    def low_order_zeros(self) -> int:
        """Multiplicity of the root at 0."""
        k = 0
        for c in self.coefficients:
            if not _is_zero(c):
                break
            k += 1
        return k

    def divmod_linear(self, root: complex) -> tuple["ComplexPoly", complex]:
        """Synthetic division by ``(zeta - root)``."""
        coeffs = self.coefficients
        if not coeffs:
            return self, self._zero()
        out = [None] * (len(coeffs) - 1)
        acc = coeffs[-1]
        for k in range(len(coeffs) - 2, -1, -1):
            out[k] = acc
            acc = coeffs[k] + acc * root
        return ComplexPoly(tuple(out)), acc

    # -- evaluation ----------------------------------------------------------
    def __call__(self, z):
        if self.is_exact and _is_exact(z):
            acc = QQ_I(0, 0)
            for c in reversed(self.coefficients):
                acc = acc * z + c
            return acc
        coeffs = self.as_array()
        z = np.asarray(z)
        acc = np.zeros_like(z, dtype=np.result_type(z.dtype, complex))
        for c in coeffs[::-1]:
            acc = acc * z + c
        return acc if acc.ndim else complex(acc)

    # -- roots -----------------------------------------------------------------
    def roots(self) -> list[tuple[complex, int]]:
        """Roots with multiplicities, sorted by modulus then argument.

        Exact mode factors square-free first so multiplicities are exact;
        floating mode strips exact zeros at the origin, takes companion
        eigenvalues with one Newton polish step and clusters to
        ``ROOT_CLUSTER_TOL``.
        """
        if self.degree <= 0:
            return []
        if self.is_exact:
            desc = list(self.coefficients[::-1])
            _, factors = dup_sqf_list(desc, QQ_I)
            found: list[tuple[complex, int]] = []
            for fac, mult in factors:
                p = ComplexPoly(tuple(fac[::-1])).to_float()
                found.extend((r, mult * m) for r, m in _float_roots(p))
            return _sort_roots(found)
        return _sort_roots(_float_roots(self))

    # -- serialization ---------------------------------------------------------
    def to_pairs(self) -> list[list[float]]:
        return [[c.real, c.imag] for c in self.as_array()]

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> "ComplexPoly":
        return cls(tuple(complex(float(p[0]), float(p[1])) for p in pairs))


def _sort_roots(roots):
    return sorted(roots, key=lambda rm: (round(abs(rm[0]), 12), np.angle(rm[0])))


def _float_roots(p: ComplexPoly) -> list[tuple[complex, int]]:
    zero_mult = p.low_order_zeros()
    coeffs = p.as_array()[zero_mult:]
    found: list[tuple[complex, int]] = [(0j, zero_mult)] if zero_mult else []
    if len(coeffs) <= 1:
        return found
    try:
        eig = np.roots(coeffs[::-1])
    except np.linalg.LinAlgError as exc:
        raise RootFindingError(f"companion eigenvalues failed for {p}") from exc
    if not np.all(np.isfinite(eig)):
        raise RootFindingError(f"non-finite roots for {p}")
    q = ComplexPoly(tuple(coeffs))
    dq = q.derivative()
    polished = []
    for r in eig:
        d = dq(r)
        if abs(d) > 1e-14 * max(1.0, float(np.sum(np.abs(coeffs)))):
            step = q(r) / d
            if abs(step) < 1e-3 * max(1.0, abs(r)):
                r = r - step
        polished.append(complex(r))
    found.extend(_cluster(polished, q))
    return found


def _is_multiple_root(q: ComplexPoly, center: complex, m: int) -> bool:
    """Newton steps of q, q', ..., q^(m-1) at ``center`` are all tiny."""
    ders = [q]
    for _ in range(m):
        ders.append(ders[-1].derivative())
    vals = [abs(d(center)) for d in ders]
    # rounding floor of Horner evaluation for each derivative
    rad = max(1.0, abs(center))
    floor = [64 * np.finfo(float).eps * float(np.sum(np.abs(d.as_array()) * rad ** np.arange(d.degree + 1)))
             for d in ders]
    if vals[m] <= floor[m]:
        return False
    return all(vals[k] <= floor[k] or vals[k] <= 1e-4 * rad * vals[k + 1] for k in range(m))


def _cluster(roots: list[complex], q: ComplexPoly) -> list[tuple[complex, int]]:
    groups: list[list[complex]] = []
    for r in roots:
        for g in groups:
            if abs(np.mean(g) - r) <= ROOT_CLUSTER_TOL * max(1.0, abs(r)):
                g.append(r)
                break
        else:
            groups.append([r])
    # A multiple root splits into a ring of radius ~eps^(1/m) under eigenvalue
    # perturbation; merge nearby groups whose centroid annihilates the
    # matching derivatives.
    merged = True
    while merged:
        merged = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                gi, gj = groups[i], groups[j]
                if abs(np.mean(gi) - np.mean(gj)) > 1e-4 * max(1.0, abs(np.mean(gi))):
                    continue
                cand = gi + gj
                if _is_multiple_root(q, complex(np.mean(cand)), len(cand)):
                    groups[i] = cand
                    del groups[j]
                    merged = True
                    break
            if merged:
                break
    return [(_refine_multiple(q, complex(np.mean(g)), len(g)), len(g)) for g in groups]


def _refine_multiple(q: ComplexPoly, center: complex, m: int) -> complex:
    """An m-fold root is a simple root of q^(m-1): polish the centroid there."""
    if m == 1:
        return center
    d = q
    for _ in range(m - 1):
        d = d.derivative()
        dd = d.derivative()
    z = center
    for _ in range(8):
        slope = dd(z)
        if slope == 0:
            break
        step = d(z) / slope
        if not abs(step) < 1e-3 * max(1.0, abs(center)):
            return center
        z -= step
        if abs(step) <= 4 * np.finfo(float).eps * max(1.0, abs(z)):
            break
    return complex(z)


@dataclass(frozen=True)
class PoleRecord:
    location: complex
    order: int

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("pole order must be >= 1")
        if abs(self.location) >= 1:
            raise ValueError("pole records live in the open unit disk")


@dataclass(frozen=True)
class RationalMap:
    """Rational function ``numerator / denominator``.

    Conformal-map hypotheses (denominator free of zeros in the closed disk,
    ``phi(0) = 0``, nonvanishing derivative) are checked by
    :func:`conformal_check`, not here, because Schwarz pullbacks and pole
    coefficients are rational functions with poles inside the disk.
    """

    numerator: ComplexPoly
    denominator: ComplexPoly = field(default_factory=lambda: ComplexPoly((1,)))

    def __post_init__(self):
        if self.denominator.is_zero():
            raise ZeroDivisionError("zero denominator")
        if self.numerator.coefficients and self.numerator.is_exact != self.denominator.is_exact:
            raise TypeError("numerator and denominator must share a coefficient mode")

    @classmethod
    def polynomial(cls, coeffs: Sequence) -> "RationalMap":
        p = ComplexPoly(tuple(coeffs))
        one = ComplexPoly.exact([1]) if p.is_exact else ComplexPoly((1,))
        return cls(p, one)

    @property
    def is_exact(self) -> bool:
        return self.denominator.is_exact

    @property
    def is_polynomial(self) -> bool:
        return self.denominator.degree == 0

    def to_float(self) -> "RationalMap":
        return RationalMap(self.numerator.to_float(), self.denominator.to_float())

    def to_exact(self) -> "RationalMap":
        return RationalMap(self.numerator.to_exact(), self.denominator.to_exact())

    def __call__(self, z):
        return eval_map(self, z)

    def derivative(self) -> "RationalMap":
        p, q = self.numerator, self.denominator
        return reduce(RationalMap(p.derivative() * q - p * q.derivative(), q * q))

    def __mul__(self, other: "RationalMap") -> "RationalMap":
        return reduce(RationalMap(self.numerator * other.numerator,
                                  self.denominator * other.denominator))

    def __truediv__(self, other: "RationalMap") -> "RationalMap":
        if other.numerator.is_zero():
            raise ZeroDivisionError("division by the zero function")
        return reduce(RationalMap(self.numerator * other.denominator,
                                  self.denominator * other.numerator))

    def to_json(self) -> dict:
        return {"num": self.numerator.to_float().to_pairs(),
                "den": self.denominator.to_float().to_pairs()}

    @classmethod
    def from_json(cls, data) -> "RationalMap":
        if isinstance(data, str):
            data = json.loads(data)
        den = data.get("den", [[1.0, 0.0]])
        return cls(ComplexPoly.from_pairs(data["num"]), ComplexPoly.from_pairs(den))


def eval_map(fn: RationalMap, point):
    """``numerator(point) / denominator(point)``; refuses denominator zeros."""
    num = fn.numerator(point)
    den = fn.denominator(point)
    if fn.is_exact and _is_exact(point):
        if not den:
            raise PoleEvaluationError(f"pole at {point}")
        return num / den
    den_arr = np.asarray(den)
    scale = float(np.sum(np.abs(fn.denominator.as_array())))
    if np.any(np.abs(den_arr) <= 1e-15 * scale):
        bad = np.asarray(point).ravel()[np.argmin(np.abs(den_arr).ravel())]
        raise PoleEvaluationError(f"evaluation at a pole: {complex(bad)}")
    return num / den


def reflect(fn: RationalMap) -> RationalMap:
    """``phi*``: the same rational function with conjugated coefficients."""
    return RationalMap(fn.numerator.conj(), fn.denominator.conj())


def reduce(fn: RationalMap) -> RationalMap:
    """Cancel common factors and make the denominator monic.

    Exact mode divides by the polynomial gcd; floating mode strips common
    zeros at the origin exactly and cancels other root pairs that agree to
    ``ROOT_CLUSTER_TOL``.
    """
    p, q = fn.numerator, fn.denominator
    if p.is_zero():
        one = ComplexPoly.exact([1]) if q.is_exact else ComplexPoly((1,))
        return RationalMap(p, one)
    k = min(p.low_order_zeros(), q.low_order_zeros())
    if k:
        p = ComplexPoly(p.coefficients[k:])
        q = ComplexPoly(q.coefficients[k:])
    if q.is_exact:
        g = dup_gcd(list(p.coefficients[::-1]), list(q.coefficients[::-1]), QQ_I)
        if len(g) > 1:
            from sympy.polys.densearith import dup_quo
            p = ComplexPoly(tuple(dup_quo(list(p.coefficients[::-1]), g, QQ_I)[::-1]))
            q = ComplexPoly(tuple(dup_quo(list(q.coefficients[::-1]), g, QQ_I)[::-1]))
        lead = q.coefficients[-1]
        inv = QQ_I(1, 0) / lead
        return RationalMap(p * inv, q * inv)
    changed = True
    while changed and p.degree > 0 and q.degree > 0:
        changed = False
        for r, _ in _float_roots(q):
            for s, _ in _float_roots(p):
                if abs(r - s) <= ROOT_CLUSTER_TOL * max(1.0, abs(r)):
                    root = 0.5 * (r + s)
                    p, _ = p.divmod_linear(root)
                    q, _ = q.divmod_linear(root)
                    changed = True
                    break
            if changed:
                break
    lead = q.coefficients[-1]
    return RationalMap(p * (1 / lead), q * (1 / lead))


def schwarz_pullback(fn: RationalMap) -> RationalMap:
    """``zeta -> phi*(1/zeta)``, the Schwarz function pulled back to the disk.

    On the unit circle this equals ``conj(phi(zeta))``.
    """
    star = reflect(fn)
    p, q = star.numerator, star.denominator
    dp, dq = p.degree, q.degree
    num = p.reversed(dp).shift(max(dq - dp, 0))
    den = q.reversed(dq).shift(max(dp - dq, 0))
    return reduce(RationalMap(num, den))


def poles_in_disk(fn: RationalMap) -> list[PoleRecord]:
    """Poles of ``fn`` in the open unit disk with their orders."""
    fn = reduce(fn)
    return [PoleRecord(r, m) for r, m in fn.denominator.roots() if abs(r) < 1]


@dataclass
class ConformalReport:
    ok: bool
    winding: int
    critical_points_in_disk: list[complex]
    denominator_zeros_in_disk: list[complex]
    min_boundary_separation: float
    reasons: list[str]

    def __bool__(self):
        return self.ok


def conformal_check(fn: RationalMap, samples: int = 256, eps: float = 1e-4) -> ConformalReport:
    """Check that ``fn`` is a plausible conformal map of the closed unit disk.

    ``phi'`` must have no zero in the closed disk (argument principle on the
    circle of radius ``1 + eps``) and ``phi`` must be injective on ``samples``
    boundary points to 1e-9.
    """
    if samples < 64:
        raise ValueError("conformal_check needs at least 64 boundary samples")
    fn = fn.to_float()
    reasons = []
    den_bad = [r for r, _ in fn.denominator.roots() if abs(r) <= 1 + eps]
    if den_bad:
        reasons.append(f"denominator vanishes in the closed disk at {den_bad}")
    p, q = fn.numerator, fn.denominator
    crit = p.derivative() * q - p * q.derivative()
    n_contour = max(samples, 1 << 14)
    theta = 2 * np.pi * np.arange(n_contour + 1) / n_contour
    vals = crit((1 + eps) * np.exp(1j * theta))
    if np.any(vals == 0):
        winding = -1
        reasons.append("phi' vanishes on the test contour")
    else:
        winding = int(round(float(np.sum(np.diff(np.unwrap(np.angle(vals))))) / (2 * np.pi)))
    crit_roots = [r for r, m in crit.roots() for _ in range(m) if abs(r) <= 1 + eps]
    if crit.is_zero():
        reasons.append("phi is constant")
    elif winding != 0:
        reasons.append(f"phi' has {winding} zero(s) in the closed disk")
    zs = fn(np.exp(2j * np.pi * np.arange(samples) / samples))
    sep = float(np.min(pdist(np.column_stack([zs.real, zs.imag]))))
    if sep <= 1e-9:
        reasons.append(f"boundary samples collide (min separation {sep:.3e})")
    return ConformalReport(not reasons, winding, crit_roots, den_bad, sep, reasons)
