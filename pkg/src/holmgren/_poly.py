"""Exact multivariate polynomials with rational coefficients.

One small class serves three roles: real plane polynomials (two variables),
real space polynomials (three variables) and constant-coefficient
differential operators in three variables, where the exponent triple is read
as a power of the partial derivatives.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb
from numbers import Rational
from typing import Iterable, Mapping

import numpy as np

Exponent = tuple[int, ...]


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, float):
        if not c.is_integer():
            raise TypeError(f"refusing to convert inexact float {c!r}; pass a Fraction")
        return Fraction(int(c))
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


class MultiPoly:
    """Sparse polynomial ``sum c_e x^e`` with exact rational coefficients.

    Instances are immutable; zero coefficients are never stored.
    """

    nvars: int = 0
    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Exponent, object] | None = None):
        clean: dict[Exponent, Fraction] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.nvars:
                raise ValueError(f"exponent {exp} does not have {self.nvars} entries")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent {exp}")
            c = _frac(c)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
                if not clean[exp]:
                    del clean[exp]
        self._terms = clean
        self._hash = None

    # -- construction helpers ------------------------------------------------
    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def constant(cls, c):
        return cls({(0,) * cls.nvars: c})

    @classmethod
    def var(cls, i: int):
        exp = [0] * cls.nvars
        exp[i] = 1
        return cls({tuple(exp): 1})

    @classmethod
    def monomial(cls, exp: Exponent, c=1):
        return cls({tuple(exp): c})

    # -- basic protocol --------------------------------------------------------
    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, exp: Exponent) -> Fraction:
        return self._terms.get(tuple(exp), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    @property
    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = type(self).constant(other)
        if not isinstance(other, MultiPoly) or other.nvars != self.nvars:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        if not self._terms:
            return f"{type(self).__name__}(0)"
        return f"{type(self).__name__}({self.to_str()})"

    def to_str(self, names: Iterable[str] | None = None) -> str:
        names = list(names) if names is not None else [f"x{i + 1}" for i in range(self.nvars)]
        parts = []
        for exp in sorted(self._terms, key=lambda e: (-sum(e), tuple(-x for x in e))):
            c = self._terms[exp]
            mono = "*".join(n if e == 1 else f"{n}^{e}" for n, e in zip(names, exp) if e)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    # -- arithmetic ----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return type(self).constant(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return type(self)(out)

    __radd__ = __add__

    def __neg__(self):
        return type(self)({e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            c = _frac(other)
            return type(self)({e: c * v for e, v in self._terms.items()})
        other = self._coerce(other)
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return type(self)(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = _frac(other)
        return type(self)({e: v / c for e, v in self._terms.items()})

    def __pow__(self, n: int):
        result = type(self).constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- calculus --------------------------------------------------------------
    def diff(self, var: int, times: int = 1):
        out: dict[Exponent, Fraction] = {}
        for e, c in self._terms.items():
            k = e[var]
            if k < times:
                continue
            factor = 1
            for j in range(times):
                factor *= k - j
            ne = list(e)
            ne[var] = k - times
            out[tuple(ne)] = c * factor
        return type(self)(out)

    def partial(self, exp: Exponent):
        out = self
        for var, times in enumerate(exp):
            if times:
                out = out.diff(var, times)
        return out

    def laplacian(self):
        out = type(self)()
        for v in range(self.nvars):
            out = out + self.diff(v, 2)
        return out

    def integrate(self, var: int):
        """Antiderivative in ``var`` vanishing on ``x_var = 0``."""
        out = {}
        for e, c in self._terms.items():
            ne = list(e)
            ne[var] += 1
            out[tuple(ne)] = c / ne[var]
        return type(self)(out)

    def substitute_zero(self, var: int):
        return type(self)({e: c for e, c in self._terms.items() if e[var] == 0})

    def homogeneous_parts(self) -> dict[int, "MultiPoly"]:
        parts: dict[int, dict] = {}
        for e, c in self._terms.items():
            parts.setdefault(sum(e), {})[e] = c
        return {d: type(self)(t) for d, t in parts.items()}

    # -- evaluation ------------------------------------------------------------
    def __call__(self, *xs):
        """Evaluate at a point; accepts Fractions (exact) or floats/arrays."""
        if len(xs) != self.nvars:
            raise TypeError(f"expected {self.nvars} coordinates")
        exact = all(isinstance(x, (int, Fraction)) for x in xs)
        if exact:
            total = Fraction(0)
            for e, c in self._terms.items():
                term = c
                for x, k in zip(xs, e):
                    term *= Fraction(x) ** k
                total += term
            return total
        dt = np.longdouble if any(np.asarray(x).dtype == np.longdouble for x in xs) else float
        arrays = [np.asarray(x, dtype=dt) for x in xs]
        total = np.zeros(np.broadcast(*arrays).shape, dtype=dt)
        for e, c in self._terms.items():
            term = dt(c.numerator) / dt(c.denominator)
            for x, k in zip(arrays, e):
                if k:
                    term = term * x ** k
            total = total + term
        return total

    # -- serialization ---------------------------------------------------------
    def to_json(self) -> dict:
        keys = "abc"[: self.nvars]
        terms = []
        for e in sorted(self._terms):
            c = self._terms[e]
            rec = {k: v for k, v in zip(keys, e)}
            rec.update(num=c.numerator, den=c.denominator)
            terms.append(rec)
        return {"terms": terms}

    @classmethod
    def from_json(cls, data: Mapping) -> "MultiPoly":
        keys = "abc"[: cls.nvars]
        terms = {}
        for rec in data["terms"]:
            exp = tuple(int(rec[k]) for k in keys)
            c = Fraction(int(rec["num"]), int(rec.get("den", 1)))
            terms[exp] = terms.get(exp, Fraction(0)) + c
        return cls(terms)


class RealPoly2(MultiPoly):
    """Polynomial in ``x, y`` with rational coefficients."""

    nvars = 2
    __slots__ = ()

    def to_str(self, names=None):
        return super().to_str(names or ("x", "y"))


class RealPoly3(MultiPoly):
    """Polynomial in ``x1, x2, x3`` with rational coefficients."""

    nvars = 3
    __slots__ = ()


class DiffOpPoly(MultiPoly):
    """Constant-coefficient operator ``sum q_abc d1^a d2^b d3^c``."""

    nvars = 3
    __slots__ = ()

    def to_str(self, names=None):
        return super().to_str(names or ("d1", "d2", "d3"))

    def apply(self, f: RealPoly3) -> RealPoly3:
        out = RealPoly3()
        for e, c in self.items():
            out = out + f.partial(e) * c
        return out


def radial_square(cls) -> MultiPoly:
    """``|x|^2`` in the variables of ``cls``."""
    return sum((cls.var(i) ** 2 for i in range(cls.nvars)), cls())


def _laplace_gain(k: int, d: int, n: int) -> int:
    """Constant ``c`` with ``Lap^k(|x|^{2k} h) = c h`` for harmonic homogeneous ``h`` of degree ``d``."""
    out = 1
    for j in range(1, k + 1):
        out *= 2 * j * (2 * j + 2 * d + n - 2)
    return out


def fischer_decompose(p: MultiPoly) -> dict[int, MultiPoly]:
    """Split ``p`` as ``sum_k |x|^{2k} h_k`` with every ``h_k`` harmonic.

    Works one homogeneous degree at a time and peels the top power of
    ``|x|^2`` first: ``Lap^K`` kills every lower term, so ``h_K`` is read off
    from ``Lap^K p`` up to a known constant.  Returns only nonzero pieces.
    """
    cls = type(p)
    n = cls.nvars
    r2 = radial_square(cls)
    pieces: dict[int, MultiPoly] = {}
    for m, part in p.homogeneous_parts().items():
        rest = part
        for k in range(m // 2, -1, -1):
            if rest.is_zero():
                break
            lap = rest
            for _ in range(k):
                lap = lap.laplacian()
            if lap.is_zero():
                continue
            h = lap / _laplace_gain(k, m - 2 * k, n)
            pieces[k] = pieces.get(k, cls()) + h
            rest = rest - (r2 ** k) * h
        if not rest.is_zero():
            raise ArithmeticError("Fischer peel left a remainder; this is a bug")
    return {k: h for k, h in pieces.items() if not h.is_zero()}


def harmonic_projection(p: MultiPoly) -> MultiPoly:
    """Harmonic part ``h_0`` of the Fischer decomposition of ``p``."""
    return fischer_decompose(p).get(0, type(p)())


def poisson_particular(q: MultiPoly) -> MultiPoly:
    """A polynomial ``P`` with ``Lap P = q``, built from the Fischer pieces of ``q``.

    Each piece ``|x|^{2k} h`` (``h`` harmonic of degree ``d``) lifts to
    ``|x|^{2k+2} h / (2(k+1)(2k+2+2d+n-2))``.  For ``q = 6`` in two variables
    this gives ``(3/2)(x^2+y^2)``.
    """
    cls = type(q)
    n = cls.nvars
    r2 = radial_square(cls)
    out = cls()
    for m, part in q.homogeneous_parts().items():
        for k, h in fischer_decompose(part).items():
            d = m - 2 * k
            gain = 2 * (k + 1) * (2 * (k + 1) + 2 * d + n - 2)
            out = out + (r2 ** (k + 1)) * h / gain
    return out


def random_poly(cls, degree: int, rng: np.random.Generator, density: float = 0.6,
                max_num: int = 9, max_den: int = 4) -> MultiPoly:
    """Random polynomial of total degree <= ``degree`` with small rational coefficients."""
    terms = {}
    for exp in monomials(cls.nvars, degree):
        if rng.random() < density:
            num = int(rng.integers(-max_num, max_num + 1))
            den = int(rng.integers(1, max_den + 1))
            terms[exp] = Fraction(num, den)
    return cls(terms)


def monomials(nvars: int, degree: int) -> list[Exponent]:
    """All exponent tuples of total degree <= ``degree``."""
    if nvars == 1:
        return [(d,) for d in range(degree + 1)]
    out = []
    for first in range(degree + 1):
        for rest in monomials(nvars - 1, degree - first):
            out.append((first,) + rest)
    return out


def binomial_expand_2d(k: int) -> tuple[RealPoly2, RealPoly2]:
    """Real and imaginary parts of ``(x + i y)^k`` as exact polynomials."""
    re, im = {}, {}
    for j in range(k + 1):
        c = comb(k, j)
        # i^j cycles 1, i, -1, -i
        phase = j % 4
        exp = (k - j, j)
        if phase == 0:
            re[exp] = c
        elif phase == 1:
            im[exp] = c
        elif phase == 2:
            re[exp] = -c
        else:
            im[exp] = -c
    return RealPoly2(re), RealPoly2(im)
