"""Almansi expansions in the plane, polyanalytic splitting and the function Psi(z, w).

An N-harmonic polynomial is written ``u = sum_j |z|^{2(j-1)} u_j`` with
harmonic ``u_j``.  Its derivative ``U = d_z^N u`` is polyanalytic of order N,
``U = sum_k zbar^(k-1) U_k`` with holomorphic ``U_k``, and these pieces are
the coefficients of ``Psi(z, w) = sum_k U_k(z) w^(k-1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Sequence

import numpy as np
from sympy.polys.domains import QQ_I

from ._poly import RealPoly2, binomial_expand_2d, fischer_decompose
from .fieldlab import DEFAULT_STEP, ScalarField2, jets_at, wirtinger_power


class NotPolyharmonicError(ValueError):
    """Input is not annihilated by the requested power of the Laplacian."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class NotPolyanalyticError(ValueError):
    """``dbar^N U`` is not small at the probes."""


@dataclass(frozen=True)
class HarmonicStack:
    """Harmonic polynomials ``u_1..u_N`` of an Almansi expansion."""

    parts: tuple

    def __post_init__(self):
        for j, h in enumerate(self.parts, start=1):
            if not h.laplacian().is_zero():
                raise ValueError(f"u_{j} is not harmonic: Lap u_{j} = {h.laplacian().to_str()}")

    @property
    def N(self) -> int:
        return len(self.parts)

    def __getitem__(self, j: int) -> RealPoly2:
        """1-based access, matching the u_j indexing."""
        return self.parts[j - 1]

    def to_json(self) -> dict:
        return {"parts": [p.to_json() for p in self.parts]}

    @classmethod
    def from_json(cls, data) -> "HarmonicStack":
        return cls(tuple(RealPoly2.from_json(p) for p in data["parts"]))


def _r2() -> RealPoly2:
    return RealPoly2({(2, 0): 1, (0, 2): 1})


def almansi_decompose(u: RealPoly2, N: int) -> HarmonicStack:
    """Unique harmonic ``u_1..u_N`` with ``u = sum |z|^{2(j-1)} u_j``.

    Peels homogeneous components exactly (the top power of ``|z|^2`` first);
    no linear system is formed.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    test = u
    for _ in range(N):
        test = test.laplacian()
    if not test.is_zero():
        raise NotPolyharmonicError(f"Lap^{N} u = {test.to_str()} is not zero", test)
    pieces = fischer_decompose(u)
    parts = [pieces.get(k, RealPoly2()) for k in range(N)]
    stack = HarmonicStack(tuple(parts))
    if almansi_reconstruct(stack) != u:
        raise ArithmeticError("Almansi reconstruction mismatch; this is a bug")
    return stack


def almansi_reconstruct(stack: HarmonicStack) -> RealPoly2:
    r2 = _r2()
    out = RealPoly2()
    for j, h in enumerate(stack.parts):
        out = out + (r2 ** j) * h
    return out


def random_harmonic(degree: int, rng: np.random.Generator, max_num: int = 9,
                    max_den: int = 4) -> RealPoly2:
    """Random harmonic polynomial: rational combination of Re and Im of ``z^k``, ``k <= degree``."""
    out = RealPoly2()
    for k in range(degree + 1):
        re, im = binomial_expand_2d(k)
        for part in (re, im):
            if part.is_zero() or rng.random() < 0.3:
                continue
            c = Fraction(int(rng.integers(-max_num, max_num + 1)), int(rng.integers(1, max_den + 1)))
            out = out + part * c
    return out


def random_polyharmonic(N: int, degree: int, rng: np.random.Generator) -> tuple[RealPoly2, HarmonicStack]:
    """``u = sum |z|^{2(j-1)} h_j`` with random harmonic ``h_j``; total degree ``<= degree``."""
    parts = []
    for j in range(N):
        d = degree - 2 * j
        parts.append(random_harmonic(d, rng) if d >= 0 else RealPoly2())
    stack = HarmonicStack(tuple(parts))
    return almansi_reconstruct(stack), stack


# -- exact polynomials in z and zbar ------------------------------------------

def _qi(c):
    if isinstance(c, type(QQ_I(0))):
        return c
    if isinstance(c, (int, Fraction)):
        return QQ_I(Fraction(c), 0)
    c = complex(c)
    return QQ_I(Fraction(c.real), Fraction(c.imag))


@dataclass(frozen=True)
class ZZbarPoly:
    """``sum c_mn z^m zbar^n`` with exact Gaussian-rational coefficients."""

    terms: tuple  # sorted ((m, n), QQ_I) pairs, zero coefficients dropped

    @classmethod
    def from_dict(cls, d: dict) -> "ZZbarPoly":
        clean = {}
        for k, c in d.items():
            c = _qi(c)
            if c:
                clean[tuple(k)] = c
        return cls(tuple(sorted(clean.items())))

    @classmethod
    def from_real_poly(cls, u: RealPoly2) -> "ZZbarPoly":
        """Substitute ``x = (z + zbar)/2`` and ``y = (z - zbar)/(2i)``."""
        out: dict = {}
        half = QQ_I(Fraction(1, 2), 0)
        for (a, b), c in u.items():
            # x^a y^b = (z+zb)^a (z-zb)^b / (2^a (2i)^b)
            scale = QQ_I(c, 0) * half ** (a + b) * QQ_I(0, -1) ** b
            for i in range(a + 1):
                for j in range(b + 1):
                    m = (a - i) + (b - j)
                    n = i + j
                    coef = scale * QQ_I(comb(a, i) * comb(b, j) * (-1) ** j, 0)
                    out[(m, n)] = out.get((m, n), QQ_I(0, 0)) + coef
        return cls.from_dict(out)

    def as_dict(self) -> dict:
        return dict(self.terms)

    def dz(self, times: int = 1) -> "ZZbarPoly":
        out = self
        for _ in range(times):
            out = ZZbarPoly.from_dict({(m - 1, n): c * QQ_I(m, 0) for (m, n), c in out.terms if m})
        return out

    def dzbar(self, times: int = 1) -> "ZZbarPoly":
        out = self
        for _ in range(times):
            out = ZZbarPoly.from_dict({(m, n - 1): c * QQ_I(n, 0) for (m, n), c in out.terms if n})
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def holomorphic_parts(self, N: int) -> list[dict]:
        """Exact ``U_k`` as ``{m: coeff}`` of ``z^m``, from the ``zbar^(k-1)`` coefficients."""
        parts = [dict() for _ in range(N)]
        for (m, n), c in self.terms:
            if n >= N:
                raise NotPolyanalyticError(f"term z^{m} zbar^{n} exceeds polyanalytic order {N}")
            parts[n][m] = c
        return parts

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        zb = np.conj(z)
        for (m, n), c in self.terms:
            out = out + complex(float(c.x), float(c.y)) * z ** m * zb ** n
        return out

    def dbar_stack(self, probes, N: int) -> np.ndarray:
        """Rows ``dbar^j U`` at ``probes`` for ``j = 0..N``."""
        rows, cur = [], self
        for _ in range(N + 1):
            rows.append(cur(probes))
            cur = cur.dzbar()
        return np.array(rows)


def exact_U(u: RealPoly2, N: int) -> ZZbarPoly:
    """``d_z^N u`` as an exact polynomial in ``z, zbar``."""
    return ZZbarPoly.from_real_poly(u).dz(N)


class DerivedU:
    """``U = d_z^N u`` of a sampled field, with ``dbar^j U`` from finite-difference jets."""

    def __init__(self, u: ScalarField2, N: int, step: float = DEFAULT_STEP):
        if 2 * N > 4:
            raise ValueError("numerical polyanalytic splitting is limited to N <= 2")
        self.u, self.N, self.step = u, N, step

    def __call__(self, probes):
        jet = jets_at(self.u, probes, self.N, self.step)
        return wirtinger_power(jet, self.N, 0)

    def dbar_stack(self, probes, N: int | None = None) -> np.ndarray:
        N = self.N if N is None else N
        if self.N + N > 4:
            raise ValueError("jet order above 4 requested")
        jet = jets_at(self.u, probes, self.N + N, self.step)
        return np.array([wirtinger_power(jet, self.N, j) for j in range(N + 1)])


def U_from_u(u: ScalarField2, N: int, point, step: float = DEFAULT_STEP) -> complex:
    """``d_z^N u`` at ``point`` via Wirtinger powers of a finite-difference jet."""
    return complex(DerivedU(u, N, step)(np.atleast_1d(point))[0])


@dataclass
class PolyanalyticStack:
    """Values ``U_1..U_N`` at probe points; row ``k-1`` holds ``U_k``."""

    probes: np.ndarray
    values: np.ndarray
    residual: float = 0.0

    @property
    def N(self) -> int:
        return self.values.shape[0]

    def reconstruct(self) -> np.ndarray:
        zb = np.conj(self.probes)
        return sum(zb ** k * self.values[k] for k in range(self.N))


def peel(dbar_rows: np.ndarray, probes: np.ndarray, N: int) -> np.ndarray:
    """Recover ``U_k`` from ``dbar^(j-1) U = sum_{k>=j} (k-1)!/(k-j)! zbar^(k-j) U_k``."""
    zb = np.conj(np.asarray(probes, dtype=complex))
    U = np.zeros((N,) + zb.shape, dtype=complex)
    for j in range(N, 0, -1):
        acc = dbar_rows[j - 1].astype(complex).copy()
        for k in range(j + 1, N + 1):
            acc -= factorial(k - 1) / factorial(k - j) * zb ** (k - j) * U[k - 1]
        U[j - 1] = acc / factorial(j - 1)
    return U


def polyanalytic_split(U, N: int, probes, residual_tol: float = 1e-5,
                       reconstruction_tol: float = 1e-6) -> PolyanalyticStack:
    """Values of the holomorphic pieces ``U_k`` at ``probes``.

    ``U`` must provide ``dbar_stack(probes, N)``.  Both tolerances are
    relative to ``max(1, max |U|)`` over the probes.
    """
    probes = np.atleast_1d(np.asarray(probes, dtype=complex))
    rows = np.asarray(U.dbar_stack(probes, N))
    scale = max(1.0, float(np.max(np.abs(rows[0]))))
    res = float(np.max(np.abs(rows[N]))) / scale
    if res > residual_tol:
        raise NotPolyanalyticError(f"max |dbar^{N} U| / scale = {res:.3e} exceeds {residual_tol}")
    vals = peel(rows, probes, N)
    stack = PolyanalyticStack(probes, vals, res)
    rec = float(np.max(np.abs(stack.reconstruct() - rows[0]))) / scale
    if rec > reconstruction_tol:
        raise ArithmeticError(f"polyanalytic reconstruction residual {rec:.3e}")
    return stack


@dataclass
class PsiFunction:
    """``Psi(z, w) = sum_k psi_k(z) w^(k-1)`` sampled at the stack probes."""

    stack: PolyanalyticStack

    @property
    def J(self) -> int:
        """Index of the top coefficient that is not identically zero (0 if none)."""
        mags = np.max(np.abs(self.stack.values), axis=1)
        scale = max(float(np.max(mags)), 1e-300)
        nz = [k + 1 for k, m in enumerate(mags) if m > 1e-12 * scale and m > 0]
        return nz[-1] if nz else 0

    def w_derivative(self, w, order: int = 0) -> np.ndarray:
        """``d_w^order Psi(z, w)`` at the probes for per-probe ``w``."""
        vals = self.stack.values
        out = np.zeros(vals.shape[1:], dtype=complex)
        for k in range(order + 1, self.stack.N + 1):
            out += factorial(k - 1) / factorial(k - 1 - order) * vals[k - 1] * np.asarray(w) ** (k - 1 - order)
        return out

    def __call__(self, w):
        return self.w_derivative(w, 0)


@dataclass
class RootCheckReport:
    residual: float
    per_order: list
    J: int
    scale: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    def to_json(self) -> dict:
        return {"residual": self.residual, "per_order": self.per_order, "J": self.J,
                "scale": self.scale, "tolerance": self.tolerance, "passed": self.passed}


def psi_root_check(stack: PolyanalyticStack, schwarz: Callable, depth: int = 1,
                   tol: float = 1e-4) -> RootCheckReport:
    """Max over probes and ``j <= depth`` of ``|d_w^(j-1) Psi(z, S(z))|``, relative to ``max |psi_J|``."""
    psi = PsiFunction(stack)
    J = psi.J
    scale = max(float(np.max(np.abs(stack.values[J - 1]))) if J else 0.0, 1e-12)
    S = np.asarray(schwarz(stack.probes), dtype=complex)
    per = [float(np.max(np.abs(psi.w_derivative(S, j)))) / scale for j in range(depth)]
    return RootCheckReport(max(per), per, J, scale, tol)


def stack_from_values(probes, values: Sequence) -> PolyanalyticStack:
    """Build a stack directly from per-probe values or callables of ``z``."""
    probes = np.atleast_1d(np.asarray(probes, dtype=complex))
    rows = [np.broadcast_to(np.asarray(v(probes) if callable(v) else v, dtype=complex), probes.shape)
            for v in values]
    return PolyanalyticStack(probes, np.array(rows))
