"""Exact 3x3 operator-matrix algebra in three variables and the Almansi split u = v + x1 w.

Operators are polynomials in d1, d2, d3 with rational coefficients, so
products commute entrywise and every identity here is checked exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy

from ._poly import (DiffOpPoly, RealPoly2, RealPoly3, harmonic_projection, monomials,
                    poisson_particular, random_poly)


class NotBiharmonicError(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


def _d(a: int, b: int, c: int, coef=1) -> DiffOpPoly:
    return DiffOpPoly({(a, b, c): coef})


ZERO_OP = DiffOpPoly()
ONE_OP = _d(0, 0, 0)
D1, D2, D3 = _d(1, 0, 0), _d(0, 1, 0), _d(0, 0, 1)
LAPLACE = D1 ** 2 + D2 ** 2 + D3 ** 2


@dataclass(frozen=True)
class OpMatrix3:
    """3x3 matrix of constant-coefficient operators."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(e for e in row) for row in self.entries)
        if len(rows) != 3 or any(len(r) != 3 for r in rows):
            raise ValueError("OpMatrix3 needs a 3x3 grid")
        object.__setattr__(self, "entries", rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __matmul__(self, other: "OpMatrix3") -> "OpMatrix3":
        return op_mul(self, other)

    def __add__(self, other: "OpMatrix3") -> "OpMatrix3":
        return OpMatrix3(tuple(tuple(self[i, j] + other[i, j] for j in range(3)) for i in range(3)))

    def __sub__(self, other: "OpMatrix3") -> "OpMatrix3":
        return OpMatrix3(tuple(tuple(self[i, j] - other[i, j] for j in range(3)) for i in range(3)))

    def scale(self, c) -> "OpMatrix3":
        return OpMatrix3(tuple(tuple(self[i, j] * c for j in range(3)) for i in range(3)))

    def __eq__(self, other) -> bool:
        return isinstance(other, OpMatrix3) and all(
            self[i, j] == other[i, j] for i in range(3) for j in range(3))

    def __hash__(self):
        return hash(self.entries)

    def to_str(self) -> str:
        return "\n".join(" | ".join(self[i, j].to_str() for j in range(3)) for i in range(3))

    def to_json(self) -> dict:
        return {"entries": [[self[i, j].to_json() for j in range(3)] for i in range(3)]}

    @classmethod
    def from_json(cls, data) -> "OpMatrix3":
        return cls(tuple(tuple(DiffOpPoly.from_json(e) for e in row) for row in data["entries"]))


def op_mul(A: OpMatrix3, B: OpMatrix3) -> OpMatrix3:
    return OpMatrix3(tuple(tuple(sum((A[i, k] * B[k, j] for k in range(3)), DiffOpPoly())
                                 for j in range(3)) for i in range(3)))


def diag(a, b, c) -> OpMatrix3:
    z = ZERO_OP
    return OpMatrix3(((a, z, z), (z, b, z), (z, z, c)))


IDENTITY = diag(ONE_OP, ONE_OP, ONE_OP)

L = OpMatrix3((
    (D1 ** 2 - D2 ** 2 - D3 ** 2, D1 * D2 * 2, D1 * D3 * 2),
    (D1 * D2 * -2, D1 ** 2 - D2 ** 2 + D3 ** 2, D2 * D3 * -2),
    (D1 * D3 * -2, D2 * D3 * -2, D1 ** 2 + D2 ** 2 - D3 ** 2),
))

L_PRIME = OpMatrix3((
    (D1 ** 2 - D2 ** 2 - D3 ** 2, D1 * D2 * -2, D1 * D3 * -2),
    (D1 * D2 * 2, D1 ** 2 - D2 ** 2 + D3 ** 2, D2 * D3 * -2),
    (D1 * D3 * 2, D2 * D3 * -2, D1 ** 2 + D2 ** 2 - D3 ** 2),
))

R = OpMatrix3((
    (D1 ** 2, -(D1 * D2), -(D1 * D3)),
    (D1 * D2, -(D2 ** 2), -(D2 * D3)),
    (D1 * D3, -(D2 * D3), -(D3 ** 2)),
))

D = OpMatrix3((
    (D1, -D2, -D3),
    (D2, D1, ZERO_OP),
    (D3, ZERO_OP, D1),
))

H = OpMatrix3((
    (D1 ** 2, D1 * D2, D1 * D3),
    (D1 * D2, D2 ** 2, D2 * D3),
    (D1 * D3, D2 * D3, D3 ** 2),
))

# Columns (-d1,-d2,-d3), (-d2,d1,0), (-d3,0,d1): the assembly of the three lifted
# identities.  B_ALT is the sign variant with columns 2-3 negated.
B_DERIVED = OpMatrix3((
    (-D1, -D2, -D3),
    (-D2, D1, ZERO_OP),
    (-D3, ZERO_OP, D1),
))

B_ALT = OpMatrix3((
    (-D1, D2, D3),
    (-D2, -D1, ZERO_OP),
    (-D3, ZERO_OP, -D1),
))

B_CANDIDATES = {"derived": B_DERIVED, "alt": B_ALT}


# -- fields --------------------------------------------------------------------

Triple = tuple  # (RealPoly3, RealPoly3, RealPoly3)

X1 = RealPoly3.var(0)


def lift(f: RealPoly3, j: int) -> Triple:
    """``f`` placed in slot ``j`` (1-based) of a 3-vector."""
    out = [RealPoly3(), RealPoly3(), RealPoly3()]
    out[j - 1] = f
    return tuple(out)


def apply(A: OpMatrix3, f: Triple) -> Triple:
    """``A[f]`` for a 3-vector of polynomials."""
    return tuple(sum((A[i, k].apply(f[k]) for k in range(3)), RealPoly3()) for i in range(3))


def apply_scalar(A: OpMatrix3, f: RealPoly3) -> tuple:
    """Entrywise ``A_ij[f]`` as a 3x3 grid of polynomials (e.g. the Hessian of ``f``)."""
    return tuple(tuple(A[i, j].apply(f) for j in range(3)) for i in range(3))


def _grid_sub(a, b):
    return tuple(tuple(a[i][j] - b[i][j] for j in range(3)) for i in range(3))


def _grid_is_zero(a) -> bool:
    return all(a[i][j].is_zero() for i in range(3) for j in range(3))


def random_harmonic3(degree: int, rng: np.random.Generator) -> RealPoly3:
    """Random polynomial projected onto harmonics (exact), verified by the Laplacian."""
    h = harmonic_projection(random_poly(RealPoly3, degree, rng))
    if not h.laplacian().is_zero():
        raise ArithmeticError("harmonic projection failed")
    return h


def random_biharmonic3(degree: int, rng: np.random.Generator) -> tuple[RealPoly3, RealPoly3, RealPoly3]:
    """``u = v0 + x1 w0`` with random harmonic ``v0`` (degree <= degree) and ``w0`` (<= degree-1)."""
    v0 = random_harmonic3(degree, rng)
    w0 = random_harmonic3(max(degree - 1, 0), rng)
    return v0 + X1 * w0, v0, w0


# -- harmonic reduction --------------------------------------------------------

def lift_identity_residual(h: RealPoly3, j: int) -> Triple:
    """``L'[x1 h<j>] - 2 D[h<j>] - 2 x1 R[h<j>]``; zero whenever ``h`` is harmonic."""
    hj = lift(h, j)
    left = apply(L_PRIME, tuple(X1 * f for f in hj))
    d = apply(D, hj)
    r = apply(R, hj)
    return tuple(left[i] - d[i] * 2 - X1 * r[i] * 2 for i in range(3))


@dataclass
class ReductionReport:
    symbolic_ok: bool
    difference: OpMatrix3
    tested: int
    counterexamples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.symbolic_ok and not self.counterexamples


def harmonic_reduction_check(count: int = 20, degree: int = 5, seed: int = 0) -> ReductionReport:
    """``L' - 2R = diag(-Lap, Lap, Lap)`` and the x1-lift identity on random harmonics."""
    diff = L_PRIME - R.scale(2)
    symbolic_ok = diff == diag(-LAPLACE, LAPLACE, LAPLACE)
    rng = np.random.default_rng(seed)
    bad = []
    for _ in range(count):
        h = random_harmonic3(degree, rng)
        for j in (1, 2, 3):
            res = lift_identity_residual(h, j)
            if any(not r.is_zero() for r in res):
                bad.append({"h": h.to_json(), "slot": j})
    return ReductionReport(symbolic_ok, diff, count, bad)


# -- Almansi split in three variables -----------------------------------------

def _to_plane(p: RealPoly3) -> RealPoly2:
    if any(e[0] for e, _ in p.items()):
        raise ValueError("polynomial depends on x1")
    return RealPoly2({(e[1], e[2]): c for e, c in p.items()})


def _from_plane(p: RealPoly2) -> RealPoly3:
    return RealPoly3({(0, a, b): c for (a, b), c in p.items()})


def _lex_poisson(q: RealPoly2) -> RealPoly2:
    """Particular solution of ``Lap' P = q`` from an exact row reduction.

    Unknowns are the monomials of degree ``<= deg q + 2`` in descending
    lexicographic order; free coefficients are set to zero.
    """
    if q.is_zero():
        return RealPoly2()
    basis = sorted(monomials(2, q.degree + 2), reverse=True)
    targets = sorted(monomials(2, q.degree), reverse=True)
    row_of = {e: i for i, e in enumerate(targets)}
    A = sympy.zeros(len(targets), len(basis) + 1)
    for j, e in enumerate(basis):
        for te, c in RealPoly2({e: 1}).laplacian().items():
            A[row_of[te], j] = sympy.Rational(c.numerator, c.denominator)
    for te, c in q.items():
        A[row_of[te], len(basis)] = sympy.Rational(c.numerator, c.denominator)
    rref, pivots = A.rref()
    if len(basis) in pivots:
        raise ArithmeticError("Poisson system is inconsistent")
    sol = {}
    for row, col in enumerate(pivots):
        val = rref[row, len(basis)]
        if val != 0:
            sol[basis[col]] = Fraction(int(val.p), int(val.q))
    P = RealPoly2(sol)
    if P.laplacian() != q:
        raise ArithmeticError("lexicographic Poisson solution failed its check")
    return P


POISSON_PROFILES = ("canonical", "lex")


def poisson_profile(q: RealPoly2, profile: str = "canonical") -> RealPoly2:
    """Polynomial ``P(x2, x3)`` with ``Lap' P = q``.

    ``canonical`` lifts each Fischer piece ``|x'|^{2k} h`` to
    ``|x'|^{2k+2} h / const`` (for ``q = 6`` this is ``(3/2)(x2^2 + x3^2)``);
    ``lex`` is the row-reduction solution with zero free coefficients.
    """
    if profile == "canonical":
        return poisson_particular(q)
    if profile == "lex":
        return _lex_poisson(q)
    raise ValueError(f"unknown Poisson profile {profile!r}; choose from {POISSON_PROFILES}")


@dataclass(frozen=True)
class Almansi3:
    v: RealPoly3
    w: RealPoly3
    profile: str
    P: RealPoly3


def almansi3(u: RealPoly3, profile: str = "canonical") -> Almansi3:
    """Harmonic ``v, w`` with ``u = v + x1 w``.

    ``h = Lap u``, ``w = (int_0^{x1} h - P)/2`` with ``Lap' P = d1 h(0, x')``,
    then ``v = u - x1 w``.
    """
    h = u.laplacian()
    if not h.laplacian().is_zero():
        raise NotBiharmonicError(f"Lap^2 u = {h.laplacian().to_str()} is not zero", h.laplacian())
    q = _to_plane(h.diff(0).substitute_zero(0))
    P = _from_plane(poisson_profile(q, profile))
    w = (h.integrate(0) - P) / 2
    v = u - X1 * w
    if not (v.laplacian().is_zero() and w.laplacian().is_zero() and v + X1 * w == u):
        raise ArithmeticError("3D Almansi split failed its exact checks")
    return Almansi3(v, w, profile, P)


# -- Hessian field X1 ----------------------------------------------------------

def _grid_mul(a, b):
    return tuple(tuple(sum((a[i][k] * b[k][j] for k in range(3)), RealPoly3()) for j in range(3))
                 for i in range(3))


def det3(m) -> RealPoly3:
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def adjugate3(m):
    def cof(i, j):
        r = [k for k in range(3) if k != i]
        c = [k for k in range(3) if k != j]
        minor = m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]]
        return minor if (i + j) % 2 == 0 else -minor
    return tuple(tuple(cof(j, i) for j in range(3)) for i in range(3))


def exact_rank(m, points: int = 6, seed: int = 0) -> int:
    """Max rank of a polynomial matrix over random rational points (exact)."""
    rng = np.random.default_rng(seed)
    best = 0
    for _ in range(points):
        pt = [Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6))) for _ in range(3)]
        M = sympy.Matrix(3, 3, lambda i, j: sympy.Rational(m[i][j](*pt).numerator, m[i][j](*pt).denominator))
        best = max(best, M.rank())
    return best


@dataclass
class MatField3:
    """``X1 = adj(H[w]) (-H[v] + B[w]) / det H[w]``, or a degeneracy flag with the Hessian rank."""

    numerators: tuple | None
    denominator: RealPoly3
    degenerate: bool
    rank: int
    rhs: tuple
    hessian: tuple

    def on_patch(self):
        """Numerators and denominator restricted to ``x1 = 0``."""
        if self.degenerate:
            raise ValueError("degenerate Hessian: X1 is undefined")
        num = tuple(tuple(e.substitute_zero(0) for e in row) for row in self.numerators)
        return num, self.denominator.substitute_zero(0)

    def vanishes_on_patch(self) -> bool:
        num, den = self.on_patch()
        if den.is_zero():
            return False
        return _grid_is_zero(num)

    def evaluate(self, x1, x2, x3) -> np.ndarray:
        if self.degenerate:
            raise ValueError("degenerate Hessian: X1 is undefined")
        d = self.denominator(x1, x2, x3)
        return np.array([[self.numerators[i][j](x1, x2, x3) / d for j in range(3)] for i in range(3)])

    def to_json(self) -> dict:
        return {"degenerate": self.degenerate, "rank": self.rank,
                "denominator": self.denominator.to_json(),
                "numerators": None if self.numerators is None else
                [[e.to_json() for e in row] for row in self.numerators]}


def x1_field(u: RealPoly3, profile: str = "canonical", B: OpMatrix3 = B_DERIVED) -> MatField3:
    split = almansi3(u, profile)
    Hw = apply_scalar(H, split.w)
    rhs = _grid_sub(apply_scalar(B, split.w), apply_scalar(H, split.v))
    det = det3(Hw)
    if det.is_zero():
        return MatField3(None, det, True, exact_rank(Hw), rhs, Hw)
    num = _grid_mul(adjugate3(Hw), rhs)
    return MatField3(num, det, False, 3, rhs, Hw)


def patch_identity_holds(u: RealPoly3, profile: str = "canonical", B: OpMatrix3 = B_DERIVED) -> bool:
    """``x1 H[w] = -H[v] + B[w]`` after substituting ``x1 = 0``."""
    split = almansi3(u, profile)
    rhs = _grid_sub(apply_scalar(B, split.w), apply_scalar(H, split.v))
    lhs = tuple(tuple(X1 * e for e in row) for row in apply_scalar(H, split.w))
    diff = _grid_sub(lhs, rhs)
    return all(diff[i][j].substitute_zero(0).is_zero() for i in range(3) for j in range(3))


def select_B(u: RealPoly3 | None = None, profile: str = "canonical") -> str:
    """Name of the candidate B passing the patch identity on ``u`` (default ``x1^3``)."""
    u = RealPoly3({(3, 0, 0): 1}) if u is None else u
    ok = [name for name, B in B_CANDIDATES.items() if patch_identity_holds(u, profile, B)]
    if len(ok) != 1:
        raise ArithmeticError(f"patch oracle is ambiguous: {ok}")
    return ok[0]


def field_product_residual(u: RealPoly3, profile: str = "canonical") -> tuple:
    """``grad(w + d1 v) + x1 grad(d1 v)`` restricted to ``x1 = 0``, and ``w + d1 v``."""
    split = almansi3(u, profile)
    g = split.w + split.v.diff(0)
    d1v = split.v.diff(0)
    comps = tuple((g.diff(i) + X1 * d1v.diff(i)).substitute_zero(0) for i in range(3))
    return comps, g


def flat3_check(u: RealPoly3) -> bool:
    """Every derivative of order <= 2 vanishes on ``{x1 = 0}``."""
    return all(e[0] >= 3 for e, _ in u.items())


def flat_biharmonic_basis(degree: int) -> list[RealPoly3]:
    """Exact basis of biharmonic polynomials of degree <= ``degree`` with x1-exponents >= 3."""
    basis = [e for e in monomials(3, degree) if e[0] >= 3]
    if not basis:
        return []
    images = [RealPoly3({e: 1}).laplacian().laplacian() for e in basis]
    rows = sorted({e for img in images for e, _ in img.items()})
    if not rows:
        return [RealPoly3({e: 1}) for e in basis]
    row_of = {e: i for i, e in enumerate(rows)}
    A = sympy.zeros(len(rows), len(basis))
    for j, img in enumerate(images):
        for e, c in img.items():
            A[row_of[e], j] = sympy.Rational(c.numerator, c.denominator)
    out = []
    for vec in A.nullspace():
        out.append(RealPoly3({basis[j]: Fraction(int(vec[j].p), int(vec[j].q))
                              for j in range(len(basis)) if vec[j] != 0}))
    return out
