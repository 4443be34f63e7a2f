import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from holmgren._poly import RealPoly2, random_poly
from holmgren.fieldlab import (CurveArc, ScalarField2, SingularEvaluationError, StencilError,
                               bilaplacian_residual, disk_grid, explicit_kernel, fd_weights,
                               flatness_decay, jet_at, jets_at, polynomial_field, wirtinger,
                               wirtinger_power)

X, Y = sympy.symbols("x y")


def sym_field(expr):
    p = RealPoly2({(m[0], m[1]): int(c) for m, c in sympy.Poly(expr, X, Y).terms()})
    return polynomial_field(p)


def test_fd_weights_exact_rationals():
    w = fd_weights(1, 1)
    assert [sympy.Rational(c) for c in w] == [sympy.Rational(-1, 2), 0, sympy.Rational(1, 2)]
    w2 = fd_weights(2, 6)
    assert sum(w2) == 0


@pytest.mark.parametrize("expr, point, key, want", [
    (X ** 2 * Y, (1, 2), (2, 0), 4),
    (X ** 2 * Y, (1, 2), (1, 1), 2),
])
def test_jet_polynomial_examples(expr, point, key, want):
    jet = jet_at(sym_field(expr), complex(*point), order=2)
    assert abs(jet[key] - want) < 1e-8


def test_laplacian_examples():
    jet = jet_at(sym_field(X ** 3 * Y), 1 + 1j, order=2)
    assert abs(jet.laplacian() - 6) < 1e-8
    u = sym_field(X * (X ** 2 + Y ** 2))
    jet = jet_at(u, 0.3 - 0.7j, order=4)
    assert abs(jet.laplacian() - 8 * 0.3) < 1e-8
    assert abs(jet.bilaplacian()) < 1e-6


def test_wirtinger_examples():
    dz, dzb = wirtinger(jet_at(sym_field(X), 0.2 + 0.1j, order=1))
    assert abs(dz - 0.5) < 1e-12 and abs(dzb - 0.5) < 1e-12
    # d_z Re(z^2) = z, so 1 + i at z = 1 + i
    dz, _ = wirtinger(jet_at(sym_field(X ** 2 - Y ** 2), 1 + 1j, order=1))
    assert abs(dz - (1 + 1j)) < 1e-10


def test_bilaplacian_residual_examples():
    k = explicit_kernel()
    res, _ = bilaplacian_residual(k, disk_grid(20, 0.8), 1e-2)
    assert res < 1e-4
    res, _ = bilaplacian_residual(sym_field(X ** 4), disk_grid(5, 0.5))
    assert abs(res - 24) < 1e-6
    # polynomial stencils are exact; 0.1 keeps rounding (~eps/h^4) below 1e-8
    res, _ = bilaplacian_residual(sym_field(X * (X ** 2 + Y ** 2)), disk_grid(6, 0.5), 0.1)
    assert res < 1e-8


def test_singular_point_refused():
    k = explicit_kernel()
    with pytest.raises(SingularEvaluationError):
        k(np.array([1.0]), np.array([0.0]))
    with pytest.raises(StencilError):
        bilaplacian_residual(k, np.array([0.99 + 0j]), 1e-2)


def test_flatness_examples():
    arc = CurveArc.circle(np.pi / 2, 3 * np.pi / 2)
    rep = flatness_decay(explicit_kernel(), arc)
    assert rep.passed and rep.exponents[0] >= 2.8
    rep = flatness_decay(sym_field(1 - X ** 2 - Y ** 2), arc)
    assert not rep.passed and abs(rep.exponents[0] - 1) < 0.1
    rep = flatness_decay(ScalarField2(lambda x, y: 0 * x), arc)
    assert rep.passed and all(rep.noise_floor)


def test_decay_report_csv_has_header_comment():
    rep = flatness_decay(explicit_kernel(), CurveArc.circle(np.pi / 2, 3 * np.pi / 2))
    lines = rep.to_csv().splitlines()
    assert lines[0].startswith("#") and lines[1] == "t,abs_u,abs_dnu,abs_dn2u"
    assert len(lines) == 2 + len(rep.t)


def test_curve_arc_validates_normals():
    with pytest.raises(ValueError):
        CurveArc(lambda t: np.exp(1j * t), lambda t: 2 * np.exp(1j * t) + 0 * t)


# -- properties -------------------------------------------------------------------------

def _sym(p: RealPoly2):
    return sum((sympy.Rational(c.numerator, c.denominator) * X ** a * Y ** b for (a, b), c in p.items()),
               sympy.Integer(0))


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 5))
def test_polynomial_jets_match_symbolic(seed, degree):
    p = random_poly(RealPoly2, degree, np.random.default_rng(seed))
    expr = _sym(p)
    pt = complex(*np.random.default_rng(seed + 1).uniform(-1, 1, 2))
    jet = jet_at(polynomial_field(p), pt, order=4)
    scale = max(1.0, sum(abs(float(c)) for _, c in p.items()))
    for (a, b) in jet.partials:
        want = float(sympy.diff(expr, X, a, Y, b).subs({X: pt.real, Y: pt.imag}))
        assert abs(jet[a, b] - want) <= 1e-8 * max(scale, abs(want))


@given(st.integers(0, 2 ** 32 - 1))
def test_four_dz_dzbar_is_laplacian(seed):
    p = random_poly(RealPoly2, 4, np.random.default_rng(seed))
    jet = jets_at(polynomial_field(p), np.array([0.1 + 0.2j, -0.4j]), order=2)
    assert np.allclose(4 * wirtinger_power(jet, 1, 1), jet.laplacian(), atol=1e-12)


@given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))
def test_jet_step_halving_invariance(x, y):
    k = explicit_kernel()
    a = jet_at(k, complex(x, y), order=2, step=1e-2)
    b = jet_at(k, complex(x, y), order=2, step=5e-3)
    for key in a.partials:
        assert abs(a[key] - b[key]) <= 1e-8 * max(1.0, abs(a[key]))


@given(st.floats(0.1, 10))
def test_flatness_exponents_scale_invariant(s):
    arc = CurveArc.circle(np.pi / 2, 3 * np.pi / 2)
    k = explicit_kernel()
    a = flatness_decay(k, arc)
    b = flatness_decay(k.scaled(s), arc)
    assert np.allclose(a.exponents, b.exponents, atol=1e-9)
