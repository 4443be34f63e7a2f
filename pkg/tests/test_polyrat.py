import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from holmgren.polyrat import (ComplexPoly, PoleEvaluationError, RationalMap, conformal_check,
                              eval_map, gauss, poles_in_disk, reflect, schwarz_pullback)

coef = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)
small = st.complex_numbers(max_magnitude=0.4, allow_nan=False, allow_infinity=False)


def poly(*c):
    return RationalMap.polynomial(list(c))


# -- eval ----------------------------------------------------------------------

@pytest.mark.parametrize("phi, z, want", [
    (poly(0, 1), 0.5, 0.5),
    (poly(0, 1, 0.25), 1, 1.25),
    (RationalMap(ComplexPoly((0, 1)), ComplexPoly((1, -0.5))), 1, 2.0),
])
def test_eval_examples(phi, z, want):
    assert abs(eval_map(phi, z) - want) < 1e-15


def test_eval_refuses_pole():
    f = RationalMap(ComplexPoly((1,)), ComplexPoly((-0.5, 1)))
    with pytest.raises(PoleEvaluationError):
        eval_map(f, 0.5)


@given(st.lists(coef, min_size=1, max_size=8), coef)
def test_horner_matches_polyval(cs, z):
    p = ComplexPoly(tuple(cs))
    assert abs(p(z) - np.polyval(cs[::-1], z)) <= 1e-12 * (1 + sum(abs(c) for c in cs) * max(1, abs(z)) ** len(cs))


# -- exact mode and roots --------------------------------------------------------

def test_exact_float_modes_do_not_mix():
    with pytest.raises(TypeError):
        ComplexPoly.exact([1, 2]) + ComplexPoly((1.0, 2.0))


def test_exact_roots_against_sympy():
    z = sympy.symbols("z")
    expr = sympy.expand((z - 1) ** 3 * (z + sympy.I / 2) ** 2 * (z - 2))
    coeffs = [expr.coeff(z, k) for k in range(7)]
    p = ComplexPoly.exact([gauss(sympy.re(c), sympy.im(c)) for c in coeffs])
    got = {complex(r): m for r, m in p.roots()}
    want = {complex(r): m for r, m in sympy.roots(expr, z).items()}
    assert len(got) == len(want)
    for w, m in want.items():
        match = [g for g in got if abs(g - w) < 1e-12]
        assert len(match) == 1 and got[match[0]] == m


def test_float_multiple_root_clustering():
    p = ComplexPoly(tuple(np.poly([1, 1, 1, -0.5j])[::-1].astype(complex)))
    roots = dict((round(r.real, 8) + 1j * round(r.imag, 8), m) for r, m in p.roots())
    assert roots[1 + 0j] == 3
    assert roots[-0.5j] == 1


# -- reflection and pullback -------------------------------------------------------

def test_reflect_conjugates_coefficients():
    phi = poly(0, 1, 1j / 3)
    assert np.allclose(reflect(phi).numerator.as_array(), [0, 1, -1j / 3])
    real = poly(0, 1, 0.3)
    assert np.allclose(reflect(real).numerator.as_array(), real.numerator.as_array())


@given(st.lists(small, min_size=1, max_size=4))
def test_reflect_involution_and_boundary_identity(cs):
    phi = poly(0, 1, *cs)
    twice = reflect(reflect(phi))
    assert np.array_equal(twice.numerator.as_array(), phi.numerator.as_array())
    zeta = np.exp(2j * np.pi * np.arange(64) / 64)
    star = reflect(phi)
    assert np.max(np.abs(star(1 / zeta) - np.conj(phi(zeta)))) < 1e-12


@given(st.lists(small, min_size=1, max_size=4), coef)
def test_reflect_conjugate_evaluation(cs, w):
    phi = poly(0, 1, *cs)
    assert abs(reflect(phi)(np.conj(w)) - np.conj(phi(w))) < 1e-10 * (1 + abs(w)) ** 6


def test_pullback_examples():
    r = 1.7
    pull = schwarz_pullback(poly(0, r))
    zeta = np.array([0.3 + 0.2j, -0.5j])
    assert np.allclose(pull(zeta), r / zeta)
    c = 0.3 - 0.1j
    pull = schwarz_pullback(poly(0, 1, c))
    assert np.allclose(pull(zeta), 1 / zeta + np.conj(c) / zeta ** 2)
    ring = np.exp(2j * np.pi * np.arange(64) / 64)
    phi = poly(0, 1, c)
    assert np.max(np.abs(pull(ring) - np.conj(phi(ring)))) < 1e-12


# -- poles -------------------------------------------------------------------------

def test_poles_of_c():
    for coeffs, order in (([0, 1], 2), ([0, 1, 0.3], 3)):
        phi = poly(*coeffs)
        c = schwarz_pullback(phi) / phi
        recs = poles_in_disk(c)
        assert len(recs) == 1 and abs(recs[0].location) < 1e-12 and recs[0].order == order
    assert poles_in_disk(poly(0, 1, 0.3)) == []


def test_pole_multiplicities_sum_to_interior_degree():
    den = ComplexPoly(tuple(np.poly([0.2, 0.2, -0.5j, 3.0])[::-1].astype(complex)))
    f = RationalMap(ComplexPoly((1,)), den)
    assert sum(p.order for p in poles_in_disk(f)) == 3


# -- conformal check ---------------------------------------------------------------

@pytest.mark.parametrize("coeffs, ok", [([0, 1], True), ([0, 1, 0.25], True), ([0, 1, 1], False)])
def test_conformal_check(coeffs, ok):
    assert bool(conformal_check(poly(*coeffs))) is ok


def test_json_round_trip():
    f = RationalMap(ComplexPoly((0, 1, 0.2j)), ComplexPoly((1, -0.1)))
    g = RationalMap.from_json(f.to_json())
    z = np.array([0.1, 0.4j])
    assert np.allclose(f(z), g(z), rtol=1e-15)
