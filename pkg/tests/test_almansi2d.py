import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from holmgren._poly import RealPoly2
from holmgren.almansi2d import (DerivedU, HarmonicStack, NotPolyanalyticError, NotPolyharmonicError,
                                PsiFunction, U_from_u, ZZbarPoly, almansi_decompose, almansi_reconstruct,
                                exact_U, polyanalytic_split, psi_root_check, random_polyharmonic,
                                stack_from_values)
from holmgren.fieldlab import explicit_kernel, polynomial_field

X, Y = sympy.symbols("x y", real=True)


def rp(d):
    return RealPoly2(d)


def sym_dz(expr, n):
    for _ in range(n):
        expr = (sympy.diff(expr, X) - sympy.I * sympy.diff(expr, Y)) / 2
    return expr


# -- exact decomposition ----------------------------------------------------------

def test_decompose_examples():
    u = rp({(3, 0): 1, (1, 2): 1})
    s = almansi_decompose(u, 2)
    assert s[1].is_zero() and s[2] == rp({(1, 0): 1})
    u = rp({(0, 0): 3, (2, 1): 2, (0, 3): 2})
    s = almansi_decompose(u, 2)
    assert s[1] == rp({(0, 0): 3}) and s[2] == rp({(0, 1): 2})


def test_decompose_rejects_non_polyharmonic():
    with pytest.raises(NotPolyharmonicError) as e:
        almansi_decompose(rp({(4, 0): 1}), 1)
    assert e.value.witness is not None


def test_stack_requires_harmonic_parts():
    with pytest.raises(ValueError):
        HarmonicStack((rp({(2, 0): 1}),))


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.integers(0, 6))
def test_round_trip_recovers_generator(seed, N, degree):
    u, stack = random_polyharmonic(N, degree + 2 * (N - 1), np.random.default_rng(seed))
    got = almansi_decompose(u, N)
    assert got.parts == stack.parts


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.integers(0, 12))
def test_reconstruction_and_harmonicity(seed, N, degree):
    u, _ = random_polyharmonic(N, degree, np.random.default_rng(seed))
    s = almansi_decompose(u, N)
    assert almansi_reconstruct(s) == u
    assert all(h.laplacian().is_zero() for h in s.parts)


# -- U = d_z^N u -------------------------------------------------------------------

def test_U_examples():
    # Re(z^2) = (z^2 + zbar^2)/2, so d_z^2 gives the constant 1
    re_z2 = polynomial_field(rp({(2, 0): 1, (0, 2): -1}))
    assert sym_dz(X ** 2 - Y ** 2, 2) == 1
    assert abs(U_from_u(re_z2, 2, 0.3 + 0.4j) - 1) < 1e-8
    r4 = rp({(4, 0): 1, (2, 2): 2, (0, 4): 1})
    assert abs(U_from_u(polynomial_field(r4), 2, 1 + 1j) - (-4j)) < 1e-7
    assert abs(complex(exact_U(r4, 2)(np.array([1 + 1j]))[0]) + 4j) < 1e-14


def test_U_matches_symbolic_oracle(rng):
    u = rp({(3, 0): 1, (1, 2): 1})
    expr = sym_dz(X ** 3 + X * Y ** 2, 2)
    pts = rng.uniform(-0.8, 0.8, (10, 2))
    field = polynomial_field(u)
    for x, y in pts:
        want = complex(expr.subs({X: x, Y: y}))
        assert abs(U_from_u(field, 2, complex(x, y)) - want) < 1e-7


# -- polyanalytic split --------------------------------------------------------------

def test_split_examples():
    probes = np.array([0.2 + 0.1j, -0.3j, 0.5])
    U = ZZbarPoly.from_dict({(1, 0): 1, (2, 1): 2})
    s = polyanalytic_split(U, 2, probes)
    assert np.allclose(s.values[0], probes) and np.allclose(s.values[1], 2 * probes ** 2)
    s = polyanalytic_split(ZZbarPoly.from_dict({(0, 0): 5}), 2, probes)
    assert np.allclose(s.values[0], 5) and np.allclose(s.values[1], 0)


def test_split_rejects_higher_order():
    with pytest.raises(NotPolyanalyticError):
        polyanalytic_split(ZZbarPoly.from_dict({(0, 2): 1}), 2, np.array([0.3]))


def test_kernel_split_and_root_check():
    probes = np.array([0.55, 0.6j, -0.7 + 0.1j, 0.75 * np.exp(2j)])
    s = polyanalytic_split(DerivedU(explicit_kernel(), 2), 2, probes)
    assert s.residual < 1e-5
    rep = psi_root_check(s, lambda z: 1 / z)
    assert rep.passed and rep.residual < 1e-3


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3))
def test_split_exact_on_polyanalytic_polynomials(seed, N):
    rng = np.random.default_rng(seed)
    d = {(int(m), int(n)): complex(*rng.integers(-5, 6, 2)) for m in range(9) for n in range(N)
         if rng.random() < 0.4}
    U = ZZbarPoly.from_dict(d)
    probes = np.exp(2j * np.pi * rng.uniform(0, 1, 6)) * rng.uniform(0.1, 0.9, 6)
    s = polyanalytic_split(U, N, probes)
    parts = U.holomorphic_parts(N)
    for k in range(N):
        want = sum(complex(float(c.x), float(c.y)) * probes ** m for m, c in parts[k].items()) + 0 * probes
        assert np.allclose(s.values[k], want, atol=1e-10 * max(1, np.max(np.abs(want))))


# -- Psi root check ------------------------------------------------------------------

def test_root_check_examples():
    probes = np.array([0.5, 0.6j, -0.7])
    S = lambda z: 1 / z
    built = stack_from_values(probes, [lambda z: -S(z) * z ** 2, lambda z: z ** 2])
    assert psi_root_check(built, S).residual < 1e-15
    bad = stack_from_values(probes, [1, 0])
    rep = psi_root_check(bad, S)
    assert abs(rep.residual - 1) < 1e-15 and not rep.passed


@given(st.integers(0, 2 ** 32 - 1))
def test_passing_root_check_has_large_J(seed):
    # R = 3, N = 2: passing at depth R - N = 1 forces J > 1
    rng = np.random.default_rng(seed)
    probes = 0.5 + 0.3 * rng.uniform(-1, 1, 5) + 0.2j * rng.uniform(-1, 1, 5)
    c = complex(*rng.uniform(-1, 1, 2)) + 0.1
    S = lambda z: 1 / z
    st_ = stack_from_values(probes, [lambda z: -S(z) * c * z, lambda z: c * z])
    rep = psi_root_check(st_, S, depth=1)
    assert rep.passed and PsiFunction(st_).J > 1
