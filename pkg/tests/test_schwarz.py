import numpy as np
import pytest
from hypothesis import given, strategies as st

from holmgren._poly import RealPoly2
from holmgren.polyrat import RationalMap
from holmgren.schwarz import (BranchPointError, EllipseSpec, QuadratureData, _ellipse_S,
                              default_test_functions, fit_quadrature_data, focus_loop_mismatch,
                              meromorphy_report, monodromy_probe, quadrature_residual,
                              rational_boundary_residual, schwarz_ellipse)

DISK = RationalMap.polynomial([0, 1])


def cardioid(c):
    return RationalMap.polynomial([0, 1, c])


# -- ellipse --------------------------------------------------------------------

def test_circle_schwarz_is_conjugate_on_boundary():
    spec = EllipseSpec(1, 1)
    for th in np.linspace(0, 2 * np.pi, 7):
        z = np.exp(1j * th)
        assert abs(schwarz_ellipse(spec, z).value - np.conj(z)) < 1e-15


def test_ellipse_boundary_and_focus():
    spec = EllipseSpec(2, 1)
    assert spec.boundary_residual(256) < 1e-10
    with pytest.raises(BranchPointError):
        schwarz_ellipse(spec, np.sqrt(3))


def test_ellipse_gate_rejects_bad_axes():
    with pytest.raises(ValueError):
        EllipseSpec(1, 2)


def test_monodromy_examples():
    spec = EllipseSpec(2, 1)
    # radius 0.5 around the focus leaves the ellipse; the sheet algebra does not care
    assert monodromy_probe(spec, np.sqrt(3), 0.5, 720, require_inside=False) > 0.1
    assert focus_loop_mismatch(spec) > 0.1
    assert monodromy_probe(spec, 0j, 0.5, 720) < 1e-9
    circle = EllipseSpec(1, 1)
    for center, r in ((0j, 0.5), (0.3 + 0.2j, 0.2), (-0.4j, 0.3)):
        assert monodromy_probe(circle, center, r, 720) < 1e-12


def test_loop_outside_is_rejected_by_default():
    with pytest.raises(ValueError):
        monodromy_probe(EllipseSpec(2, 1), np.sqrt(3), 0.5)


def test_circle_degeneration_of_closed_form():
    z = np.array([0.3 + 0.1j, -0.5j, 0.7])
    assert np.array_equal(_ellipse_S(1.5, 1.5, z, 1), 1.5 ** 2 / z)
    # the general formula tends to a^2/z as b -> a
    near = _ellipse_S(1.5, 1.5 * (1 - 1e-7), z, 1)
    assert np.allclose(near, 1.5 ** 2 / z, atol=1e-5)


@pytest.mark.parametrize("a, small", [(1.0, True), (1.1, False), (1.5, False), (2.0, False)])
def test_monodromy_dichotomy(a, small):
    m = focus_loop_mismatch(EllipseSpec(a, 1.0))
    assert (m < 1e-9) is small


@given(st.floats(1.0, 3.0), st.floats(0.2, 1.0))
def test_ellipse_boundary_identity_property(a, ratio):
    spec = EllipseSpec(a, a * ratio)
    assert spec.boundary_residual() < 1e-10


# -- rational maps ------------------------------------------------------------------

@given(st.complex_numbers(max_magnitude=0.45, allow_nan=False, allow_infinity=False))
def test_rational_boundary_residual(c):
    assert rational_boundary_residual(cardioid(c)) < 1e-10


def test_meromorphy_reports():
    rep = meromorphy_report(DISK)
    assert rep["kind"] == "meromorphic" and [p["order"] for p in rep["poles"]] == [1]
    rep = meromorphy_report(cardioid(0.3))
    assert [(p["zeta"], p["order"]) for p in rep["poles"]] == [([0.0, 0.0], 2)]
    rep = meromorphy_report(EllipseSpec(2, 1))
    assert rep["kind"] == "branched" and rep["mismatch"] > 1e-3


# -- quadrature identities ---------------------------------------------------------

def test_disk_mean_value():
    data = QuadratureData((0j,), (np.pi,), (0j,))
    res, per = quadrature_residual(DISK, data, default_test_functions()[:5])
    assert res < 1e-8


def test_disk_wrong_weight_fails():
    data = QuadratureData((0j,), (np.pi / 2,), (0j,))
    res, per = quadrature_residual(DISK, data, [RealPoly2({(0, 0): 1})])
    assert abs(res - np.pi / 2) < 1e-8


def test_cardioid_weights_fit_and_verify():
    c = 0.3
    data = fit_quadrature_data(cardioid(c), [0j])
    # f(phi) phi' conj(phi') integrated over the disk gives pi(1 + 2|c|^2) h(0) + Re(pi conj(c) f'(0))
    assert abs(data.value_weights[0] - np.pi * (1 + 2 * c * c)) < 1e-8
    assert abs(data.derivative_weights[0] - np.pi * c) < 1e-8
    res, _ = quadrature_residual(cardioid(c), data)
    assert res < 1e-6


@given(st.fractions(-5, 5, max_denominator=50))
def test_disk_residual_rotation_invariant(t):
    # exact rational rotation: cos = (1 - t^2)/(1 + t^2), sin = 2t/(1 + t^2)
    c, s = (1 - t * t) / (1 + t * t), 2 * t / (1 + t * t)
    data = QuadratureData((0j,), (np.pi,), (0j,))
    x = RealPoly2({(1, 0): c, (0, 1): -s})
    y = RealPoly2({(1, 0): s, (0, 1): c})
    h = RealPoly2({(2, 0): 1, (0, 2): -1, (1, 1): 3, (1, 0): 2})
    rot = x * x - y * y + x * y * 3 + x * 2
    assert rot.laplacian().is_zero()
    base, _ = quadrature_residual(DISK, data, [h], nr=64, nt=128)
    turned, _ = quadrature_residual(DISK, data, [rot], nr=64, nt=128)
    assert abs(base - turned) < 1e-10
