import numpy as np
import pytest
from hypothesis import given, strategies as st

from holmgren.arcflat import (ArcFlatSolution, ArcSpec, AtomicMeasure, Constraint, ConstraintSet, MapData,
                              NormalizationError, TrivialSolutionError, V1Contract, V2Contract, assemble,
                              build_V1, build_V2, construct, constraint_residual, herglotz_F,
                              pole_constraints, solve_measure)
from holmgren.polyrat import RationalMap
from holmgren.suite import root_check

DISK = RationalMap.polynomial([0, 1])
CUBIC = RationalMap.polynomial([0, 1, 0.3])
ARC = ArcSpec(-3 * np.pi / 4, 3 * np.pi / 4)


@pytest.fixture(scope="module")
def disk_solution():
    return construct(DISK, ARC, check_flatness=False)


def closed_F_disk(zeta, xi):
    # phi = zeta: F = (1/zeta) int_0^zeta (1 + xb e)/(1 - xb e) de = -1 - 2 log(1 - xb zeta)/(xb zeta)
    xb = np.conj(xi)
    return -1 - 2 * np.log(1 - xb * zeta) / (xb * zeta)


# -- Herglotz kernel -----------------------------------------------------------

@pytest.mark.parametrize("phi", [DISK, CUBIC])
def test_F_tends_to_one_at_origin(phi):
    xi = np.exp(2.5j)
    a, b = herglotz_F(phi, 1e-3, xi), herglotz_F(phi, 1e-4 * (1 + 1j) / np.sqrt(2), xi)
    # F = 1 + O(zeta): linear extrapolation from two radii
    assert abs(a - 1) < 1e-2 and abs(b - 1) < 1e-3


def test_F_matches_closed_form_and_pipeline():
    rng = np.random.default_rng(3)
    md = MapData(DISK)
    for _ in range(20):
        zeta = 0.9 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        xi = np.exp(2j * np.pi * rng.uniform())
        want = closed_F_disk(zeta, xi)
        assert abs(herglotz_F(DISK, zeta, xi) - want) < 1e-10
        assert abs(complex(md.F(np.array([zeta]), xi)[0]) - want) < 1e-10


def test_poisson_kernel_positive():
    rng = np.random.default_rng(0)
    zeta = np.sqrt(rng.uniform(0, 0.99, 100)) * np.exp(2j * np.pi * rng.uniform(0, 1, 100))
    xi = np.exp(2j * np.pi * rng.uniform(0, 1, 100))
    # (zeta F)' for phi = zeta is the Herglotz kernel; differentiate the closed form numerically
    h = 1e-6
    num = ((zeta + h) * closed_F_disk(zeta + h, xi) - (zeta - h) * closed_F_disk(zeta - h, xi)) / (2 * h)
    herg = (1 + np.conj(xi) * zeta) / (1 - np.conj(xi) * zeta)
    assert np.allclose(num, herg, atol=1e-7)
    assert np.all(herg.real > 0)
    assert np.allclose(herg.real, (1 - abs(zeta) ** 2) / abs(1 - np.conj(xi) * zeta) ** 2)


def test_poisson_kernel_boundary_vanishing():
    xi = 1j
    r = 0.999
    th = np.linspace(0, 2 * np.pi, 4000)
    dist = np.abs(np.angle(np.exp(1j * th) / xi))
    pk = ((1 + np.conj(xi) * r * np.exp(1j * th)) / (1 - np.conj(xi) * r * np.exp(1j * th))).real
    # the kernel peaks at the nearest angle: (1 - r^2)/|e^{i d} - r|^2
    d = 0.3
    assert np.max(pk[dist > d]) <= (1 - r * r) / abs(np.exp(1j * d) - r) ** 2
    assert np.max(pk[dist > 0.5]) < 0.01


# -- constraints and measure ---------------------------------------------------

@pytest.mark.parametrize("phi, m, s", [(DISK, 2, 1), (CUBIC, 3, 2), (RationalMap.polynomial([0, 1.7]), 2, 1)])
def test_pole_constraints(phi, m, s):
    cs = pole_constraints(phi)
    assert len(cs.entries) == 1
    e = cs.entries[0]
    assert abs(e.zeta) < 1e-12 and (e.pole_order, e.vanishing_order) == (m, s)
    assert cs.real_count == 2 * s + 1


def test_pole_constraints_needs_normalized_map():
    with pytest.raises(NormalizationError):
        pole_constraints(RationalMap.polynomial([0.1, 1]))


def test_solve_measure_disk():
    cs = pole_constraints(DISK)
    m, diag = solve_measure(DISK, ARC, cs, 6)
    # three real rows: sum c_k = 0 and Re/Im of V2'(0)
    assert diag["nullspace_dim"] >= 6 - cs.real_count
    assert diag["constraint_residual"] < 1e-10
    assert abs(np.linalg.norm(m.weights) - 1) < 1e-12
    v2 = V2Contract(DISK, m)
    assert abs(v2.derivative(np.array([0j]))[0]) < 1e-10
    assert abs(v2.value(np.array([0j]))[0]) < 1e-14


def test_solve_measure_rejects_too_few_atoms():
    with pytest.raises(ValueError):
        solve_measure(DISK, ARC, pole_constraints(DISK), 4)


def test_solve_measure_cubic_derivatives():
    cs = pole_constraints(CUBIC)
    m, _ = solve_measure(CUBIC, ARC, cs)
    v2 = V2Contract(CUBIC, m)
    assert abs(v2.derivative(np.array([0j]))[0]) < 1e-10
    assert abs(v2.second_derivative(np.array([0j]))[0]) < 1e-8
    assert constraint_residual(CUBIC, m, cs) < 1e-10


def test_atoms_stay_off_the_arc():
    with pytest.raises(ValueError):
        AtomicMeasure((1 + 0j,), (1.0,)).check_against(ARC)
    with pytest.raises(ValueError):
        AtomicMeasure((1j, -1j), (0.0, 0.0))


# -- V2 ------------------------------------------------------------------------

def test_single_atom_V2_is_the_kernel():
    m = AtomicMeasure((-1 + 0j,), (1.0,))
    zeta = np.array([0.3 + 0.2j, -0.6j, 0.05, 0.7 * np.exp(1j)])
    d, v = build_V2(m, DISK, zeta)
    assert np.allclose(v, closed_F_disk(zeta, -1), atol=1e-10)
    assert np.allclose(v, [herglotz_F(DISK, z, -1) for z in zeta], atol=1e-10)
    # V2' against a central difference of the closed form
    h = 1e-5
    fd = (closed_F_disk(zeta + h, -1) - closed_F_disk(zeta - h, -1)) / (2 * h)
    assert np.allclose(d, fd, atol=1e-8)


def test_flat_condition_on_arc(disk_solution):
    # Re[(phi V2)'/phi'] is the Poisson superposition of the weights: small on the arc
    v2 = disk_solution.v2
    th_in = np.linspace(ARC.theta0 + 0.2, ARC.theta1 - 0.2, 50)
    z_in = 0.995 * np.exp(1j * th_in)
    a, b = ARC.complement()
    z_out = 0.995 * np.exp(1j * np.linspace(a, b, 400))

    def cond(z):
        return (v2.value(z) + z * v2.derivative(z)).real

    assert np.max(np.abs(cond(z_in))) < 0.05 * np.max(np.abs(cond(z_out)))


def test_symmetric_measure_is_real_on_axis():
    xi = np.exp(2.6j)
    m = AtomicMeasure((xi, np.conj(xi), -1 + 0j), (1.0, 1.0, -2.0))
    x = np.linspace(-0.8, 0.8, 9).astype(complex)
    for phi in (DISK, CUBIC):
        _, v = build_V2(m, phi, x)
        assert np.max(np.abs(v.imag)) < 1e-10


# -- V1 ------------------------------------------------------------------------

def test_V1_path_independence(disk_solution):
    v1 = disk_solution.v1
    t = 0.5 + 0.3j
    a = complex(v1.value(np.array([t]))[0])
    assert abs(a - v1.value_along([0, 0.5, t])) < 1e-9
    assert abs(a - v1.value_along([0, 0.3j, t])) < 1e-9


def test_V1_of_zero_measure_vanishes():
    m = AtomicMeasure((-1 + 0j,), (0.0,), allow_zero=True)
    v2 = V2Contract(DISK, m)
    d, v = build_V1(DISK, v2, pole_constraints(DISK), np.array([0.2, 0.4j]))
    assert not np.any(d) and not np.any(v)


def test_V1_boundedness_probe(disk_solution):
    h, v2pp = disk_solution.v1.boundedness_probe()
    assert h <= 10 * v2pp


def test_V1_derivative_matches_fd(disk_solution):
    v1 = disk_solution.v1
    z = np.array([0.2 + 0.1j, -0.4j])
    h = 1e-4
    fd = (v1.value(z + h) - v1.value(z - h)) / (2 * h)
    assert np.allclose(v1.derivative(z), fd, atol=1e-7)


# -- assembly ------------------------------------------------------------------

def test_zero_measure_rejected():
    m = AtomicMeasure((-1 + 0j,), (0.0,), allow_zero=True)
    with pytest.raises(TrivialSolutionError):
        assemble(DISK, ARC, m)


def test_disk_solution_end_to_end(disk_solution):
    checks = disk_solution.verify()
    failed = {k: v for k, v in checks.items() if not v["passed"]}
    assert not failed
    s = np.linspace(-0.5, 0.5, 21)
    z = (s[:, None] + 1j * s[None, :]).ravel()
    z = z[np.abs(z) <= 0.5]
    assert np.max(np.abs(disk_solution.u(z.real, z.imag))) > 1e-6 * disk_solution.measure.scale


def test_disk_solution_root_check(disk_solution):
    assert root_check(disk_solution.field) < 1e-3


def test_scale_equivariance(disk_solution):
    sol = disk_solution
    twice = assemble(DISK, ARC, sol.measure.scaled(2.0), sol.constraints, check_flatness=False)
    x = np.array([0.1, -0.3, 0.2, 0.45])
    y = np.array([0.2, 0.1, -0.4, 0.0])
    a, b = sol.u(x, y), twice.u(x, y)
    assert np.max(np.abs(b - 2 * a)) < 1e-10


def test_solution_json_round_trip(disk_solution):
    back = ArcFlatSolution.from_json(disk_solution.dumps())
    x, y = np.array([0.1, -0.2]), np.array([0.3, 0.05])
    assert np.allclose(back.u(x, y), disk_solution.u(x, y), atol=1e-13)


@given(st.floats(-2.9, 2.9))
def test_V2_real_part_symmetric_under_conjugation(theta):
    # conjugate-symmetric map and atoms: V2(conj z) = conj V2(z)
    xi = np.exp(2.7j)
    m = AtomicMeasure((xi, np.conj(xi)), (1.0, 1.0))
    v2 = V2Contract(CUBIC, m)
    z = np.array([0.6 * np.exp(1j * theta)])
    assert abs(v2.value(np.conj(z))[0] - np.conj(v2.value(z)[0])) < 1e-10
