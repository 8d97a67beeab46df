import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from reichlab.geom import (IDENTITY, DomainError, MobiusMap, disk_density, disk_distance,
                           exclusion_radius, exclusion_radius_half, hyperbolic_disk_area,
                           hyperbolic_disk_euclidean, koebe_constants, mobius_to_zero, random_disk_points,
                           random_mobius)

radii = st.floats(0.0, 0.95)
angles = st.floats(0.0, 2 * np.pi)


def disk_point(r, t):
    return r * np.exp(1j * t)


def test_density_values():
    assert disk_density(0) == 1.0
    assert disk_density(0.5) == pytest.approx(1 / 0.75, rel=1e-15)
    assert disk_density(0.99) > disk_density(0.9)


@pytest.mark.parametrize("z", [1.0, 1j, 2.0 + 0j, -1.5j])
def test_density_rejects_outside(z):
    with pytest.raises(DomainError):
        disk_density(z)


def test_distance_oracle_by_radial_integral():
    oracle, _ = quad(lambda r: 1 / (1 - r**2), 0.0, 0.9, epsabs=1e-14)
    assert disk_distance(0, 0.9) == pytest.approx(oracle, abs=1e-12)
    assert disk_distance(0, 0.9) == pytest.approx(1.472219, abs=1e-6)
    assert disk_distance(0.3j, 0.3j) == 0.0


def test_distance_invariance_batch():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        A = random_mobius(rng)
        z, w = random_disk_points(rng, 2, 0.9)
        worst = max(worst, abs(disk_distance(A(z), A(w)) - disk_distance(z, w)))
    assert worst < 1e-10


@given(radii, angles, radii, angles, radii, angles)
def test_distance_triangle_and_symmetry(r1, t1, r2, t2, r3, t3):
    a, b, c = disk_point(r1, t1), disk_point(r2, t2), disk_point(r3, t3)
    assert disk_distance(a, b) == pytest.approx(disk_distance(b, a), abs=1e-12)
    assert disk_distance(a, c) <= disk_distance(a, b) + disk_distance(b, c) + 1e-10


def test_mobius_to_zero_examples():
    A = mobius_to_zero(0)
    assert A.rotation == 1 and A.center == 0
    A = mobius_to_zero(0.5)
    assert abs(A(0.5)) < 1e-16
    assert A(0) == pytest.approx(-0.5)


@given(radii, angles, radii, angles)
def test_mobius_to_zero_properties(r, t, rz, tz):
    w, z = disk_point(r, t), disk_point(rz, tz)
    A = mobius_to_zero(w)
    assert abs(A(w)) < 1e-14
    assert abs(A(0)) == pytest.approx(abs(w), abs=1e-15)
    assert abs(A.inverse()(A(z)) - z) < 1e-12
    assert abs(A(z)) < 1.0


@given(radii, angles, radii, angles, radii, angles)
def test_compose_closure(r1, t1, r2, t2, rz, tz):
    A = MobiusMap(np.exp(1j * t1), disk_point(r1, t1 / 2))
    B = MobiusMap(np.exp(1j * t2), disk_point(r2, t2 / 3))
    z = disk_point(rz, tz)
    assert abs(A.compose(B)(z) - A(B(z))) < 1e-11
    assert abs(A.compose(B).derivative(z) - A.derivative(B(z)) * B.derivative(z)) < 1e-8 * (1 + abs(B.derivative(z)))


def test_matrix_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(50):
        A = random_mobius(rng)
        B = MobiusMap.from_matrix(A.matrix())
        z = random_disk_points(rng, 5)
        assert np.max(np.abs(A(z) - B(z))) < 1e-12
        assert abs(np.linalg.det(A.matrix()) - 1) < 1e-12
    assert IDENTITY(0.3 + 0.1j) == 0.3 + 0.1j


def test_density_times_weight_is_one():
    w = random_disk_points(np.random.default_rng(1), 1000, 0.999)
    assert np.max(np.abs(disk_density(w) * (1 - np.abs(w) ** 2) - 1)) < 1e-12


def test_koebe_examples():
    assert koebe_constants(1.0).s0 == 0.125
    assert koebe_constants(0.4).s0 == pytest.approx(0.05)
    k = koebe_constants(0.4)
    assert np.tanh(k.t0) == pytest.approx(0.4)
    assert k.koebe_radius(k.derivative_bound) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        koebe_constants(0.0)
    with pytest.raises(DomainError):
        koebe_constants(-1.0)


@given(st.floats(1e-3, 1.0), st.floats(1e-3, 1.0))
def test_koebe_monotone(a, b):
    lo, hi = sorted((a, b))
    assert koebe_constants(lo).s0 <= koebe_constants(hi).s0


@given(st.floats(0.01, 5.0))
def test_exclusion_radii(d):
    # the hyperbolic d-ball about 0 has Euclidean radius tanh(d) under this density
    assert disk_distance(0, exclusion_radius(d) * (1 - 1e-12)) <= d + 1e-9
    assert exclusion_radius_half(d) <= exclusion_radius(d)


@settings(max_examples=30)
@given(radii, angles, st.floats(0.05, 2.0))
def test_hyperbolic_disk_euclidean(r, t, rho):
    c = disk_point(r * 0.9, t)
    ec, er = hyperbolic_disk_euclidean(c, rho)
    boundary = ec + er * np.exp(1j * np.linspace(0, 2 * np.pi, 16, endpoint=False))
    assert np.max(np.abs(disk_distance(c, boundary) - rho)) < 1e-8
    assert hyperbolic_disk_area(c, rho) == pytest.approx(np.pi * er**2, rel=1e-12)
