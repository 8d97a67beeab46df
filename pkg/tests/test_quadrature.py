import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reichlab.quadrature import (
    EnvelopeViolation,
    NonIntegrableError,
    adaptive_1d,
    adaptive_rule,
    envelope_tail,
    integrate_disk,
    integrate_pole,
    integrate_polar,
    integrate_rect,
    lattice_points_within,
    lattice_sum,
    polar_rule,
)


def radial_oracle(R):
    """2 pi times the integral of r (1 + r)^-4 over [0, R]."""
    return 2 * np.pi * (1 / 6 - 1 / (2 * (1 + R) ** 2) + 1 / (3 * (1 + R) ** 3))


# ------------------------------------------------------------------ rectangles

def test_constant_on_unit_square():
    res = integrate_rect(lambda z: np.ones_like(z.real), (0, 1, 0, 1))
    assert abs(res.value - 1) < 1e-14
    assert res.certified


def test_separable_product():
    res = integrate_rect(lambda z: z.real * z.imag, (0, 1, 0, 1))
    assert res.value == pytest.approx(0.25, abs=1e-14)


@given(st.integers(0, 6), st.integers(0, 6))
@settings(max_examples=25, deadline=None)
def test_monomials(a, b):
    res = integrate_rect(lambda z: z.real**a * z.imag**b, (0, 2, -1, 1), tol=1e-12, rtol=1e-13)
    exact = 2 ** (a + 1) / (a + 1) * (1 - (-1) ** (b + 1)) / (b + 1)
    assert res.value == pytest.approx(exact, abs=1e-11)


def test_vector_valued_integrand():
    res = integrate_rect(lambda z: np.stack([np.ones_like(z.real), z.real], axis=1), (0, 2, 0, 3))
    assert np.allclose(res.value, [6.0, 6.0], atol=1e-12)


def test_budget_exhaustion_is_flagged():
    res = integrate_rect(lambda z: 1 / np.sqrt(np.abs(z) + 1e-12), (-1, 1, -1, 1), tol=1e-15, rtol=0, max_cells=40)
    assert not res.certified


# ------------------------------------------------------------------ polar and disks

def test_weight_over_large_disk():
    res = integrate_disk(lambda z: (np.abs(z) + 1) ** -4, 0j, 1e3, tol=1e-10, rtol=1e-10)
    assert res.value == pytest.approx(radial_oracle(1e3), rel=1e-9)
    assert abs(res.value / (np.pi / 3) - 1) < 1e-3


def test_polar_sector_area():
    res = integrate_polar(lambda z: np.ones_like(z), 1 + 1j, 0.5, 2.0, 0.0, np.pi / 2)
    assert res.value == pytest.approx(np.pi / 4 * (4 - 0.25), rel=1e-13)


def test_disk_area():
    assert integrate_disk(lambda z: np.ones_like(z), 0.3j, 0.7).value == pytest.approx(np.pi * 0.49, rel=1e-13)


# ------------------------------------------------------------------ poles

def test_pole_inverse_modulus():
    res = integrate_pole(lambda z: 1 / np.abs(z), 0j, 0.5)
    assert abs(res.value - np.pi) <= res.error_estimate + 1e-12
    assert res.error_estimate < 1e-4


def test_pole_constant():
    res = integrate_pole(lambda z: np.ones_like(z.real), 0.2 + 0.1j, 0.5)
    assert res.value == pytest.approx(np.pi * 0.25, abs=res.error_estimate + 1e-12)


def test_pole_nonintegrable():
    with pytest.raises(NonIntegrableError):
        integrate_pole(lambda z: 1 / np.abs(z) ** 2, 0j, 0.5)


def test_pole_rejects_higher_hint():
    with pytest.raises(ValueError):
        integrate_pole(lambda z: 1 / np.abs(z), 0j, 0.5, pole_order_hint=2)


def test_pole_rmin_halved_within_estimate():
    f = lambda z: np.abs(1 + 0.1 / z)
    a = integrate_pole(f, 0j, 0.5, r_min=1e-6)
    b = integrate_pole(f, 0j, 0.5, r_min=5e-7)
    assert abs(a.value - b.value) < a.error_estimate


# ------------------------------------------------------------------ refinement battery

BATTERY = [
    ("smooth", lambda z: np.exp(z.real) * np.cos(z.imag), (0, 1, 0, 1)),
    ("peaked", lambda z: 1 / (0.01 + np.abs(z - (0.3 + 0.4j)) ** 2), (0, 1, 0, 1)),
    ("kernel", lambda z: np.abs(1 - 0.95 * z) ** -4, (-0.5, 0.5, -0.5, 0.5)),
]


@pytest.mark.parametrize("name, f, rect", BATTERY, ids=[b[0] for b in BATTERY])
def test_refined_within_estimate(name, f, rect):
    coarse = integrate_rect(f, rect, tol=1e-6, rtol=0)
    fine = integrate_rect(f, rect, tol=1e-7, rtol=0)
    assert coarse.certified and fine.certified
    assert abs(coarse.value - fine.value) <= coarse.error_estimate


def test_pole_refined_within_estimate():
    f = lambda z: np.abs(np.exp(z) + 0.05 / z)
    coarse = integrate_pole(f, 0j, 0.5, tol=1e-6, rtol=0)
    fine = integrate_pole(f, 0j, 0.5, tol=1e-7, rtol=0)
    assert abs(coarse.value - fine.value) <= coarse.error_estimate


def test_adaptive_1d():
    res = adaptive_1d(lambda x: np.sqrt(x), 0.0, 1.0, tol=1e-12)
    assert res.value == pytest.approx(2 / 3, abs=1e-11)


# ------------------------------------------------------------------ frozen rules

def test_adaptive_rule_reuses_cells():
    g = lambda x, y: np.exp(-(x**2 + y**2))
    nodes, weights, res = adaptive_rule(g, -1, 1, -1, 1, tol=1e-12)
    assert np.sum(weights * np.exp(-np.abs(nodes) ** 2)) == pytest.approx(res.value, abs=1e-14)
    assert np.sum(weights) == pytest.approx(4.0, abs=1e-13)


def test_polar_rule_moments():
    nodes, weights = polar_rule(0.5j, 0.3, n_r=8, n_t=16)
    assert np.sum(weights) == pytest.approx(np.pi * 0.09, rel=1e-14)
    # mean value property for a polynomial of degree below n_t
    assert np.sum(weights * (nodes - 0.5j) ** 3) == pytest.approx(0, abs=1e-15)


# ------------------------------------------------------------------ lattice sums

def test_lattice_sum_zero():
    s = lattice_sum(lambda k, l: np.zeros(len(k)), 1.0)
    assert s.value == 0
    assert s.tail_bound <= 1e-12


def test_lattice_sum_envelope_direct():
    env = lambda k, l: np.exp(-np.hypot(k, l))
    s = lattice_sum(env, 1.0, tol=1e-12)
    k, l = lattice_points_within(0j, 40)
    direct = np.sum(env(k, l))
    assert abs(s.value - direct) < 1e-10


def test_lattice_sum_brackets_doubled_radius():
    c = 1.7
    term = lambda k, l: c * np.exp(-np.hypot(k - 0.3, l + 0.2) / c) * np.cos(k)
    s = lattice_sum(term, c, center=0.3 - 0.2j, tol=1e-6)
    k, l = lattice_points_within(0.3 - 0.2j, 2 * s.radius)
    doubled = np.sum(term(k, l))
    assert abs(doubled - s.value) <= s.tail_bound


def test_mainesti_majorant_radius_doubling():
    C1 = 2.0
    total = lambda k, l: np.sum(4 * (2 + np.hypot(k, l)) ** 4 * np.exp(-np.hypot(k, l) / C1))
    a = total(*lattice_points_within(0j, 200))
    b = total(*lattice_points_within(0j, 400))
    assert np.isfinite(a) and b == pytest.approx(a, rel=1e-12)


def test_envelope_violation_names_index():
    def term(k, l):
        out = np.exp(-np.hypot(k, l))
        out[(k == 2) & (l == -1)] = 5.0
        return out
    with pytest.raises(EnvelopeViolation) as info:
        lattice_sum(term, 1.0)
    assert (info.value.k, info.value.l) == (2, -1)


def test_envelope_tail_majorizes():
    c, R = 1.3, 10.0
    k, l = lattice_points_within(0j, 200)
    r = np.hypot(k, l)
    actual = np.sum(c * np.exp(-r[r > R] / c))
    assert actual <= envelope_tail(c, R)
