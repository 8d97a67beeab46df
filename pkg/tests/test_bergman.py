import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reichlab.bergman import (LITERAL_PROJECTION_CONSTANT, ConvergenceError, IntegrabilityError, MeasurableQD,
                              area_chain, calibration_report, disk_kernel, invariance_residual,
                              kernel_mass_bound, mass_identity_check, poincare_kernel, project,
                              project_result, random_mass_configs, reproducing_constant)
from reichlab.fuchsian import cyclic_group, gamma2_group, trivial_group
from reichlab.geom import IDENTITY, DomainError, MobiusMap, random_disk_points, random_mobius
from reichlab.regions import AnnulusSector, Disk, HyperbolicDisk, Rect, outer_annulus

pt = st.builds(lambda r, t: r * np.exp(1j * t), st.floats(0, 0.95), st.floats(0, 2 * np.pi))


def test_disk_kernel_values():
    assert disk_kernel(0, 0) == 1
    assert disk_kernel(0.7j, 0) == 1
    assert disk_kernel(0.5, 0.5) == pytest.approx(0.75**-4)
    assert disk_kernel(0.5, 0.5) == pytest.approx(3.160494, abs=1e-6)


@given(pt, pt, pt, st.floats(0, 2 * np.pi))
def test_invariance(z, w, c, phi):
    A = MobiusMap(np.exp(1j * phi), c)
    scale = abs(disk_kernel(z, w))
    assert invariance_residual(A, z, w) <= 1e-10 * max(1.0, scale)
    assert invariance_residual(IDENTITY, z, w) == 0.0
    assert invariance_residual(MobiusMap.rotation_by(phi), z, w) < 1e-12 * max(1.0, scale)


def test_invariance_batch():
    rng = np.random.default_rng(11)
    worst = max(invariance_residual(random_mobius(rng), *random_disk_points(rng, 2)) for _ in range(1000))
    assert worst < 1e-10


def test_mass_identity_examples():
    lhs, rhs = mass_identity_check(Disk(0j, 0.1), 0j)
    assert lhs == pytest.approx(np.pi * 0.01, rel=1e-12)
    assert rhs == pytest.approx(np.pi * 0.01, rel=1e-10)
    lhs, rhs = mass_identity_check(Rect(0.2, 0.4, 0.2, 0.4), 0.5)
    assert abs(lhs - rhs) < 1e-8 * (1 + rhs)
    lhs, rhs = mass_identity_check(AnnulusSector(0j, 0.2, 0.6, 0.3, 2.0), 0.3j)
    assert abs(lhs - rhs) < 1e-8 * (1 + rhs)


def test_mass_identity_rejects_region_outside():
    with pytest.raises(DomainError):
        mass_identity_check(Disk(0.5, 0.6), 0j)


def test_poincare_trivial_is_disk_kernel():
    kv = poincare_kernel(trivial_group(), 0.3 + 0.2j, -0.4j, depth=5)
    assert kv.value == disk_kernel(0.3 + 0.2j, -0.4j) and kv.tail_bound == 0


def test_poincare_cyclic_at_origin():
    g = cyclic_group(2.0)
    vals = [poincare_kernel(g, 0j, 0j, depth=N).value for N in range(0, 7)]
    assert all(abs(v.imag) < 1e-14 and v.real >= 1 for v in vals)
    assert all(b.real >= a.real for a, b in zip(vals, vals[1:]))
    kv = poincare_kernel(g, 0j, 0j, tol=1e-8)
    assert kv.tail_bound <= 1e-8


@pytest.mark.parametrize("group, d", [(cyclic_group(2.0), 2), (gamma2_group(), 2)])
def test_truncation_certificate(group, d):
    z, w = 0.1 + 0.05j, -0.1j
    a = poincare_kernel(group, z, w, depth=d)
    b = poincare_kernel(group, z, w, depth=d + 4)
    assert abs(a.value - b.value) <= a.tail_bound
    assert b.tail_bound <= a.tail_bound


def test_poincare_gamma2_stabilizes():
    g = gamma2_group()
    a = poincare_kernel(g, 0.05j, 0.1, depth=10)
    b = poincare_kernel(g, 0.05j, 0.1, depth=12)
    assert abs(a.value - b.value) < a.tail_bound


def test_poincare_convergence_error_carries_partial():
    with pytest.raises(ConvergenceError) as info:
        poincare_kernel(gamma2_group(), 0j, 0j, tol=1e-12, max_depth=3)
    assert info.value.partial.word_depth == 3


def test_reproducing_constant_oracle():
    # closed-form radial integral of (1 - r^2)^2 r over [0, 1] is 1/6
    assert reproducing_constant() == pytest.approx(1 / (2 * np.pi / 6), rel=1e-14)
    assert reproducing_constant() == pytest.approx(0.954930, abs=1e-6)


def test_calibration_report():
    rep = calibration_report()
    assert rep["project_one_at_zero_calibrated"] == pytest.approx(1.0, abs=1e-10)
    assert rep["project_one_at_zero_literal"] == pytest.approx(0.5, abs=1e-10)
    assert rep["literal_constant"] == LITERAL_PROJECTION_CONSTANT


@pytest.mark.parametrize("k", range(6))
def test_reproducing_monomials(k):
    f = MeasurableQD(lambda w: w**k)
    for z in (0j, 0.3 + 0.1j, -0.5j):
        assert abs(project(f, trivial_group(), z) - z**k) < 1e-8


def test_project_constant_random_points():
    one = MeasurableQD(lambda w: np.ones_like(w))
    for z in random_disk_points(np.random.default_rng(4), 10, 0.8):
        assert abs(project(one, trivial_group(), z) - 1) < 1e-8


def test_project_decays_away_from_support():
    box = Rect(-0.1, 0.1, -0.1, 0.1)
    f = MeasurableQD(lambda w: box.contains(w).astype(float), box)
    vals = [abs(project(f, trivial_group(), complex(x))) for x in (0.3, 0.6, 0.9)]
    assert vals[0] > vals[1] > vals[2]


def test_project_rejects_nonintegrable():
    f = MeasurableQD(lambda w: 1.0 / (1.0 - np.abs(w)) ** 4)
    with pytest.raises(IntegrabilityError):
        project_result(f, trivial_group(), 0j, max_cells=2000)


def test_project_quotient_needs_support():
    with pytest.raises(DomainError):
        project(MeasurableQD(lambda w: w), cyclic_group(2.0), 0j)


def test_project_on_cyclic_quotient_small_support():
    U = HyperbolicDisk(0j, 0.3)
    f = MeasurableQD(lambda w: U.contains(w).astype(float), U)
    r = project_result(f, cyclic_group(2.0), 0.05j, tol=1e-8)
    base = project_result(f, trivial_group(), 0.05j, tol=1e-8)
    # the identity word dominates; the other words add a small correction
    assert abs(r.value - base.value) < 0.1 * abs(base.value)


def test_kernel_mass_anchor_cases():
    km = kernel_mass_bound(trivial_group(), outer_annulus(0.9), 0j)
    assert km.measured == pytest.approx(0.19 * np.pi, rel=1e-8)
    assert km.distance == pytest.approx(np.arctanh(0.9), abs=1e-12)
    assert km.bound == pytest.approx(4 * np.pi * np.exp(-np.arctanh(0.9)), rel=1e-12)
    assert km.bound == pytest.approx(2.885, abs=5e-3)
    assert km.holds
    km = kernel_mass_bound(trivial_group(), outer_annulus(0.99), 0j)
    assert km.measured == pytest.approx(0.0199 * np.pi, rel=1e-8)
    assert km.bound == pytest.approx(0.889, abs=2e-3)


def test_kernel_mass_touching_raises():
    with pytest.raises(DomainError):
        kernel_mass_bound(trivial_group(), HyperbolicDisk(0j, 0.5), 0.1)


@pytest.mark.parametrize("group", [trivial_group(), cyclic_group(2.0)])
def test_kernel_mass_random(group):
    for U, p in random_mass_configs(group, np.random.default_rng(2), 20):
        assert kernel_mass_bound(group, U, p).holds


@pytest.mark.parametrize("D", [0.2, 1.0, 2.5])
def test_area_chain(D):
    a = area_chain(D)
    assert a["closed_form"] == pytest.approx(a["quadrature"], abs=1e-10)
    assert a["closed_form"] <= a["literal_area"]
    assert a["closed_form"] <= a["half_radius_area"] + 1e-15
