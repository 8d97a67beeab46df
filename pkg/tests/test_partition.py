import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reichlab import quadrature as quad
from reichlab.geom import DomainError
from reichlab.lattice import Window, make_quasilattice, omega_contains
from reichlab.partition import (CERTIFIED_MARGIN, MEAN_VALUE_LITERAL, PartitionAtom, PreconditionViolation, RectangleMap,
                                SurfaceModel, WindowTooSmall, build_atom, build_partition, cell_indicator,
                                decay_samples, fit_decay, mean_value_constant, mean_value_expand,
                                mean_value_report, minimal_decay_constant, partition_constant, partition_sum,
                                pestimate_audit, pestimate_constant, window_projection)


def test_cell_indicator():
    f = cell_indicator(2, -1)
    assert f(np.array([2 - 1j]))[0] == 1.0
    assert f(np.array([3 - 1j]))[0] == 0.0
    res = quad.integrate_rect(f, (1.0, 3.5, -2.0, 0.0), tol=1e-6)
    assert abs(res.value - 1.0) < 1e-3
    assert f.support_hint.contains(2 - 1j)


@pytest.mark.parametrize("rect", [(-4.0, 4.0, -4.0, 4.0), (-2.5, 3.5, -1.5, 0.5), (0.0, 1.0, 0.0, 4.0)])
def test_rectangle_map_is_a_disk_uniformizer(rect):
    G = RectangleMap(*rect)
    x0, x1, y0, y1 = rect
    c = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
    assert abs(G(np.array([c]))[0]) < 1e-12
    rng = np.random.default_rng(0)
    z = rng.uniform(x0, x1, 200) + 1j * rng.uniform(y0, y1, 200)
    assert np.all(np.abs(G(z)) < 1)
    edge = np.concatenate([x0 + 1j * np.linspace(y0, y1, 50), x1 + 1j * np.linspace(y0, y1, 50),
                           np.linspace(x0, x1, 50) + 1j * y0, np.linspace(x0, x1, 50) + 1j * y1])
    assert np.max(np.abs(np.abs(G(edge)) - 1)) < 1e-8
    h = 1e-6
    fd = (G(z + h) - G(z - h)) / (2 * h)
    assert np.max(np.abs(fd - G.derivative(z)) / np.abs(G.derivative(z))) < 1e-6


def test_rectangle_map_rejects_thin_windows():
    with pytest.raises(DomainError):
        RectangleMap(0.0, 1.0, 0.0, 5.0)


def test_disk_model_decay_along_a_ray(disk_model, disk_atoms):
    atom = next(a for a in disk_atoms if a.indices == (0, 0))
    ray = np.array([0.4, 0.9, 1.4, 1.9, 2.4]) * np.exp(0.3j)
    vals = np.abs(atom(ray))
    assert np.all(np.diff(vals) < 0)


def test_disk_model_dominant_atom(disk_atoms):
    z = np.array([0.1 + 0.05j])
    vals = {a.indices: abs(a(z)[0]) for a in disk_atoms if a.indices in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]}
    assert max(vals, key=vals.get) == (0, 0)


def test_minimal_decay_constant():
    r = np.array([0.5, 1.0, 3.0])
    a = np.array([0.2, 0.1, 0.01])
    C = minimal_decay_constant(r, a)
    assert np.allclose(C * np.exp(-r / C), a, rtol=1e-12)
    assert np.all(minimal_decay_constant(r, np.zeros(3)) == 0)


def test_decay_certificate_and_refit_stability(small_model, small_atoms):
    fine = decay_samples(small_model.window, spacing=1 / 8)
    coarse = decay_samples(small_model.window)
    assert np.all(omega_contains(fine))
    for a in small_atoms:
        assert np.isfinite(a.decay_C)
        assert np.all(np.abs(a(coarse)) <= a.envelope(coarse))
        assert np.all(np.abs(a(fine)) <= a.envelope(fine))
        assert abs(fit_decay(a, coarse) / a.decay_C - 1) < 0.10
    assert partition_constant(small_atoms) == max(a.decay_C for a in small_atoms)


def test_decay_certificate_random_points(small_model, small_atoms):
    rng = np.random.default_rng(8)
    z = random_omega_points(small_model.window, rng, 4000, margin=CERTIFIED_MARGIN)
    for a in small_atoms:
        assert np.all(np.abs(a(z)) <= a.envelope(z))


def test_sum_audit_full_radius(small_model, small_atoms):
    for z in decay_samples(small_model.window)[::7]:
        idx = small_model.window.indices()
        R = float(np.max(np.abs(idx[:, 0] + 1j * idx[:, 1] - z)))
        s = partition_sum(small_model, small_atoms, complex(z), R)
        target, err = window_projection(small_model, complex(z), tol=1e-9)
        assert s.tail_bound == 0 and s.atoms_used == 9
        assert abs(s.value - target) <= s.tail_bound + 2e-9 + err


def test_tail_bound_monotone_in_radius(small_model, small_atoms):
    z = 0.375 + 0.375j
    tails = [partition_sum(small_model, small_atoms, z, r).tail_bound for r in (0.6, 1.2, 1.9)]
    assert tails[0] > tails[1] > tails[2] >= 0
    with pytest.raises(WindowTooSmall):
        partition_sum(small_model, small_atoms, z, 5.0)


def test_truncated_sum_within_tail(small_model, small_atoms):
    z = -0.375 + 0.375j
    target, err = window_projection(small_model, z, tol=1e-9)
    s = partition_sum(small_model, small_atoms, z, 1.2)
    assert abs(s.value - target) <= s.tail_bound + 2e-9 + err


def test_single_atom_window():
    w = Window.centered(1)
    m = SurfaceModel("punctured-window", w, make_quasilattice(0, 0.1, w))
    atom = build_atom(m, 0, 0, tol=1e-9)
    z = 0.375 + 0.375j
    target, err = window_projection(m, z, tol=1e-10)
    assert abs(partition_sum(m, [atom], z, abs(z)).value - target) < 1e-8 + err


def test_linearity(small_model, small_atoms):
    z = 0.4 - 0.45j
    pair = [(0, 0), (1, 0)]
    want, err = window_projection(small_model, z, tol=1e-10, cells=pair)
    got = sum(a(np.array([z]))[0] for a in small_atoms if a.indices in pair)
    assert abs(got - want) < 1e-8 + err


def test_window_target_tends_to_one_without_punctures():
    w = Window.centered(2)
    m = SurfaceModel("punctured-window", w, make_quasilattice(0, 0.0, w), eps_punct=0.0)
    v, _ = window_projection(m, 0.25 + 0.3j, tol=1e-11)
    assert abs(v - 1) < 1e-9


def test_build_atom_outside_window(small_model):
    with pytest.raises(WindowTooSmall):
        build_atom(small_model, 5, 0)


@pytest.mark.parametrize("kind", ["disk", "cyclic-quotient", "gamma2-quotient"])
def test_quotient_models_sum_audit(kind):
    w = Window.centered(2)
    m = SurfaceModel(kind, w)
    atoms = build_partition(m, 1e-9)
    z = 0.25 + 0.3j
    target, err = window_projection(m, z, tol=1e-10)
    s = partition_sum(m, atoms, z, abs(z - (-1 - 1j)))
    assert abs(s.value - target) <= s.tail_bound + 2e-9 + err


def test_mean_value_constants():
    assert mean_value_constant() == pytest.approx(64 / np.pi, rel=1e-13)
    rep = mean_value_report()
    assert rep["literal"] == MEAN_VALUE_LITERAL
    assert rep["literal_mean_of_one"] == pytest.approx(0.5)


def test_mean_value_examples():
    z0 = 0.3 - 0.7j
    assert mean_value_expand(lambda z: np.ones_like(z), z0) == pytest.approx(1.0, abs=1e-12)
    assert mean_value_expand(lambda z: z, z0) == pytest.approx(z0, abs=1e-12)
    assert abs(mean_value_expand(lambda z: z**2, 0j)) < 1e-13
    for pole in (z0, z0 + 0.05, z0 - 0.03j):
        for h in (lambda z, p=pole: 1 / (z - p), lambda z, p=pole: 1 / (z - p) ** 2):
            with pytest.raises(DomainError):
                mean_value_expand(h, z0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=3), min_size=1, max_size=7),
       st.complex_numbers(max_magnitude=2))
def test_mean_value_polynomials(coef, z0):
    h = lambda z: np.polynomial.polynomial.polyval(z, coef)
    scale = sum(abs(c) for c in coef) * (abs(z0) + 1) ** 6
    assert abs(mean_value_expand(h, z0) - h(z0)) <= 1e-11 * scale


def test_pestimate_constant():
    assert pestimate_constant(0.125) == pytest.approx(16 * np.exp(2.25))
    assert pestimate_constant(0.125) == pytest.approx(151.8, abs=0.05)
    assert pestimate_constant(1.0) == pytest.approx(16 * np.exp(4))
    assert pestimate_constant(1.0) == pytest.approx(873.5, abs=0.1)
    assert pestimate_constant(1e-4) == 2 / 1e-4
    with pytest.raises(DomainError):
        pestimate_constant(0.0)


def test_pestimate_audit(small_model, small_atoms):
    atom = next(a for a in small_atoms if a.indices == (0, 0))
    samples = decay_samples(small_model.window)
    rep = pestimate_audit(small_model, atom, samples)
    assert rep.passed and rep.to_dict()["n_samples"] == len(samples)
    assert rep.C_literal == pytest.approx(pestimate_constant(small_model.koebe.s0))
    with pytest.raises(PreconditionViolation):
        pestimate_audit(small_model, atom, [0j])
    halved = PartitionAtom(atom.indices, atom.nodes, atom.weights, small_model, atom.decay_C / 2)
    assert not pestimate_audit(small_model, halved, samples).passed


def random_omega_points(window, rng, n, margin):
    x0, x1, y0, y1 = window.rect
    z = rng.uniform(x0 + margin, x1 - margin, 4 * n) + 1j * rng.uniform(y0 + margin, y1 - margin, 4 * n)
    return z[omega_contains(z)][:n]
