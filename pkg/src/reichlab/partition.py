"""Meromorphic partition of unity on finite-window surface models.

An atom is the Bergman projection of a cell indicator,

    P_(k,l)(z) = c G'(z)^2 * integral over the cell of
                 (1 - |G u|^2)^2 conj(G'(u)) / G'(u) * B(G z, G u) dA(u),

where G uniformizes the model (sends the window into the unit disk) and B
is the disk kernel or its Poincare series. The cell integral is frozen into
a node rule (eta_j, W_j) once, refined adaptively against a probe set, so
an atom is evaluated as G'(z)^2 sum_j W_j B(G z, eta_j).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq
from scipy.special import ellipj, ellipk, lambertw

from . import quadrature as quad
from .bergman import MeasurableQD, reproducing_constant
from .fuchsian import cyclic_group, gamma2_group, tail_distance, trivial_group, word_table
from .geom import DomainError, koebe_constants
from .lattice import Cell, Quasilattice, Window, omega_contains
from .regions import Rect

log = logging.getLogger(__name__)

MODEL_KINDS = ("disk", "cyclic-quotient", "gamma2-quotient", "punctured-window")
MEAN_VALUE_RADIUS = 0.125
MEAN_VALUE_LITERAL = 32.0 / np.pi
SAMPLE_OFFSET = 0.375


class WindowTooSmall(ValueError):
    """The requested truncation radius needs cells outside the model window."""


class PreconditionViolation(ValueError):
    """A sample point is outside Omega or outside the window."""


class AtomBuildError(RuntimeError):
    def __init__(self, k, l, cause):
        super().__init__(f"atom ({k}, {l}) failed: {cause}")
        self.k, self.l = k, l


# ------------------------------------------------------------------ uniformizers

def _jacobi(u, m):
    """Complex sn, cn, dn from real-argument Jacobi functions (addition formulas)."""
    x = np.real(u)
    y = np.imag(u)
    s, c, d, _ = ellipj(x, m)
    s1, c1, d1, _ = ellipj(y, 1.0 - m)
    den = c1**2 + m * s**2 * s1**2
    sn = (s * d1 + 1j * c * d * s1 * c1) / den
    cn = (c * c1 - 1j * s * d * s1 * d1) / den
    dn = (d * c1 * d1 - 1j * m * s * c * s1) / den
    return sn, cn, dn


@dataclass(frozen=True)
class AffineMap:
    """z -> (z - center) * scale."""

    center: complex
    scale: float

    def __call__(self, z):
        return (np.asarray(z) - self.center) * self.scale

    def derivative(self, z):
        return np.full(np.shape(z), self.scale, dtype=complex)


class RectangleMap:
    """Conformal map of an open rectangle onto the unit disk, centre to 0.

    The rectangle is sent to (-K, K) x (0, K') by an affine map, where the
    parameter m is chosen so that K'/K matches the aspect ratio, then to the
    upper half-plane by sn and to the disk by a Cayley transform. Tall
    rectangles are first turned a quarter so the long side is horizontal,
    which keeps m away from 0 where the Jacobi functions lose accuracy.
    """

    MAX_ASPECT = 4.0

    def __init__(self, x0: float, x1: float, y0: float, y1: float):
        self.rect = (x0, x1, y0, y1)
        width, height = x1 - x0, y1 - y0
        self.center = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        self.turn = 1.0 + 0j
        if height > width:
            self.turn, width, height = -1j, height, width
        if width / height > self.MAX_ASPECT:
            raise DomainError(f"window aspect ratio above {self.MAX_ASPECT} is not supported")
        ratio = 2.0 * height / width
        self.m = brentq(lambda m: ellipk(1.0 - m) / ellipk(m) - ratio, 1e-14, 1.0 - 1e-14, xtol=1e-15)
        self.K = float(ellipk(self.m))
        self.scale = 2.0 * self.K / width
        self.origin = complex(-0.5 * width, -0.5 * height)
        self.s0 = complex(_jacobi(np.array([0.5j * self.K * ratio]), self.m)[0][0])

    def _u(self, z):
        return self.scale * (self.turn * (np.asarray(z) - self.center) - self.origin) - self.K

    def __call__(self, z):
        sn, _, _ = _jacobi(self._u(z), self.m)
        return (sn - self.s0) / (sn - np.conj(self.s0))

    def derivative(self, z):
        sn, cn, dn = _jacobi(self._u(z), self.m)
        return (self.s0 - np.conj(self.s0)) / (sn - np.conj(self.s0)) ** 2 * cn * dn * self.scale * self.turn


# ------------------------------------------------------------------------ models

@dataclass(frozen=True, eq=False)
class SurfaceModel:
    """A finite-window hyperbolic surrogate for the plane minus a quasilattice.

    kinds:
      disk              window placed affinely in the unit disk;
      cyclic-quotient   same placement inside a fundamental region of a
                        hyperbolic cyclic group (annulus surrogate);
      gamma2-quotient   same inside the fundamental region of Gamma(2);
      punctured-window  the window uniformized by sn, with disks of radius
                        eps_punct about the quasilattice points excluded.
    """

    kind: str
    window: Window
    lattice: Quasilattice | None = None
    eps_punct: float = 1e-3
    fill: float = 0.9
    translation_length: float = 2.0
    depth: int | None = None
    r0: float = 0.4

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.lattice is not None and self.lattice.window != self.window:
            raise ValueError("quasilattice window must equal the model window")
        if not 0 < self.fill < 1:
            raise ValueError("fill must lie in (0, 1)")

    @cached_property
    def group(self):
        if self.kind == "cyclic-quotient":
            return cyclic_group(self.translation_length)
        if self.kind == "gamma2-quotient":
            return gamma2_group()
        return trivial_group()

    @cached_property
    def word_depth(self) -> int:
        if self.depth is not None:
            return self.depth
        return {"cyclic-quotient": 6, "gamma2-quotient": 4}.get(self.kind, 0)

    @cached_property
    def uniformizer(self):
        x0, x1, y0, y1 = self.window.rect
        if self.kind == "punctured-window":
            return RectangleMap(x0, x1, y0, y1)
        # largest Euclidean disk about 0 inside the fundamental region
        inscribed = float(np.tanh(tail_distance(self.group, 0))) if self.group.rank else 1.0
        half_diag = 0.5 * abs(complex(x1 - x0, y1 - y0))
        return AffineMap(self.window.center, self.fill * inscribed / half_diag)

    @property
    def koebe(self):
        return koebe_constants(self.r0)

    @cached_property
    def punctures(self) -> np.ndarray:
        if self.kind != "punctured-window" or self.lattice is None:
            return np.zeros(0, dtype=complex)
        return self.lattice.points

    def puncture_of(self, k: int, l: int):
        if self.kind != "punctured-window" or self.lattice is None:
            return None
        return self.lattice.point(k, l)

    def to_disk(self, z):
        return self.uniformizer(z)

    def derivative(self, z):
        return self.uniformizer.derivative(z)

    @cached_property
    def _words(self):
        t = word_table(self.group, self.word_depth)
        return t.a, t.b, t.c, t.d

    def kernel_sum(self, zeta, eta, weights):
        """sum_j weights_j B(zeta, eta_j) for arrays zeta (any shape) and nodes eta.

        B is the disk kernel, summed over the enumerated group in the
        first slot for quotient kinds.
        """
        zeta = np.asarray(zeta, dtype=complex)
        flat = zeta.ravel()
        ceta = np.conj(np.asarray(eta, dtype=complex))
        weights = np.asarray(weights, dtype=complex)
        out = np.zeros(flat.shape, dtype=complex)
        a, b, c, d = self._words
        chunk = max(1, 4_000_000 // max(1, len(ceta)))
        for s in range(0, len(flat), chunk):
            zc = flat[s:s + chunk]
            acc = np.zeros(zc.shape, dtype=complex)
            for i in range(len(a)):
                den = c[i] * zc + d[i]
                az = (a[i] * zc + b[i]) / den
                x = 1.0 / (1.0 - az[:, None] * ceta[None, :])
                x2 = x * x
                acc += (x2 * x2) @ weights / den**4
            out[s:s + chunk] = acc
        return out.reshape(zeta.shape)

    def density_factor(self, u):
        """(1 - |G u|^2)^2 conj(G'(u)) / G'(u): the measure factor of the projection."""
        g = self.to_disk(u)
        dg = self.derivative(u)
        return (1.0 - np.abs(g) ** 2) ** 2 * np.conj(dg) / dg


# ------------------------------------------------------------------------- atoms

def cell_indicator(k: int, l: int) -> MeasurableQD:
    cell = Cell(k, l)
    return MeasurableQD(lambda z: cell.contains(z).astype(float), Rect(*cell.rect))


@dataclass
class PartitionAtom:
    indices: tuple[int, int]
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    model: SurfaceModel = field(repr=False)
    decay_C: float = float("inf")
    rule_error: float = 0.0

    @property
    def center(self) -> complex:
        return complex(*self.indices)

    def evaluator(self, z):
        return self(z)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        zeta = self.model.to_disk(z)
        return self.model.derivative(z) ** 2 * self.model.kernel_sum(zeta, self.nodes, self.weights)

    def envelope(self, z, C: float | None = None):
        C = self.decay_C if C is None else C
        return C * np.exp(-np.abs(np.asarray(z) - self.center) / C)


def decay_samples(window: Window, spacing: float | None = None) -> np.ndarray:
    """Standard Omega sample set of a window.

    Default: the eight points z_(k,l) + 0.375 (+-1, +-i, +-1 +-i) of every
    cell. With ``spacing`` (e.g. 1/8) a finer grid aligned with the cell
    centres, restricted to Omega and the open window.
    """
    if spacing is None:
        off = SAMPLE_OFFSET * np.array([1, -1, 1j, -1j, 1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])
        idx = window.indices()
        centers = idx[:, 0] + 1j * idx[:, 1]
        return (centers[:, None] + off[None, :]).ravel()
    x0, x1, y0, y1 = window.rect
    n = int(round(1.0 / spacing))
    xs = np.arange(window.kmin * n - n // 2 + 1, window.kmax * n + n // 2) / n
    ys = np.arange(window.lmin * n - n // 2 + 1, window.lmax * n + n // 2) / n
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    z = (X + 1j * Y).ravel()
    inside = (z.real > x0) & (z.real < x1) & (z.imag > y0) & (z.imag < y1)
    z = z[inside]
    return z[omega_contains(z)]


# the certificate covers Omega points at least this far inside the window;
# the surrogate density blows up at the window boundary
CERTIFIED_MARGIN = 0.1875


def certificate_samples(window: Window) -> np.ndarray:
    """Samples the decay certificate is fitted on: the standard set plus the 1/8 grid.

    The grid reaches half a spacing beyond the certified region (margin
    CERTIFIED_MARGIN) on every side.
    """
    return np.concatenate([decay_samples(window), decay_samples(window, spacing=0.125)])


def minimal_decay_constant(r, a) -> np.ndarray:
    """Smallest C with C exp(-r / C) >= a (C exp(-r/C) is increasing in C)."""
    r = np.asarray(r, dtype=float)
    a = np.asarray(a, dtype=float)
    out = np.zeros(np.broadcast(r, a).shape)
    pos = a > 0
    rr, aa = np.broadcast_arrays(r, a)
    rr, aa = rr[pos], aa[pos]
    # with x = r / C the equation reads x e^x = r / a
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.real(lambertw(rr / aa))
        c = np.where(rr > 0, rr / x, aa)
    out[pos] = c
    return out


def fit_decay(atom: PartitionAtom, samples) -> float:
    vals = np.abs(atom(samples))
    C = minimal_decay_constant(np.abs(samples - atom.center), vals)
    return float(np.max(C)) * (1.0 + 1e-9)


def _rule_for_cell(model: SurfaceModel, k: int, l: int, probes, tol: float, max_cells: int):
    c0 = reproducing_constant()
    G, dG = model.to_disk, model.derivative
    pz = G(probes)
    pscale = c0 * dG(probes) ** 2
    cpz = pz[None, :]

    def integrand(x, y):
        u = x + 1j * y
        fac = model.density_factor(u)
        kern = (1.0 - cpz * np.conj(G(u))[:, None]) ** -4
        return fac[:, None] * kern * pscale[None, :]

    x0, x1, y0, y1 = Cell(k, l).rect
    nodes_u, w, res = quad.adaptive_rule(integrand, x0, x1, y0, y1, tol=tol, rtol=0.0,
                                         max_cells=max_cells, initial=(2, 2))
    if not res.certified:
        raise AtomBuildError(k, l, f"rule not certified (error {res.error_estimate:.3g})")
    weights = c0 * w * model.density_factor(nodes_u)
    eta = G(nodes_u)
    p = model.puncture_of(k, l)
    if p is not None and model.eps_punct > 0:
        pn, pw = quad.polar_rule(p, model.eps_punct)
        eta = np.concatenate([eta, G(pn)])
        weights = np.concatenate([weights, -c0 * pw * model.density_factor(pn)])
    return eta, weights, res.error_estimate


def build_atom(model: SurfaceModel, k: int, l: int, tol: float = 1e-8, probes=None,
               fit_samples=None, max_cells: int = 20000) -> PartitionAtom:
    """Projection of the indicator of cell (k, l) with a fitted decay certificate."""
    if not model.window.contains_index(k, l):
        raise WindowTooSmall(f"cell ({k}, {l}) outside the model window")
    if probes is None:
        probes = decay_samples(model.window)
    try:
        eta, weights, err = _rule_for_cell(model, k, l, np.asarray(probes, dtype=complex), tol, max_cells)
    except AtomBuildError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with cell context
        raise AtomBuildError(k, l, exc) from exc
    atom = PartitionAtom((k, l), eta, weights, model, rule_error=err)
    samples = certificate_samples(model.window) if fit_samples is None else fit_samples
    atom.decay_C = fit_decay(atom, np.asarray(samples, dtype=complex))
    return atom


def build_partition(model: SurfaceModel, tol: float = 1e-8, probes=None, max_cells: int = 20000):
    """All atoms of the window; each rule gets tol / (number of cells)."""
    n = model.window.size
    fit = certificate_samples(model.window)
    return [build_atom(model, int(k), int(l), tol / n, probes, fit, max_cells=max_cells)
            for k, l in model.window.indices()]


def partition_constant(atoms) -> float:
    return float(max(a.decay_C for a in atoms))


# --------------------------------------------------------------- sums and targets

@dataclass
class PartitionSum:
    value: complex
    truncation_radius: float
    tail_bound: float
    atoms_used: int = 0


def partition_sum(model: SurfaceModel, atoms, z: complex, radius: float, weights=None) -> PartitionSum:
    """Sum of the atoms with |z - z_(k,l)| <= radius; excluded window cells go to the tail.

    ``weights`` optionally maps (k, l) to a multiplier in [0, 1].
    """
    centers = np.array([a.center for a in atoms])
    idx = model.window.indices()
    cells = idx[:, 0] + 1j * idx[:, 1]
    if radius > np.max(np.abs(cells - z)) + 1e-12:
        raise WindowTooSmall(f"radius {radius} reaches beyond the window cells")
    have = {a.indices for a in atoms}
    need = np.abs(cells - z) <= radius + 1e-12
    missing = [tuple(map(int, ij)) for ij, nd in zip(idx, need) if nd and tuple(map(int, ij)) not in have]
    if missing:
        raise WindowTooSmall(f"atoms missing for cells {missing[:5]}")
    value = 0j
    tail = 0.0
    used = 0
    for a, c in zip(atoms, centers):
        w = 1.0 if weights is None else float(weights(*a.indices))
        r = abs(c - z)
        if r <= radius + 1e-12:
            value += w * complex(np.ravel(a(np.array([z])))[0])
            used += 1
        else:
            tail += w * a.decay_C * np.exp(-r / a.decay_C)
    return PartitionSum(value, float(radius), float(tail), used)


def window_projection(model: SurfaceModel, z, tol: float = 1e-9, cells=None, max_cells: int = 200000):
    """Projection of the indicator of the window (or of a list of cells) at z.

    One-shot adaptive quadrature over each rectangle, independent of the
    atom rules; puncture disks are subtracted by polar quadrature.
    Returns (value, error_estimate).
    """
    z = complex(z)
    c0 = reproducing_constant()
    zeta = complex(model.to_disk(np.array([z]))[0])
    pre = c0 * complex(model.derivative(np.array([z]))[0]) ** 2
    a, b, c, d = model._words
    den = c * zeta + d
    az = (a * zeta + b) / den
    dz4 = den**-4

    def integrand(u):
        g = np.conj(model.to_disk(u))
        kern = ((1.0 - az[None, :] * g[:, None]) ** -4) @ dz4
        return pre * model.density_factor(u) * kern

    rects = [model.window.rect] if cells is None else [Cell(k, l).rect for k, l in cells]
    total, err = 0j, 0.0
    for r in rects:
        res = quad.integrate_rect(integrand, r, tol=tol / len(rects), rtol=0.0, max_cells=max_cells)
        if not res.certified:
            raise AtomBuildError(-1, -1, "window projection not certified")
        total += res.value
        err += res.error_estimate
    wanted = None if cells is None else {tuple(ij) for ij in cells}
    if model.kind == "punctured-window" and model.lattice is not None:
        for (k, l), p in zip(model.window.indices(), model.punctures):
            if wanted is not None and (int(k), int(l)) not in wanted:
                continue
            res = quad.integrate_polar(integrand, p, 0.0, model.eps_punct, tol=1e-14, rtol=1e-10)
            total -= res.value
            err += res.error_estimate
    return complex(total), float(err)


# ------------------------------------------------------------ mean value and metric floor

def mean_value_constant() -> float:
    """Prefactor making the area mean over a radius-1/8 disk exact for h = 1 (64 / pi)."""
    res = quad.integrate_disk(lambda z: np.ones(np.shape(z)), 0j, MEAN_VALUE_RADIUS, tol=1e-15, rtol=1e-15)
    return float(1.0 / np.real(res.value))


def mean_value_expand(h, z0: complex, constant: float | None = None, tol: float = 1e-12) -> complex:
    """constant * integral of h over the disk of radius 1/8 about z0 (area mean)."""
    c = mean_value_constant() if constant is None else constant

    def checked(z):
        with np.errstate(all="ignore"):
            v = np.asarray(h(z), dtype=complex)
        if not np.all(np.isfinite(v)):
            raise DomainError("h is not finite on the disk (pole inside?)")
        return v

    # a holomorphic h has circle mean h(z0) and no residue on the boundary circle;
    # either failing flags a pole inside, even one whose area integral converges
    t = 2 * np.pi * np.arange(256) / 256
    ring = z0 + MEAN_VALUE_RADIUS * np.exp(1j * t)
    hr = checked(ring)
    h0 = checked(np.array([z0], dtype=complex))[0]
    scale = float(np.max(np.abs(hr))) + abs(h0)
    if abs(np.mean(hr) - h0) > 1e-8 * scale or abs(np.mean(hr * (ring - z0))) > 1e-8 * scale:
        raise DomainError("h is not holomorphic on the disk (pole inside?)")
    res = quad.integrate_disk(checked, z0, MEAN_VALUE_RADIUS, tol=tol, rtol=tol, max_cells=20000)
    if not res.certified:
        raise DomainError("mean value integral did not converge (pole inside the disk?)")
    return complex(c * res.value)


def mean_value_report() -> dict:
    c = mean_value_constant()
    return {"calibrated": c, "closed_form": 64.0 / np.pi, "literal": MEAN_VALUE_LITERAL,
            "literal_mean_of_one": MEAN_VALUE_LITERAL / c}


def pestimate_constant(s0: float) -> float:
    """max{16 exp(2 s0 + 2), 2 / s0}."""
    if s0 <= 0:
        raise DomainError("s0 must be positive")
    return float(max(16.0 * np.exp(2.0 * s0 + 2.0), 2.0 / s0))


@dataclass
class PestimateReport:
    indices: tuple[int, int]
    C_literal: float
    decay_C: float
    samples: list
    violations: list
    literal_violations: list

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "indices": list(self.indices), "C_literal": self.C_literal, "decay_C": self.decay_C,
            "n_samples": len(self.samples), "violations": self.violations,
            "literal_violations": self.literal_violations, "passed": self.passed,
        }


def pestimate_audit(model: SurfaceModel, atom: PartitionAtom, samples) -> PestimateReport:
    """Check |P(z)| against the fitted and the literal decay envelopes."""
    samples = np.atleast_1d(np.asarray(samples, dtype=complex))
    x0, x1, y0, y1 = model.window.rect
    bad = ~np.asarray(omega_contains(samples)) | (samples.real <= x0) | (samples.real >= x1) \
        | (samples.imag <= y0) | (samples.imag >= y1)
    if np.any(bad):
        raise PreconditionViolation(f"sample {samples[np.argmax(bad)]} is not in Omega inside the window")
    C_lit = pestimate_constant(model.koebe.s0)
    vals = np.abs(atom(samples))
    fitted = atom.envelope(samples)
    literal = atom.envelope(samples, C_lit)
    rows = [{"z": [float(z.real), float(z.imag)], "abs_P": float(v), "fitted": float(f), "literal": float(li)}
            for z, v, f, li in zip(samples, vals, fitted, literal)]
    viol = [r for r in rows if r["abs_P"] > r["fitted"]]
    lviol = [r for r in rows if r["abs_P"] > r["literal"]]
    return PestimateReport(atom.indices, C_lit, atom.decay_C, rows, viol, lviol)
