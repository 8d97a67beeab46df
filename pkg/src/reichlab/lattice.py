"""Integer lattice, quasilattices, unit cells and the region Omega.

Omega is the set of points at distance at least 1/4 from the integer
lattice. Every quasilattice point lies within 1/8 of its lattice point, so
Omega stays at distance at least 1/8 from any quasilattice.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAX_DELTA = 0.125
OMEGA_RADIUS = 0.25


class InvariantViolation(ValueError):
    """A quasilattice parameter breaks the 1/8 perturbation bound."""


class NotWellDistributed(ValueError):
    """Some disk of radius 1/8 about a lattice point misses the point set."""

    def __init__(self, k: int, l: int):
        super().__init__(f"no point of the set within 1/8 of z_(k,l) for (k, l) = ({k}, {l})")
        self.k, self.l = k, l


def lattice_point(k: int, l: int) -> complex:
    return complex(k, l)


@dataclass(frozen=True)
class Window:
    """Inclusive integer index rectangle kmin..kmax by lmin..lmax."""

    kmin: int
    kmax: int
    lmin: int
    lmax: int

    def __post_init__(self):
        if self.kmax < self.kmin or self.lmax < self.lmin:
            raise ValueError(f"empty window {self}")

    @classmethod
    def centered(cls, nk: int, nl: int | None = None) -> "Window":
        """nk by nl cells with the origin cell in the middle (lower-left for even sizes)."""
        nl = nk if nl is None else nl
        return cls(-(nk // 2), nk - 1 - nk // 2, -(nl // 2), nl - 1 - nl // 2)

    @property
    def shape(self) -> tuple[int, int]:
        return self.kmax - self.kmin + 1, self.lmax - self.lmin + 1

    @property
    def size(self) -> int:
        a, b = self.shape
        return a * b

    def indices(self) -> np.ndarray:
        """(size, 2) integer array in row-major (k, then l) order."""
        k, l = np.meshgrid(np.arange(self.kmin, self.kmax + 1), np.arange(self.lmin, self.lmax + 1), indexing="ij")
        return np.stack([k.ravel(), l.ravel()], axis=1)

    def contains_index(self, k: int, l: int) -> bool:
        return self.kmin <= k <= self.kmax and self.lmin <= l <= self.lmax

    @property
    def rect(self) -> tuple[float, float, float, float]:
        """Plane rectangle (x0, x1, y0, y1) covered by the window cells."""
        return self.kmin - 0.5, self.kmax + 0.5, self.lmin - 0.5, self.lmax + 0.5

    @property
    def center(self) -> complex:
        x0, x1, y0, y1 = self.rect
        return complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))

    def to_list(self) -> list[int]:
        return [self.kmin, self.kmax, self.lmin, self.lmax]


@dataclass(frozen=True)
class Cell:
    """The half-open unit square z_(k,l) + [-1/2, 1/2)^2."""

    k: int
    l: int

    @property
    def center(self) -> complex:
        return complex(self.k, self.l)

    @property
    def rect(self) -> tuple[float, float, float, float]:
        return self.k - 0.5, self.k + 0.5, self.l - 0.5, self.l + 0.5

    def contains(self, z):
        z = np.asarray(z)
        return ((z.real >= self.k - 0.5) & (z.real < self.k + 0.5)
                & (z.imag >= self.l - 0.5) & (z.imag < self.l + 0.5))


def cell_of(z: complex) -> Cell:
    return Cell(int(np.floor(z.real + 0.5)), int(np.floor(z.imag + 0.5)))


def cell_indices(z):
    """Vectorised cell_of returning integer arrays (k, l)."""
    z = np.asarray(z)
    return np.floor(z.real + 0.5).astype(int), np.floor(z.imag + 0.5).astype(int)


def distance_to_lattice(z):
    z = np.asarray(z)
    return np.abs(z - (np.round(z.real) + 1j * np.round(z.imag)))


def omega_contains(z):
    """True where the distance to the integer lattice is at least 1/4."""
    out = distance_to_lattice(z) >= OMEGA_RADIUS
    return bool(out) if np.ndim(out) == 0 else out


def distance_lower_bound(z, w, s0: float):
    """(s0 / 2) |z - w| - 2 s0, a lower bound for the hyperbolic distance off the lattice."""
    if s0 <= 0:
        raise ValueError("s0 must be positive")
    return 0.5 * s0 * np.abs(np.asarray(z) - np.asarray(w)) - 2.0 * s0


@dataclass
class Quasilattice:
    """Points w_(k,l) = k + l i + offset_(k,l) on a finite window, |offset| <= delta <= 1/8."""

    window: Window
    offsets: np.ndarray
    delta: float
    seed: int | None = None

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=complex).reshape(self.window.shape)
        if self.delta > MAX_DELTA or self.delta < 0:
            raise InvariantViolation(f"delta must lie in [0, 1/8], got {self.delta}")
        if np.any(np.abs(self.offsets) > self.delta + 1e-15):
            raise InvariantViolation("an offset exceeds delta")

    def point(self, k: int, l: int) -> complex:
        if not self.window.contains_index(k, l):
            raise KeyError((k, l))
        return complex(k, l) + complex(self.offsets[k - self.window.kmin, l - self.window.lmin])

    @property
    def points(self) -> np.ndarray:
        """All realized points, in Window.indices() order."""
        idx = self.window.indices()
        return idx[:, 0] + 1j * idx[:, 1] + self.offsets.ravel()

    def nearest_distance(self, z):
        """Distance from z to the nearest realized point."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        pts = self.points
        best = np.full(z.shape, np.inf)
        for s in range(0, len(pts), 512):
            best = np.minimum(best, np.min(np.abs(z[..., None] - pts[s:s + 512]), axis=-1))
        return best

    def to_json(self) -> str:
        return json.dumps({
            "seed": self.seed,
            "delta": self.delta,
            "window": self.window.to_list(),
            "offsets": [[float(o.real), float(o.imag)] for o in self.offsets.ravel()],
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Quasilattice":
        d = json.loads(text)
        offs = np.array([complex(a, b) for a, b in d["offsets"]])
        return cls(Window(*d["window"]), offs, d["delta"], d.get("seed"))


def make_quasilattice(seed: int, delta: float, window: Window) -> Quasilattice:
    """Seeded offsets of modulus delta * sqrt(u) and uniform angle."""
    if not (0.0 <= delta <= MAX_DELTA):
        raise InvariantViolation(f"delta must lie in [0, 1/8], got {delta}")
    rng = np.random.default_rng(seed)
    n = window.size
    u = rng.uniform(size=n)
    theta = rng.uniform(0.0, 2 * np.pi, size=n)
    offs = delta * np.sqrt(u) * np.exp(1j * theta)
    return Quasilattice(window, offs, float(delta), seed)


@dataclass
class PointSet:
    points: np.ndarray
    claimed_c: float = 0.125

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex).ravel()


def read_points_csv(path: str | Path, claimed_c: float = 0.125) -> PointSet:
    """Read a point set from CSV with columns re, im."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return PointSet(np.array([complex(float(r["re"]), float(r["im"])) for r in rows]), claimed_c)


def write_points_csv(path: str | Path, E: PointSet) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im"])
        for p in E.points:
            w.writerow([repr(float(p.real)), repr(float(p.imag))])


def extract_quasilattice(E: PointSet, window: Window) -> Quasilattice:
    """Select one point of E in each closed disk of radius 1/8 about z_(k,l).

    Ties are broken by distance to z_(k,l), then by (re, im).
    """
    pts = E.points
    order = np.lexsort((pts.imag, pts.real))
    pts = pts[order]
    k, l = cell_indices(pts)
    offs = np.empty(window.shape, dtype=complex)
    for kk, ll in window.indices():
        mask = (k == kk) & (l == ll)
        cand = pts[mask] - complex(kk, ll)
        near = np.abs(cand) <= MAX_DELTA
        if not np.any(near):
            raise NotWellDistributed(int(kk), int(ll))
        cand = cand[near]
        # candidates are already (re, im)-sorted, argmin keeps the first minimiser
        offs[kk - window.kmin, ll - window.lmin] = cand[np.argmin(np.abs(cand))]
    delta = float(np.max(np.abs(offs)))
    return Quasilattice(window, offs, delta, None)


def _segment_omega_length(a: complex, b: complex) -> float:
    """Exact length of the part of segment [a, b] at distance >= 1/4 from Z^2."""
    d = b - a
    length = abs(d)
    if length**2 < 1e-280:
        # too short to intersect circles reliably; classify by the start point
        return float(length) if omega_contains(a) else 0.0
    r = OMEGA_RADIUS
    x0, x1 = sorted((a.real, b.real))
    y0, y1 = sorted((a.imag, b.imag))
    ks = np.arange(np.floor(x0 - r), np.ceil(x1 + r) + 1)
    ls = np.arange(np.floor(y0 - r), np.ceil(y1 + r) + 1)
    K, L = np.meshgrid(ks, ls, indexing="ij")
    c = (K + 1j * L).ravel()
    # |a + t d - c|^2 = r^2  ->  |d|^2 t^2 + 2 Re(conj(d)(a - c)) t + |a - c|^2 - r^2 = 0
    p = np.real(np.conj(d) * (a - c)) / length**2
    q = (np.abs(a - c) ** 2 - r**2) / length**2
    disc = p**2 - q
    hit = disc > 0
    lo = np.clip(-p[hit] - np.sqrt(disc[hit]), 0.0, 1.0)
    hi = np.clip(-p[hit] + np.sqrt(disc[hit]), 0.0, 1.0)
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    if lo.size == 0:
        return float(length)
    idx = np.argsort(lo)
    covered, cur_lo, cur_hi = 0.0, lo[idx[0]], hi[idx[0]]
    for s, e in zip(lo[idx[1:]], hi[idx[1:]]):
        if s > cur_hi:
            covered += cur_hi - cur_lo
            cur_lo, cur_hi = s, e
        else:
            cur_hi = max(cur_hi, e)
    covered += cur_hi - cur_lo
    return float(length * (1.0 - covered))


def omega_path_length(path, L: Quasilattice | None = None) -> float:
    """Euclidean length of the portion of a polyline lying in Omega.

    The endpoints must avoid the quasilattice when one is given.
    """
    path = np.asarray(path, dtype=complex).ravel()
    if L is not None and np.any(L.nearest_distance(path[[0, -1]]) == 0):
        raise ValueError("path endpoints must avoid the quasilattice")
    return float(sum(_segment_omega_length(complex(a), complex(b)) for a, b in zip(path[:-1], path[1:])))


def omega_grid(window: Window, spacing: float = 0.25, margin: float = 0.0) -> np.ndarray:
    """Grid points of Omega inside the window rectangle shrunk by ``margin``.

    The grid is aligned with half-integers so it contains the cell corners.
    """
    x0, x1, y0, y1 = window.rect
    xs = np.arange(x0 + margin, x1 - margin + 1e-12, spacing)
    ys = np.arange(y0 + margin, y1 - margin + 1e-12, spacing)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    z = (X + 1j * Y).ravel()
    return z[omega_contains(z)]
