"""Hyperbolic geometry of the unit disk.

Conventions: the disk carries the density 1/(1 - |z|^2), so the distance
from the origin to z is artanh|z| and a hyperbolic disk of radius d about
the origin is the Euclidean disk of radius tanh(d).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


def _check_disk(*points):
    for z in points:
        if np.any(np.abs(z) >= 1.0) or not np.all(np.isfinite(z)):
            raise DomainError(f"point(s) outside the open unit disk: {z!r}")


def disk_density(z):
    """Density of the hyperbolic metric, 1 / (1 - |z|^2)."""
    _check_disk(z)
    return 1.0 / (1.0 - np.abs(z) ** 2)


def disk_distance(z, w):
    """Hyperbolic distance between two disk points (vectorised)."""
    _check_disk(z, w)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    t = np.abs(z - w) / np.abs(1.0 - np.conj(w) * z)
    with np.errstate(divide="ignore"):
        # points within rounding of the circle come out at infinite distance
        d = np.arctanh(np.minimum(t, 1.0))
    return float(d) if d.ndim == 0 else d


def distance_from_origin(z):
    """artanh|z|, without the domain check (callers guarantee |z| < 1)."""
    return np.arctanh(np.abs(z))


@dataclass(frozen=True)
class MobiusMap:
    """Disk automorphism z -> rotation * (z - center) / (1 - conj(center) z)."""

    rotation: complex = 1.0 + 0.0j
    center: complex = 0.0 + 0.0j

    def __post_init__(self):
        rot = complex(self.rotation)
        c = complex(self.center)
        if not np.isclose(abs(rot), 1.0, rtol=0, atol=1e-12):
            raise DomainError(f"rotation must be unimodular, got |rotation|={abs(rot)}")
        if abs(c) >= 1.0:
            raise DomainError(f"center must lie in the open disk, got {c}")
        object.__setattr__(self, "rotation", rot / abs(rot))
        object.__setattr__(self, "center", c)

    def __call__(self, z):
        w = self.center
        return self.rotation * (z - w) / (1.0 - np.conj(w) * z)

    def derivative(self, z):
        w = self.center
        return self.rotation * (1.0 - abs(w) ** 2) / (1.0 - np.conj(w) * z) ** 2

    def matrix(self) -> np.ndarray:
        """SU(1,1) matrix [[a, b], [conj(b), conj(a)]] with |a|^2 - |b|^2 = 1."""
        mu = np.sqrt(self.rotation)
        s = np.sqrt(1.0 - abs(self.center) ** 2)
        a = mu / s
        b = -mu * self.center / s
        return np.array([[a, b], [np.conj(b), np.conj(a)]], dtype=complex)

    @classmethod
    def from_matrix(cls, m) -> "MobiusMap":
        """Normal form of the map z -> (a z + b) / (c z + d) preserving the disk."""
        m = np.asarray(m, dtype=complex)
        a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
        center = -b / a
        det = a * d - b * c
        deriv_at_center = det / (c * center + d) ** 2
        rotation = deriv_at_center * (1.0 - abs(center) ** 2)
        return cls(rotation / abs(rotation), center)

    def inverse(self) -> "MobiusMap":
        m = self.matrix()
        inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
        return MobiusMap.from_matrix(inv)

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """The map z -> self(other(z))."""
        return MobiusMap.from_matrix(self.matrix() @ other.matrix())

    @classmethod
    def rotation_by(cls, angle: float) -> "MobiusMap":
        return cls(np.exp(1j * angle), 0.0)


IDENTITY = MobiusMap()


def mobius_to_zero(w) -> MobiusMap:
    """The automorphism sending w to 0 (with trivial rotation)."""
    _check_disk(w)
    return MobiusMap(1.0, complex(w))


def random_mobius(rng: np.random.Generator, max_radius: float = 0.95) -> MobiusMap:
    r = max_radius * np.sqrt(rng.uniform())
    return MobiusMap(np.exp(2j * np.pi * rng.uniform()), r * np.exp(2j * np.pi * rng.uniform()))


def random_disk_points(rng: np.random.Generator, n: int, max_radius: float = 0.95) -> np.ndarray:
    r = max_radius * np.sqrt(rng.uniform(size=n))
    return r * np.exp(2j * np.pi * rng.uniform(size=n))


@dataclass(frozen=True)
class KoebeConstants:
    """Constants of the univalence argument on the region away from the lattice.

    ``t0`` is the injectivity-radius floor, ``r0`` the Euclidean radius of
    the disk on which a uniformizer centred at a point of that region is
    univalent, and ``s0 = r0 / 8`` the resulting floor for the hyperbolic
    density in plane coordinates.
    """

    t0: float
    r0: float
    s0: float

    @property
    def derivative_bound(self) -> float:
        """Upper bound 8 / r0 for |pi'(0)| (Koebe disk radius stays below 2)."""
        return 8.0 / self.r0

    def koebe_radius(self, derivative_modulus: float) -> float:
        """r1 = (r0 / 4) |pi'(0)|."""
        return self.r0 / 4.0 * derivative_modulus


def koebe_constants(r0: float) -> KoebeConstants:
    """Constants derived from a univalence radius r0 in (0, 1].

    Under the density 1/(1-|z|^2) the hyperbolic ball of radius t about the
    origin is the Euclidean disk of radius tanh(t), so the injectivity
    radius that yields univalence on |z| < r0 is t0 = artanh(r0).
    """
    if not (0.0 < r0 <= 1.0):
        raise DomainError(f"r0 must lie in (0, 1], got {r0}")
    t0 = float(np.arctanh(r0)) if r0 < 1.0 else float("inf")
    return KoebeConstants(t0=t0, r0=float(r0), s0=r0 / 8.0)


def exclusion_radius(d: float) -> float:
    """Euclidean radius tanh(d) of the hyperbolic d-ball about 0 (this convention)."""
    return float(np.tanh(d))


def exclusion_radius_half(d: float) -> float:
    """The looser radius tanh(d / 2) (curvature -1 convention)."""
    return float(np.tanh(d / 2.0))


def outer_area(radius: float) -> float:
    """Euclidean area of {radius <= |xi| < 1}."""
    return float(np.pi * (1.0 - radius**2))


def hyperbolic_disk_area(center, radius: float) -> float:
    """Euclidean area of the hyperbolic disk of the given radius about ``center``."""
    t = np.tanh(radius)
    a2 = abs(center) ** 2
    return float(np.pi * t**2 * (1.0 - a2) ** 2 / (1.0 - a2 * t**2) ** 2)


def hyperbolic_disk_euclidean(center, radius: float):
    """Euclidean (center, radius) of the hyperbolic disk about ``center``."""
    t = np.tanh(radius)
    a = complex(center)
    a2 = abs(a) ** 2
    ec = a * (1.0 - t**2) / (1.0 - a2 * t**2)
    er = t * (1.0 - a2) / (1.0 - a2 * t**2)
    return ec, float(er)
