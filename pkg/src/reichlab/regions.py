"""Integration regions with boundary parametrisations.

Regions know how to integrate a vectorised integrand over themselves and
expose their boundary as smooth pieces (gamma, gamma', t0, t1) so that
areas of Mobius images can be computed by contour integration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quadrature as quad


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    def contains(self, z):
        z = np.asarray(z)
        return (z.real >= self.x0) & (z.real < self.x1) & (z.imag >= self.y0) & (z.imag < self.y1)

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def corners(self):
        return np.array([self.x0 + 1j * self.y0, self.x1 + 1j * self.y0,
                         self.x1 + 1j * self.y1, self.x0 + 1j * self.y1])

    def integrate(self, f, tol=1e-8, rtol=1e-8, max_cells=quad.DEFAULT_MAX_CELLS):
        return quad.integrate_rect(f, (self.x0, self.x1, self.y0, self.y1), tol, rtol, max_cells)

    def boundary_pieces(self):
        c = self.corners
        pieces = []
        for a, b in zip(c, np.roll(c, -1)):
            pieces.append((lambda t, a=a, b=b: a + (b - a) * t, lambda t, a=a, b=b: (b - a) * np.ones_like(t), 0.0, 1.0))
        return pieces

    def max_modulus(self):
        return float(np.max(np.abs(self.corners)))


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) < self.radius

    @property
    def area(self):
        return np.pi * self.radius**2

    def integrate(self, f, tol=1e-8, rtol=1e-8, max_cells=quad.DEFAULT_MAX_CELLS):
        return quad.integrate_polar(f, self.center, 0.0, self.radius, tol=tol, rtol=rtol, max_cells=max_cells)

    def boundary_pieces(self):
        c, r = self.center, self.radius
        return [(lambda t: c + r * np.exp(1j * t), lambda t: 1j * r * np.exp(1j * t), 0.0, 2 * np.pi)]

    def max_modulus(self):
        return abs(self.center) + self.radius


@dataclass(frozen=True)
class AnnulusSector:
    center: complex
    r0: float
    r1: float
    t0: float = 0.0
    t1: float = 2 * np.pi

    def contains(self, z):
        z = np.asarray(z) - self.center
        r = np.abs(z)
        t = np.mod(np.angle(z) - self.t0, 2 * np.pi)
        return (r >= self.r0) & (r < self.r1) & (t <= self.t1 - self.t0)

    @property
    def area(self):
        return 0.5 * (self.r1**2 - self.r0**2) * (self.t1 - self.t0)

    def integrate(self, f, tol=1e-8, rtol=1e-8, max_cells=quad.DEFAULT_MAX_CELLS):
        return quad.integrate_polar(f, self.center, self.r0, self.r1, self.t0, self.t1,
                                    tol=tol, rtol=rtol, max_cells=max_cells)

    def boundary_pieces(self):
        c, r0, r1, t0, t1 = self.center, self.r0, self.r1, self.t0, self.t1
        full = np.isclose(t1 - t0, 2 * np.pi)
        pieces = [(lambda t: c + r1 * np.exp(1j * t), lambda t: 1j * r1 * np.exp(1j * t), t0, t1)]
        if r0 > 0:
            # inner arc traversed clockwise
            pieces.append((lambda t: c + r0 * np.exp(1j * (t0 + t1 - t)),
                           lambda t: -1j * r0 * np.exp(1j * (t0 + t1 - t)), t0, t1))
        if not full:
            e0, e1 = np.exp(1j * t0), np.exp(1j * t1)
            pieces.append((lambda s: c + (r1 + (r0 - r1) * s) * e1, lambda s: (r0 - r1) * e1 * np.ones_like(s), 0.0, 1.0))
            pieces.append((lambda s: c + (r0 + (r1 - r0) * s) * e0, lambda s: (r1 - r0) * e0 * np.ones_like(s), 0.0, 1.0))
        return pieces

    def max_modulus(self):
        return abs(self.center) + self.r1


def contour_area(pieces, transform=None, dtransform=None, tol=1e-13):
    """Area enclosed by the image of a positively oriented boundary.

    Uses area = (1/2) Im of the contour integral of conj(u) du with
    u = transform(gamma(t)).
    """
    total = 0.0
    for gamma, dgamma, t0, t1 in pieces:
        def g(t, gamma=gamma, dgamma=dgamma):
            z = gamma(t)
            dz = dgamma(t)
            if transform is None:
                u, du = z, dz
            else:
                u, du = transform(z), dtransform(z) * dz
            return 0.5 * np.imag(np.conj(u) * du)
        total += quad.adaptive_1d(g, t0, t1, tol=tol, rtol=tol).value
    return float(total)


@dataclass(frozen=True)
class HyperbolicDisk:
    """Hyperbolic disk of radius ``radius`` about the disk point ``center``."""

    center: complex
    radius: float

    @property
    def euclidean(self) -> Disk:
        from .geom import hyperbolic_disk_euclidean
        c, r = hyperbolic_disk_euclidean(self.center, self.radius)
        return Disk(c, r)

    def contains(self, z):
        return self.euclidean.contains(z)

    @property
    def area(self):
        return self.euclidean.area

    def integrate(self, f, tol=1e-8, rtol=1e-8, max_cells=quad.DEFAULT_MAX_CELLS):
        return self.euclidean.integrate(f, tol, rtol, max_cells)

    def boundary_pieces(self):
        return self.euclidean.boundary_pieces()

    def max_modulus(self):
        return self.euclidean.max_modulus()


def outer_annulus(a: float) -> AnnulusSector:
    """The region {a <= |z| < 1} of the unit disk."""
    return AnnulusSector(0j, a, 1.0)


def hyperbolic_distance_to(region, p) -> float:
    """Hyperbolic distance from the disk point p to a region of the unit disk."""
    dp = float(np.arctanh(abs(p)))
    if isinstance(region, HyperbolicDisk):
        from .geom import disk_distance
        return max(0.0, float(disk_distance(region.center, p)) - region.radius)
    if isinstance(region, AnnulusSector) and region.center == 0 and region.r1 >= 1.0 \
            and np.isclose(region.t1 - region.t0, 2 * np.pi):
        return max(0.0, float(np.arctanh(region.r0)) - dp)
    raise NotImplementedError(f"no distance formula for {type(region).__name__}")
