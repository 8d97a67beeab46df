"""Finitely generated Fuchsian groups as explicit generator sets.

Groups are free on their generators (the shipped ones are), so the group
elements are the freely reduced words. Words are enumerated level by level
as SU(1,1)-type matrices; ``letters`` holds generator, inverse, generator,
inverse, ... so the inverse of letter i is letter i ^ 1.

Each letter may carry a ping-pong half-plane D_g with g(disk minus D_{g^-1})
inside D_g. When all of them are present and the origin avoids every D_g,
a reduced word W = g_1 ... g_m maps the origin into g_1 ... g_{m-1}(D_{g_m}),
which gives a certified lower bound for the distance d(0, W 0) over all
words longer than a given depth.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geom import DomainError, MobiusMap, _check_disk


class UnsupportedGroupError(ValueError):
    """Raised for groups whose elements are not enumerated by reduced words."""


@dataclass(frozen=True)
class HalfPlane:
    """Hyperbolic half-plane bounded by the geodesic between two ideal points.

    ``marker`` is any point strictly inside the half-plane.
    """

    end1: complex
    end2: complex
    marker: complex


@dataclass(frozen=True)
class FuchsianGroup:
    letters: tuple[MobiusMap, ...] = ()
    label: str = "trivial"
    regions: tuple[HalfPlane, ...] | None = None
    free: bool = True

    @property
    def generators(self) -> tuple[MobiusMap, ...]:
        return self.letters[::2]

    @property
    def rank(self) -> int:
        return len(self.letters) // 2


@dataclass
class WordOrbit:
    base: complex
    lengths: np.ndarray
    images: np.ndarray
    derivatives: np.ndarray
    words: np.ndarray | None = None

    @property
    def elements(self):
        return list(zip(self.lengths.tolist(), self.images.tolist(), self.derivatives.tolist()))

    def __len__(self):
        return len(self.lengths)


def _letters_with_inverses(gens) -> tuple[MobiusMap, ...]:
    out = []
    for g in gens:
        out += [g, g.inverse()]
    return tuple(out)


def trivial_group() -> FuchsianGroup:
    return FuchsianGroup((), "trivial", ())


def cyclic_group(translation_length: float) -> FuchsianGroup:
    """Hyperbolic cyclic group translating along the real diameter.

    The generator moves the origin to tanh(translation_length), i.e. a
    distance ``translation_length`` under the density 1/(1-|z|^2).
    """
    if translation_length <= 0:
        raise DomainError(f"translation length must be positive, got {translation_length}")
    t = np.tanh(translation_length)
    gen = MobiusMap(1.0, -t)  # z -> (z + t) / (1 + t z)
    x0 = np.tanh(translation_length / 2)
    c = (1 + x0**2) / (2 * x0)
    phi = np.arccos(1.0 / c)
    forward = HalfPlane(np.exp(1j * phi), np.exp(-1j * phi), 0.5 * (1 + x0))
    backward = HalfPlane(-np.exp(1j * phi), -np.exp(-1j * phi), -0.5 * (1 + x0))
    return FuchsianGroup(_letters_with_inverses([gen]), "cyclic", (forward, backward))


def _cayley(tau):
    return (tau - 1j) / (tau + 1j)


_CAYLEY = np.array([[1, -1j], [1, 1j]], dtype=complex)
_CAYLEY_INV = np.linalg.inv(_CAYLEY)


def _conjugate_to_disk(m_upper) -> MobiusMap:
    return MobiusMap.from_matrix(_CAYLEY @ np.asarray(m_upper, dtype=complex) @ _CAYLEY_INV)


def gamma2_group() -> FuchsianGroup:
    """Level-2 congruence group generated by tau -> tau + 2 and tau -> tau / (2 tau + 1).

    Conjugated into the disk by the Cayley map tau -> (tau - i) / (tau + i),
    which sends i to the origin. The group is free of rank 2 and uniformizes
    the thrice-punctured sphere.
    """
    T = _conjugate_to_disk([[1, 2], [0, 1]])
    S = _conjugate_to_disk([[1, 0], [2, 1]])
    regions = (
        HalfPlane(_cayley(1.0), 1.0, _cayley(2.0 + 1j)),       # Re tau >= 1
        HalfPlane(_cayley(-1.0), 1.0, _cayley(-2.0 + 1j)),     # Re tau <= -1
        HalfPlane(_cayley(0.0), _cayley(1.0), _cayley(0.5 + 0.25j)),    # |tau - 1/2| <= 1/2
        HalfPlane(_cayley(0.0), _cayley(-1.0), _cayley(-0.5 + 0.25j)),  # |tau + 1/2| <= 1/2
    )
    return FuchsianGroup(_letters_with_inverses([T, S]), "gamma2-conjugate", regions)


def group_by_label(label: str, translation_length: float = 2.0) -> FuchsianGroup:
    if label == "trivial":
        return trivial_group()
    if label == "cyclic":
        return cyclic_group(translation_length)
    if label in ("gamma2", "gamma2-conjugate"):
        return gamma2_group()
    raise UnsupportedGroupError(f"unknown group label {label!r}")


@dataclass
class WordTable:
    """All reduced words up to a length: matrix entries and letter sequences."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    lengths: np.ndarray
    last: np.ndarray
    first: np.ndarray
    offsets: np.ndarray  # words of length k occupy offsets[k]:offsets[k+1]

    def level(self, k):
        return slice(self.offsets[k], self.offsets[k + 1])


@lru_cache(maxsize=32)
def word_table(group: FuchsianGroup, max_word_length: int) -> WordTable:
    """Reduced words ordered by length, then lexicographically in letter indices."""
    if not group.free:
        raise UnsupportedGroupError(f"group {group.label!r} is not free; reduced words do not enumerate it")
    mats = np.array([g.matrix() for g in group.letters]).reshape(-1, 2, 2)
    n = len(group.letters)
    a = [np.array([1.0 + 0j])]
    b = [np.array([0j])]
    c = [np.array([0j])]
    d = [np.array([1.0 + 0j])]
    last = [np.array([-1])]
    first = [np.array([-1])]
    offsets = [0, 1]
    for k in range(1, max_word_length + 1):
        if n == 0:
            offsets.append(offsets[-1])
            continue
        pa, pb, pc, pd, pl, pf = a[-1], b[-1], c[-1], d[-1], last[-1], first[-1]
        # W' = W * g for every letter g that does not cancel the last letter of W
        g = np.arange(n)
        allowed = (pl[:, None] < 0) | (g[None, :] != (pl[:, None] ^ 1))
        wi, gi = np.nonzero(allowed)
        ga, gb, gc, gd = mats[gi, 0, 0], mats[gi, 0, 1], mats[gi, 1, 0], mats[gi, 1, 1]
        a.append(pa[wi] * ga + pb[wi] * gc)
        b.append(pa[wi] * gb + pb[wi] * gd)
        c.append(pc[wi] * ga + pd[wi] * gc)
        d.append(pc[wi] * gb + pd[wi] * gd)
        last.append(gi)
        first.append(np.where(pf[wi] < 0, gi, pf[wi]))
        offsets.append(offsets[-1] + len(wi))
    cat = np.concatenate
    table = WordTable(cat(a), cat(b), cat(c), cat(d),
                      np.repeat(np.arange(len(offsets) - 1), np.diff(offsets)),
                      cat(last), cat(first), np.array(offsets))
    for arr in (table.a, table.b, table.c, table.d, table.lengths, table.last, table.first):
        arr.flags.writeable = False
    return table


def enumerate_orbit(group: FuchsianGroup, z, max_word_length: int) -> WordOrbit:
    """Images W z and derivatives W'(z) for all reduced words of length <= N."""
    _check_disk(z)
    if max_word_length < 0:
        raise DomainError("max_word_length must be nonnegative")
    t = word_table(group, max_word_length)
    den = t.c * z + t.d
    images = (t.a * z + t.b) / den
    # word matrices are products of SU(1,1) matrices, so det = 1 exactly;
    # recomputing it from large entries would only add cancellation error
    derivs = 1.0 / den**2
    derivs[0] = 1.0
    images[0] = z
    return WordOrbit(complex(z), t.lengths, images, derivs)


def word_count(group: FuchsianGroup, max_word_length: int) -> int:
    return int(word_table(group, max_word_length).offsets[-1])


# ---------------------------------------------------------------- certificates

def _apply(t: WordTable, idx, z):
    return (t.a[idx] * z + t.b[idx]) / (t.c[idx] * z + t.d[idx])


def _side(e1, e2, p):
    """Signed side of p relative to the geodesic through ideal points e1, e2."""
    s = e1 + e2
    diam = np.abs(s) < 1e-14
    # geodesic circle centred at s/(1 + Re(e1 conj e2)) orthogonal to the unit circle
    denom = 1.0 + np.real(e1 * np.conj(e2))
    with np.errstate(divide="ignore", invalid="ignore"):
        cen = s / denom
        rad2 = np.abs(cen) ** 2 - 1.0
        circ = np.abs(p - cen) ** 2 - rad2
    line = np.imag(np.conj(e1) * p)  # diameter case: side of the line through 0 and e1
    return np.where(diam, line, circ)


def _distance_to_halfplane(e1, e2, marker):
    """Hyperbolic distance from the origin to the half-plane (0 if inside)."""
    inside = np.sign(_side(e1, e2, 0j)) == np.sign(_side(e1, e2, marker))
    cos_t = np.abs(e1 + e2) / 2
    sin_t = np.abs(e1 - e2) / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        eu = np.where(cos_t > 1e-15, (1.0 - sin_t) / cos_t, 0.0)
    d = np.arctanh(np.clip(eu, 0.0, 1.0 - 1e-16))
    return np.where(inside, 0.0, d)


def _geodesic_distance_from_origin(chord):
    """Distance from 0 to the geodesic whose ideal endpoints are ``chord`` apart."""
    sn = np.clip(np.asarray(chord, dtype=float) / 2.0, 1e-300, 1.0)
    cs = np.sqrt(1.0 - sn**2)
    return 0.5 * np.log((cs + 1.0 - sn) / (sn - sn**2 / (1.0 + cs)))


def origin_in_fundamental_region(group: FuchsianGroup) -> bool:
    if not group.regions:
        return group.rank == 0
    return all(float(_distance_to_halfplane(h.end1, h.end2, h.marker)) > 0 for h in group.regions)


@lru_cache(maxsize=64)
def tail_distance(group: FuchsianGroup, depth: int) -> float:
    """Lower bound for d(0, W 0) over all reduced words W longer than ``depth``.

    Returns +inf for the trivial group and 0 when no certificate exists.
    """
    if group.rank == 0:
        return float("inf")
    if group.regions is None or not origin_in_fundamental_region(group):
        return 0.0
    t = word_table(group, depth)
    idx = np.arange(t.offsets[depth], t.offsets[depth + 1])
    best = np.inf
    n = len(group.letters)
    for g in range(n):
        if depth == 0:
            sel = idx
        else:
            sel = idx[t.last[idx] != (g ^ 1)]
        if not len(sel):
            continue
        h = group.regions[g]
        # by ping-pong the image half-plane lies in D_{g_1}, which misses 0,
        # so only the distance to its boundary geodesic matters
        a, b, c, d = t.a[sel], t.b[sel], t.c[sel], t.d[sel]
        q1 = c * h.end1 + d
        q2 = c * h.end2 + d
        # entries grow with the word; where cancellation in q1, q2 swamps the
        # value the certificate at this depth is unreliable and is skipped
        rounding = 1e-13 * (np.abs(c) + np.abs(d))
        if np.any(np.minimum(np.abs(q1), np.abs(q2)) < 1e3 * rounding):
            best = -np.inf
            break
        chord = np.abs((h.end1 - h.end2) / (q1 * q2))
        best = min(best, float(np.min(_geodesic_distance_from_origin(chord))))
    # words longer than depth are also longer than depth - 1
    if depth > 0:
        best = max(best, tail_distance(group, depth - 1))
    return best


def orbit_separation(group: FuchsianGroup, z, depth: int = 6) -> float:
    """Certified lower bound for min_{W != 1} d(z, W z)."""
    if group.rank == 0:
        return float("inf")
    orbit = enumerate_orbit(group, z, depth)
    zz = orbit.images[1:]
    short = float(np.min(np.arctanh(np.abs(zz - z) / np.abs(1 - np.conj(z) * zz))))
    dz = float(np.arctanh(abs(z)))
    long = tail_distance(group, depth) - 2 * dz
    return min(short, long)


def orbit_tail_mass(group: FuchsianGroup, z, depth: int, sep_depth: int = 6) -> float:
    """Certified bound for sum over words longer than ``depth`` of (1 - |W z|^2)^2.

    Disjoint hyperbolic disks of radius r (half the orbit separation) about
    the tail orbit points each have Euclidean area >= pi tanh(r)^2 (1-|Wz|^2)^2
    and lie in {|xi| >= tanh(delta - r)}, where delta bounds d(0, W z) below.
    """
    if group.rank == 0:
        return 0.0
    sep = orbit_separation(group, z, min(sep_depth, max(depth, 1)))
    if sep <= 0:
        return float("inf")
    delta = tail_distance(group, depth) - float(np.arctanh(abs(z)))
    # any packing radius r <= sep / 2 is valid; take the best on a grid
    r = 0.5 * sep * np.linspace(0.05, 1.0, 96)
    with np.errstate(over="ignore"):
        outer = np.cosh(np.maximum(0.0, delta - r)) ** -2.0
    return float(np.min(outer / np.tanh(r) ** 2))


def fixed_points(m: MobiusMap):
    """Fixed points of a Mobius map (roots of c z^2 + (d - a) z - b = 0)."""
    M = m.matrix()
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    return np.roots([c, d - a, -b])


def normalized_trace(m: MobiusMap) -> complex:
    M = m.matrix()
    return (M[0, 0] + M[1, 1]) / np.sqrt(np.linalg.det(M))


def region_inside_fundamental(group: FuchsianGroup, center, radius: float) -> bool:
    """True when the hyperbolic disk (center, radius) avoids every ping-pong half-plane."""
    _check_disk(center)
    if group.rank == 0:
        return True
    if not group.regions:
        return False
    A = MobiusMap(1.0, complex(center))
    for h in group.regions:
        d = float(_distance_to_halfplane(A(h.end1), A(h.end2), A(h.marker)))
        if d <= radius:
            return False
    return True
