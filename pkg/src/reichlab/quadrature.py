"""Certified numerical integration in one and two dimensions.

Every 2D integral in the package goes through :func:`adaptive_2d`: tensor
Gauss-Kronrod (7, 15) cells, global refinement of the worst cells, and the
Kronrod-Gauss difference as the per-cell error estimate. Integrands are
vectorised: they receive coordinate arrays of shape (n,) and return (n,) or
(n, m) values, so a whole family of integrals shares one set of cells.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np

log = logging.getLogger(__name__)

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod abscissae (+-x1, +-x3, +-x5, 0).
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]

DEFAULT_MAX_CELLS = 10**6


class NonIntegrableError(ValueError):
    """The integrand grows too fast at a declared singular point."""


class EnvelopeViolation(ValueError):
    """A computed lattice-sum term exceeds its declared exponential envelope."""

    def __init__(self, k: int, l: int, value: float, envelope: float):
        super().__init__(f"term at (k, l)=({k}, {l}) has modulus {value:.6g} above envelope {envelope:.6g}")
        self.k, self.l = k, l


@dataclass
class QuadratureResult:
    value: complex | np.ndarray
    error_estimate: float
    cells_used: int
    certified: bool = True

    def __iter__(self):
        # allows ``value, err = integrate_rect(...)[:2]``-style unpacking in scripts
        return iter((self.value, self.error_estimate))


@dataclass
class TailedSum:
    value: complex
    tail_bound: float
    terms_used: int
    radius: float = 0.0


@dataclass
class _Cells:
    x0: np.ndarray
    x1: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    val: np.ndarray = field(default=None)
    err: np.ndarray = field(default=None)


def _tensor_rule(x0, x1, y0, y1):
    """Nodes (ncell, 225) and the two weight sets for a batch of cells."""
    hx = 0.5 * (x1 - x0)
    hy = 0.5 * (y1 - y0)
    cx = 0.5 * (x1 + x0)
    cy = 0.5 * (y1 + y0)
    X = cx[:, None, None] + hx[:, None, None] * NODES[None, :, None]
    Y = cy[:, None, None] + hy[:, None, None] * NODES[None, None, :]
    X, Y = np.broadcast_arrays(X, Y)
    area = (hx * hy)[:, None]
    wk = (KRONROD_WEIGHTS[:, None] * KRONROD_WEIGHTS[None, :]).ravel()
    wg = (GAUSS_WEIGHTS[:, None] * GAUSS_WEIGHTS[None, :]).ravel()
    return X.reshape(len(x0), -1), Y.reshape(len(x0), -1), area * wk, area * wg


def _evaluate_cells(g, cells: _Cells, ncomp_hint=None):
    X, Y, wk, wg = _tensor_rule(cells.x0, cells.x1, cells.y0, cells.y1)
    vals = np.asarray(g(X.ravel(), Y.ravel()))
    vals = vals.reshape(X.shape[0], X.shape[1], -1)
    kron = np.einsum("cn,cnm->cm", wk, vals)
    gauss = np.einsum("cn,cnm->cm", wg, vals)
    cells.val = kron
    cells.err = np.max(np.abs(kron - gauss), axis=1)
    return cells


def _split(cells: _Cells, idx: np.ndarray) -> _Cells:
    x0, x1, y0, y1 = cells.x0[idx], cells.x1[idx], cells.y0[idx], cells.y1[idx]
    xm = 0.5 * (x0 + x1)
    ym = 0.5 * (y0 + y1)
    return _Cells(
        np.concatenate([x0, xm, x0, xm]),
        np.concatenate([xm, x1, xm, x1]),
        np.concatenate([y0, y0, ym, ym]),
        np.concatenate([ym, ym, y1, y1]),
    )


def adaptive_2d(g, x0, x1, y0, y1, tol=1e-8, rtol=1e-8, max_cells=DEFAULT_MAX_CELLS,
                initial=(1, 1), return_cells=False):
    """Integrate g(x, y) over [x0, x1] x [y0, y1] by global adaptive GK cells.

    Terminates when the summed error estimate is at most
    ``max(tol, rtol * |value|)`` or when ``max_cells`` cells have been
    evaluated; in the latter case the result is flagged non-certified.
    """
    nx, ny = initial
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    gx0, gy0 = np.meshgrid(xs[:-1], ys[:-1], indexing="ij")
    gx1, gy1 = np.meshgrid(xs[1:], ys[1:], indexing="ij")
    cells = _evaluate_cells(g, _Cells(gx0.ravel(), gx1.ravel(), gy0.ravel(), gy1.ravel()))
    used = len(cells.x0)
    certified = True
    while True:
        total = cells.val.sum(axis=0)
        err = float(cells.err.sum())
        scale = float(np.max(np.abs(total))) if total.size else 0.0
        target = max(tol, rtol * scale)
        if err <= target:
            break
        if used >= max_cells:
            certified = False
            log.warning("cell budget %d exhausted with error %.3g > %.3g", max_cells, err, target)
            break
        order = np.argsort(cells.err)[::-1]
        cum = np.cumsum(cells.err[order])
        nsplit = int(np.searchsorted(cum, 0.5 * err)) + 1
        nsplit = max(1, min(nsplit, (max_cells - used) // 4 or 1, 4096))
        pick = order[:nsplit]
        keep = np.ones(len(cells.x0), bool)
        keep[pick] = False
        children = _evaluate_cells(g, _split(cells, pick))
        used += len(children.x0)
        cells = _Cells(
            np.concatenate([cells.x0[keep], children.x0]),
            np.concatenate([cells.x1[keep], children.x1]),
            np.concatenate([cells.y0[keep], children.y0]),
            np.concatenate([cells.y1[keep], children.y1]),
            np.concatenate([cells.val[keep], children.val]),
            np.concatenate([cells.err[keep], children.err]),
        )
    total = cells.val.sum(axis=0)
    value = total[0] if total.shape == (1,) else total
    res = QuadratureResult(value, float(cells.err.sum()), used, certified)
    if return_cells:
        return res, cells
    return res


def integrate_rect(f, rect, tol=1e-8, rtol=1e-8, max_cells=DEFAULT_MAX_CELLS):
    """Integrate f(z) over the rectangle ``rect = (x0, x1, y0, y1)`` of the plane."""
    x0, x1, y0, y1 = rect
    return adaptive_2d(lambda x, y: f(x + 1j * y), x0, x1, y0, y1, tol, rtol, max_cells)


def integrate_polar(f, center, r0, r1, t0=0.0, t1=2 * np.pi, tol=1e-8, rtol=1e-8,
                    max_cells=DEFAULT_MAX_CELLS, initial=(1, 4)):
    """Integrate f(z) over the annular sector r0 <= |z - center| <= r1, t0 <= arg <= t1."""
    def g(r, t):
        vals = np.asarray(f(center + r * np.exp(1j * t)))
        return vals * (r if vals.ndim == 1 else r[:, None])
    return adaptive_2d(g, r0, r1, t0, t1, tol, rtol, max_cells, initial=initial)


def integrate_disk(f, center, radius, tol=1e-8, rtol=1e-8, max_cells=DEFAULT_MAX_CELLS):
    return integrate_polar(f, center, 0.0, radius, tol=tol, rtol=rtol, max_cells=max_cells)


def _ring_sup(f, center, r, n=64):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    vals = np.abs(np.asarray(f(center + r * np.exp(1j * t))))
    return float(np.max(vals.reshape(n, -1))) * r


def integrate_pole(f, center, R, pole_order_hint=1, tol=1e-8, rtol=1e-8, r_min=1e-6,
                   max_cells=DEFAULT_MAX_CELLS):
    """Integrate f over the disk |z - center| <= R when f has at most a simple pole there.

    The core |z - center| < r_min is omitted and its mass, bounded by
    sup(|f| r) * 2 pi * r_min, is added to the error estimate. Growth faster
    than first order is detected on small circles and rejected.
    """
    if pole_order_hint != 1:
        raise ValueError("only first-order poles are supported")
    m1 = _ring_sup(f, center, r_min)
    m2 = _ring_sup(f, center, 10 * r_min)
    m3 = _ring_sup(f, center, 100 * r_min)
    # |f| r must stay bounded as r -> 0; a faster pole makes it grow geometrically.
    if m1 > 4.0 * m2 and m2 > 4.0 * m3:
        raise NonIntegrableError(f"integrand grows faster than a first-order pole at {center}")
    # geometric radial panels resolve the 1/r scale near the core
    edges = np.geomspace(r_min, R, max(2, int(np.ceil(np.log10(R / r_min))) + 1))
    value = 0.0
    err = 0.0
    used = 0
    certified = True
    for a, b in zip(edges[:-1], edges[1:]):
        res = integrate_polar(f, center, a, b, tol=tol / len(edges), rtol=rtol,
                              max_cells=max_cells, initial=(1, 4))
        value = value + res.value
        err += res.error_estimate
        used += res.cells_used
        certified &= res.certified
    core = 2 * np.pi * r_min * max(m1, m2)
    return QuadratureResult(value, err + core, used, certified)


def adaptive_1d(g, a, b, tol=1e-10, rtol=1e-10, max_panels=10**5, initial=1):
    """Global adaptive GK15 on [a, b] for vectorised g (returns (n,) or (n, m))."""
    edges = np.linspace(a, b, initial + 1)
    lo, hi = edges[:-1], edges[1:]

    def evaluate(lo, hi):
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        x = c[:, None] + h[:, None] * NODES[None, :]
        v = np.asarray(g(x.ravel())).reshape(len(lo), 15, -1)
        kron = np.einsum("pn,pnm->pm", h[:, None] * KRONROD_WEIGHTS, v)
        gauss = np.einsum("pn,pnm->pm", h[:, None] * GAUSS_WEIGHTS, v)
        return kron, np.max(np.abs(kron - gauss), axis=1)

    val, err = evaluate(lo, hi)
    used = len(lo)
    certified = True
    while True:
        total = val.sum(axis=0)
        e = float(err.sum())
        if e <= max(tol, rtol * float(np.max(np.abs(total)))):
            break
        if used >= max_panels:
            certified = False
            break
        order = np.argsort(err)[::-1]
        nsplit = int(np.searchsorted(np.cumsum(err[order]), 0.5 * e)) + 1
        pick = order[:nsplit]
        keep = np.ones(len(lo), bool)
        keep[pick] = False
        mid = 0.5 * (lo[pick] + hi[pick])
        nlo = np.concatenate([lo[pick], mid])
        nhi = np.concatenate([mid, hi[pick]])
        nval, nerr = evaluate(nlo, nhi)
        used += len(nlo)
        lo = np.concatenate([lo[keep], nlo])
        hi = np.concatenate([hi[keep], nhi])
        val = np.concatenate([val[keep], nval])
        err = np.concatenate([err[keep], nerr])
    total = val.sum(axis=0)
    value = total[0] if total.shape == (1,) else total
    return QuadratureResult(value, float(err.sum()), used, certified)


def envelope_tail(envelope_c: float, radius: float) -> float:
    """Majorant of sum_{|z_kl - center| > radius} c exp(-|z_kl - center| / c).

    Each lattice point owns its unit cell, whose points are within sqrt(2)/2
    of it, so the sum is dominated by an integral over |x| > radius - sqrt(2)/2.
    """
    c = envelope_c
    rho = max(0.0, radius - np.sqrt(0.5))
    return float(c * np.exp(np.sqrt(0.5) / c) * 2 * np.pi * c * (rho + c) * np.exp(-rho / c))


def lattice_points_within(center: complex, radius: float):
    """Integer pairs (k, l) with |k + l i - center| <= radius, in (k, l) order."""
    k = np.arange(int(np.floor(center.real - radius)), int(np.ceil(center.real + radius)) + 1)
    l = np.arange(int(np.floor(center.imag - radius)), int(np.ceil(center.imag + radius)) + 1)
    K, L = np.meshgrid(k, l, indexing="ij")
    mask = np.abs(K + 1j * L - center) <= radius
    return K[mask], L[mask]


def lattice_sum(term, envelope_c: float, center: complex = 0j, tol: float = 1e-12,
                max_radius: float = 1e4) -> TailedSum:
    """Sum term(k, l) over Z^2 under the envelope c exp(-|z_kl - center| / c).

    ``term`` is called with integer arrays. The summation radius is the
    smallest integer radius whose analytic envelope tail is at most tol.
    """
    center = complex(center)
    radius = 1.0
    while envelope_tail(envelope_c, radius) > tol:
        radius += 1.0
        if radius > max_radius:
            raise ValueError("envelope tail does not fall below tol within max_radius")
    K, L = lattice_points_within(center, radius)
    vals = np.asarray(term(K, L), dtype=complex) * np.ones(len(K))
    env = envelope_c * np.exp(-np.abs(K + 1j * L - center) / envelope_c)
    bad = np.nonzero(np.abs(vals) > env * (1 + 1e-12) + 1e-300)[0]
    if len(bad):
        i = bad[0]
        raise EnvelopeViolation(int(K[i]), int(L[i]), float(abs(vals[i])), float(env[i]))
    value = complex(np.sum(vals))
    return TailedSum(value, envelope_tail(envelope_c, radius), len(K), radius)


def adaptive_rule(g, x0, x1, y0, y1, tol=1e-8, rtol=0.0, max_cells=DEFAULT_MAX_CELLS, initial=(1, 1)):
    """Adaptively refine a cell partition for a vector-valued g and freeze it.

    Returns (nodes, weights, result): complex nodes x + iy and Kronrod tensor
    weights of the final cells, so that sum(weights * h(nodes)) integrates any
    h resolved by the same partition.
    """
    res, cells = adaptive_2d(g, x0, x1, y0, y1, tol, rtol, max_cells, initial=initial, return_cells=True)
    X, Y, wk, _ = _tensor_rule(cells.x0, cells.x1, cells.y0, cells.y1)
    return (X + 1j * Y).ravel(), wk.ravel(), res


def polar_rule(center, radius, n_r=8, n_t=16):
    """Gauss-Legendre in radius times trapezoid in angle on a disk (nodes, weights)."""
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * radius * (x + 1.0)
    wr = 0.5 * radius * w * r
    t = 2 * np.pi * np.arange(n_t) / n_t
    nodes = center + (r[:, None] * np.exp(1j * t)[None, :])
    weights = (wr[:, None] * np.full(n_t, 2 * np.pi / n_t)[None, :])
    return nodes.ravel(), weights.ravel()
