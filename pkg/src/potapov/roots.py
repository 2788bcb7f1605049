"""Locate all zeros of an analytic function inside a rectangle.

The workhorse is the classic argument-principle scheme: contour moments
s_p = (1/2*pi*i) \\oint z^p f'(z)/f(z) dz recover the power sums of the
enclosed roots, Newton's identities turn them into a monic polynomial, and a
companion-matrix solve plus Newton polishing yields the roots themselves.
Rectangles holding too many roots are bisected recursively, so the count can
essentially be guaranteed.

Functions are passed as callables ``z -> (f(z), f'(z)/f(z))``; an optional
``eval_many(zs) -> (f_array, logderiv_array)`` attribute enables vectorized
quadrature.
"""

from __future__ import annotations

import cmath
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    AtRoot,
    ContourThroughZero,
    CountMismatch,
    DegenerateLeadingCoefficient,
    DomainError,
    MultiplicityWarning,
    NoConvergence,
    NotCommensurate,
    UnstablePoleFound,
)
from .netlist import DelayNetwork, pole_closure, pole_function, transfer_function

QUAD_POINTS = 64
QUAD_MAX = 4096
QUAD_TOL = 1e-10
MAX_PER_CELL = 5
EPS_RESIDUAL = 1e-10
MERGE_TOL = 1e-7
COUNT_INT_TOL = 0.01
NEWTON_MAX_ITER = 100
# Deterministic alternatives for internal bisection cuts that happen to pass
# through a root.  Never applied to the caller's outer region.
CUT_FRACTIONS = (0.5, 0.53, 0.47, 0.59, 0.41)


@dataclass(frozen=True)
class ContourRegion:
    """Axis-aligned rectangle in the s-plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise DomainError(
                f"degenerate region [{self.re_min}, {self.re_max}] x "
                f"[{self.im_min}, {self.im_max}]"
            )

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return (
            self.re_min - slack <= z.real <= self.re_max + slack
            and self.im_min - slack <= z.imag <= self.im_max + slack
        )

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))


@dataclass(frozen=True)
class Root:
    z: complex
    residual: float


@dataclass(frozen=True, eq=False)
class RootSet:
    """Roots found inside a region, sorted by (Im, Re) ascending."""

    roots: tuple
    region: ContourRegion

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)

    def locations(self) -> np.ndarray:
        return np.array([r.z for r in self.roots], dtype=complex)


def _sorted_roots(roots) -> tuple:
    return tuple(sorted(roots, key=lambda r: (r.z.imag, r.z.real)))


def _edge_nodes(region: ContourRegion, quad_points: int):
    """Gauss-Legendre nodes along the counterclockwise boundary, with the
    complex dz factors folded into the weights."""
    x, w = np.polynomial.legendre.leggauss(quad_points)
    corners = [
        complex(region.re_min, region.im_min),
        complex(region.re_max, region.im_min),
        complex(region.re_max, region.im_max),
        complex(region.re_min, region.im_max),
    ]
    zs, ws = [], []
    for k in range(4):
        a, b = corners[k], corners[(k + 1) % 4]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        zs.append(mid + half * x)
        ws.append(np.full(quad_points, half) * w)
    return np.concatenate(zs), np.concatenate(ws)


def _logderiv_on(f, zs: np.ndarray) -> np.ndarray:
    if hasattr(f, "eval_many"):
        _, ld = f.eval_many(zs)
        return np.asarray(ld, dtype=complex)
    out = np.empty(zs.size, dtype=complex)
    for i, z in enumerate(zs):
        out[i] = f(complex(z))[1]
    return out


def _contour_moments(f, region: ContourRegion, p_max: int, quad_points: int) -> np.ndarray:
    """Adaptive moments s_p, p = 0..p_max, centered on the region midpoint."""
    center = region.center
    q = quad_points
    prev = None
    while q <= QUAD_MAX:
        zs, ws = _edge_nodes(region, q)
        try:
            ld = _logderiv_on(f, zs)
        except (AtRoot, np.linalg.LinAlgError):
            raise ContourThroughZero(
                f"function has a root on or near the contour of {region}"
            ) from None
        if not np.all(np.isfinite(ld)):
            raise ContourThroughZero(f"log-derivative not finite on the contour of {region}")
        shifted = zs - center
        powers = shifted[np.newaxis, :] ** np.arange(p_max + 1)[:, np.newaxis]
        s = (powers * (ld * ws)[np.newaxis, :]).sum(axis=1) / (2j * np.pi)
        if prev is not None:
            scale = np.maximum(1.0, np.abs(s))
            if np.max(np.abs(s - prev) / scale) < QUAD_TOL:
                return s
        prev = s
        q *= 2
    raise ContourThroughZero(
        f"contour quadrature did not converge on {region}; perturb the region"
    )


def count_zeros(f, region: ContourRegion, quad_points: int = QUAD_POINTS) -> int:
    """Number of zeros of f strictly inside the region (argument principle)."""
    s0 = _contour_moments(f, region, 0, quad_points)[0]
    k = int(round(s0.real))
    if abs(s0 - k) > COUNT_INT_TOL or k < 0:
        raise ContourThroughZero(
            f"winding number {s0:.6f} is not an integer; a root sits near the contour"
        )
    return k


def _newton_polish(f, z0: complex, eps_residual: float):
    z = complex(z0)
    for _ in range(NEWTON_MAX_ITER):
        try:
            fv, ld = f(z)
        except AtRoot:
            return z, 0.0
        if abs(fv) < eps_residual:
            return z, abs(fv)
        if ld == 0 or not cmath.isfinite(ld):
            break
        z = z - 1.0 / ld
        if not cmath.isfinite(z):
            break
    raise NoConvergence(f"Newton polish failed to converge from seed {z0}")


def _newton_polish_scale_free(f, z0: complex):
    """Polish on the Newton step size alone; usable when |f| has no
    meaningful absolute scale (large determinants)."""
    z = complex(z0)
    residual = np.inf
    for _ in range(NEWTON_MAX_ITER):
        try:
            fv, ld = f(z)
        except AtRoot:
            return z, 0.0
        residual = abs(fv)
        if ld == 0 or not cmath.isfinite(ld):
            break
        step = 1.0 / ld
        if abs(step) < 1e-13 * (1.0 + abs(z)):
            return z - step, residual
        z = z - step
        if not cmath.isfinite(z):
            raise NoConvergence(f"Newton polish diverged from seed {z0}")
    return z, residual


def _roots_from_moments(s: np.ndarray, center: complex) -> np.ndarray:
    """Candidate roots from power sums via Newton's identities."""
    count = int(round(s[0].real))
    e = np.zeros(count + 1, dtype=complex)
    e[0] = 1.0
    for k in range(1, count + 1):
        acc = 0.0 + 0.0j
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * s[i]
        e[k] = acc / k
    coeffs = np.array([(-1) ** k * e[k] for k in range(count + 1)], dtype=complex)
    return np.roots(coeffs) + center


def _merge_roots(candidates, merge_tol: float):
    """Cluster near-coincident roots; returns (representatives, total count)."""
    reps = []
    sizes = []
    for z, res in candidates:
        for i, (zr, _) in enumerate(reps):
            if abs(z - zr) < merge_tol:
                sizes[i] += 1
                break
        else:
            reps.append((z, res))
            sizes.append(1)
    if any(size > 1 for size in sizes):
        warnings.warn(
            "roots closer than the merge tolerance were treated as a single simple root",
            MultiplicityWarning,
        )
    return reps, sum(sizes)


def _split_region(region: ContourRegion, frac: float):
    wide = (region.re_max - region.re_min) >= (region.im_max - region.im_min)
    if wide:
        cut = region.re_min + frac * (region.re_max - region.re_min)
        return (
            ContourRegion(region.re_min, cut, region.im_min, region.im_max),
            ContourRegion(cut, region.re_max, region.im_min, region.im_max),
        )
    cut = region.im_min + frac * (region.im_max - region.im_min)
    return (
        ContourRegion(region.re_min, region.re_max, region.im_min, cut),
        ContourRegion(region.re_min, region.re_max, cut, region.im_max),
    )


def _recurse_split(f, region, max_per_cell, quad_points, eps_residual, depth):
    last_error = None
    for frac in CUT_FRACTIONS:
        lo, hi = _split_region(region, frac)
        try:
            found = _find_in_cell(f, lo, max_per_cell, quad_points, eps_residual, depth + 1)
            found += _find_in_cell(f, hi, max_per_cell, quad_points, eps_residual, depth + 1)
            return found
        except ContourThroughZero as exc:
            last_error = exc
    raise last_error


def _find_in_cell(f, region, max_per_cell, quad_points, eps_residual, depth=0):
    # Extreme rectangles make the quadrature crawl; square them up before
    # spending any function evaluations on a count.
    width = region.re_max - region.re_min
    height = region.im_max - region.im_min
    if depth < 60 and max(width, height) > 4.0 * min(width, height):
        return _recurse_split(f, region, max_per_cell, quad_points, eps_residual, depth)
    count = count_zeros(f, region, quad_points)
    if count == 0:
        return []
    if count > max_per_cell and depth < 60:
        return _recurse_split(f, region, max_per_cell, quad_points, eps_residual, depth)
    s = _contour_moments(f, region, count, quad_points)
    candidates = _roots_from_moments(s, region.center)
    polished = [_newton_polish(f, z, eps_residual) for z in candidates]
    inside = [(z, res) for z, res in polished if region.contains(z, slack=1e-9)]
    reps, counted = _merge_roots(inside, MERGE_TOL)
    if counted != count:
        raise CountMismatch(
            f"argument principle promises {count} roots in {region}, polished {counted}"
        )
    return reps


def find_zeros(
    f,
    region: ContourRegion,
    max_per_cell: int = MAX_PER_CELL,
    quad_points: int = QUAD_POINTS,
    eps_residual: float = EPS_RESIDUAL,
) -> RootSet:
    """All zeros of f inside the region, polished to |f| < eps_residual.

    Every leaf cell of the recursive subdivision is verified against its own
    argument-principle count, so the returned set covers the whole region.
    Raises ContourThroughZero when a root (numerically) lies on the caller's
    contour; the caller should perturb the region rather than expect a silent
    nudge.
    """
    polished = _find_in_cell(f, region, max_per_cell, quad_points, eps_residual)
    reps, _ = _merge_roots(polished, MERGE_TOL)
    roots = _sorted_roots(Root(z=z, residual=res) for z, res in reps)
    return RootSet(roots=roots, region=region)


def find_poles(
    net: DelayNetwork,
    region: ContourRegion,
    max_per_cell: int = MAX_PER_CELL,
    quad_points: int = QUAD_POINTS,
    eps_residual: float = EPS_RESIDUAL,
) -> RootSet:
    """Poles of the network transfer function inside the region."""
    rs = find_zeros(pole_closure(net), region, max_per_cell, quad_points, eps_residual)
    bad = [r.z for r in rs if r.z.real >= 0.0]
    if bad:
        raise UnstablePoleFound(
            f"poles with nonnegative real part found: {bad}; network is not stable"
        )
    return rs


def zeros_from_poles(poles: RootSet, tf=None) -> RootSet:
    """Transfer-function zeros paired to the poles by z -> -conj(z).

    When an evaluable transfer function is supplied, residuals are recomputed
    as |det T(z)| at each zero; otherwise the pole residuals carry over.
    """
    region = ContourRegion(
        re_min=-poles.region.re_max,
        re_max=-poles.region.re_min,
        im_min=poles.region.im_min,
        im_max=poles.region.im_max,
    )
    out = []
    for r in poles:
        z = -r.z.conjugate()
        if tf is not None:
            residual = abs(complex(np.linalg.det(tf(z))))
        else:
            residual = r.residual
        out.append(Root(z=z, residual=residual))
    return RootSet(roots=_sorted_roots(out), region=region)


def _pole_poly_values(net: DelayNetwork, ks: np.ndarray, ws: np.ndarray) -> np.ndarray:
    """det(I - m1 diag(w^k)) evaluated at each w, in memory-bounded chunks."""
    n = net.n
    out = np.empty(ws.size, dtype=complex)
    chunk = max(1, int(4e6 // max(1, n * n)))
    eye = np.eye(n, dtype=complex)
    for start in range(0, ws.size, chunk):
        wchunk = ws[start : start + chunk]
        diag = wchunk[:, np.newaxis] ** ks[np.newaxis, :]
        mats = eye[np.newaxis] - net.m1[np.newaxis] * diag[:, np.newaxis, :]
        out[start : start + chunk] = np.linalg.det(mats)
    return out


def commensurate_poles(
    net: DelayNetwork,
    t0: float,
    region: ContourRegion,
    rel_tol: float = 1e-9,
) -> RootSet:
    """Poles via the polynomial in w = exp(-z t0), for commensurate delays.

    The polynomial det(I - m1 diag(w^k_i)) is interpolated from samples on the
    unit circle, its roots recovered from the companion matrix, and every root
    with |w| > 1 is mapped to the pole family z = -(Log w + 2*pi*i*m)/t0.
    Serves as an independent oracle for find_poles.
    """
    if not t0 > 0.0:
        raise DomainError(f"base delay must be positive, got {t0}")
    ks = np.rint(net.delays / t0).astype(int)
    if np.any(ks < 1) or np.any(np.abs(net.delays - ks * t0) > rel_tol * net.delays):
        raise NotCommensurate(
            f"delays {net.delays.tolist()} are not integer multiples of {t0}"
        )
    degree = int(ks.sum())
    samples = np.exp(2j * np.pi * np.arange(degree + 1) / (degree + 1))
    values = _pole_poly_values(net, ks, samples)
    coeffs = np.fft.fft(values) / (degree + 1)  # ascending in w
    tol = 1e-9 * np.max(np.abs(coeffs))
    top = degree
    while top > 0 and abs(coeffs[top]) < tol:
        top -= 1
    if top == 0:
        raise DegenerateLeadingCoefficient(
            "pole polynomial collapsed to a constant; use find_poles instead"
        )
    wroots = np.roots(coeffs[: top + 1][::-1])
    f = pole_closure(net)
    found = []
    for w in wroots:
        if abs(w) <= 1.0:
            continue
        base = -cmath.log(w) / t0
        period = 2.0 * np.pi / t0
        m_lo = int(np.floor((base.imag - region.im_max) / period))
        m_hi = int(np.ceil((base.imag - region.im_min) / period))
        for m in range(m_lo, m_hi + 1):
            z = complex(base.real, base.imag - m * period)
            if not region.contains(z):
                continue
            z, residual = _newton_polish_scale_free(f, z)
            if region.contains(z, slack=1e-9):
                found.append(Root(z=z, residual=residual))
    reps, _ = _merge_roots([(r.z, r.residual) for r in found], MERGE_TOL)
    roots = _sorted_roots(Root(z=z, residual=res) for z, res in reps)
    return RootSet(roots=roots, region=region)
