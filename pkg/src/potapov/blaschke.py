"""Rank-one Blaschke-Potapov factors and zero-pole interpolation.

A factor with pole p (Re p < 0) and unit vector v acts as

    B(z) = I - v v* + v v* (z + conj(p)) / (z - p),

which is unitary on the imaginary axis, contractive on the right half-plane,
and carries exactly one pole/zero pair (p, -conj(p)).  A truncated product
U B_1(z) ... B_M(z) interpolates a transfer function through M of its poles;
the constant unitary U is fixed at a reference point.  The singular-term
helpers diagnose when such a product can converge to the full function.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    AtPole,
    DegeneratePole,
    DomainError,
    NotIsolated,
    PoleOfMap,
    RankTooHigh,
)
from .netlist import EPS_RANK, DelayNetwork

RANK_GAP = 1e-6
RESIDUE_TOL = 1e-10
DEFAULT_RHO = 0.1


@dataclass(frozen=True, eq=False)
class BlaschkeFactor:
    """One rank-one Potapov factor: pole location plus projector direction."""

    pole: complex
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pole", complex(self.pole))
        v = np.asarray(self.v, dtype=complex).ravel().copy()
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"projector vector must be unit norm, got {norm}")
        if self.pole.real >= 0.0:
            raise DegeneratePole(f"factor pole must satisfy Re < 0, got {self.pole}")
        v.flags.writeable = False
        object.__setattr__(self, "v", v)

    @property
    def ports(self) -> int:
        return self.v.size

    @property
    def zero(self) -> complex:
        return -self.pole.conjugate()


def factor_value(factor: BlaschkeFactor, z: complex) -> np.ndarray:
    z = complex(z)
    denom = z - factor.pole
    if denom == 0:
        raise AtPole(f"evaluation at the factor pole {factor.pole}")
    a = (z + factor.pole.conjugate()) / denom
    p = np.outer(factor.v, factor.v.conj())
    return np.eye(factor.ports, dtype=complex) + (a - 1.0) * p


def factor_inverse_value(factor: BlaschkeFactor, z: complex) -> np.ndarray:
    z = complex(z)
    denom = z + factor.pole.conjugate()
    if denom == 0:
        raise AtPole(f"evaluation at the factor zero {factor.zero}")
    a = (z - factor.pole) / denom
    p = np.outer(factor.v, factor.v.conj())
    return np.eye(factor.ports, dtype=complex) + (a - 1.0) * p


def _factor_values_many(factor: BlaschkeFactor, zs: np.ndarray, inverse: bool) -> np.ndarray:
    zs = np.asarray(zs, dtype=complex).ravel()
    if inverse:
        a = (zs - factor.pole) / (zs + factor.pole.conjugate())
    else:
        a = (zs + factor.pole.conjugate()) / (zs - factor.pole)
    if not np.all(np.isfinite(a)):
        raise AtPole("batch evaluation hit a factor pole")
    p = np.outer(factor.v, factor.v.conj())
    eye = np.eye(factor.ports, dtype=complex)
    return eye[np.newaxis] + (a - 1.0)[:, np.newaxis, np.newaxis] * p[np.newaxis]


@dataclass(frozen=True, eq=False)
class PotapovProduct:
    """Constant unitary times an ordered product of Blaschke factors."""

    u: np.ndarray
    factors: tuple

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.u, dtype=complex)).copy()
        defect = np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))
        if u.shape[0] != u.shape[1] or defect > 1e-10:
            raise DomainError(f"u must be unitary (defect {defect:.3e})")
        u.flags.writeable = False
        object.__setattr__(self, "u", u)
        factors = tuple(self.factors)
        for f in factors:
            if f.ports != u.shape[0]:
                raise DomainError("factor dimension does not match u")
        object.__setattr__(self, "factors", factors)

    @property
    def ports(self) -> int:
        return self.u.shape[0]

    def poles(self) -> np.ndarray:
        return np.array([f.pole for f in self.factors], dtype=complex)


def eval_product(prod: PotapovProduct, z: complex) -> np.ndarray:
    """U B_1(z) B_2(z) ... B_M(z) in stored order."""
    out = prod.u.copy()
    for f in prod.factors:
        out = out @ factor_value(f, z)
    return out


class ProductTF:
    """Evaluable wrapper around a PotapovProduct with a batch path."""

    def __init__(self, prod: PotapovProduct):
        self.prod = prod
        self.ports = prod.ports

    def __call__(self, z: complex) -> np.ndarray:
        return eval_product(self.prod, z)

    def eval_many(self, zs) -> np.ndarray:
        zs = np.asarray(zs, dtype=complex).ravel()
        out = np.broadcast_to(self.prod.u, (zs.size,) + self.prod.u.shape).copy()
        for f in self.prod.factors:
            out = out @ _factor_values_many(f, zs, inverse=False)
        return out


def product_tf(prod: PotapovProduct) -> ProductTF:
    return ProductTF(prod)


class DeflatedTF:
    """T(z) with one Blaschke factor divided out on the right."""

    def __init__(self, base, factor: BlaschkeFactor):
        self.base = base
        self.factor = factor
        self.ports = getattr(base, "ports", factor.ports)

    def __call__(self, z: complex) -> np.ndarray:
        return self.base(z) @ factor_inverse_value(self.factor, z)

    def eval_many(self, zs) -> np.ndarray:
        zs = np.asarray(zs, dtype=complex).ravel()
        if hasattr(self.base, "eval_many"):
            vals = self.base.eval_many(zs)
        else:
            vals = np.stack([self.base(complex(z)) for z in zs])
        return vals @ _factor_values_many(self.factor, zs, inverse=True)


def _eval_on_circle(T, center: complex, rho: float, points: int) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(points) / points
    ring = np.exp(1j * theta)
    zs = center + rho * ring
    if hasattr(T, "eval_many"):
        vals = T.eval_many(zs)
    else:
        vals = np.stack([np.atleast_2d(np.asarray(T(complex(z)), dtype=complex)) for z in zs])
    # (1/2*pi*i) \oint T dz with z = c + rho e^{i theta}
    return (vals * ring[:, np.newaxis, np.newaxis]).mean(axis=0) * rho


def residue_at(T, p: complex, rho: float = DEFAULT_RHO) -> np.ndarray:
    """Residue matrix L = lim_{z->p} T(z)(z - p) by circle quadrature.

    The trapezoid rule is spectrally accurate for the analytic integrand; the
    point count is doubled until stable, then the radius is halved until two
    successive estimates agree, which guards against other poles inside the
    circle.
    """
    p = complex(p)
    if not rho > 0.0:
        raise DomainError(f"radius must be positive, got {rho}")

    def stable_estimate(radius):
        points = 32
        est = _eval_on_circle(T, p, radius, points)
        while points < 2048:
            points *= 2
            nxt = _eval_on_circle(T, p, radius, points)
            if np.linalg.norm(nxt - est) <= 1e-12 * max(1.0, np.linalg.norm(nxt)):
                return nxt
            est = nxt
        return est

    est = stable_estimate(rho)
    for _ in range(8):
        rho *= 0.5
        nxt = stable_estimate(rho)
        if np.linalg.norm(nxt - est) <= RESIDUE_TOL * max(1.0, np.linalg.norm(nxt)):
            return nxt
        est = nxt
    raise NotIsolated(f"residue estimates at {p} failed to stabilize")


def extract_factor(T, p: complex, rho: float = DEFAULT_RHO, rank_gap: float = RANK_GAP):
    """Pull one Blaschke factor out of T at the simple pole p.

    Returns (factor, T_next) where T_next = T * B^{-1} has vanishing residue
    at p.  The projector direction is the dominant right singular vector of
    the residue: for a rank-one residue L = c u v* the row space is what the
    factor must annihilate, and the deflation-residue test in the suite
    validates the choice.  The phase is fixed by making the largest entry of
    v real and positive.
    """
    p = complex(p)
    if p.real >= 0.0:
        raise DegeneratePole(f"pole must lie in the open left half-plane, got {p}")
    L = residue_at(T, p, rho)
    svals = np.linalg.svd(L, compute_uv=False)
    if svals[0] == 0.0:
        raise NotIsolated(f"residue at {p} vanishes; not a pole of T")
    if L.shape[0] > 1 and svals[1] >= rank_gap * svals[0]:
        raise RankTooHigh(
            f"residue at {p} has singular values {svals[:2]}; "
            "only rank-one projectors are supported"
        )
    _, _, vh = np.linalg.svd(L)
    v = vh[0].conj()
    j = int(np.argmax(np.abs(v)))
    v = v * (v[j].conjugate() / abs(v[j]))
    factor = BlaschkeFactor(pole=p, v=v)
    return factor, DeflatedTF(T, factor)


def interpolate(T, poles, z0: complex = 0.0) -> PotapovProduct:
    """Truncated Potapov product of T through the given poles.

    Factors are extracted innermost frequency first (|Im p| ascending).  Each
    extraction peels a factor off the right, T = T_next * B, so the stored
    product holds them in reverse extraction order.  The constant unitary is
    the polar factor of T(z0) B(z0)^{-1}.
    """
    locs = _pole_locations(poles)
    order = sorted(locs, key=lambda p: (abs(p.imag), p.imag, p.real))
    z0 = complex(z0)
    extracted = []
    current = T
    for p in order:
        others = [q for q in order if q != p]
        if others:
            spacing = min(abs(p - q) for q in others)
            rho = min(0.25 * spacing, DEFAULT_RHO)
        else:
            rho = DEFAULT_RHO
        factor, current = extract_factor(current, p, rho)
        extracted.append(factor)
    base = np.atleast_2d(np.asarray(T(z0), dtype=complex))
    for f in extracted:
        base = base @ factor_inverse_value(f, z0)
    u, _ = scipy.linalg.polar(base)
    return PotapovProduct(u=u, factors=tuple(reversed(extracted)))


def _pole_locations(poles):
    if hasattr(poles, "locations"):
        return [complex(z) for z in poles.locations()]
    return [complex(getattr(p, "z", p)) for p in poles]


def approximation_error(T, prod: PotapovProduct, omega_max: float, grid_points: int) -> float:
    """Max spectral-norm deviation ||T(i w) - product(i w)|| on a uniform grid."""
    omega = np.linspace(-omega_max, omega_max, grid_points)
    zs = 1j * omega
    if hasattr(T, "eval_many"):
        exact = T.eval_many(zs)
    else:
        exact = np.stack([np.atleast_2d(np.asarray(T(complex(z)), dtype=complex)) for z in zs])
    approx = ProductTF(prod).eval_many(zs)
    svals = np.linalg.svd(exact - approx, compute_uv=False)
    return float(np.max(svals[:, 0]))


def singular_is_trivial(net: DelayNetwork) -> bool:
    """True when the feedforward-only (singular) term must be constant, which
    holds exactly when m1 is full rank."""
    if net.n == 0:
        return True
    s = np.linalg.svd(net.m1, compute_uv=False)
    return bool(s[0] > 0.0 and s[-1] > EPS_RANK * s[0])


def singular_bound(net: DelayNetwork):
    """(ell, 1/ell): total delay bounds the singular term's extent; the term
    is negligible for |z| well below 1/ell."""
    ell = float(np.sum(net.delays))
    radius = math.inf if ell == 0.0 else 1.0 / ell
    return ell, radius


def cayley_to_disc(z: complex) -> complex:
    """(z - 1) / (z + 1): right half-plane onto the unit disc."""
    z = complex(z)
    if z == -1:
        raise PoleOfMap("z = -1 is the pole of the Cayley map")
    return (z - 1.0) / (z + 1.0)


def cayley_from_disc(w: complex) -> complex:
    """(1 + w) / (1 - w): unit disc onto the right half-plane."""
    w = complex(w)
    if w == 1:
        raise PoleOfMap("w = 1 is the pole of the inverse Cayley map")
    return (1.0 + w) / (1.0 - w)
