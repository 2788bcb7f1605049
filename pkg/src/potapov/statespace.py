"""Passive state-space realizations of Potapov products, and time simulation.

Every model here carries the passive structure D unitary, A + A* + C*C = 0,
B = -C* D, which makes it directly interpretable as a physical scattering
component (D the static scattering, C a coupling vector per mode, and the
Hermitian detuning Omega recoverable from A).  A single factor realizes with
one mode; products realize as sequential cascades.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    AtPole,
    DegeneratePole,
    MalformedInput,
    NonuniformGrid,
    NotRealizable,
    PortMismatch,
)
from .blaschke import BlaschkeFactor, PotapovProduct
from .netlist import COND_MAX

REALIZABILITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Complex (A, B, C, D) model: da = A a dt + B u dt, y = C a + D u."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        for name, arr in (("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)):
            arr = np.asarray(arr, dtype=complex)
            if arr.ndim != 2:
                arr = np.atleast_2d(arr)
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        m = self.a.shape[0]
        n = self.d.shape[0]
        if self.a.shape != (m, m) or self.d.shape != (n, n):
            raise MalformedInput("a and d must be square")
        if self.b.shape != (m, n) or self.c.shape != (n, m):
            raise MalformedInput(
                f"inconsistent shapes: a {self.a.shape}, b {self.b.shape}, "
                f"c {self.c.shape}, d {self.d.shape}"
            )

    @property
    def modes(self) -> int:
        return self.a.shape[0]

    @property
    def ports(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True, eq=False)
class Signal:
    """Complex port amplitudes sampled on a strictly increasing time grid."""

    t_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.t_grid, dtype=float)).copy()
        v = np.atleast_2d(np.asarray(self.values, dtype=complex)).copy()
        if v.shape[0] != t.size:
            raise MalformedInput(
                f"{t.size} time samples but {v.shape[0]} value rows"
            )
        if t.size > 1 and np.any(np.diff(t) <= 0.0):
            raise MalformedInput("time grid must be strictly increasing")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "values", v)

    @property
    def ports(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class RealizabilityReport:
    """Per-condition residuals for the passive-structure invariants."""

    d_unitary: float
    passivity: float
    coupling: float
    max_re_eig: float
    tol: float

    @property
    def stable(self) -> bool:
        return self.max_re_eig < 0.0

    @property
    def passed(self) -> bool:
        return (
            self.d_unitary < self.tol
            and self.passivity < self.tol
            and self.coupling < self.tol
            and self.stable
        )


def realizability_check(ss: StateSpace, tol: float = REALIZABILITY_TOL) -> RealizabilityReport:
    """Residuals of D unitary, A + A* + C*C = 0, B + C*D = 0, Re eig(A) < 0."""
    eye = np.eye(ss.ports)
    d_unitary = float(np.linalg.norm(ss.d.conj().T @ ss.d - eye))
    passivity = float(np.linalg.norm(ss.a + ss.a.conj().T + ss.c.conj().T @ ss.c))
    coupling = float(np.linalg.norm(ss.b + ss.c.conj().T @ ss.d))
    if ss.modes:
        max_re = float(np.max(np.linalg.eigvals(ss.a).real))
    else:
        max_re = -math.inf
    return RealizabilityReport(
        d_unitary=d_unitary,
        passivity=passivity,
        coupling=coupling,
        max_re_eig=max_re,
        tol=tol,
    )


def factor_to_statespace(factor: BlaschkeFactor) -> StateSpace:
    """One-mode realization of a Blaschke factor.

    With g = sqrt(-2 Re p) the model A = [p], B = -g v*, C = g v, D = I has
    transfer function I + v v* (p + conj(p)) / (z - p), i.e. the factor.
    """
    p = factor.pole
    if p.real >= 0.0:
        raise DegeneratePole(f"pole must lie in the open left half-plane, got {p}")
    g = math.sqrt(-2.0 * p.real)
    v = factor.v
    return StateSpace(
        a=np.array([[p]]),
        b=-g * v.conj()[np.newaxis, :],
        c=g * v[:, np.newaxis],
        d=np.eye(factor.ports, dtype=complex),
    )


def static_gain(u: np.ndarray) -> StateSpace:
    """Zero-mode system with constant scattering u."""
    u = np.atleast_2d(np.asarray(u, dtype=complex))
    n = u.shape[0]
    return StateSpace(
        a=np.zeros((0, 0)), b=np.zeros((0, n)), c=np.zeros((n, 0)), d=u
    )


def omega_of(ss: StateSpace) -> np.ndarray:
    """Hermitian detuning Omega with A = -C*C/2 - i Omega."""
    report = realizability_check(ss, tol=1e-8)
    if not report.passed:
        raise NotRealizable(f"model fails the passivity structure: {report}")
    omega = 0.5j * (ss.a - ss.a.conj().T)
    residual = np.linalg.norm(ss.a + 0.5 * ss.c.conj().T @ ss.c + 1j * omega)
    if residual > 1e-8 * max(1.0, float(np.linalg.norm(ss.a))):
        raise NotRealizable(f"could not reconstruct A from Omega (residual {residual:.3e})")
    return omega


def cascade(first: StateSpace, second: StateSpace) -> StateSpace:
    """Feed the outputs of `first` into `second`; tf = tf_second @ tf_first."""
    if first.ports != second.ports:
        raise PortMismatch(f"port counts differ: {first.ports} vs {second.ports}")
    m1, m2, n = first.modes, second.modes, first.ports
    a = np.zeros((m1 + m2, m1 + m2), dtype=complex)
    a[:m1, :m1] = first.a
    a[m1:, m1:] = second.a
    a[m1:, :m1] = second.b @ first.c
    b = np.vstack([first.b, second.b @ first.d])
    c = np.hstack([second.d @ first.c, second.c])
    d = second.d @ first.d
    return StateSpace(a=a, b=b, c=c, d=d)


def product_to_statespace(prod: PotapovProduct) -> StateSpace:
    """Cascade realization whose transfer function equals the product.

    The rightmost factor acts on the inputs first, so the cascade runs from
    B_M back to B_1 and ends with the static unitary U.
    """
    acc = None
    for factor in reversed(prod.factors):
        stage = factor_to_statespace(factor)
        acc = stage if acc is None else cascade(acc, stage)
    final = static_gain(prod.u)
    return final if acc is None else cascade(acc, final)


def tf_of_statespace(ss: StateSpace, z: complex) -> np.ndarray:
    """C (zI - A)^{-1} B + D."""
    z = complex(z)
    if ss.modes == 0:
        return ss.d.copy()
    k = z * np.eye(ss.modes, dtype=complex) - ss.a
    cond = np.linalg.cond(k)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise AtPole(f"z = {z} is an eigenvalue of A")
    return ss.c @ np.linalg.solve(k, ss.b) + ss.d


class StateSpaceTF:
    """Evaluable transfer function of a state-space model with a batch path."""

    def __init__(self, ss: StateSpace):
        self.ss = ss
        self.ports = ss.ports

    def __call__(self, z: complex) -> np.ndarray:
        return tf_of_statespace(self.ss, z)

    def eval_many(self, zs) -> np.ndarray:
        zs = np.asarray(zs, dtype=complex).ravel()
        ss = self.ss
        if ss.modes == 0:
            return np.broadcast_to(ss.d, (zs.size, ss.ports, ss.ports)).copy()
        eye = np.eye(ss.modes, dtype=complex)
        k = zs[:, np.newaxis, np.newaxis] * eye[np.newaxis] - ss.a[np.newaxis]
        rhs = np.broadcast_to(ss.b, (zs.size,) + ss.b.shape)
        x = np.linalg.solve(k, rhs)
        out = ss.c[np.newaxis] @ x + ss.d[np.newaxis]
        if not np.all(np.isfinite(out)):
            raise AtPole("batch evaluation hit an eigenvalue of A")
        return out


def statespace_tf(ss: StateSpace) -> StateSpaceTF:
    return StateSpaceTF(ss)


def simulate(ss: StateSpace, drive: Signal, a0=None) -> Signal:
    """Exact exponential stepping of the model under piecewise-constant input.

    The input is held constant on each interval [t_k, t_{k+1}); both the state
    propagator exp(A dt) and the input convolution are read off a single
    matrix exponential of the augmented block [[A, B], [0, 0]], so there is no
    integrator error beyond roundoff.  Output samples are y_k = C a_k + D u_k.
    """
    if drive.ports != ss.ports:
        raise PortMismatch(
            f"drive has {drive.ports} ports but the model has {ss.ports}"
        )
    t = drive.t_grid
    u = drive.values
    steps = np.diff(t)
    if steps.size:
        dt = float(steps[0])
        if np.any(np.abs(steps - dt) > 1e-9 * dt):
            raise NonuniformGrid("simulation requires a uniform time grid")
    if ss.modes == 0:
        y = u @ ss.d.T
        return Signal(t_grid=t.copy(), values=y)
    if a0 is None:
        a0 = np.zeros(ss.modes, dtype=complex)
    a = np.asarray(a0, dtype=complex).ravel()
    if a.size != ss.modes:
        raise MalformedInput(f"a0 must have {ss.modes} entries, got {a.size}")
    y = np.empty((t.size, ss.ports), dtype=complex)
    if steps.size:
        m, n = ss.modes, ss.ports
        aug = np.zeros((m + n, m + n), dtype=complex)
        aug[:m, :m] = ss.a
        aug[:m, m:] = ss.b
        prop = scipy.linalg.expm(aug * dt)
        f_step, g_step = prop[:m, :m], prop[:m, m:]
    for k in range(t.size):
        y[k] = ss.c @ a + ss.d @ u[k]
        if k + 1 < t.size:
            a = f_step @ a + g_step @ u[k]
    return Signal(t_grid=t.copy(), values=y)
