"""Diagonal Pade approximation of delays, the baseline to beat.

exp(-T z) is replaced by Q_n(zT) / Q_n(-zT), the [n, n] diagonal Pade
approximant.  Q_n has real coefficients, so the quotient has unit modulus on
the imaginary axis and substituting it for each delay preserves the unitarity
of a network transfer function, at the cost of planting zeros and poles at
locations the true function does not have.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NearPole
from .netlist import COND_MAX, DelayNetwork


def _q_coefficients(n: int) -> np.ndarray:
    """Ascending coefficients of Q_n(x) = sum_k c_k (-x)^k with
    c_k = (2n-k)! n! / ((2n)! k! (n-k)!)."""
    coeffs = np.empty(n + 1)
    for k in range(n + 1):
        c = (
            math.factorial(2 * n - k)
            * math.factorial(n)
            / (math.factorial(2 * n) * math.factorial(k) * math.factorial(n - k))
        )
        coeffs[k] = c * (-1.0) ** k
    return coeffs


@dataclass(frozen=True, eq=False)
class PadeApproximant:
    """[n, n] Pade approximant of exp(-T z), evaluable as a root product."""

    order: int
    delay: float
    q_coeffs: np.ndarray
    q_roots: np.ndarray

    def __call__(self, z):
        """Q_n(zT) / Q_n(-zT) = prod_j (zT - x_j) / (-zT - x_j) over the
        roots x_j of Q_n; leading coefficients cancel."""
        x = np.asarray(z, dtype=complex) * self.delay
        out = np.ones_like(x)
        for root in self.q_roots:
            out = out * (x - root) / (-x - root)
        return out if out.ndim else complex(out)

    def taylor(self, terms: int) -> np.ndarray:
        """Leading Taylor coefficients at z = 0 by series division."""
        num = np.zeros(terms, dtype=complex)
        den = np.zeros(terms, dtype=complex)
        scale = self.delay ** np.arange(min(terms, self.order + 1))
        num[: scale.size] = self.q_coeffs[: scale.size] * scale
        den[: scale.size] = self.q_coeffs[: scale.size] * scale * (-1.0) ** np.arange(scale.size)
        out = np.zeros(terms, dtype=complex)
        for k in range(terms):
            acc = num[k]
            for j in range(k):
                acc -= out[j] * den[k - j]
            out[k] = acc / den[0]
        return out


def pade_exp(n: int, delay: float) -> PadeApproximant:
    """Diagonal [n, n] Pade approximant of exp(-delay * z)."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"order must be a positive integer, got {n}")
    if not delay > 0.0:
        raise DomainError(f"delay must be positive, got {delay}")
    coeffs = _q_coefficients(int(n))
    roots = np.roots(coeffs[::-1])
    return PadeApproximant(order=int(n), delay=float(delay), q_coeffs=coeffs, q_roots=roots)


def pade_orders(net: DelayNetwork, n_base: int) -> list:
    """Per-delay orders roughly proportional to each delay duration."""
    if n_base < 1:
        raise DomainError(f"base order must be >= 1, got {n_base}")
    tmax = float(np.max(net.delays))
    return [max(1, int(round(n_base * t / tmax))) for t in net.delays]


class PadeNetworkTF:
    """Network transfer function with each delay replaced by its approximant."""

    def __init__(self, net: DelayNetwork, orders):
        orders = list(orders)
        if len(orders) != net.n:
            raise DomainError(f"need {net.n} orders, got {len(orders)}")
        self.net = net
        self.ports = net.ports
        self.approximants = tuple(
            pade_exp(n_k, t_k) for n_k, t_k in zip(orders, net.delays)
        )

    def _delay_column(self, zs: np.ndarray) -> np.ndarray:
        return np.stack([approx(zs) for approx in self.approximants], axis=-1)

    def __call__(self, z: complex) -> np.ndarray:
        z = complex(z)
        net = self.net
        if net.n == 0:
            return net.m4.copy()
        e = np.array([approx(z) for approx in self.approximants], dtype=complex)
        k = np.eye(net.n, dtype=complex) - net.m1 * e[np.newaxis, :]
        cond = np.linalg.cond(k)
        if not np.isfinite(cond) or cond > COND_MAX:
            raise NearPole(f"Pade-substituted system is singular at z = {z}")
        x = np.linalg.solve(k, net.m2)
        return net.m3 @ (e[:, np.newaxis] * x) + net.m4

    def eval_many(self, zs) -> np.ndarray:
        zs = np.asarray(zs, dtype=complex).ravel()
        net = self.net
        if net.n == 0:
            return np.broadcast_to(net.m4, (zs.size, net.ports, net.ports)).copy()
        e = self._delay_column(zs)
        k = np.eye(net.n, dtype=complex)[np.newaxis] - net.m1[np.newaxis] * e[:, np.newaxis, :]
        rhs = np.broadcast_to(net.m2, (zs.size,) + net.m2.shape)
        x = np.linalg.solve(k, rhs)
        out = net.m3[np.newaxis] @ (e[:, :, np.newaxis] * x) + net.m4[np.newaxis]
        if not np.all(np.isfinite(out)):
            raise NearPole("batch evaluation hit a pole of the Pade system")
        return out


def pade_network_tf(net: DelayNetwork, orders) -> PadeNetworkTF:
    """Evaluable rational substitute for the exact transfer function."""
    return PadeNetworkTF(net, orders)
