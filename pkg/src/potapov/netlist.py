"""Delay/beamsplitter networks and their exact transcendental transfer functions.

A network couples ``n`` internal delay edges to ``N`` ports through a constant
scattering matrix stored as blocks ``m1..m4``.  Internal signals satisfy
``x = m1 E(z) x + m2 u`` with ``E(z) = diag(exp(-z T_k))``, and the outputs are
``y = m3 E(z) x + m4 u``, so the transfer matrix is

    T(z) = m3 E(z) (I - m1 E(z))^{-1} m2 + m4.

Everything here is evaluated exactly; approximation lives in other modules.
"""

from __future__ import annotations

import json
import math
from dataclasses import InitVar, dataclass

import numpy as np

from .errors import (
    AtRoot,
    DomainError,
    MalformedInput,
    NearPole,
    NonpositiveDelay,
    NotUnitary,
    Unstable,
)

TOL_UNITARY = 1e-9
COND_MAX = 1e12
EPS_ROOT = 1e-12
EPS_RANK = 1e-10


class Divergent:
    """Marker result: the transfer function diverges as Re z -> -infinity."""

    __slots__ = ()

    def __repr__(self):
        return "Divergent"


DIVERGENT = Divergent()


@dataclass(frozen=True, eq=False)
class DelayNetwork:
    """Immutable scattering description of a delay/beamsplitter system.

    The stacked matrix ``[[m1, m2], [m3, m4]]`` must be unitary (lossless) and
    ``m1`` must have spectral radius below one (asymptotic stability).  Pass
    ``validate=False`` only to build deliberately unphysical fixtures.
    """

    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    m4: np.ndarray
    delays: np.ndarray
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        for name in ("m1", "m2", "m3", "m4"):
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=complex))
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        d = np.atleast_1d(np.asarray(self.delays, dtype=float)).copy()
        d.flags.writeable = False
        object.__setattr__(self, "delays", d)
        self._check_shapes()
        if validate:
            self._check_physical()

    def _check_shapes(self):
        n = self.m1.shape[0]
        ports = self.m4.shape[0]
        if self.m1.shape != (n, n):
            raise MalformedInput(f"m1 must be square, got {self.m1.shape}")
        if self.m4.shape != (ports, ports):
            raise MalformedInput(f"m4 must be square, got {self.m4.shape}")
        if self.m2.shape != (n, ports):
            raise MalformedInput(f"m2 must be {n}x{ports}, got {self.m2.shape}")
        if self.m3.shape != (ports, n):
            raise MalformedInput(f"m3 must be {ports}x{n}, got {self.m3.shape}")
        if self.delays.shape != (n,):
            raise MalformedInput(
                f"need {n} delays for {n} internal edges, got {self.delays.shape[0]}"
            )
        for name in ("m1", "m2", "m3", "m4"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise MalformedInput(f"{name} contains non-finite entries")
        if not np.all(np.isfinite(self.delays)):
            raise MalformedInput("delays contain non-finite entries")

    def _check_physical(self):
        if np.any(self.delays <= 0.0):
            raise NonpositiveDelay(f"delays must be positive, got {self.delays.tolist()}")
        s = self.stacked()
        defect = np.linalg.norm(s.conj().T @ s - np.eye(s.shape[0]))
        if defect > TOL_UNITARY:
            raise NotUnitary(
                f"stacked scattering matrix is not unitary (defect {defect:.3e})"
            )
        if self.n:
            rho = float(np.max(np.abs(np.linalg.eigvals(self.m1))))
            if rho >= 1.0:
                raise Unstable(f"spectral radius of m1 is {rho:.6f} >= 1")

    @property
    def n(self) -> int:
        """Number of internal delay edges."""
        return self.m1.shape[0]

    @property
    def ports(self) -> int:
        """Number of input/output ports."""
        return self.m4.shape[0]

    def stacked(self) -> np.ndarray:
        """The full scattering matrix [[m1, m2], [m3, m4]]."""
        top = np.hstack([self.m1, self.m2])
        bottom = np.hstack([self.m3, self.m4])
        return np.vstack([top, bottom])


def build_cavity(r: float, tau: float) -> DelayNetwork:
    """Single-beamsplitter ring cavity with reflectivity r and loop delay tau.

    Its transfer function is (exp(-tau z) - r) / (1 - r exp(-tau z)).
    """
    if not 0.0 < r < 1.0:
        raise DomainError(f"reflectivity must lie in (0, 1), got {r}")
    if not tau > 0.0:
        raise DomainError(f"delay must be positive, got {tau}")
    t = math.sqrt(1.0 - r * r)
    return DelayNetwork(
        m1=[[r]], m2=[[t]], m3=[[t]], m4=[[-r]], delays=[tau]
    )


def build_two_mirror(r: float, round_trip: float) -> DelayNetwork:
    """Fabry-Perot style cavity: two mirrors of reflectivity r, one port each.

    The two internal edges carry half the round trip each.  At z = 0 the
    transfer matrix is the perfect swap [[0, 1], [1, 0]].
    """
    if not 0.0 < r < 1.0:
        raise DomainError(f"reflectivity must lie in (0, 1), got {r}")
    if not round_trip > 0.0:
        raise DomainError(f"round trip must be positive, got {round_trip}")
    t = math.sqrt(1.0 - r * r)
    half = round_trip / 2.0
    return DelayNetwork(
        m1=[[0.0, r], [r, 0.0]],
        m2=[[t, 0.0], [0.0, t]],
        m3=[[0.0, t], [t, 0.0]],
        m4=[[-r, 0.0], [0.0, -r]],
        delays=[half, half],
    )


def _delay_diag(net: DelayNetwork, z: complex) -> np.ndarray:
    return np.exp(-z * net.delays)


def eval_tf(net: DelayNetwork, z: complex, method: str = "feedback") -> np.ndarray:
    """Evaluate the exact transfer matrix T(z).

    ``method="resolvent"`` uses the algebraically equivalent form
    m3 (E(-z) - m1)^{-1} m2 + m4; it exists as an independent cross-check and
    overflows for large positive Re(z) * delays.
    """
    z = complex(z)
    if net.n == 0:
        return net.m4.copy()
    if method == "feedback":
        e = _delay_diag(net, z)
        k = np.eye(net.n, dtype=complex) - net.m1 * e[np.newaxis, :]
        _require_well_conditioned(k, z)
        x = np.linalg.solve(k, net.m2)
        return net.m3 @ (e[:, np.newaxis] * x) + net.m4
    if method == "resolvent":
        k = np.diag(np.exp(z * net.delays)) - net.m1
        _require_well_conditioned(k, z)
        return net.m3 @ np.linalg.solve(k, net.m2) + net.m4
    raise ValueError(f"unknown method {method!r}")


def _require_well_conditioned(k: np.ndarray, z: complex):
    cond = np.linalg.cond(k)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise NearPole(f"I - m1 E(z) is singular to working precision at z = {z}")


class NetworkTF:
    """Evaluable transfer function of a network, with a vectorized batch path."""

    def __init__(self, net: DelayNetwork):
        self.net = net
        self.ports = net.ports

    def __call__(self, z: complex) -> np.ndarray:
        return eval_tf(self.net, z)

    def eval_many(self, zs) -> np.ndarray:
        """Evaluate on a flat array of points; returns shape (len(zs), N, N).

        No condition-number guard: intended for grids known to avoid poles.
        """
        zs = np.asarray(zs, dtype=complex).ravel()
        net = self.net
        if net.n == 0:
            return np.broadcast_to(net.m4, (zs.size, net.ports, net.ports)).copy()
        e = np.exp(-zs[:, np.newaxis] * net.delays[np.newaxis, :])
        k = np.eye(net.n, dtype=complex)[np.newaxis] - net.m1[np.newaxis] * e[:, np.newaxis, :]
        rhs = np.broadcast_to(net.m2, (zs.size,) + net.m2.shape)
        x = np.linalg.solve(k, rhs)
        out = net.m3[np.newaxis] @ (e[:, :, np.newaxis] * x) + net.m4[np.newaxis]
        if not np.all(np.isfinite(out)):
            raise NearPole("batch evaluation hit a pole")
        return out


def transfer_function(net: DelayNetwork) -> NetworkTF:
    return NetworkTF(net)


class PoleFunction:
    """z -> (f, f'/f) for f(z) = det(I - m1 E(z)); zeros of f are the poles."""

    def __init__(self, net: DelayNetwork):
        self.net = net

    def __call__(self, z: complex):
        return pole_function(self.net, z)

    def eval_many(self, zs):
        zs = np.asarray(zs, dtype=complex).ravel()
        net = self.net
        if net.n == 0:
            return np.ones(zs.size, dtype=complex), np.zeros(zs.size, dtype=complex)
        e = np.exp(-zs[:, np.newaxis] * net.delays[np.newaxis, :])
        k = np.eye(net.n, dtype=complex)[np.newaxis] - net.m1[np.newaxis] * e[:, np.newaxis, :]
        f = np.linalg.det(k)
        g = net.m1[np.newaxis] * (net.delays[np.newaxis, :] * e)[:, np.newaxis, :]
        sol = np.linalg.solve(k, g)
        ld = np.trace(sol, axis1=1, axis2=2)
        return f, ld


def pole_function(net: DelayNetwork, z: complex):
    """Return (f, f'/f) at z for the pole condition f(z) = det(I - m1 E(z)).

    The log-derivative is computed analytically as
    tr((I - m1 E)^{-1} m1 diag(T_k exp(-z T_k))); the sign follows from
    dE/dz = -diag(T_k exp(-z T_k)) and is cross-checked against finite
    differences in the test suite.
    """
    z = complex(z)
    if net.n == 0:
        return 1.0 + 0.0j, 0.0 + 0.0j
    e = _delay_diag(net, z)
    k = np.eye(net.n, dtype=complex) - net.m1 * e[np.newaxis, :]
    f = complex(np.linalg.det(k))
    g = net.m1 * (net.delays * e)[np.newaxis, :]
    try:
        sol = np.linalg.solve(k, g)
    except np.linalg.LinAlgError:
        raise AtRoot(f"pole function vanishes at z = {z}") from None
    ld = complex(np.trace(sol))
    if f == 0.0 or not np.isfinite(ld):
        raise AtRoot(f"pole function vanishes at z = {z}")
    # Distance to the nearest root is roughly 1/|f'/f|; the raw |f| threshold
    # would not scale with network dimension.
    if abs(ld) > 0.0 and 1.0 / abs(ld) < EPS_ROOT * (1.0 + abs(z)):
        raise AtRoot(f"z = {z} is within {EPS_ROOT} of a root")
    return f, ld


def pole_closure(net: DelayNetwork) -> PoleFunction:
    return PoleFunction(net)


def limit_neg_infinity(net: DelayNetwork):
    """Limit of T(z) as Re z -> -infinity: m4 - m3 m1^{-1} m2 when m1 is
    invertible, otherwise the DIVERGENT marker."""
    if net.n == 0:
        return net.m4.copy()
    s = np.linalg.svd(net.m1, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= EPS_RANK * s[0]:
        return DIVERGENT
    return net.m4 - net.m3 @ np.linalg.solve(net.m1, net.m2)


# --- JSON wire format -------------------------------------------------------
#
# {"n": int, "ports": int, "m1": [[[re, im], ...], ...], "m2": ..., "m3": ...,
#  "m4": ..., "delays": [t1, ..., tn]}
#
# Complex scalars are [re, im] pairs; matrices are row-major.


def _matrix_from_pairs(obj, rows: int, cols: int, key: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != rows:
        raise MalformedInput(f"{key} must be a list of {rows} rows")
    out = np.zeros((rows, cols), dtype=complex)
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != cols:
            raise MalformedInput(f"{key} row {i} must have {cols} entries")
        for j, pair in enumerate(row):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
            ):
                raise MalformedInput(f"{key}[{i}][{j}] must be a [re, im] pair")
            out[i, j] = complex(pair[0], pair[1])
    if not np.all(np.isfinite(out)):
        raise MalformedInput(f"{key} contains non-finite entries")
    return out


def _matrix_to_pairs(arr: np.ndarray):
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.atleast_2d(arr)]


def network_from_dict(doc: dict) -> DelayNetwork:
    if not isinstance(doc, dict):
        raise MalformedInput("network document must be a JSON object")
    for key in ("n", "ports", "m1", "m2", "m3", "m4", "delays"):
        if key not in doc:
            raise MalformedInput(f"missing key {key!r}")
    n, ports = doc["n"], doc["ports"]
    if not isinstance(n, int) or not isinstance(ports, int) or n < 0 or ports < 1:
        raise MalformedInput("n must be a nonnegative int and ports a positive int")
    delays = doc["delays"]
    if (
        not isinstance(delays, list)
        or len(delays) != n
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in delays)
    ):
        raise MalformedInput(f"delays must be a list of {n} numbers")
    return DelayNetwork(
        m1=_matrix_from_pairs(doc["m1"], n, n, "m1"),
        m2=_matrix_from_pairs(doc["m2"], n, ports, "m2"),
        m3=_matrix_from_pairs(doc["m3"], ports, n, "m3"),
        m4=_matrix_from_pairs(doc["m4"], ports, ports, "m4"),
        delays=[float(x) for x in delays],
    )


def network_to_dict(net: DelayNetwork) -> dict:
    return {
        "n": net.n,
        "ports": net.ports,
        "m1": _matrix_to_pairs(net.m1),
        "m2": _matrix_to_pairs(net.m2),
        "m3": _matrix_to_pairs(net.m3),
        "m4": _matrix_to_pairs(net.m4),
        "delays": [float(t) for t in net.delays],
    }


def parse_network(text) -> DelayNetwork:
    """Parse and validate a network from its JSON document."""
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedInput(f"invalid JSON: {exc}") from None
    return network_from_dict(doc)
