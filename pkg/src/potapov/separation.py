"""Split a commensurate delay network into feedforward prefix and feedback core.

A network whose internal coupling m1 is singular carries a nontrivial
feedforward-only (singular) component that zero-pole interpolation cannot
capture.  With all delays equal, each zero singular value of m1 corresponds to
an internal node whose content is a pure function of the inputs; rotating that
node to the last coordinate and eliminating it peels off one parallel-delay
stage W* diag(exp(-z t0), 1, ..., 1) W while shrinking the feedback core by
one dimension.  Repeating until m1 is invertible yields

    T_original(z) = T_core(z) * FF(z)

exactly, with FF entire and inner and the core free of any singular term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DeflationStall, MalformedInput, NotCommensurate, NotEqualDelays
from .netlist import EPS_RANK, DelayNetwork


@dataclass(frozen=True, eq=False)
class FeedforwardChain:
    """Ordered gain/delay stages applied input-to-output.

    Stage k contributes gain_k @ diag(exp(-z * delays_k)); the first listed
    stage acts on the raw inputs, so the chain evaluates to
    G_K D_K ... G_1 D_1.  An empty chain is the identity.
    """

    stages: tuple
    ports: int

    def __post_init__(self):
        norm_stages = []
        for gain, delays in self.stages:
            gain = np.atleast_2d(np.asarray(gain, dtype=complex)).copy()
            delays = np.atleast_1d(np.asarray(delays, dtype=float)).copy()
            if gain.shape != (self.ports, self.ports) or delays.shape != (self.ports,):
                raise MalformedInput("stage dimensions do not match port count")
            if np.any(delays < 0.0) or not np.all(np.isfinite(delays)):
                raise MalformedInput("stage delays must be finite and nonnegative")
            gain.flags.writeable = False
            delays.flags.writeable = False
            norm_stages.append((gain, delays))
        object.__setattr__(self, "stages", tuple(norm_stages))

    def __len__(self):
        return len(self.stages)

    def total_delay(self) -> float:
        """Upper bound on the delay accumulated along any input-output path."""
        return float(sum(np.max(d) for _, d in self.stages))


def eval_feedforward(ff: FeedforwardChain, z: complex) -> np.ndarray:
    z = complex(z)
    out = np.eye(ff.ports, dtype=complex)
    for gain, delays in ff.stages:
        out = gain @ (np.exp(-z * delays)[:, np.newaxis] * out)
    return out


class FeedforwardTF:
    def __init__(self, ff: FeedforwardChain):
        self.ff = ff
        self.ports = ff.ports

    def __call__(self, z: complex) -> np.ndarray:
        return eval_feedforward(self.ff, z)

    def eval_many(self, zs) -> np.ndarray:
        zs = np.asarray(zs, dtype=complex).ravel()
        out = np.broadcast_to(np.eye(self.ports, dtype=complex), (zs.size, self.ports, self.ports)).copy()
        for gain, delays in self.ff.stages:
            e = np.exp(-zs[:, np.newaxis] * delays[np.newaxis, :])
            out = gain[np.newaxis] @ (e[:, :, np.newaxis] * out)
        return out


@dataclass(frozen=True, eq=False)
class SeparationResult:
    """Feedforward chain plus a core network with invertible m1.

    The original transfer function factorizes as core followed by chain:
    T(z) = T_core(z) @ FF(z).
    """

    feedforward: FeedforwardChain
    core: DelayNetwork


def to_commensurate(net: DelayNetwork, t0: float, rel_tol: float = 1e-9) -> DelayNetwork:
    """Rewrite every delay k_i * t0 as a chain of k_i unit delays.

    The transfer function is unchanged; the internal dimension grows to
    sum(k_i) and every delay equals t0 afterwards.
    """
    if not t0 > 0.0:
        raise NotCommensurate(f"base delay must be positive, got {t0}")
    ks = np.rint(net.delays / t0).astype(int)
    if np.any(ks < 1) or np.any(np.abs(net.delays - ks * t0) > rel_tol * net.delays):
        raise NotCommensurate(
            f"delays {net.delays.tolist()} are not integer multiples of {t0}"
        )
    total = int(ks.sum())
    heads = np.concatenate([[0], np.cumsum(ks)[:-1]])  # index of (i, 1)
    tails = np.cumsum(ks) - 1  # index of (i, k_i)
    m1 = np.zeros((total, total), dtype=complex)
    m2 = np.zeros((total, net.ports), dtype=complex)
    m3 = np.zeros((net.ports, total), dtype=complex)
    for i in range(net.n):
        for step in range(1, ks[i]):
            m1[heads[i] + step, heads[i] + step - 1] = 1.0
        m1[heads[i], tails] = net.m1[i, :]
        m2[heads[i], :] = net.m2[i, :]
    m3[:, tails] = net.m3
    return DelayNetwork(
        m1=m1, m2=m2, m3=m3, m4=net.m4.copy(), delays=np.full(total, t0)
    )


def _completion_with_last_column(u: np.ndarray) -> np.ndarray:
    """Unitary whose last column is exactly the unit vector u."""
    q, _ = np.linalg.qr(u.reshape(-1, 1), mode="complete")
    return np.column_stack([q[:, 1:], u])


def _completion_with_first_row(g: np.ndarray) -> np.ndarray:
    """Unitary whose first row is exactly the unit row vector g."""
    q, _ = np.linalg.qr(g.conj().reshape(-1, 1), mode="complete")
    q = q.copy()
    q[:, 0] = g.conj()
    return q.conj().T


def separate(net: DelayNetwork) -> SeparationResult:
    """Deflate zero singular values of m1 into feedforward stages.

    Requires all delays equal.  Each pass finds a left kernel vector of the
    current m1, rotates it onto the last internal coordinate, and eliminates
    that node; the node's content is a pure input combination g @ u delayed by
    t0, which becomes the stage W* diag(exp(-z t0), 1, ..) W with W any
    unitary whose first row is g.  The eliminated column folds back into the
    remaining blocks (m2 += c g, m4 += f g), preserving the composed transfer
    function exactly.
    """
    if net.n == 0:
        return SeparationResult(
            feedforward=FeedforwardChain(stages=(), ports=net.ports), core=net
        )
    t0 = float(net.delays[0])
    if np.any(np.abs(net.delays - t0) > 1e-9 * t0):
        raise NotEqualDelays(
            "separation requires equal delays; rewrite with to_commensurate first"
        )
    m1 = net.m1.copy()
    m2 = net.m2.copy()
    m3 = net.m3.copy()
    m4 = net.m4.copy()
    ports = net.ports
    stages = []
    for _ in range(net.n):
        dim = m1.shape[0]
        if dim == 0:
            break
        svals, left = _smallest_left_singular(m1)
        if svals[0] > 0.0 and svals[-1] > EPS_RANK * svals[0]:
            break
        q = _completion_with_last_column(left)
        m1h = q.conj().T @ m1 @ q
        m2h = q.conj().T @ m2
        m3h = m3 @ q
        row_norm = float(np.linalg.norm(m1h[-1, :]))
        if row_norm > np.sqrt(EPS_RANK):
            raise DeflationStall(
                f"kernel deflation left residual {row_norm:.3e} in the eliminated row"
            )
        g = m2h[-1, :]
        gnorm = float(np.linalg.norm(g))
        if gnorm < 0.5:
            raise DeflationStall(
                "eliminated node receives no input; cannot emit a feedforward stage"
            )
        g = g / gnorm
        c = m1h[:-1, -1]
        fcol = m3h[:, -1]
        w = _completion_with_first_row(g)
        stage_delays = np.zeros(ports)
        stage_delays[0] = t0
        stages.append((w, np.zeros(ports)))
        stages.append((w.conj().T, stage_delays))
        m1 = m1h[:-1, :-1]
        m2 = m2h[:-1, :] + np.outer(c, g)
        m3 = m3h[:, :-1]
        m4 = m4 + np.outer(fcol, g)
    core = DelayNetwork(
        m1=m1,
        m2=m2,
        m3=m3,
        m4=m4,
        delays=np.full(m1.shape[0], t0),
    )
    return SeparationResult(
        feedforward=FeedforwardChain(stages=tuple(stages), ports=ports), core=core
    )


def _smallest_left_singular(m1: np.ndarray):
    u, s, _ = np.linalg.svd(m1)
    return s, u[:, -1]
