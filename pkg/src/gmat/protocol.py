"""
The K-phase transmission structure shared by MAT and GMAT.

Indexing used throughout the package:

* users ``i, j`` and branches ``l`` (the repetition index, ``L = (K-1)!``
  of them) count from 0;
* slots count from 1, phase 1 occupying slots ``1 .. L*K``;
* symbol vector ``s_j^l`` goes out alone in slot ``K*l + j + 1``.

Phase ``k >= 2`` carries order-``k`` messages. Row ``r`` of the order-``k``
generation matrix belongs to the ``r``-th ``k``-subset of users in
lexicographic order, so for K = 3 the phase-2 rows are AB, AC, BC.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = ['Schedule', 'GenMatrixTemplate', 'PrecoderSet', 'LiftingConstants',
           'EffectiveChannel', 'make_schedule', 'gen_matrix_template',
           'make_lifting_constants', 'lift_generation_matrix',
           'generation_matrices', 'assemble_effective_channel',
           'effective_channels', 'phase1_channels', 'lifting_operator',
           'MAX_USERS']

MAX_USERS = 6


@dataclass(frozen=True)
class Schedule:
    """
    Slot arithmetic of the K-phase protocol.

    Tuples ``T_k``, ``Q_k``, ``l_k`` and ``phase_start`` are indexed by
    ``k - 1`` for phase ``k``; use the accessor methods to avoid
    off-by-one slips.
    """
    K: int
    L: int
    T_k: tuple
    Q_k: tuple
    l_k: tuple
    T: int
    phase_start: tuple
    dof: Fraction

    def phase_len(self, k):
        return self.T_k[k - 1]

    def n_messages(self, k):
        return self.Q_k[k - 1]

    def start(self, k):
        """First slot (1-based) of phase ``k``."""
        return self.phase_start[k - 1]

    def phase_slots(self, k):
        return range(self.start(k), self.start(k) + self.phase_len(k))

    def phase_of(self, t):
        for k in range(self.K, 0, -1):
            if t >= self.start(k):
                return k
        raise ValueError(f"slot {t} precedes phase 1")

    def phase1_slot(self, j, l):
        """Slot in which ``s_j^l`` is sent on its own."""
        return self.K * l + j + 1

    def row_offset(self, l, k):
        """
        Offset of branch ``l``'s order-``k`` block inside phase ``k``.

        Only phases ``2 .. K-1`` have offsets; the last phase is shared by
        every branch in full.
        """
        if k == self.K:
            return 0
        if not 2 <= k < self.K:
            raise ValueError(f"phase {k} has no branch offset")
        return (math.ceil((l + 1) * self.l_k[k - 1] / self.L) - 1) * self.n_messages(k)

    def block_rows(self, k):
        """Number of rows of a branch's block in phase ``k``."""
        return self.phase_len(k) if k == self.K else self.n_messages(k)

    def block_slots(self, l, k):
        start = self.start(k) + self.row_offset(l, k)
        return range(start, start + self.block_rows(k))

    def antenna(self, l, k):
        """
        Transmit antenna (0-based) carrying branch ``l`` in phase ``k``.

        The last phase always uses antenna 0. For K = 3 the middle phase puts
        branch ``l`` on antenna ``l``. For K >= 4 the rule
        ``((l * l_k) mod L) mod k`` (1-based ``l``) is applied, with a zero
        result mapped to the first antenna.
        """
        if k == self.K:
            return 0
        if not 2 <= k < self.K:
            raise ValueError(f"phase {k} has no antenna assignment")
        if self.K <= 3:
            return l
        s = (((l + 1) * self.l_k[k - 1]) % self.L) % k
        return max(s, 1) - 1

    @property
    def power_budget(self):
        """Total power allowed for all order-2 generation blocks."""
        return float(self.K * self.phase_len(2))


def make_schedule(K, max_users=MAX_USERS):
    if K < 2:
        raise ValueError(f"K must be at least 2, got {K}")
    if K > max_users:
        raise ValueError(f"K={K} exceeds the configured limit {max_users}")
    L = math.factorial(K - 1)
    T_k = tuple(L * K // k for k in range(1, K + 1))
    Q_k = tuple(math.comb(K, k) for k in range(1, K + 1))
    l_k = tuple(t // q for t, q in zip(T_k, Q_k))
    starts = tuple(1 + sum(T_k[:k]) for k in range(K))
    T = sum(T_k)
    dof = Fraction(K, 1) / sum(Fraction(1, k) for k in range(1, K + 1))
    assert dof == Fraction(K * K * L, T)
    return Schedule(K, L, T_k, Q_k, l_k, T, starts, dof)


@dataclass(frozen=True)
class GenMatrixTemplate:
    K: int
    k: int
    rows: tuple

    def mask(self):
        """Q_k x K boolean block mask."""
        m = np.zeros((len(self.rows), self.K), dtype=bool)
        for r, subset in enumerate(self.rows):
            m[r, list(subset)] = True
        return m

    def row_of(self, subset):
        return self.rows.index(tuple(sorted(subset)))


def gen_matrix_template(K, k):
    if not 2 <= k <= K:
        raise ValueError(f"order k={k} outside 2..{K}")
    return GenMatrixTemplate(K, k, tuple(itertools.combinations(range(K), k)))


class PrecoderSet:
    """
    Order-2 combining vectors ``w_ji^l``.

    ``w[l, j, i]`` is the length-K vector applied to ``s_j^l`` inside the
    order-2 message shared by users ``i`` and ``j``; the diagonal ``j == i``
    is unused and kept at zero.
    """

    def __init__(self, w):
        w = np.array(w, dtype=complex)
        if w.ndim != 4 or not (w.shape[1] == w.shape[2] == w.shape[3]):
            raise ValueError(f"precoder array must have shape (L, K, K, K), got {w.shape}")
        K = w.shape[1]
        w[:, np.arange(K), np.arange(K), :] = 0.0
        w.setflags(write=False)
        self.w = w

    @property
    def L(self):
        return self.w.shape[0]

    @property
    def K(self):
        return self.w.shape[1]

    def vector(self, j, i, l=0):
        return self.w[l, j, i]

    def W2(self, j, l):
        """Order-2 generation block ``W_j^l(2)`` of shape Q_2 x K."""
        tmpl = gen_matrix_template(self.K, 2)
        out = np.zeros((len(tmpl.rows), self.K), dtype=complex)
        for r, (a, b) in enumerate(tmpl.rows):
            if j == a:
                out[r] = self.w[l, j, b]
            elif j == b:
                out[r] = self.w[l, j, a]
        return out

    def W2_all(self):
        """Array of every ``W_j^l(2)``, shape (L, K, Q_2, K)."""
        return np.array([[self.W2(j, l) for j in range(self.K)] for l in range(self.L)])

    @classmethod
    def from_W2(cls, W2):
        """Inverse of :meth:`W2_all`; entries outside the template are ignored."""
        W2 = np.asarray(W2)
        L, K = W2.shape[:2]
        tmpl = gen_matrix_template(K, 2)
        w = np.zeros((L, K, K, K), dtype=complex)
        for r, (a, b) in enumerate(tmpl.rows):
            w[:, a, b] = W2[:, a, r]
            w[:, b, a] = W2[:, b, r]
        return cls(w)

    def power(self):
        """``sum_l sum_j ||W_j^l(2)||_F^2``."""
        return float(np.sum(np.abs(self.w) ** 2))

    def scaled(self, factor):
        return PrecoderSet(self.w * factor)

    def scaled_to(self, budget):
        p = self.power()
        if p == 0.0:
            return self
        return self.scaled(np.sqrt(budget / p))

    def satisfies_budget(self, budget, rtol=1e-9):
        return self.power() <= budget * (1.0 + rtol)


@dataclass(frozen=True)
class LiftingConstants:
    """
    Constants used to build order-(k+1) messages from order-k messages.

    ``C[k]`` is shared by every branch. ``Lam[(l, k)]`` holds the diagonal
    of the phase-k channel coefficients for branch ``l``; ``Lam is None``
    stands for identity matrices, which is what the transmitter uses when
    it cannot yet see phase-k channels.
    """
    C: dict
    Lam: dict = None

    def lam(self, l, k):
        if self.Lam is None:
            return None
        return self.Lam[(l, k)]


def _vandermonde(n_rows, n_cols):
    x = np.arange(1, n_rows + 1, dtype=float)
    V = x[:, None] ** np.arange(n_cols)[None, :]
    return V / np.max(np.abs(V), axis=1, keepdims=True)


def _lifting_matrix(schedule, k):
    K = schedule.K
    if k == K - 1:
        return _vandermonde(schedule.phase_len(K), schedule.n_messages(k)).astype(complex)
    rows = gen_matrix_template(K, k + 1).rows
    cols = gen_matrix_template(K, k).rows
    mask = np.array([[set(c) <= set(r) for c in cols] for r in rows])
    return (_vandermonde(len(rows), len(cols)) * mask).astype(complex)


def make_lifting_constants(schedule, episode=None):
    """
    Build ``C(k)`` for k = 2..K-1 and, given an episode, the diagonals ``Lam(l, k)``.

    Entry ``r`` of ``Lam(l, k)`` is the channel coefficient that the
    lowest-indexed user outside row ``r``'s subset saw on branch ``l``'s
    antenna in that row's slot (for K = 3 this reproduces
    ``diag(h_C,l(7), h_B,l(8), h_A,l(9))``).
    """
    K = schedule.K
    C = {k: _lifting_matrix(schedule, k) for k in range(2, K)}
    if episode is None:
        return LiftingConstants(C, None)
    Lam = {}
    for k in range(2, K):
        rows = gen_matrix_template(K, k).rows
        for l in range(schedule.L):
            s = schedule.antenna(l, k)
            diag = np.empty(len(rows), dtype=complex)
            for r, (subset, t) in enumerate(zip(rows, schedule.block_slots(l, k))):
                outsider = min(set(range(K)) - set(subset))
                diag[r] = episode.h(outsider, t)[s]
            Lam[(l, k)] = diag
    return LiftingConstants(C, Lam)


def lift_generation_matrix(W_k, C, lam=None):
    """``W(k+1) = C(k) Lam(k) W(k)``; ``lam=None`` means identity."""
    W_k = np.asarray(W_k)
    C = np.asarray(C)
    if C.ndim != 2 or W_k.ndim != 2 or C.shape[1] != W_k.shape[0]:
        raise ValueError(f"cannot lift W of shape {W_k.shape} with C of shape {C.shape}")
    if lam is None:
        return C @ W_k
    lam = np.asarray(lam)
    if lam.shape != (W_k.shape[0],):
        raise ValueError(f"Lambda diagonal of shape {lam.shape} does not match W rows {W_k.shape[0]}")
    return C @ (lam[:, None] * W_k)


def generation_matrices(precoders, constants, j, l, virtual=False):
    """``{k: W_j^l(k)}`` for k = 2..K."""
    K = precoders.K
    out = {2: precoders.W2(j, l)}
    for k in range(2, K):
        lam = None if virtual else constants.lam(l, k)
        out[k + 1] = lift_generation_matrix(out[k], constants.C[k], lam)
    return out


@dataclass(frozen=True)
class EffectiveChannel:
    matrix: np.ndarray
    receiver: int
    owner: int
    branch: int
    virtual: bool


def _fill_effective(out, i, j, l, schedule, episode, gens, virtual):
    K = schedule.K
    t1 = schedule.phase1_slot(j, l)
    out[t1 - 1] = episode.h(i, t1)
    for k in range(2, K + 1):
        slots = schedule.block_slots(l, k)
        block = gens[k]
        if not virtual:
            s = schedule.antenna(l, k)
            d = np.array([episode.h(i, t)[s] for t in slots])
            block = d[:, None] * block
        out[slots.start - 1:slots.stop - 1] = block
    return out


def assemble_effective_channel(i, j, l, episode, schedule, precoders, constants,
                               virtual=False):
    """
    T x K channel through which ``s_j^l`` reaches receiver ``i``.

    With ``virtual=True`` every present-slot coefficient (the ``D`` and
    ``Lam`` diagonals) is replaced by one, so only phase-1 channels are read
    and ``episode`` may be a :class:`~gmat.channel.CsitView`.
    """
    gens = generation_matrices(precoders, constants, j, l, virtual=virtual)
    out = np.zeros((schedule.T, schedule.K), dtype=complex)
    _fill_effective(out, i, j, l, schedule, episode, gens, virtual)
    return EffectiveChannel(out, i, j, l, virtual)


def effective_channels(episode, schedule, precoders, constants, virtual=False,
                       receivers=None):
    """
    All effective channels, shape (receivers, L, K owners, T, K).

    `receivers` defaults to every user; pass a subset to bound memory when
    ``T`` is large.
    """
    K, L = schedule.K, schedule.L
    receivers = range(K) if receivers is None else list(receivers)
    out = np.zeros((len(receivers), L, K, schedule.T, K), dtype=complex)
    for l in range(L):
        for j in range(K):
            gens = generation_matrices(precoders, constants, j, l, virtual=virtual)
            for n, i in enumerate(receivers):
                _fill_effective(out[n, l, j], i, j, l, schedule, episode, gens, virtual)
    return out


def phase1_channels(csit, schedule):
    """Phase-1 part of every effective channel, shape (K, L, K, T, K)."""
    K, L = schedule.K, schedule.L
    out = np.zeros((K, L, K, schedule.T, K), dtype=complex)
    for l in range(L):
        for j in range(K):
            t = schedule.phase1_slot(j, l)
            Ht = csit.channel(t)
            for i in range(K):
                out[i, l, j, t - 1] = Ht[i]
    return out


def lifting_operator(schedule, constants, l):
    """
    Map from ``W_j^l(2)`` to the non-phase-1 rows of a virtual channel.

    Returns the T x Q_2 matrix ``Q^l`` with ``H_ij^l = A_ij^l + Q^l W_j^l(2)``
    where ``A_ij^l`` is the phase-1 part. ``Q^l`` is an identity block at the
    branch's phase-2 rows followed by products of the ``C`` matrices.
    """
    K = schedule.K
    q2 = schedule.n_messages(2)
    Q = np.zeros((schedule.T, q2), dtype=complex)
    P = np.eye(q2, dtype=complex)
    for k in range(2, K + 1):
        if k > 2:
            P = constants.C[k - 1] @ P
        slots = schedule.block_slots(l, k)
        Q[slots.start - 1:slots.stop - 1] = P
    return Q
