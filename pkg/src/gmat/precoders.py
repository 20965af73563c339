"""
Order-2 combining vectors for the delayed-CSIT broadcast protocol.

Four families are provided:

* MAT: ``w_ji^l = h_i`` at the slot where ``s_j^l`` was sent, which aligns
  all interference perfectly;
* GMAT-MMSE: fixed-step gradient descent on the virtual sum-MSE cost;
* GMAT-DSINR: per-vector generalized eigenvectors of a regularized dual
  SINR;
* MRT / ZF for the 2-user protocol, read off its single-beam interference
  channel equivalent.

Every function here takes a :class:`~gmat.channel.CsitView` (or anything
exposing ``channel(t)`` and ``h(i, t)``) and only reads phase-1 slots, so the
precoders are computable before phase 2 starts. The one exception is
:func:`ic_dual_matrices`, a receiver-side analysis tool.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .numerics import generalized_eig_extreme, orth_complement
from .protocol import (PrecoderSet, gen_matrix_template, lifting_operator,
                       make_lifting_constants, phase1_channels)

__all__ = ['MmseOptConfig', 'DivergenceError', 'DualSinrProblem', 'IcDual',
           'mat_precoder', 'mmse_cost', 'mmse_gradient', 'gmat_mmse_optimize',
           'dual_sinr_problem', 'dsinr_solutions', 'gmat_dsinr_precoder',
           'ic_dual_matrices', 'mrt_zf_precoders', 'f_signal', 'g_interference',
           'PROJECTIONS']

log = logging.getLogger(__name__)

PROJECTIONS = ('scale-to-budget', 'none')


class DivergenceError(RuntimeError):
    """The MMSE descent produced a non-finite cost."""


@dataclass(frozen=True)
class MmseOptConfig:
    rho: float = 1.0
    beta: float = 0.01
    max_iters: int = 500
    projection: str = 'scale-to-budget'

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.projection not in PROJECTIONS:
            raise ValueError(f"projection must be one of {PROJECTIONS}")


def mat_precoder(csit, schedule):
    """MAT choice: ``w_ji^l`` is user i's channel in the slot of ``s_j^l``."""
    K, L = schedule.K, schedule.L
    w = np.zeros((L, K, K, K), dtype=complex)
    for l in range(L):
        for j in range(K):
            Ht = csit.channel(schedule.phase1_slot(j, l))
            for i in range(K):
                if i != j:
                    w[l, j, i] = Ht[i]
    return PrecoderSet(w)


# ---------------------------------------------------------------------------
# Virtual MMSE cost and its gradient
# ---------------------------------------------------------------------------

class _VirtualModel:
    """
    Virtual channels written as ``H_ij^l = A_ij^l + Q^l W_j^l(2)``.

    ``A`` holds the phase-1 rows (known), ``Q^l`` maps the order-2 block to
    every later row with all present-slot coefficients set to one.
    """

    def __init__(self, csit, schedule):
        self.schedule = schedule
        self.A = phase1_channels(csit, schedule)
        constants = make_lifting_constants(schedule)
        self.Q = np.array([lifting_operator(schedule, constants, l)
                           for l in range(schedule.L)])
        mask = gen_matrix_template(schedule.K, 2).mask()   # (Q2, K): user in row
        self.row_mask = mask.T[None, :, :, None]             # (1, K, Q2, 1)

    def channels(self, W2):
        # W2: (L, K, Q2, K) -> H: (K, L, K, T, K)
        return self.A + np.matmul(self.Q[:, None], W2)[None]

    @staticmethod
    def _gram(X):
        """``sum_n X[..., n, :, :] X[..., n, :, :]^H`` over the axis before (T, K)."""
        T = X.shape[-2]
        Y = np.swapaxes(X, -3, -2).reshape(X.shape[:-3] + (T, -1))
        return Y @ np.conj(np.swapaxes(Y, -1, -2))

    def cost_and_grad(self, W2, rho, with_grad=True):
        sch = self.schedule
        K, L, T = sch.K, sch.L, sch.T
        H = self.channels(W2)
        M = rho * self._gram(H.reshape(K, L * K, T, K))
        M[:, np.arange(T), np.arange(T)] += 1.0
        Minv = np.linalg.inv(M)
        Minv = 0.5 * (Minv + np.conj(np.swapaxes(Minv, -1, -2)))
        Hsig = H[np.arange(K), :, np.arange(K)]              # (K, L, T, K)
        X = Minv[:, None] @ Hsig                             # M^-1 H_ii^l
        J = float(K * L * K - rho * np.real(np.sum(Hsig.conj() * X)))
        if not with_grad:
            return J, None
        # dJ_i/dH* = rho^2 M^-1 S M^-1 H - [signal] rho M^-1 H,
        # S = sum_l H_ii^l H_ii^lH, summed over every branch of receiver i.
        MSM = rho ** 2 * self._gram(X)
        G = MSM[:, None, None] @ H
        G[np.arange(K), :, np.arange(K)] -= rho * X
        # Real/imaginary gradient: 2 Q^H sum_i dJ_i/dH*.
        grad = 2.0 * (np.conj(np.swapaxes(self.Q, -1, -2))[:, None] @ G.sum(axis=0))
        return J, grad * self.row_mask


def mmse_cost(precoders, csit, schedule, rho):
    """
    Virtual sum-MSE ``J = sum_l sum_i J_i^l``.

    ``J_i^l = tr(I - rho H_ii^lH (rho sum_{l',j} H_ij^l' H_ij^l'H + I)^-1 H_ii^l)``
    on the virtual channels.
    """
    model = _VirtualModel(csit, schedule)
    return model.cost_and_grad(precoders.W2_all(), rho, with_grad=False)[0]


def mmse_gradient(precoders, csit, schedule, rho):
    """
    Gradient of :func:`mmse_cost` with respect to every ``W_j^l(2)``.

    Returns an array of shape (L, K, Q_2, K); entry ``[l, j]`` is
    ``dJ/dRe(W_j^l(2)) + 1j * dJ/dIm(W_j^l(2))``, i.e. twice the Wirtinger
    derivative ``dJ/dW*``. Rows outside the order-2 template are zero.
    """
    model = _VirtualModel(csit, schedule)
    return model.cost_and_grad(precoders.W2_all(), rho)[1]


def f_signal(A, B):
    """``-A^H (A A^H + B)^-1 B (A A^H + B)^-1``.

    Conjugate transpose of ``dJ/dA*`` for ``J = tr(I - A^H (A A^H + B)^-1 A)``
    with ``B`` fixed.
    """
    Minv = np.linalg.inv(A @ A.conj().T + B)
    return -A.conj().T @ Minv @ B @ Minv


def g_interference(A, B):
    """``A^H (A A^H + B)^-1 (B - I) (A A^H + B)^-1``.

    Conjugate transpose of ``dJ/dA*`` for an interferer ``A`` when ``B - I``
    is exactly the desired-signal covariance (one signal term).
    """
    Minv = np.linalg.inv(A @ A.conj().T + B)
    return A.conj().T @ Minv @ (B - np.eye(B.shape[0])) @ Minv


def gmat_mmse_optimize(csit, schedule, cfg, init=None, return_history=False):
    """
    Fixed-step gradient descent on the virtual MMSE cost.

    Starts from the MAT precoders scaled to the power budget (or from
    `init`), applies ``W <- W - beta * grad`` and, with the
    ``scale-to-budget`` projection, rescales the whole set back onto the
    budget whenever a step exceeds it. The iterate with the lowest cost is
    returned.

    Raises
    ------
    DivergenceError
        If the cost becomes non-finite (step too large).
    """
    budget = schedule.power_budget
    if init is None:
        init = mat_precoder(csit, schedule).scaled_to(budget)
    model = _VirtualModel(csit, schedule)
    W = init.W2_all()
    mask = np.broadcast_to(model.row_mask[0], W.shape[1:])
    W = W * mask
    best_W, best_J = W, np.inf
    history = []
    for it in range(cfg.max_iters + 1):
        J, grad = model.cost_and_grad(W, cfg.rho, with_grad=it < cfg.max_iters)
        if not np.isfinite(J):
            raise DivergenceError(f"non-finite MMSE cost at iteration {it}; "
                                  f"step size beta={cfg.beta} is too large")
        history.append(J)
        if J < best_J:
            best_J, best_W = J, W
        if it == cfg.max_iters:
            break
        W = W - cfg.beta * grad
        if cfg.projection == 'scale-to-budget':
            p = float(np.sum(np.abs(W) ** 2))
            if p > budget:
                W = W * np.sqrt(budget / p)
    log.debug("MMSE descent: J %.6g -> %.6g in %d iterations",
              history[0], best_J, cfg.max_iters)
    out = PrecoderSet.from_W2(best_W)
    if return_history:
        return out, history
    return out


# ---------------------------------------------------------------------------
# Regularized dual SINR
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DualSinrProblem:
    """Pencil whose dominant generalized eigenvector maximizes ``DSINR_ji^l``."""
    A: np.ndarray
    B: np.ndarray
    gamma: float

    def quotient(self, w):
        w = np.asarray(w, dtype=complex)
        return float(np.real(np.vdot(w, self.A @ w)) / np.real(np.vdot(w, self.B @ w)))


def _complement_outer(h):
    P = orth_complement(h)
    return P @ P.conj().T


def dual_sinr_problem(csit, schedule, j, i, l, rho, w_norm2=1.0):
    """
    Numerator and denominator of ``DSINR_ji^l``.

    With ``t`` the slot of ``s_j^l`` and ``P_k = h_k^perp(t) h_k^perp(t)^H``::

        A = I + rho * sum_{k != i} P_k
        B = gamma I + rho * P_i,   gamma = ||w||^2 + ||h_i(t)||^2 + 1/rho
    """
    if i == j:
        raise ValueError("DSINR is defined for j != i only")
    K = schedule.K
    Ht = csit.channel(schedule.phase1_slot(j, l))
    eye = np.eye(K, dtype=complex)
    A = eye + rho * sum(_complement_outer(Ht[k]) for k in range(K) if k != i)
    gamma = w_norm2 + float(np.real(np.vdot(Ht[i], Ht[i]))) + 1.0 / rho
    B = gamma * eye + rho * _complement_outer(Ht[i])
    A = 0.5 * (A + A.conj().T)
    B = 0.5 * (B + B.conj().T)
    return DualSinrProblem(A, B, gamma)


def dsinr_solutions(csit, schedule, rho):
    """``{(l, j, i): ExtremeEigvec}`` for every order-2 combining vector."""
    out = {}
    K = schedule.K
    for l in range(schedule.L):
        for j in range(K):
            for i in range(K):
                if i == j:
                    continue
                prob = dual_sinr_problem(csit, schedule, j, i, l, rho)
                out[(l, j, i)] = generalized_eig_extreme(prob.A, prob.B, 'max')
    return out


def gmat_dsinr_precoder(csit, schedule, rho):
    """
    Closed-form GMAT precoders: each ``w_ji^l`` is the unit-norm dominant
    generalized eigenvector of its dual-SINR pencil.

    The vectors are returned at unit norm; callers rescale the set to the
    power budget (the direction is scale invariant).
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    sols = dsinr_solutions(csit, schedule, rho)
    K = schedule.K
    w = np.zeros((schedule.L, K, K, K), dtype=complex)
    degenerate = []
    for (l, j, i), sol in sols.items():
        w[l, j, i] = sol.vector
        if sol.degenerate:
            degenerate.append((l, j, i))
    if degenerate:
        log.debug("degenerate DSINR pencils at %s", degenerate)
    return PrecoderSet(w)


# ---------------------------------------------------------------------------
# Two-user interference-channel view
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IcDual:
    H1: np.ndarray
    H2: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    sigma1_sq: float
    sigma2_sq: float
    alphas: tuple
    betas: tuple
    rho: float
    C: float

    def sinr(self, w1, w2):
        r = self.rho
        s1 = r * np.linalg.norm(self.H1 @ w1) ** 2 / (self.sigma1_sq + r * np.linalg.norm(self.H2 @ w2) ** 2)
        s2 = r * np.linalg.norm(self.G2 @ w2) ** 2 / (self.sigma2_sq + r * np.linalg.norm(self.G1 @ w1) ** 2)
        return float(s1), float(s2)

    def sum_mi(self, w1, w2):
        """``log2(1 + SINR_1) + log2(1 + SINR_2) + log2(C)``."""
        s1, s2 = self.sinr(w1, w2)
        return float(np.log2(1 + s1) + np.log2(1 + s2) + np.log2(self.C))


def ic_dual_matrices(episode, precoders, rho, phase2_gains=None):
    """
    Equivalent 2-user single-beam MIMO interference channel.

    Parameters
    ----------
    episode : ChannelEpisode or CsitView
        Slots 1 and 2 are read; slot 3 only when `phase2_gains` is None.
    precoders : PrecoderSet
        Their norms enter the ``alpha_3`` / ``beta_3`` scalings.
    phase2_gains : tuple of complex, optional
        Override for ``(h_A1(3), h_B1(3))``; ``(1, 1)`` gives the virtual
        channel the transmitter can evaluate.
    """
    if precoders.K != 2 or episode.K != 2:
        raise ValueError("the interference-channel view needs K = 2")
    hA1, hA2 = episode.h(0, 1), episode.h(0, 2)
    hB1, hB2 = episode.h(1, 1), episode.h(1, 2)
    if phase2_gains is None:
        phase2_gains = (episode.h(0, 3)[0], episode.h(1, 3)[0])
    gA, gB = (abs(c) ** 2 for c in phase2_gains)
    w1n = float(np.real(np.vdot(precoders.w[0, 0, 1], precoders.w[0, 0, 1])))
    w2n = float(np.real(np.vdot(precoders.w[0, 1, 0], precoders.w[0, 1, 0])))
    nA1, nA2, nB1, nB2 = (float(np.real(np.vdot(h, h))) for h in (hA1, hA2, hB1, hB2))

    a2 = (1 + rho * nA2) / (rho * nA1)
    a1 = a2 / (1 + rho * nA1)
    a3 = 1.0 / (rho * gB * w1n)
    a4 = a3 + 1.0
    b2 = (1 + rho * nB1) / (rho * nB2)
    b1 = b2 / (1 + rho * nB2)
    b3 = 1.0 / (rho * gA * w2n)
    b4 = b3 + 1.0
    s1 = 1.0 / (rho * gA) + w2n
    s2 = 1.0 / (rho * gB) + w1n

    def stack(ca, h, cb):
        p = orth_complement(h)[:, 0]
        return np.vstack([np.sqrt(ca) * h.conj(), np.sqrt(cb) * p.conj()])

    return IcDual(H1=stack(a1, hA1, a2), H2=stack(b3, hA2, b4),
                  G1=stack(a3, hB1, a4), G2=stack(b1, hB2, b2),
                  sigma1_sq=s1, sigma2_sq=s2, alphas=(a1, a2, a3, a4),
                  betas=(b1, b2, b3, b4), rho=rho,
                  C=(1 + rho * nA1) * (1 + rho * nB2))


def mrt_zf_precoders(ic):
    """
    MRT and ZF beamformers of the interference-channel view.

    MRT: dominant eigenvectors of ``H1^H H1`` and ``G2^H G2``.
    ZF: minor eigenvectors of ``G1^H G1`` and ``H2^H H2``.
    Both sets have unit-norm vectors.
    """
    eye = np.eye(2)

    def gram(X):
        G = X.conj().T @ X
        return 0.5 * (G + G.conj().T)

    def pack(w1, w2):
        w = np.zeros((1, 2, 2, 2), dtype=complex)
        w[0, 0, 1] = w1
        w[0, 1, 0] = w2
        return PrecoderSet(w)

    mrt = pack(generalized_eig_extreme(gram(ic.H1), eye, 'max').vector,
               generalized_eig_extreme(gram(ic.G2), eye, 'max').vector)
    zf = pack(generalized_eig_extreme(gram(ic.G1), eye, 'min').vector,
              generalized_eig_extreme(gram(ic.H2), eye, 'min').vector)
    return mrt, zf
