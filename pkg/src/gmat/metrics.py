"""
Receiver-side quantities: MMSE filters and errors, mutual information,
sum rates and high-SNR slopes.

The received block at user ``i`` over all ``T`` slots is

    y_i = sqrt(rho) * sum_{l, j} H_ij^l s_j^l + n_i,

with unit-power symbols and unit-variance noise. Functions taking
``H_user`` expect the stack of user ``i``'s effective channels with shape
(L, K, T, K), i.e. ``effective_channels(...)[i]``.

Mutual information treats every stream other than the one being decoded,
including the user's own other branches, as Gaussian noise. All rates are
in bits.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import char_poly_det2, logdet_hpd, orth_complement
from .protocol import effective_channels, make_lifting_constants

__all__ = ['RatePoint', 'received_covariance', 'mmse_filter', 'user_mse',
           'mutual_information_exact', 'mutual_information_2user_closed',
           'sum_mi_rayleigh_form', 'two_user_terms', 'sum_rate', 'dof_slope',
           'RATE_MODES']

LOG2E = 1.0 / np.log(2.0)
RATE_MODES = ('exact-mi', 'mmse-sinr')


@dataclass(frozen=True)
class RatePoint:
    snr_db: float
    rho: float
    sum_rate: float
    realizations: int
    std_err: float

    def __post_init__(self):
        if self.std_err < 0:
            raise ValueError("std_err must be nonnegative")


def received_covariance(H_user, rho):
    """``I + rho * sum_{l,j} H H^H`` for one receiver."""
    H_user = np.asarray(H_user)
    T = H_user.shape[-2]
    X = np.moveaxis(H_user.reshape(-1, T, H_user.shape[-1]), 1, 0).reshape(T, -1)
    M = rho * (X @ X.conj().T)
    M[np.diag_indices(T)] += 1.0
    return 0.5 * (M + M.conj().T)


def mmse_filter(H_user, i, l, rho):
    """``V_i^l = sqrt(rho) (rho sum H H^H + I)^-1 H_ii^l``, shape T x K."""
    M = received_covariance(H_user, rho)
    return np.sqrt(rho) * np.linalg.solve(M, H_user[l, i])


def user_mse(H_user, i, l, rho):
    """Sum of the per-stream MMSEs of ``s_i^l`` (the cost ``J_i^l``)."""
    M = received_covariance(H_user, rho)
    Hii = H_user[l, i]
    K = Hii.shape[1]
    return float(K - rho * np.real(np.trace(Hii.conj().T @ np.linalg.solve(M, Hii))))


def mutual_information_exact(H_user, i, l, rho):
    """
    ``I(s_i^l; y_i)`` in bits, everything else treated as noise.

    Computed as ``log det(N + rho H H^H) - log det(N)`` with ``N`` the
    covariance of noise plus all other streams.
    """
    if rho == 0:
        return 0.0
    M = received_covariance(H_user, rho)
    Hii = H_user[l, i]
    N = M - rho * Hii @ Hii.conj().T
    N = 0.5 * (N + N.conj().T)
    return max(0.0, (logdet_hpd(M) - logdet_hpd(N)) * LOG2E)


def _batched_logdet(M):
    L = np.linalg.cholesky(M)
    return 2.0 * np.sum(np.log(np.real(np.diagonal(L, axis1=-2, axis2=-1))), axis=-1)


_CHUNK_BYTES = 2 ** 28


def _receiver_rates(H_user, i, rho, mode):
    """Per-branch rates in bits of receiver ``i``, shape (L,)."""
    L, K, T, _ = H_user.shape
    M = received_covariance(H_user, rho)
    Hsig = H_user[:, i]                                # (L, T, K)
    if mode == 'exact-mi':
        # one T x T covariance per branch; chunk to bound memory
        step = max(1, _CHUNK_BYTES // (16 * T * T))
        rates = np.empty(L)
        ld_M = _batched_logdet(M)
        for a in range(0, L, step):
            Hs = Hsig[a:a + step]
            N = M[None] - rho * (Hs @ np.conj(np.swapaxes(Hs, -1, -2)))
            N = 0.5 * (N + np.conj(np.swapaxes(N, -1, -2)))
            rates[a:a + step] = (ld_M - _batched_logdet(N)) * LOG2E
    elif mode == 'mmse-sinr':
        X = np.linalg.solve(M, Hsig.transpose(1, 0, 2).reshape(T, -1)).reshape(T, L, -1)
        mse = 1.0 - rho * np.real(np.einsum('ltk,tlk->lk', Hsig.conj(), X))
        mse = np.clip(mse, np.finfo(float).tiny, 1.0)
        rates = -np.sum(np.log2(mse), axis=-1)
    else:
        raise ValueError(f"unknown rate mode {mode!r}; expected one of {RATE_MODES}")
    return np.clip(rates, 0.0, None)


def sum_rate(episode, precoders, rho, schedule, mode='exact-mi', constants=None):
    """
    Sum over users and branches of the per-stream-vector rates, divided by T.

    Uses the true (non-virtual) channels of the episode.
    """
    if mode not in RATE_MODES:
        raise ValueError(f"unknown rate mode {mode!r}; expected one of {RATE_MODES}")
    if rho == 0:
        return 0.0
    if constants is None:
        constants = make_lifting_constants(schedule, episode)
    total = 0.0
    for i in range(schedule.K):
        H_i = effective_channels(episode, schedule, precoders, constants,
                                 virtual=False, receivers=[i])[0]
        total += float(np.sum(_receiver_rates(H_i, i, rho, mode)))
    return total / schedule.T


def two_user_terms(episode, rho):
    """Scalars of the 2-user closed forms that do not depend on the precoders."""
    if episode.K != 2:
        raise ValueError("two-user closed forms need K = 2")
    hA1, hA2 = episode.h(0, 1), episode.h(0, 2)
    hB1, hB2 = episode.h(1, 1), episode.h(1, 2)
    cA = episode.h(0, 3)[0]
    cB = episode.h(1, 3)[0]
    n = {name: float(np.real(np.vdot(v, v)))
         for name, v in (('A1', hA1), ('A2', hA2), ('B1', hB1), ('B2', hB2))}
    return dict(hA1=hA1, hA2=hA2, hB1=hB1, hB2=hB2, gA=abs(cA) ** 2,
                gB=abs(cB) ** 2, n=n)


def _theta_delta(w_sig, w_int, h_sig, h_int, n_sig, n_int, g, rho):
    """Theta(w_sig) and Delta(w_int) for one receiver of the 2-user protocol."""
    ws2 = np.real(np.vdot(w_sig, w_sig))
    wi2 = np.real(np.vdot(w_int, w_int))
    proj_s = abs(np.vdot(h_sig, w_sig)) ** 2
    proj_i = abs(np.vdot(h_int, w_int)) ** 2
    theta = (1 + rho * n_int) * rho * g * (ws2 + rho * ws2 * n_sig - rho * proj_s)
    delta = (1 + rho * n_int) * (1 + rho * g * wi2) - rho ** 2 * g * proj_i
    return theta, delta


def mutual_information_2user_closed(w1, w2, episode, rho, return_parts=False):
    """
    2-user MI of both receivers via the characteristic-polynomial reduction.

    ``I_A = log2(1 + rho ||h_A(1)||^2 + Theta_1(w1) / Delta_1(w2))`` and the
    mirror image for user B.
    """
    t = two_user_terms(episode, rho)
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    th1, de1 = _theta_delta(w1, w2, t['hA1'], t['hA2'], t['n']['A1'], t['n']['A2'], t['gA'], rho)
    th2, de2 = _theta_delta(w2, w1, t['hB2'], t['hB1'], t['n']['B2'], t['n']['B1'], t['gB'], rho)
    IA = np.log2(1 + rho * t['n']['A1'] + th1 / de1)
    IB = np.log2(1 + rho * t['n']['B2'] + th2 / de2)
    if return_parts:
        return float(IA), float(IB), dict(theta1=th1, delta1=de1, theta2=th2, delta2=de2)
    return float(IA), float(IB)


def reduced_det2_matrix(w1, w2, episode, rho):
    """
    The 2x2 matrix ``M`` with ``I_A = log det(I + rho M)``.

    Obtained after moving the third row of user A's channels next to the
    first; used to cross-check the characteristic-polynomial step.
    """
    t = two_user_terms(episode, rho)
    c = episode.h(0, 3)[0]
    hA1 = t['hA1']
    ip = np.vdot(w1, hA1)                                  # w1^H h_A(1)
    G = np.array([[t['n']['A1'], np.conj(c) * ip],
                  [c * np.conj(ip), t['gA'] * np.real(np.vdot(w1, w1))]])
    _, de1 = _theta_delta(w1, w2, hA1, t['hA2'], t['n']['A1'], t['n']['A2'], t['gA'], rho)
    S = np.diag([1.0, (1 + rho * t['n']['A2']) / de1])
    # sqrt(S) G sqrt(S) is Hermitian and has the same determinant identity.
    Sh = np.sqrt(S)
    return Sh @ G @ Sh


def rayleigh_form_matrices(episode, rho, w1_norm2=1.0, w2_norm2=1.0):
    """R_1, R_2, Q_1, Q_2, gamma_1, gamma_2 and C of the 2-user sum-MI identity."""
    t = two_user_terms(episode, rho)
    n = t['n']
    I2 = np.eye(2)

    def outer(h):
        p = orth_complement(h)
        return p @ p.conj().T

    gamma1 = (1 + rho * n['A2']) / (rho * t['gA']) + w2_norm2
    gamma2 = (1 + rho * n['B1']) / (rho * t['gB']) + w1_norm2
    R1 = (1 + rho * n['A2']) * (I2 + rho * outer(t['hA1']))
    R2 = (1 + rho * n['A1']) * (gamma1 * I2 + rho * outer(t['hA2']))
    Q1 = (1 + rho * n['B2']) * (gamma2 * I2 + rho * outer(t['hB1']))
    Q2 = (1 + rho * n['B1']) * (I2 + rho * outer(t['hB2']))
    C = (1 + rho * n['A1']) * (1 + rho * n['B2'])
    return dict(R1=R1, R2=R2, Q1=Q1, Q2=Q2, gamma1=gamma1, gamma2=gamma2, C=C)


def _quad(w, A):
    return float(np.real(np.vdot(w, A @ w)))


def sum_mi_rayleigh_form(w1, w2, episode, rho, tol=1e-9):
    """
    ``log2(1 + w1'R1w1 / w2'R2w2) + log2(1 + w2'Q2w2 / w1'Q1w1) + log2(C)``.

    Only valid for unit-norm precoders.
    """
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    for name, w in (('w1', w1), ('w2', w2)):
        if abs(np.linalg.norm(w) - 1.0) > tol:
            raise ValueError(f"{name} must have unit norm for the Rayleigh-quotient form")
    m = rayleigh_form_matrices(episode, rho)
    a = _quad(w1, m['R1']) / _quad(w2, m['R2'])
    b = _quad(w2, m['Q2']) / _quad(w1, m['Q1'])
    return float(np.log2(1 + a) + np.log2(1 + b) + np.log2(m['C']))


def dof_slope(curve):
    """Least-squares slope of sum rate against ``log2(rho)``."""
    pts = list(curve)
    if len(pts) < 2:
        raise ValueError("need at least two rate points to fit a slope")
    x = np.log2([p.rho for p in pts])
    y = np.array([p.sum_rate for p in pts])
    if np.ptp(x) == 0:
        raise ValueError("rate points must span more than one SNR")
    return float(np.polyfit(x, y, 1)[0])


def char_poly_check(w1, w2, episode, rho):
    """Pair (closed form, direct determinant) for the reduced 2x2 step."""
    M = reduced_det2_matrix(w1, w2, episode, rho)
    return char_poly_det2(M, rho), float(np.real(np.linalg.det(np.eye(2) + rho * M)))
