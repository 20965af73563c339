"""
Dense complex linear-algebra kernels.

Everything here is a pure function of its array arguments. Closed-form
precoders and rate expressions elsewhere in the package are written on
top of these few primitives so that their numerical contracts (phase
conventions, tolerances, positive-definiteness checks) live in one place.
"""

from typing import NamedTuple

import numpy as np

__all__ = ['ExtremeEigvec', 'is_hermitian', 'orth_complement',
           'generalized_eig_extreme', 'hermitian_sqrt', 'logdet_hpd',
           'char_poly_det2', 'rayleigh_quotient', 'fix_phase']

HERMITIAN_ATOL = 1e-12
PD_RTOL = 1e-12
DEGENERACY_RTOL = 1e-10
PSD_NEG_RTOL = 1e-10


class ExtremeEigvec(NamedTuple):
    """Result of :func:`generalized_eig_extreme`."""
    vector: np.ndarray
    quotient: float
    degenerate: bool


def is_hermitian(M, atol=HERMITIAN_ATOL):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    return bool(np.all(np.abs(M - M.conj().T) <= atol * scale))


def _check_hermitian(M, name):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {M.shape}")
    if not is_hermitian(M):
        raise ValueError(f"{name} is not Hermitian")
    return M


def fix_phase(v):
    """Rotate `v` so that its first nonzero entry is real and positive."""
    v = np.asarray(v, dtype=complex)
    scale = np.max(np.abs(v)) if v.size else 0.0
    if scale == 0.0:
        return v.copy()
    idx = np.flatnonzero(np.abs(v) > 1e-12 * scale)[0]
    out = v * (abs(v[idx]) / v[idx])
    out[idx] = abs(v[idx])
    return out


def orth_complement(h):
    """
    Scaled orthogonal complement of a channel vector.

    Parameters
    ----------
    h : array_like, shape (K,)
        Nonzero complex vector.

    Returns
    -------
    np.ndarray
        K x 1 for K = 2 and K x (K-1) otherwise. The columns are
        orthogonal to `h` and satisfy ``h h^H + P P^H = ||h||^2 I``.
        For K = 2 the single column is the rotation ``(-conj(h2), conj(h1))``.
    """
    h = np.asarray(h, dtype=complex).ravel()
    nrm = np.linalg.norm(h)
    if h.size < 2:
        raise ValueError("orth_complement needs a vector of length >= 2")
    if nrm == 0.0 or not np.isfinite(nrm):
        raise ValueError("orth_complement of a zero (or non-finite) vector")
    if h.size == 2:
        return np.array([[-np.conj(h[1])], [np.conj(h[0])]])
    # Rows of vh beyond the first span the null space of h^H.
    _, _, vh = np.linalg.svd(h.conj()[np.newaxis, :])
    basis = vh[1:].conj().T
    return nrm * basis


def rayleigh_quotient(v, A, B):
    v = np.asarray(v, dtype=complex)
    return float(np.real(v.conj() @ A @ v) / np.real(v.conj() @ B @ v))


def generalized_eig_extreme(A, B, which='max'):
    """
    Extreme generalized eigenvector of a Hermitian pencil (A, B).

    Solves ``A v = lambda B v`` through the Cholesky reduction
    ``B = L L^H`` and a Hermitian eigensolve on ``L^-1 A L^-H``.

    Parameters
    ----------
    A, B : array_like
        Hermitian matrices of equal size; `B` must be positive definite.
    which : {'max', 'min'}
        Whether to maximize or minimize ``v^H A v / v^H B v``.

    Returns
    -------
    ExtremeEigvec
        Unit-norm vector (first nonzero entry real positive), its quotient
        and a flag telling whether the extreme eigenvalue is degenerate.
        For a degenerate eigenspace the vector is the projection of the
        first canonical basis vector that does not vanish on it.
    """
    if which not in ('max', 'min'):
        raise ValueError("which must be 'max' or 'min'")
    A = _check_hermitian(A, 'A')
    B = _check_hermitian(B, 'B')
    if A.shape != B.shape:
        raise ValueError("A and B must have the same shape")
    evals_b = np.linalg.eigvalsh(B)
    if evals_b[0] <= PD_RTOL * max(evals_b[-1], 0.0) or evals_b[-1] <= 0.0:
        raise ValueError("B is not positive definite")

    L = np.linalg.cholesky(B)
    Linv = np.linalg.inv(L)
    C = Linv @ A @ Linv.conj().T
    C = 0.5 * (C + C.conj().T)
    evals, evecs = np.linalg.eigh(C)
    if which == 'max':
        target = evals[-1]
    else:
        target = evals[0]
    spread = max(np.max(np.abs(evals)), np.finfo(float).tiny)
    in_space = np.abs(evals - target) <= DEGENERACY_RTOL * spread
    degenerate = bool(np.count_nonzero(in_space) > 1)

    V = Linv.conj().T @ evecs[:, in_space]
    if degenerate:
        # Orthonormal basis of the eigenspace in the original coordinates.
        Qb, _ = np.linalg.qr(V)
        v = None
        for m in range(A.shape[0]):
            cand = Qb @ Qb[m].conj()
            if np.linalg.norm(cand) > 1e-8:
                v = cand
                break
    else:
        v = V[:, 0]
    v = fix_phase(v / np.linalg.norm(v))
    return ExtremeEigvec(v, rayleigh_quotient(v, A, B), degenerate)


def hermitian_sqrt(R):
    """
    Principal square root of a Hermitian positive semi-definite matrix.

    Eigenvalues slightly below zero (above ``-1e-10 * trace``) are clamped;
    anything more negative is rejected.
    """
    R = _check_hermitian(R, 'R')
    evals, evecs = np.linalg.eigh(R)
    tol = PSD_NEG_RTOL * max(abs(np.trace(R).real), np.finfo(float).tiny)
    if evals[0] < -tol:
        raise ValueError("R has a negative eigenvalue; not PSD")
    evals = np.clip(evals, 0.0, None)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def logdet_hpd(M):
    """Natural-log determinant of a Hermitian positive definite matrix."""
    M = _check_hermitian(M, 'M')
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise ValueError("M is not positive definite") from None
    d = np.real(np.diag(L))
    if np.any(d <= 0.0):
        raise ValueError("M is not positive definite")
    return float(2.0 * np.sum(np.log(d)))


def char_poly_det2(M, rho):
    """``det(I + rho M) = 1 + rho tr(M) + rho^2 det(M)`` for a 2x2 M."""
    M = np.asarray(M, dtype=complex)
    if M.shape != (2, 2):
        raise ValueError("char_poly_det2 needs a 2x2 matrix")
    tr = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return float(np.real(1.0 + rho * tr + rho ** 2 * det))
