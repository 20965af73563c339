import numpy as np
import pytest

from gmat.channel import randn_c
from gmat.metrics import (RatePoint, char_poly_check, dof_slope, mmse_filter,
                          mutual_information_2user_closed, mutual_information_exact,
                          rayleigh_form_matrices, sum_mi_rayleigh_form, sum_rate,
                          user_mse)
from gmat.precoders import gmat_dsinr_precoder, mat_precoder
from gmat.protocol import PrecoderSet, effective_channels, make_lifting_constants

from conftest import phase2_view, random_episode


def unit(v):
    return v / np.linalg.norm(v)


def pack2(w1, w2):
    w = np.zeros((1, 2, 2, 2), dtype=complex)
    w[0, 0, 1], w[0, 1, 0] = w1, w2
    return PrecoderSet(w)


def true_channels(ep, s, P):
    return effective_channels(ep, s, P, make_lifting_constants(s, ep))


def test_rate_point_rejects_negative_error():
    with pytest.raises(ValueError):
        RatePoint(10.0, 5.0, 1.0, 10, -1.0)


def test_mmse_filter_null_and_matched_limits(rng):
    ep, s = random_episode(2, rng)
    H = true_channels(ep, s, mat_precoder(phase2_view(ep, s), s))[0]
    np.testing.assert_array_equal(mmse_filter(np.zeros_like(H), 0, 0, 3.0), 0)
    rho = 1e-9
    V = mmse_filter(H, 0, 0, rho)
    target = np.sqrt(rho) * H[0, 0]
    assert np.linalg.norm(V - target) < 1e-7 * np.linalg.norm(target)


@pytest.mark.parametrize('K', [2, 3])
def test_filter_mse_consistency(rng, K):
    ep, s = random_episode(K, rng)
    H = true_channels(ep, s, mat_precoder(phase2_view(ep, s), s))
    rho = 4.0
    for i in range(K):
        for l in range(s.L):
            V = mmse_filter(H[i], i, l, rho)
            via_filter = np.real(np.trace(np.eye(K) - np.sqrt(rho) * V.conj().T @ H[i, l, i]))
            assert via_filter == pytest.approx(user_mse(H[i], i, l, rho), rel=1e-10)
            # direct error covariance of the filtered streams
            E = np.eye(K) - np.sqrt(rho) * V.conj().T @ H[i, l, i]
            cov = E @ E.conj().T + V.conj().T @ V
            leak = [np.sqrt(rho) * V.conj().T @ H[i, ll, j]
                    for ll in range(s.L) for j in range(K) if (ll, j) != (l, i)]
            interf = sum(X @ X.conj().T for X in leak)
            total = np.real(np.trace(cov + interf))
            assert total == pytest.approx(user_mse(H[i], i, l, rho), rel=1e-10)


def test_mi_without_interference(rng):
    ep, s = random_episode(2, rng)
    H = true_channels(ep, s, mat_precoder(phase2_view(ep, s), s))[0].copy()
    H[0, 1] = 0
    rho = 6.0
    direct = np.log2(np.linalg.det(np.eye(s.T) + rho * H[0, 0] @ H[0, 0].conj().T).real)
    assert mutual_information_exact(H, 0, 0, rho) == pytest.approx(direct, rel=1e-12)
    assert mutual_information_exact(H, 0, 0, 0.0) == 0.0


def test_closed_form_matches_exact_at_mat(rng):
    ep, s = random_episode(2, rng)
    P = mat_precoder(phase2_view(ep, s), s)
    H = true_channels(ep, s, P)
    rho = 25.0
    IA, IB = mutual_information_2user_closed(P.vector(0, 1), P.vector(1, 0), ep, rho)
    assert IA == pytest.approx(mutual_information_exact(H[0], 0, 0, rho), rel=1e-9)
    assert IB == pytest.approx(mutual_information_exact(H[1], 1, 0, rho), rel=1e-9)


@pytest.mark.parametrize('rho', [0.1, 25.0, 1e4])
def test_closed_form_matches_exact_random(rng, rho):
    for _ in range(50):
        ep, s = random_episode(2, rng)
        w1, w2 = randn_c(rng, 2), randn_c(rng, 2)
        H = true_channels(ep, s, pack2(w1, w2))
        IA, IB = mutual_information_2user_closed(w1, w2, ep, rho)
        assert IA == pytest.approx(mutual_information_exact(H[0], 0, 0, rho), rel=1e-9)
        assert IB == pytest.approx(mutual_information_exact(H[1], 1, 0, rho), rel=1e-9)


def test_closed_form_zero_precoder(rng):
    ep, _ = random_episode(2, rng)
    rho = 3.0
    IA, _, parts = mutual_information_2user_closed(np.zeros(2), randn_c(rng, 2), ep, rho,
                                                   return_parts=True)
    assert parts['theta1'] == 0
    assert IA == np.log2(1 + rho * np.vdot(ep.h(0, 1), ep.h(0, 1)).real)


def test_rayleigh_form_matches_closed_form(rng):
    for rho in (0.1, 1.0, 10.0, 1000.0):
        for _ in range(25):
            ep, _ = random_episode(2, rng)
            w1, w2 = unit(randn_c(rng, 2)), unit(randn_c(rng, 2))
            IA, IB = mutual_information_2user_closed(w1, w2, ep, rho)
            assert sum_mi_rayleigh_form(w1, w2, ep, rho) == pytest.approx(IA + IB, rel=1e-9)


def test_rayleigh_form_rejects_non_unit(rng):
    ep, _ = random_episode(2, rng)
    with pytest.raises(ValueError):
        sum_mi_rayleigh_form(2 * unit(randn_c(rng, 2)), unit(randn_c(rng, 2)), ep, 1.0)


def test_aligned_precoder_hits_denominator_floor(rng):
    ep, _ = random_episode(2, rng)
    rho = 10.0
    m = rayleigh_form_matrices(ep, rho)
    w1 = unit(ep.h(1, 1))
    nB2 = np.vdot(ep.h(1, 2), ep.h(1, 2)).real
    floor = (1 + rho * nB2) * m['gamma2']
    assert np.real(np.vdot(w1, m['Q1'] @ w1)) == pytest.approx(floor, rel=1e-12)
    for _ in range(100):
        u = unit(randn_c(rng, 2))
        assert np.real(np.vdot(u, m['Q1'] @ u)) >= floor * (1 - 1e-12)


def test_rayleigh_form_high_snr_limit(rng):
    ep, _ = random_episode(2, rng)
    rho = 1e8
    w1, w2 = unit(ep.h(1, 1)), unit(ep.h(0, 2))
    m = rayleigh_form_matrices(ep, rho)
    a = np.real(np.vdot(w1, m['R1'] @ w1) / np.vdot(w2, m['R2'] @ w2))
    b = np.real(np.vdot(w2, m['Q2'] @ w2) / np.vdot(w1, m['Q1'] @ w1))
    value = sum_mi_rayleigh_form(w1, w2, ep, rho) - np.log2(m['C'])
    assert value == pytest.approx(np.log2(a * b), rel=1e-6)


def test_char_poly_step(rng):
    for _ in range(50):
        ep, _ = random_episode(2, rng)
        closed, direct = char_poly_check(randn_c(rng, 2), randn_c(rng, 2), ep, 7.0)
        assert closed == pytest.approx(direct, rel=1e-10)


def test_sum_rate_two_user_is_mean_over_block(rng):
    ep, s = random_episode(2, rng)
    P = mat_precoder(phase2_view(ep, s), s)
    IA, IB = mutual_information_2user_closed(P.vector(0, 1), P.vector(1, 0), ep, 10.0)
    assert sum_rate(ep, P, 10.0, s) == pytest.approx((IA + IB) / 3, rel=1e-10)
    assert sum_rate(ep, P, 0.0, s) == 0.0


@pytest.mark.parametrize('K', [2, 3])
def test_sum_rate_matches_per_user_exact(rng, K):
    ep, s = random_episode(K, rng)
    P = gmat_dsinr_precoder(phase2_view(ep, s), s, 3.0).scaled_to(s.power_budget)
    H = true_channels(ep, s, P)
    total = sum(mutual_information_exact(H[i], i, l, 3.0) for i in range(K) for l in range(s.L))
    assert sum_rate(ep, P, 3.0, s) == pytest.approx(total / s.T, rel=1e-10)


@pytest.mark.parametrize('K', [2, 3])
def test_rates_nonnegative_and_monotone(rng, K):
    ep, s = random_episode(K, rng)
    P = mat_precoder(phase2_view(ep, s), s)
    rates = [sum_rate(ep, P, r, s) for r in np.logspace(-2, 6, 12)]
    assert rates[0] >= 0
    assert all(b > a for a, b in zip(rates, rates[1:]))


@pytest.mark.parametrize('K', [2, 3])
def test_linear_receiver_rate_below_joint_mi(rng, K):
    ep, s = random_episode(K, rng)
    P = mat_precoder(phase2_view(ep, s), s)
    for rho in (0.5, 10.0, 100.0):
        lin = sum_rate(ep, P, rho, s, mode='mmse-sinr')
        assert 0 <= lin <= sum_rate(ep, P, rho, s) * (1 + 1e-12)
    with pytest.raises(ValueError):
        sum_rate(ep, P, 1.0, s, mode='capacity')


def test_dof_slope_synthetic_line():
    pts = [RatePoint(10 * np.log10(r), r, 4 / 3 * np.log2(r), 1, 0.0) for r in (1e6, 1e7, 1e8)]
    assert dof_slope(pts) == pytest.approx(4 / 3, rel=1e-12)
    with pytest.raises(ValueError):
        dof_slope(pts[:1])
    with pytest.raises(ValueError):
        dof_slope([pts[0], pts[0]])


def test_mat_slope_two_user(rng):
    eps = [random_episode(2, rng) for _ in range(50)]
    pts = []
    for snr in (60.0, 70.0, 80.0):
        rho = 10 ** (snr / 10) / 2
        rates = [sum_rate(ep, mat_precoder(phase2_view(ep, s), s), rho, s) for ep, s in eps]
        pts.append(RatePoint(snr, rho, float(np.mean(rates)), len(rates), 0.0))
    assert dof_slope(pts) == pytest.approx(4 / 3, rel=0.05)


def test_chunked_rates_match(rng, monkeypatch):
    import gmat.metrics as metrics
    ep, s = random_episode(3, rng)
    P = mat_precoder(phase2_view(ep, s), s)
    whole = sum_rate(ep, P, 5.0, s)
    monkeypatch.setattr(metrics, '_CHUNK_BYTES', 1)
    assert sum_rate(ep, P, 5.0, s) == pytest.approx(whole, rel=1e-12)


@pytest.mark.parametrize('K', [4, 5])
def test_larger_systems_run(rng, K):
    ep, s = random_episode(K, rng)
    view = phase2_view(ep, s)
    for P in (mat_precoder(view, s), gmat_dsinr_precoder(view, s, 5.0)):
        P = P.scaled_to(s.power_budget)
        for mode in ('exact-mi', 'mmse-sinr'):
            assert sum_rate(ep, P, 5.0, s, mode=mode) > 0
