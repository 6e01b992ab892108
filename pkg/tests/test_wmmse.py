import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leoprecode.channel import ChannelBatch
from leoprecode.lmo import waterfilling
from leoprecode.mm import mm_constants, total_power
from leoprecode.rates import upper_bound_rates
from leoprecode.wmmse import solve_wmmse, wmmse_constants

from conftest import fourier_stats, random_stats
from oracles import grid_sum_rate_k2


def random_precoder(rng, m, k, p):
    W = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
    return W * np.sqrt(p / total_power(W))


def test_zero_precoder(rng):
    c = wmmse_constants(np.zeros((4, 3), complex), random_stats(rng, 4, 3))
    assert np.all(c.a_tilde == 0) and np.all(c.b_tilde == 0)


def test_single_ut_closed_form(rng):
    stats = random_stats(rng, 4, 1)
    W = random_precoder(rng, 4, 1, 2.0)
    beta, s2 = stats.beta[0], stats.sigma2[0]
    gw = np.vdot(stats.G[:, 0], W[:, 0])
    c = wmmse_constants(W, stats)
    assert c.a_tilde[0] == pytest.approx(beta / s2 - beta / (s2 + abs(gw) ** 2 * beta), rel=1e-12)
    assert c.b_tilde[0] == pytest.approx(beta * gw / s2, rel=1e-12)


def test_two_ut_scalar_oracle(rng):
    stats = random_stats(rng, 3, 2)
    W = random_precoder(rng, 3, 2, 5.0)
    c = wmmse_constants(W, stats)
    for k in range(2):
        g, beta, s2 = stats.G[:, k], stats.beta[k], stats.sigma2[k]
        own = abs(np.vdot(g, W[:, k])) ** 2 * beta
        other = sum(abs(np.vdot(g, W[:, i])) ** 2 * beta for i in range(2) if i != k)
        assert c.a_tilde[k] == pytest.approx(beta / (s2 + other) - beta / (s2 + other + own), rel=1e-10)
        assert c.b_tilde[k] == pytest.approx(beta * np.vdot(g, W[:, k]) / (s2 + other), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_equals_mm_constants_at_mean_power(seed):
    """With every ||d_k||^2 pinned to beta_k the sample-average constants
    reduce to the closed-form ones."""
    rng = np.random.default_rng(seed)
    stats = random_stats(rng, 5, 3)
    W = random_precoder(rng, 5, 3, rng.uniform(0.1, 10.0))
    draws = np.sqrt(stats.beta)[None, :, None] * np.ones((1, 3, 1), complex)
    mm = mm_constants(W, ChannelBatch(draws), stats)
    wm = wmmse_constants(W, stats)
    np.testing.assert_allclose(mm.a, wm.a_tilde, rtol=1e-8)
    np.testing.assert_allclose(mm.b, wm.b_tilde, rtol=1e-8)
    assert np.all(wm.a_tilde >= 0)


def test_single_ut_solution(rng):
    stats = random_stats(rng, 6, 1)
    W, trace = solve_wmmse(stats, 3.0)
    g = stats.G[:, 0]
    phase = np.vdot(g, W[:, 0]) / abs(np.vdot(g, W[:, 0]))
    np.testing.assert_allclose(W[:, 0], np.sqrt(3.0) * phase * g, atol=1e-10)
    assert trace.objective[-1] == pytest.approx(np.log2(1 + 3.0 * stats.snr_gain[0]), rel=1e-12)


def test_orthogonal_equal_snr_matches_waterfilling():
    stats = fourier_stats(8, [20.0] * 4)
    W, _ = solve_wmmse(stats, 2.0, eps=1e-12)
    powers = np.sum(np.abs(W) ** 2, axis=0)
    np.testing.assert_allclose(powers, waterfilling(stats, 2.0), rtol=1e-9)
    np.testing.assert_allclose(powers, 0.5, rtol=1e-9)


def test_monotone_and_full_power(rng):
    stats = random_stats(rng, 16, 10, snr_range=(10, 1000))
    W, trace = solve_wmmse(stats, 10.0, eps=1e-8, max_iter=500)
    assert np.all(np.diff(trace.objective) >= -1e-9)
    assert abs(total_power(W) / 10.0 - 1) < 1e-9
    assert trace.objective[-1] == pytest.approx(upper_bound_rates(W, stats).sum_rate, rel=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_tiny_instance_against_grid(seed):
    """Never above the grid optimum; equal to it for weakly correlated UTs
    (strongly correlated pairs can have a second, interior local maximum)."""
    rng = np.random.default_rng(100 + seed)
    stats = random_stats(rng, 2, 2)
    p = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
    _, trace = solve_wmmse(stats, p, eps=1e-12, max_iter=20000)
    best = grid_sum_rate_k2(stats.G, stats.snr_gain, p)
    assert trace.objective[-1] <= best + 1e-4
    if abs(np.vdot(stats.G[:, 0], stats.G[:, 1])) ** 2 < 0.3:
        assert trace.objective[-1] >= best - 1e-4


def test_rank_one_precoders_beat_random_covariances(rng):
    """The bound depends on the transmit covariances only through
    ``g_k^H Q_i g_k``; optimized rank-one precoders dominate random
    full-rank covariances of the same total power."""
    stats = random_stats(rng, 4, 3, snr_range=(10, 100))
    p = 2.0
    _, trace = solve_wmmse(stats, p, eps=1e-10, max_iter=2000)
    best = trace.objective[-1]
    G, snr = stats.G, stats.snr_gain
    for _ in range(200):
        Qs = []
        for _ in range(3):
            X = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            Qs.append(X @ X.conj().T)
        scale = p / sum(np.trace(Q).real for Q in Qs)
        gains = np.array([[np.real(G[:, k].conj() @ Q @ G[:, k]) * scale for Q in Qs]
                          for k in range(3)])
        sig = np.diag(gains) * snr
        interf = (gains.sum(axis=1) - np.diag(gains)) * snr
        assert np.log2(1 + sig / (1 + interf)).sum() <= best + 1e-9
