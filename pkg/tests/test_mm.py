import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leoprecode.channel import ChannelBatch, ChannelStats, sample_channel
from leoprecode.mm import (DegenerateDirectionError, mm_constants, mm_minorizer,
                           mrt_init, regularized_update, solve_mm, total_power)
from leoprecode.rates import ergodic_sum_rate

from conftest import SIGMA2, random_stats, random_unit_columns
from oracles import mmse_chain


def rician_stats(rng, m=8, k=4, n_ut=4, kappa=1.0):
    base = random_stats(rng, m, k, snr_range=(10.0, 1000.0))
    return ChannelStats.from_arrays(base.G, base.beta, base.sigma2, kappa=kappa, n_ut=n_ut)


def random_precoder(rng, m, k, p):
    W = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
    return W * np.sqrt(p / total_power(W))


class TestConstants:
    def test_zero_precoder(self, rng):
        stats = rician_stats(rng)
        batch = sample_channel(stats, 50, seed=0)
        c = mm_constants(np.zeros((8, 4), complex), batch, stats)
        assert np.all(c.a == 0) and np.all(c.b == 0)
        np.testing.assert_allclose(c.c, 1.0, rtol=1e-15)

    @pytest.mark.parametrize("k_num", [1, 3])
    def test_single_draw_matches_vector_oracle(self, rng, k_num):
        stats = rician_stats(rng, m=5, k=k_num, n_ut=3)
        batch = sample_channel(stats, 1, seed=9)
        W = random_precoder(rng, 5, k_num, 4.0)
        c = mm_constants(W, batch, stats)
        for k in range(k_num):
            d = batch.draws[0, k]
            _, _, a, b, cc = mmse_chain(W, k, stats.G[:, k], d, stats.sigma2[k])
            assert c.a[k] == pytest.approx(a, rel=1e-9)
            assert c.b[k] == pytest.approx(b, rel=1e-9)
            assert c.c[k] == pytest.approx(cc, rel=1e-9)

    def test_batch_average_of_oracle(self, rng):
        stats = rician_stats(rng, m=4, k=2, n_ut=2)
        batch = sample_channel(stats, 20, seed=2)
        W = random_precoder(rng, 4, 2, 1.0)
        c = mm_constants(W, batch, stats)
        per = np.array([[mmse_chain(W, k, stats.G[:, k], batch.draws[s, k], stats.sigma2[k])[2:]
                         for k in range(2)] for s in range(20)])
        np.testing.assert_allclose(c.a, per[:, :, 0].real.mean(axis=0), rtol=1e-9)
        np.testing.assert_allclose(c.b, per[:, :, 1].mean(axis=0), rtol=1e-9)
        np.testing.assert_allclose(c.c, per[:, :, 2].real.mean(axis=0), rtol=1e-9)

    def test_deterministic(self, rng):
        stats = rician_stats(rng)
        batch = sample_channel(stats, 200, seed=0)
        W = mrt_init(stats, 10.0)
        c1, c2 = mm_constants(W, batch, stats), mm_constants(W, batch, stats)
        assert np.array_equal(c1.a, c2.a) and np.array_equal(c1.b, c2.b)

    def test_a_positive_in_open_range(self, rng):
        stats = rician_stats(rng)
        c = mm_constants(mrt_init(stats, 10.0), sample_channel(stats, 100, seed=0), stats)
        assert np.all(c.a > 0)


class TestMinorizer:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_touches_and_minorizes(self, seed):
        rng = np.random.default_rng(seed)
        stats = rician_stats(rng, m=6, k=3, n_ut=2)
        batch = sample_channel(stats, 100, seed=seed % 1000)
        W0 = random_precoder(rng, 6, 3, 5.0)
        r0 = ergodic_sum_rate(W0, stats, batch).per_ut_rate
        consts = mm_constants(W0, batch, stats)
        np.testing.assert_allclose(mm_minorizer(consts, W0, stats, r0), r0, rtol=1e-9, atol=1e-9)
        for _ in range(5):
            W = random_precoder(rng, 6, 3, rng.uniform(0.1, 10.0))
            h = mm_minorizer(consts, W, stats, r0)
            r = ergodic_sum_rate(W, stats, batch).per_ut_rate
            assert np.all(h <= r + 1e-9)


class TestRegularizedUpdate:
    def test_single_ut_mrt(self, rng):
        g = random_unit_columns(rng, 5, 1)
        b = np.array([0.7 - 0.2j])
        W, mu = regularized_update(np.zeros(1), b, g, 3.0)
        assert mu > 0
        assert total_power(W) == pytest.approx(3.0, rel=1e-12)
        phase = b[0] / abs(b[0])
        np.testing.assert_allclose(W[:, 0], np.sqrt(3.0) * phase * g[:, 0], atol=1e-12)

    def test_full_power_when_regularized(self, rng):
        G = random_unit_columns(rng, 8, 5)
        a = rng.uniform(0.0, 1e-3, 5)
        b = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        W, mu = regularized_update(a, b, G, 2.0)
        assert mu > 0
        assert abs(total_power(W) / 2.0 - 1) < 1e-9

    def test_unregularized_solution_kept(self, rng):
        G = random_unit_columns(rng, 8, 5)
        a = rng.uniform(1.0, 2.0, 5)
        b = 0.01 * (rng.standard_normal(5) + 1j * rng.standard_normal(5))
        W, mu = regularized_update(a, b, G, 100.0)
        assert mu == 0.0
        A = (G * a) @ G.conj().T
        # the solution lies in the span of G and satisfies the normal equations
        np.testing.assert_allclose(A @ W, G * b, atol=1e-12)
        assert total_power(W) <= 100.0

    def test_orthogonal_symmetric(self):
        G = np.eye(6, 3, dtype=complex)
        W, _ = regularized_update(np.full(3, 0.5), np.full(3, 3.0 + 1.0j), G, 3.0)
        np.testing.assert_allclose(np.sum(np.abs(W) ** 2, axis=0), 1.0, rtol=1e-12)

    def test_all_b_zero(self, rng):
        with pytest.raises(DegenerateDirectionError):
            regularized_update(np.ones(3), np.zeros(3), random_unit_columns(rng, 4, 3), 1.0)


class TestSolve:
    def test_single_ut(self, rng):
        stats = rician_stats(rng, m=6, k=1, n_ut=3)
        batch = sample_channel(stats, 500, seed=1)
        W, trace = solve_mm(stats, 2.0, batch=batch)
        g = stats.G[:, 0]
        phase = np.vdot(g, W[:, 0]) / abs(np.vdot(g, W[:, 0]))
        np.testing.assert_allclose(W[:, 0], np.sqrt(2.0) * phase * g, atol=1e-10)
        expect = np.mean(np.log2(1 + 2.0 * batch.norms2[:, 0] / stats.sigma2[0]))
        assert trace.objective[-1] == pytest.approx(expect, rel=1e-12)

    def test_monotone_and_feasible(self, rng):
        stats = rician_stats(rng, m=16, k=6, n_ut=4)
        batch = sample_channel(stats, 300, seed=2)
        W, trace = solve_mm(stats, 50.0, batch=batch, eps=1e-6, max_iter=300)
        assert np.all(np.diff(trace.objective) >= -1e-9)
        assert abs(total_power(W) / 50.0 - 1) < 1e-9
        assert trace.objective[-1] == pytest.approx(
            ergodic_sum_rate(W, stats, batch).sum_rate, rel=1e-12)

    def test_max_iter_flag(self, rng):
        stats = rician_stats(rng, m=16, k=8)
        _, trace = solve_mm(stats, 100.0, s_samples=100, eps=1e-12, max_iter=2)
        assert trace.iterations == 2 and not trace.converged
        assert len(trace.objective) == 3

    def test_internal_batch_is_seeded(self, rng):
        stats = rician_stats(rng)
        W1, _ = solve_mm(stats, 5.0, s_samples=100, seed=4)
        W2, _ = solve_mm(stats, 5.0, s_samples=100, seed=4)
        assert np.array_equal(W1, W2)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_phase_invariance(self, seed):
        rng = np.random.default_rng(seed)
        stats = rician_stats(rng, m=6, k=3, n_ut=2)
        batch = sample_channel(stats, 50, seed=0)
        W = random_precoder(rng, 6, 3, 4.0)
        rot = W * np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
        assert ergodic_sum_rate(rot, stats, batch).sum_rate == pytest.approx(
            ergodic_sum_rate(W, stats, batch).sum_rate, rel=1e-12)


def test_desk_like_instance_converges(rng):
    stats = ChannelStats.from_arrays(random_unit_columns(rng, 64, 16),
                                     rng.uniform(5e-13, 2e-12, 16), SIGMA2, kappa=1.0, n_ut=36)
    batch = sample_channel(stats, 500, seed=0)
    _, trace = solve_mm(stats, 100.0, batch=batch)
    assert trace.converged and trace.iterations <= 100
    assert np.all(np.diff(trace.objective) >= -1e-9)


def test_batch_type():
    assert ChannelBatch(np.zeros((2, 1, 1), complex)).norms2.shape == (2, 1)
