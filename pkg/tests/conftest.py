import numpy as np
import pytest

from leoprecode.channel import ChannelStats

SIGMA2 = 8.28e-14  # thermal noise of the default scenario, W

ACCEPTANCE_LINES: list[str] = []


def random_unit_columns(rng, m, k):
    G = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
    return G / np.linalg.norm(G, axis=0)


def random_stats(rng, m, k, snr_range=(1.0, 100.0), sigma2=SIGMA2):
    """Instance with random unit ``g_k`` and ``beta_k/sigma^2`` log-uniform in ``snr_range``."""
    lo, hi = np.log(snr_range[0]), np.log(snr_range[1])
    snr = np.exp(rng.uniform(lo, hi, size=k))
    return ChannelStats.from_arrays(random_unit_columns(rng, m, k), snr * sigma2, sigma2)


def fourier_stats(m, snr, sigma2=SIGMA2):
    """Exactly orthogonal DFT columns, one per entry of ``snr``."""
    k = len(snr)
    G = np.exp(-2j * np.pi * np.outer(np.arange(m), np.arange(k)) / m) / np.sqrt(m)
    return ChannelStats.from_arrays(G, np.asarray(snr) * sigma2, sigma2)


def random_simplex(rng, k, p):
    return rng.dirichlet(np.ones(k)) * p


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
