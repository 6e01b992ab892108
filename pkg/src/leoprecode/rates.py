"""Ergodic (Monte-Carlo) and upper-bound rates of a linear precoder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelBatch, ChannelStats

LN2 = np.log(2.0)


@dataclass(frozen=True)
class RateReport:
    per_ut_rate: np.ndarray
    sum_rate: float
    estimator_stderr: np.ndarray
    method: str
    sum_stderr: float = 0.0


def link_gains(W: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``|w_i^H g_k|^2`` as a (K, K) array indexed ``[k, i]``."""
    return np.abs(G.conj().T @ W) ** 2


def sample_rates(W: np.ndarray, stats: ChannelStats,
                 norms2: np.ndarray) -> np.ndarray:
    """Per-sample rates ``log2(1 + SINR)`` for each row of ``norms2`` (S, K)."""
    gains = link_gains(W, stats.G)
    desired = np.diag(gains)
    interf = gains.sum(axis=1) - desired
    sinr = desired * norms2 / (interf * norms2 + stats.sigma2)
    return np.log1p(sinr) / LN2


def ergodic_sum_rate(W: np.ndarray, stats: ChannelStats,
                     batch: ChannelBatch) -> RateReport:
    """Sample-average ergodic rates with standard errors."""
    r = sample_rates(W, stats, batch.norms2)
    s = r.shape[0]
    per_ut = r.mean(axis=0)
    if s > 1:
        stderr = r.std(axis=0, ddof=1) / np.sqrt(s)
        sum_stderr = float(r.sum(axis=1).std(ddof=1) / np.sqrt(s))
    else:
        stderr = np.zeros_like(per_ut)
        sum_stderr = 0.0
    return RateReport(per_ut, float(per_ut.sum()), stderr, "monte_carlo",
                      sum_stderr)


def upper_bound_rates(W: np.ndarray, stats: ChannelStats) -> RateReport:
    """Closed-form rates with ``||d_k||^2`` replaced by its mean ``beta_k``."""
    r = sample_rates(W, stats, stats.beta[None, :])[0]
    return RateReport(r, float(r.sum()), np.zeros_like(r), "upper_bound")
