"""Minorization-maximization precoder design on the Monte-Carlo ergodic sum rate.

Each iteration replaces every ergodic rate by a concave minorizer built from
the per-sample MMSE receivers and maximizes the sum of minorizers in closed
form (a regularized MMSE-type precoder whose regularization enforces the sum
power budget). The sample set is drawn once and kept fixed, so the sample
average objective is non-decreasing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelBatch, ChannelStats, sample_channel
from .rates import LN2, ergodic_sum_rate, link_gains

logger = logging.getLogger(__name__)

MMSE_FLOOR = 1e-15
POWER_RTOL = 1e-12
MAX_BISECTION = 200


class DegenerateDirectionError(RuntimeError):
    """The update has no preferred direction (all ``b_k`` vanish)."""


class NumericError(ArithmeticError):
    pass


@dataclass
class SolveTrace:
    objective: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


@dataclass(frozen=True)
class MmConstants:
    a: np.ndarray  # (K,) real, >= 0
    b: np.ndarray  # (K,) complex
    c: np.ndarray  # (K,) real


def mrt_init(stats: ChannelStats, p: float) -> np.ndarray:
    """Matched-filter columns ``g_k`` at equal power ``P/K``."""
    return stats.G * np.sqrt(p / stats.num_uts)


def total_power(W: np.ndarray) -> float:
    return float(np.sum(W.real ** 2 + W.imag ** 2))


def mm_constants(W: np.ndarray, batch: ChannelBatch,
                 stats: ChannelStats) -> MmConstants:
    """Sample averages defining the minorizer of each ergodic rate at ``W``.

    With ``T = sigma^2 + sum_i |g^H w_i|^2 ||d||^2`` and the MMSE receiver
    ``c = d g^H w_k / T`` this evaluates ``E{|d^H c|^2/MMSE}``,
    ``E{d^H c/MMSE}`` and ``E{(sigma^2 ||c||^2 + 1)/MMSE}``.
    """
    n2 = batch.norms2
    gains = link_gains(W, stats.G)
    desired = np.diag(gains)
    total = gains.sum(axis=1)
    gkwk = np.einsum("mk,mk->k", stats.G.conj(), W)  # g_k^H w_k
    sig2 = stats.sigma2

    t = sig2 + total * n2
    mmse = (sig2 + (total - desired) * n2) / t
    if np.any(mmse <= MMSE_FLOOR):
        raise NumericError("per-sample MMSE is not positive")
    a = np.mean(n2 ** 2 * desired / (t ** 2 * mmse), axis=0)
    b = gkwk * np.mean(n2 / (t * mmse), axis=0)
    c = np.mean((sig2 * n2 * desired / t ** 2 + 1.0) / mmse, axis=0)
    return MmConstants(a, b, c)


def mm_minorizer(consts: MmConstants, W: np.ndarray, stats: ChannelStats,
                 rates_at_anchor: np.ndarray) -> np.ndarray:
    """Value of each UT's minorizer at ``W`` (anchored where ``consts`` were built)."""
    gains = link_gains(W, stats.G)
    gkwk = np.einsum("mk,mk->k", stats.G.conj(), W)
    quad = (consts.a * gains.sum(axis=1)
            - 2.0 * np.real(gkwk.conj() * consts.b) + consts.c)
    return (1.0 - quad) / LN2 + rates_at_anchor


def regularized_update(a: np.ndarray, b: np.ndarray, G: np.ndarray,
                       p: float) -> tuple[np.ndarray, float]:
    """Solve ``w_k = (sum_i a_i g_i g_i^H + mu I)^{-1} g_k b_k`` with the
    smallest ``mu >= 0`` keeping ``sum_k ||w_k||^2 <= P``.

    Returns the precoder matrix and ``mu``. The shared matrix is diagonalised
    once so the power-vs-``mu`` bisection only touches scalars.
    """
    b = np.asarray(b, dtype=complex)
    if not np.any(b != 0):
        raise DegenerateDirectionError("all b_k are zero")
    if p <= 0:
        raise ValueError("power budget must be positive")
    a = np.clip(np.asarray(a, dtype=float), 0.0, None)

    A = (G * a) @ G.conj().T
    e, U = np.linalg.eigh(A)
    e = np.clip(e, 0.0, None)
    Z = U.conj().T @ (G * b)
    z2 = np.sum(Z.real ** 2 + Z.imag ** 2, axis=1)

    def power(mu):
        return float(np.sum(z2 / (e + mu) ** 2))

    null = e <= 1e-12 * max(e.max(), np.finfo(float).tiny)
    mu = 0.0
    bounded = z2[null].sum() <= 1e-20 * z2.sum()
    if bounded:
        inv = np.where(null, 0.0, 1.0 / np.where(null, 1.0, e))
        p0 = float(np.sum(z2 * inv ** 2))
        if p0 <= p:
            return U @ (Z * inv[:, None]), 0.0

    mu_hi = np.linalg.norm(A) + np.abs(b).sum() / np.sqrt(p)
    while power(mu_hi) >= p:
        mu_hi *= 2.0
    mu_lo = 0.0
    for _ in range(MAX_BISECTION):
        mu = 0.5 * (mu_lo + mu_hi)
        pw = power(mu)
        if abs(pw - p) <= POWER_RTOL * p:
            break
        if pw > p:
            mu_lo = mu
        else:
            mu_hi = mu
    W = U @ (Z / (e + mu)[:, None])
    # remove the residual bisection error so the budget is met exactly
    W *= np.sqrt(p / total_power(W))
    return W, mu


def solve_mm(stats: ChannelStats, p: float, *, batch: ChannelBatch | None = None,
             s_samples: int = 1000, seed: int = 0, init: np.ndarray | None = None,
             eps: float = 1e-3, max_iter: int = 200) -> tuple[np.ndarray, SolveTrace]:
    """MM precoder design maximizing the sample-average ergodic sum rate.

    ``batch`` is the frozen sample set; if omitted, ``s_samples`` draws are
    made from ``stats`` with ``seed``. Stops when the sum rate changes by
    less than ``eps`` bits/s/Hz or after ``max_iter`` updates.
    """
    if batch is None:
        batch = sample_channel(stats, s_samples, seed)
    W = mrt_init(stats, p) if init is None else np.array(init, dtype=complex)
    if total_power(W) > p * (1 + 1e-9):
        raise ValueError("initial precoder exceeds the power budget")

    trace = SolveTrace([ergodic_sum_rate(W, stats, batch).sum_rate])
    for _ in range(max_iter):
        consts = mm_constants(W, batch, stats)
        W, _ = regularized_update(consts.a, consts.b, stats.G, p)
        trace.objective.append(ergodic_sum_rate(W, stats, batch).sum_rate)
        trace.iterations += 1
        if abs(trace.objective[-1] - trace.objective[-2]) < eps:
            trace.converged = True
            break
    else:
        logger.warning("MM design hit max_iter=%d without converging", max_iter)
    return W, trace
