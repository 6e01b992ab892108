"""Iteratively weighted MMSE design of the closed-form upper-bound sum rate."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .channel import ChannelStats
from .mm import SolveTrace, mrt_init, regularized_update, total_power
from .rates import link_gains, upper_bound_rates

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WmmseConstants:
    a_tilde: np.ndarray
    b_tilde: np.ndarray


def wmmse_constants(W: np.ndarray, stats: ChannelStats) -> WmmseConstants:
    gains = link_gains(W, stats.G)
    beta, sig2 = stats.beta, stats.sigma2
    total = sig2 + gains.sum(axis=1) * beta
    interf = sig2 + (gains.sum(axis=1) - np.diag(gains)) * beta
    gkwk = np.einsum("mk,mk->k", stats.G.conj(), W)
    # kept as a difference of two inverses; both terms are well scaled here
    a_tilde = np.clip(beta / interf - beta / total, 0.0, None)
    b_tilde = beta * gkwk / interf
    return WmmseConstants(a_tilde, b_tilde)


def solve_wmmse(stats: ChannelStats, p: float, *, init: np.ndarray | None = None,
                eps: float = 1e-3, max_iter: int = 200) -> tuple[np.ndarray, SolveTrace]:
    """Maximize the upper-bound sum rate; the trace holds that objective."""
    W = mrt_init(stats, p) if init is None else np.array(init, dtype=complex)
    if total_power(W) > p * (1 + 1e-9):
        raise ValueError("initial precoder exceeds the power budget")

    trace = SolveTrace([upper_bound_rates(W, stats).sum_rate])
    for _ in range(max_iter):
        consts = wmmse_constants(W, stats)
        W, _ = regularized_update(consts.a_tilde, consts.b_tilde, stats.G, p)
        trace.objective.append(upper_bound_rates(W, stats).sum_rate)
        trace.iterations += 1
        if abs(trace.objective[-1] - trace.objective[-2]) < eps:
            trace.converged = True
            break
    else:
        logger.warning("WMMSE design hit max_iter=%d without converging", max_iter)
    return W, trace
