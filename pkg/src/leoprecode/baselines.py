"""Reference precoders: ASLNR and design from the LoS part only."""

from __future__ import annotations

import numpy as np

from .channel import ChannelStats
from .mm import SolveTrace
from .wmmse import solve_wmmse


def aslnr_precoders(stats: ChannelStats, p: float) -> np.ndarray:
    """Average signal-to-leakage-and-noise ratio precoders at equal power.

    ``w_k = sqrt(p_k) T_k^{-1} g_k / ||T_k^{-1} g_k||`` with
    ``T_k = sum_i beta_i g_i g_i^H + (sigma_k^2 / p_k) I`` and ``p_k = P/K``.
    """
    if p <= 0:
        raise ValueError("power budget must be positive")
    G = stats.G
    pk = p / stats.num_uts
    # the T_k differ only by a diagonal shift: diagonalise the common part once
    e, U = np.linalg.eigh((G * stats.beta) @ G.conj().T)
    Z = U.conj().T @ G
    shifts = stats.sigma2 / pk
    X = U @ (Z / (np.clip(e, 0.0, None)[:, None] + shifts[None, :]))
    return X / np.linalg.norm(X, axis=0) * np.sqrt(pk)


def los_only_precoders(stats: ChannelStats, p: float, *, eps: float = 1e-3,
                       max_iter: int = 200) -> tuple[np.ndarray, SolveTrace]:
    """Upper-bound design run on the LoS power ``kappa beta / (kappa + 1)`` only.

    The returned precoders are meant to be scored on the full Rician channel.
    """
    los_beta = stats.kappa * stats.beta / (stats.kappa + 1.0)
    return solve_wmmse(stats.with_beta(los_beta), p, eps=eps, max_iter=max_iter)
