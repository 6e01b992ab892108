"""Lagrange-multiplier optimization (LMO) of the upper-bound sum rate.

The upper-bound design is parametrized by one multiplier per UT. The
multipliers act as transmit powers in a virtual SIMO uplink with channels
``sqrt(beta_k/sigma_k^2) g_k`` and unit noise, whose MMSE rates ``r_k`` equal
the achievable downlink upper-bound rates. Downlink precoders are recovered
in closed form from the multipliers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import ChannelStats
from .mm import DegenerateDirectionError, NumericError, SolveTrace
from .rates import LN2

logger = logging.getLogger(__name__)

ACTIVE_RTOL = 1e-12
LOG_ARG_FLOOR = 1e-12
MAX_BISECTION = 300


class RecoveryError(RuntimeError):
    """Precoder recovery failed (singular power-coupling system)."""


def _check_simplex(lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("multipliers must be nonnegative")
    return lam


def _virtual_solve(lam: np.ndarray, stats: ChannelStats):
    """Return ``A^{-1} G`` and the uplink powers ``lam_k beta_k / sigma_k^2``,
    with ``A = sum_i p_i g_i g_i^H + I`` (one Cholesky factorization)."""
    pv = lam * stats.snr_gain
    G = stats.G
    A = (G * pv) @ G.conj().T + np.eye(stats.num_tx)
    try:
        X = cho_solve(cho_factor(A, lower=True), G)
    except np.linalg.LinAlgError as exc:  # only reachable with absurd gains
        raise NumericError(f"virtual uplink matrix is not positive definite: {exc}") from None
    return X, pv


def virtual_mmse(lam: np.ndarray, stats: ChannelStats) -> np.ndarray:
    """Per-UT virtual-uplink MMSE ``1 - p_k g_k^H A^{-1} g_k``."""
    X, pv = _virtual_solve(_check_simplex(lam), stats)
    quad = np.real(np.einsum("mk,mk->k", stats.G.conj(), X))
    return 1.0 - pv * quad


def virtual_rates(lam: np.ndarray, stats: ChannelStats,
                  method: str = "vmmse") -> np.ndarray:
    """Virtual-uplink rates ``r_k`` in bits/s/Hz.

    ``method="vmmse"`` uses ``-log2 VMMSE_k`` from one shared factorization;
    ``method="logdet"`` evaluates the log-det difference directly (K+1
    determinants, for cross-checking).
    """
    lam = _check_simplex(lam)
    if method == "vmmse":
        X, pv = _virtual_solve(lam, stats)
        quad = np.real(np.einsum("mk,mk->k", stats.G.conj(), X))
        # -log2(1 - p q) without cancellation
        return -np.log1p(-pv * quad) / LN2
    if method == "logdet":
        pv = lam * stats.snr_gain
        G = stats.G
        A = (G * pv) @ G.conj().T + np.eye(stats.num_tx)
        full = np.linalg.slogdet(A)[1]
        out = np.empty(stats.num_uts)
        for k in range(stats.num_uts):
            g = G[:, k]
            out[k] = full - np.linalg.slogdet(A - pv[k] * np.outer(g, g.conj()))[1]
        return out / LN2
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class LmoConstants:
    """Minorizer coefficients of every ``r_k`` at the anchor multipliers.

    ``psi[k, i] = |g_i^H u_k|^2 / VMMSE_k``; ``psi_colsum[k]`` sums over the
    first index, i.e. ``sum_i psi[i, k]``.
    """

    psi: np.ndarray
    psi_colsum: np.ndarray
    chi: np.ndarray
    delta: np.ndarray
    vmmse: np.ndarray


def lmo_constants(lam: np.ndarray, stats: ChannelStats) -> LmoConstants:
    lam = _check_simplex(lam)
    X, pv = _virtual_solve(lam, stats)
    U = X * np.sqrt(pv)  # MMSE receivers u_k
    gu = stats.G.conj().T @ U  # [i, k] = g_i^H u_k
    gkuk = np.diag(gu)
    vmmse = 1.0 - np.sqrt(pv) * gkuk.real
    if np.any(vmmse <= 0):
        raise NumericError("virtual MMSE is not positive")
    psi = (np.abs(gu) ** 2).T / vmmse[:, None]
    chi = gkuk.real / vmmse
    delta = (np.sum(np.abs(U) ** 2, axis=0) + 1.0) / vmmse
    return LmoConstants(psi, psi.sum(axis=0), chi, delta, vmmse)


def lmo_minorizer(consts: LmoConstants, lam: np.ndarray, stats: ChannelStats,
                  rates_at_anchor: np.ndarray) -> np.ndarray:
    """Minorizer ``h_k`` of each ``r_k`` evaluated at ``lam``."""
    pv = np.asarray(lam, float) * stats.snr_gain
    quad = consts.psi @ pv - 2.0 * consts.chi * np.sqrt(pv) + consts.delta
    return (1.0 - quad) / LN2 + rates_at_anchor


def lmo_update(consts: LmoConstants, stats: ChannelStats,
               p: float) -> tuple[np.ndarray, float]:
    """Closed-form maximizer of the summed minorizers on the simplex.

    ``lam_k = chi_k^2 s_k / (c_k s_k + nu)^2`` with ``s_k = beta_k/sigma_k^2``,
    ``c_k = sum_i psi[i, k]`` and ``nu`` found by bisection so that
    ``sum(lam) = P``. Returns ``(lam, nu)``.
    """
    k_num = stats.num_uts
    if k_num == 1:
        return np.array([float(p)]), float("nan")
    s = stats.snr_gain
    num = consts.chi ** 2 * s
    active = num > 0
    if not active.any():
        raise DegenerateDirectionError("all chi_k are zero")
    c = consts.psi_colsum * s
    c_min = c[active].min()
    # parametrize nu = t - c_min, t > 0; total power is strictly decreasing in t
    shift = np.where(active, c - c_min, 0.0)
    num_a = np.where(active, num, 0.0)

    def lam_of(t):
        return num_a / (shift + t) ** 2

    j = np.flatnonzero(active & (c == c_min))[0]
    t_lo = np.sqrt(num[j] / p)
    t_hi = np.sqrt(num_a.sum() / p)
    t = t_hi
    for _ in range(MAX_BISECTION):
        t = np.sqrt(t_lo * t_hi) if t_lo > 0 else 0.5 * t_hi
        total = lam_of(t).sum()
        if abs(total - p) <= 1e-15 * p or t_hi - t_lo <= 1e-16 * t_hi:
            break
        if total > p:
            t_lo = t
        else:
            t_hi = t
    lam = lam_of(t)
    lam *= p / lam.sum()
    return lam, float(t - c_min)


def solve_lmo(stats: ChannelStats, p: float, *, init: np.ndarray | None = None,
              eps: float = 1e-3, max_iter: int = 200) -> tuple[np.ndarray, SolveTrace]:
    """MM iterations on the multipliers; the trace holds ``sum_k r_k``."""
    k_num = stats.num_uts
    lam = np.full(k_num, p / k_num) if init is None else _check_simplex(init).copy()
    if abs(lam.sum() - p) > 1e-9 * p:
        raise ValueError("initial multipliers must sum to the power budget")

    trace = SolveTrace([float(virtual_rates(lam, stats).sum())])
    for _ in range(max_iter):
        lam, _ = lmo_update(lmo_constants(lam, stats), stats, p)
        trace.objective.append(float(virtual_rates(lam, stats).sum()))
        trace.iterations += 1
        if abs(trace.objective[-1] - trace.objective[-2]) < eps:
            trace.converged = True
            break
    else:
        logger.warning("LMO hit max_iter=%d without converging", max_iter)
    return lam, trace


@dataclass(frozen=True)
class RecoveredPrecoder:
    w_bar: np.ndarray  # (M, K) unit-norm directions (zero columns for idle UTs)
    gamma: np.ndarray  # (K,) target SINRs
    q: np.ndarray  # (K,) per-UT powers
    coupling: np.ndarray  # (Ka, Ka) coupling matrix over active UTs
    active: np.ndarray  # (K,) bool

    @property
    def W(self) -> np.ndarray:
        return self.w_bar * np.sqrt(self.q)


def recover_precoders(lam: np.ndarray, stats: ChannelStats) -> RecoveredPrecoder:
    """Downlink precoders whose SINRs match the virtual-uplink ones at ``lam``.

    UTs with ``lam_k < 1e-12 * sum(lam)`` are left unserved (zero precoder).
    """
    lam = _check_simplex(lam)
    k_num = stats.num_uts
    active = lam >= ACTIVE_RTOL * lam.sum()
    if not active.any():
        raise RecoveryError("no active UT")
    lam_a = np.where(active, lam, 0.0)
    X, pv = _virtual_solve(lam_a, stats)
    w_bar = X / np.linalg.norm(X, axis=0)
    quad = np.real(np.einsum("mk,mk->k", stats.G.conj(), X))
    pq = pv * quad
    gamma = np.where(active, pq / (1.0 - pq), 0.0)

    s = stats.snr_gain
    idx = np.flatnonzero(active)
    gw2 = np.abs(stats.G[:, idx].conj().T @ w_bar[:, idx]) ** 2  # [k, i] = |g_k^H w_i|^2
    coupling = -s[idx, None] * gw2
    coupling[np.diag_indices(idx.size)] = s[idx] / gamma[idx] * np.diag(gw2)
    if np.linalg.cond(coupling) > 1e13:
        raise RecoveryError("power-coupling matrix is numerically singular")
    q_a = np.linalg.solve(coupling, np.ones(idx.size))
    if np.any(q_a < -1e-9 * np.abs(q_a).sum()):
        raise RecoveryError("recovered powers are negative")
    q = np.zeros(k_num)
    q[idx] = np.clip(q_a, 0.0, None)
    w_bar = np.where(active, w_bar, 0.0)
    return RecoveredPrecoder(w_bar, gamma, q, coupling, active)


def waterfilling(stats: ChannelStats, p: float) -> np.ndarray:
    """Classic water-filling ``lam_k = [L - sigma_k^2/beta_k]^+``, ``sum = P``.

    Ties in the floor levels are broken by UT index.
    """
    floor = stats.sigma2 / stats.beta
    order = np.argsort(floor, kind="stable")
    fs = floor[order]
    k_num = fs.size
    for m in range(1, k_num + 1):
        level = (p + fs[:m].sum()) / m
        if m == k_num or level <= fs[m]:
            break
    lam = np.clip(level - floor, 0.0, None)
    return lam * (p / lam.sum())


@dataclass(frozen=True)
class RateBounds:
    lower: np.ndarray
    upper_terms: np.ndarray

    @property
    def upper_sum(self) -> float:
        return float(self.upper_terms.sum())


def rate_bounds(lam: np.ndarray, stats: ChannelStats) -> RateBounds:
    """Interference lower bound on each ``r_k`` and the orthogonal-channel
    upper bound ``sum_k log2(1 + p_k)`` on their sum.

    The log argument of the lower bound is floored at 1e-12, since it can turn
    nonpositive (vacuous bound) for strongly coupled UTs.
    """
    pv = _check_simplex(lam) * stats.snr_gain
    cross = np.abs(stats.G.conj().T @ stats.G) ** 2  # [i, k] = |g_i^H g_k|^2
    np.fill_diagonal(cross, 0.0)
    arg = 1.0 + pv - pv * (pv @ cross)
    lower = np.log2(np.maximum(arg, LOG_ARG_FLOOR))
    return RateBounds(lower, np.log1p(pv) / LN2)
