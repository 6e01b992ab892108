"""UPA array responses, statistical CSI and Rician Monte-Carlo channel draws.

After Doppler/delay compensation the DL channel of UT ``k`` is the rank-one
matrix ``H_k = d_k g_k^H``: ``g_k`` is the (deterministic) satellite-side
array response and ``d_k`` a Rician receive-side vector with
``E ||d_k||^2 = beta_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .geometry import SpaceAnglePair

# samples per counter-based substream; fixing it keeps draws independent of
# how the sample range is split across workers
SAMPLE_CHUNK = 1024
PSD_TOL = 1e-10


class ChannelDataError(ValueError):
    """Statistical CSI that violates its invariants (e.g. non-PSD covariance)."""


@dataclass(frozen=True)
class UpaGeometry:
    nx: int
    ny: int
    spacing_x_wl: float = 1.0
    spacing_y_wl: float = 1.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("UPA dimensions must be positive")
        if self.spacing_x_wl <= 0 or self.spacing_y_wl <= 0:
            raise ValueError("antenna spacing must be positive")

    @property
    def size(self) -> int:
        return self.nx * self.ny


def ula_response(n: int, spacing_wl: float, phase_arg: float) -> np.ndarray:
    """Unit-norm ULA response ``exp(-j 2 pi d i phi) / sqrt(n)``, ``i = 0..n-1``."""
    i = np.arange(n)
    return np.exp(-2j * np.pi * spacing_wl * phase_arg * i) / np.sqrt(n)


def upa_response(geom: UpaGeometry, p: SpaceAnglePair) -> np.ndarray:
    """Kronecker product of the x- and y-axis ULA responses at the space angles."""
    return np.kron(ula_response(geom.nx, geom.spacing_x_wl, p.theta_x),
                   ula_response(geom.ny, geom.spacing_y_wl, p.theta_y))


def build_sigma(model: str, n: int, rho: float = 0.0) -> np.ndarray:
    """Receive-side scattering covariance with unit trace.

    ``"uniform"`` gives ``I/n``; ``"exp_corr"`` gives the Toeplitz matrix
    ``rho^|i-j|`` scaled by ``1/n``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if model == "uniform":
        return np.eye(n) / n
    if model == "exp_corr":
        if not 0.0 <= rho < 1.0:
            raise ValueError(f"exp_corr requires 0 <= rho < 1, got {rho}")
        idx = np.arange(n)
        return rho ** np.abs(idx[:, None] - idx[None, :]) / n
    raise ValueError(f"unknown sigma model {model!r}")


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    if not np.allclose(cov, cov.conj().T, atol=PSD_TOL, rtol=0):
        raise ChannelDataError("covariance is not Hermitian")
    vals, vecs = np.linalg.eigh(cov)
    if vals.min() < -PSD_TOL:
        raise ChannelDataError(
            f"covariance is not PSD (min eigenvalue {vals.min():.3e})")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


@dataclass(frozen=True, eq=False)
class UTChannelStats:
    """Statistical CSI of one UT; the only input the precoder designs use."""

    beta: float
    kappa: float
    g: np.ndarray
    d0: np.ndarray
    sigma_cov: np.ndarray
    sigma2: float
    sigma_sqrt: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.beta > 0:
            raise ChannelDataError("beta must be positive")
        if not (self.kappa >= 0 and np.isfinite(self.kappa)):
            raise ChannelDataError("kappa must be finite and nonnegative")
        if not self.sigma2 > 0:
            raise ChannelDataError("sigma2 must be positive")
        for name in ("g", "d0"):
            if abs(np.linalg.norm(getattr(self, name)) - 1.0) > 1e-9:
                raise ChannelDataError(f"{name} must have unit norm")
        if abs(np.trace(self.sigma_cov).real - 1.0) > 1e-9:
            raise ChannelDataError("sigma_cov must have unit trace")
        if self.sigma_cov.shape != (self.d0.size, self.d0.size):
            raise ChannelDataError("sigma_cov shape does not match d0")
        object.__setattr__(self, "sigma_sqrt", _psd_sqrt(self.sigma_cov))


@dataclass(frozen=True, eq=False)
class ChannelStats:
    """Stacked statistical CSI of K UTs.

    Attributes
    ----------
    beta, kappa, sigma2 : (K,) arrays
    G : (M, K) array whose columns are the satellite-side responses ``g_k``
    D0 : (N, K) array of LoS receive-side vectors
    sigma_sqrt : (K, N, N) Hermitian square roots of the scattering covariances
    """

    beta: np.ndarray
    kappa: np.ndarray
    G: np.ndarray
    sigma2: np.ndarray
    D0: np.ndarray
    sigma_sqrt: np.ndarray

    @classmethod
    def from_uts(cls, uts: Sequence[UTChannelStats]) -> "ChannelStats":
        if not uts:
            raise ValueError("need at least one UT")
        return cls(
            beta=np.array([u.beta for u in uts], dtype=float),
            kappa=np.array([u.kappa for u in uts], dtype=float),
            G=np.stack([u.g for u in uts], axis=1).astype(complex),
            sigma2=np.array([u.sigma2 for u in uts], dtype=float),
            D0=np.stack([u.d0 for u in uts], axis=1).astype(complex),
            sigma_sqrt=np.stack([u.sigma_sqrt for u in uts]).astype(complex),
        )

    @classmethod
    def from_arrays(cls, G, beta, sigma2, kappa=0.0, n_ut: int = 1) -> "ChannelStats":
        """Build stats for the statistical designs, which only need ``G``,
        ``beta`` and ``sigma2``; the receive side defaults to a uniform
        covariance and an all-equal LoS vector."""
        G = np.asarray(G, dtype=complex)
        k = G.shape[1]
        d0 = np.ones(n_ut, dtype=complex) / np.sqrt(n_ut)
        sq = np.eye(n_ut) / np.sqrt(n_ut)
        return cls(
            beta=np.broadcast_to(np.asarray(beta, float), (k,)).copy(),
            kappa=np.broadcast_to(np.asarray(kappa, float), (k,)).copy(),
            G=G,
            sigma2=np.broadcast_to(np.asarray(sigma2, float), (k,)).copy(),
            D0=np.repeat(d0[:, None], k, axis=1),
            sigma_sqrt=np.repeat(sq[None].astype(complex), k, axis=0),
        )

    @property
    def num_uts(self) -> int:
        return self.G.shape[1]

    @property
    def num_tx(self) -> int:
        return self.G.shape[0]

    @property
    def num_rx(self) -> int:
        return self.D0.shape[0]

    @property
    def snr_gain(self) -> np.ndarray:
        """``beta_k / sigma_k^2``."""
        return self.beta / self.sigma2

    def with_beta(self, beta) -> "ChannelStats":
        return ChannelStats(np.asarray(beta, float), self.kappa, self.G,
                            self.sigma2, self.D0, self.sigma_sqrt)


@dataclass(eq=False)
class ChannelBatch:
    """Monte-Carlo realisations of the receive-side vectors.

    ``draws[s, k]`` is the length-N vector ``d_k`` of sample ``s``.
    """

    draws: np.ndarray
    seed: int = 0

    @property
    def num_samples(self) -> int:
        return self.draws.shape[0]

    @cached_property
    def norms2(self) -> np.ndarray:
        """``||d_k||^2`` per sample, shape ``(S, K)``; all the rate formulas need."""
        return np.sum(self.draws.real ** 2 + self.draws.imag ** 2, axis=-1)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for the substream labelled by ``key``."""
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(seed, spawn_key=tuple(int(x) for x in key))))


def sample_channel(stats: ChannelStats, s: int, seed: int,
                   stream: int = 0) -> ChannelBatch:
    """Draw ``s`` i.i.d. realisations of every ``d_k``.

    ``d = sqrt(kappa beta/(kappa+1)) d0 + sqrt(beta/(kappa+1)) Sigma^{1/2} w``
    with ``w ~ CN(0, I)``. Each (stream, UT, chunk of SAMPLE_CHUNK samples)
    has its own Philox substream, so the result depends only on ``seed`` and
    ``stream``.
    """
    if s < 1:
        raise ValueError("number of samples must be positive")
    k_num, n = stats.num_uts, stats.num_rx
    draws = np.empty((s, k_num, n), dtype=complex)
    los_amp = np.sqrt(stats.kappa * stats.beta / (stats.kappa + 1.0))
    nlos_amp = np.sqrt(stats.beta / (stats.kappa + 1.0))
    for k in range(k_num):
        mean = los_amp[k] * stats.D0[:, k]
        mix = nlos_amp[k] * stats.sigma_sqrt[k]
        for c, start in enumerate(range(0, s, SAMPLE_CHUNK)):
            stop = min(start + SAMPLE_CHUNK, s)
            rng = substream(seed, stream, k, c)
            w = rng.standard_normal((SAMPLE_CHUNK, n, 2)) @ np.array([1.0, 1j])
            w = w[: stop - start] / np.sqrt(2.0)
            draws[start:stop, k] = mean + w @ mix.T
    return ChannelBatch(draws, seed)


def mf_receiver(d: np.ndarray) -> np.ndarray:
    """Matched filter for the equivalent receive vector: ``c = d``."""
    return d


def _gains2(w_all: np.ndarray, g_k: np.ndarray) -> np.ndarray:
    # |w_i^H g_k|^2 for every column i
    return np.abs(w_all.conj().T @ g_k) ** 2


def mmse_receiver(w_all: np.ndarray, k: int, g_k: np.ndarray, d_k: np.ndarray,
                  sigma2: float) -> np.ndarray:
    """Linear MMSE receiver of UT ``k``; a scalar multiple of ``d_k``."""
    total = sigma2 + _gains2(w_all, g_k).sum() * np.vdot(d_k, d_k).real
    return (np.vdot(g_k, w_all[:, k]) / total) * d_k


def instantaneous_sinr(w_all: np.ndarray, k: int, g_k: np.ndarray,
                       d_k: np.ndarray, c_k: np.ndarray, sigma2: float) -> float:
    """SINR of UT ``k`` with an arbitrary linear receiver ``c_k``."""
    c_norm2 = np.vdot(c_k, c_k).real
    if c_norm2 == 0:
        raise ValueError("receiver must be nonzero")
    gains = _gains2(w_all, g_k)
    coupling = abs(np.vdot(c_k, d_k)) ** 2
    interf = (gains.sum() - gains[k]) * coupling
    return float(gains[k] * coupling / (interf + sigma2 * c_norm2))


def usinr(w_all: np.ndarray, k: int, g_k: np.ndarray, d_k: np.ndarray,
          sigma2: float) -> float:
    """SINR upper bound reached by any receiver parallel to ``d_k``."""
    gains = _gains2(w_all, g_k)
    nd = np.vdot(d_k, d_k).real
    return float(gains[k] * nd / ((gains.sum() - gains[k]) * nd + sigma2))
