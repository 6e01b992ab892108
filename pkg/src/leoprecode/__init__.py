"""Downlink precoder design for massive MIMO LEO satellite links.

Three designs are provided: MM on the Monte-Carlo ergodic sum rate
(:func:`solve_mm`), WMMSE on the closed-form upper bound
(:func:`solve_wmmse`) and Lagrange-multiplier optimization with closed-form
precoder recovery (:func:`solve_lmo`, :func:`recover_precoders`).
"""

from .baselines import aslnr_precoders, los_only_precoders
from .channel import (ChannelBatch, ChannelStats, UpaGeometry, UTChannelStats,
                      build_sigma, sample_channel, upa_response)
from .geometry import OrbitConfig, RfConfig, SpaceAnglePair
from .lmo import (rate_bounds, recover_precoders, solve_lmo, virtual_rates,
                  waterfilling)
from .mm import DegenerateDirectionError, SolveTrace, solve_mm
from .rates import ergodic_sum_rate, upper_bound_rates
from .wmmse import solve_wmmse

__all__ = [
    "ChannelBatch", "ChannelStats", "DegenerateDirectionError", "OrbitConfig",
    "RfConfig", "SolveTrace", "SpaceAnglePair", "UTChannelStats", "UpaGeometry",
    "aslnr_precoders", "build_sigma", "ergodic_sum_rate", "los_only_precoders",
    "rate_bounds", "recover_precoders", "sample_channel", "solve_lmo", "solve_mm",
    "solve_wmmse", "upa_response", "upper_bound_rates", "virtual_rates",
    "waterfilling",
]
