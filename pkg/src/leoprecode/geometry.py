"""Satellite/UT geometry, link-budget channel power and thermal noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s
BOLTZMANN = 1.38e-23  # J/K, value used by the link budget


class GeometryError(ValueError):
    """Raised when a UT placement is not physically realisable."""


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


@dataclass(frozen=True)
class OrbitConfig:
    earth_radius_km: float = 6378.0
    altitude_km: float = 1000.0

    def __post_init__(self):
        if self.earth_radius_km <= 0:
            raise ValueError("earth_radius_km must be positive")
        if self.altitude_km <= 0:
            raise ValueError("altitude_km must be positive")

    @property
    def orbit_radius_km(self) -> float:
        return self.earth_radius_km + self.altitude_km


@dataclass(frozen=True)
class RfConfig:
    """RF parameters, all in linear scale.

    ``sat_element_gain`` and ``ut_element_gain`` are per-element linear power
    gains; use :meth:`from_db` to build from dB figures.
    """

    carrier_freq_hz: float = 2e9
    bandwidth_hz: float = 20e6
    noise_temp_k: float = 300.0
    sat_element_gain: float = db_to_linear(3.0)
    ut_element_gain: float = db_to_linear(3.0)

    def __post_init__(self):
        if self.carrier_freq_hz <= 0:
            raise ValueError("carrier_freq_hz must be positive")
        if self.bandwidth_hz < 0 or self.noise_temp_k < 0:
            raise ValueError("bandwidth_hz and noise_temp_k must be nonnegative")
        if self.sat_element_gain <= 0 or self.ut_element_gain <= 0:
            raise ValueError("element gains must be positive in linear scale")

    @classmethod
    def from_db(cls, carrier_freq_hz, bandwidth_hz, noise_temp_k,
                sat_gain_db, ut_gain_db) -> "RfConfig":
        return cls(carrier_freq_hz, bandwidth_hz, noise_temp_k,
                   db_to_linear(sat_gain_db), db_to_linear(ut_gain_db))

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq_hz


@dataclass(frozen=True)
class SpaceAnglePair:
    """Direction cosines ``(theta_x, theta_y)`` of a UT seen from the array."""

    theta_x: float
    theta_y: float

    def __post_init__(self):
        if self.theta_x ** 2 + self.theta_y ** 2 > 1.0:
            raise GeometryError(
                f"space angles ({self.theta_x}, {self.theta_y}) lie outside "
                "the unit disc")


@dataclass(frozen=True)
class LinkGeometry:
    nadir_angle_rad: float
    central_angle_rad: float
    slant_distance_km: float


def sample_space_angles(rng: np.random.Generator, count: int,
                        half_width: float = 0.5) -> list[SpaceAnglePair]:
    """Draw ``count`` space-angle pairs, each coordinate i.i.d. uniform on
    ``[-half_width, half_width]``."""
    if not 0.0 < half_width <= 1.0 / math.sqrt(2.0):
        raise ValueError(f"half_width must be in (0, 1/sqrt(2)], got {half_width}")
    if count < 0:
        raise ValueError("count must be nonnegative")
    xy = rng.uniform(-half_width, half_width, size=(count, 2))
    return [SpaceAnglePair(float(x), float(y)) for x, y in xy]


def nadir_angle(p: SpaceAnglePair) -> float:
    """Nadir angle from ``cos(nadir) = sqrt(1 - theta_x^2 - theta_y^2)``."""
    s = p.theta_x ** 2 + p.theta_y ** 2
    if s > 1.0:
        raise GeometryError("space angles outside the unit disc")
    return math.acos(math.sqrt(1.0 - s))


def slant_distance(nadir: float, orbit: OrbitConfig) -> LinkGeometry:
    """Earth central angle and satellite-UT distance for a given nadir angle.

    Raises
    ------
    GeometryError
        If the line of sight misses the Earth (UT beyond the horizon).
    """
    re, rs = orbit.earth_radius_km, orbit.orbit_radius_km
    if not 0.0 <= nadir <= math.pi / 2:
        raise GeometryError(f"nadir angle {nadir} outside [0, pi/2]")
    ratio = rs / re * math.sin(nadir)
    if ratio > 1.0:
        raise GeometryError(
            f"nadir angle {math.degrees(nadir):.3f} deg is beyond the horizon "
            f"(sin(nadir) > Re/Rs = {re / rs:.4f})")
    psi = math.asin(ratio) - nadir
    # Re^2 + Rs^2 - 2 Re Rs cos(psi), rewritten to avoid cancellation near psi = 0
    h = orbit.altitude_km
    dist = math.sqrt(h * h + 4.0 * re * rs * math.sin(0.5 * psi) ** 2)
    return LinkGeometry(nadir, psi, dist)


def channel_power_beta(distance_km: float, rf: RfConfig, m_sat: int,
                       n_ut: int) -> float:
    """Average channel power ``G_sat G_ut N M lambda^2 / (4 pi D)^2``."""
    if distance_km <= 0:
        raise ValueError("distance must be positive")
    d_m = distance_km * 1e3
    return (rf.sat_element_gain * rf.ut_element_gain * n_ut * m_sat
            * rf.wavelength_m ** 2 / (4.0 * math.pi * d_m) ** 2)


def noise_power(rf: RfConfig) -> float:
    """Thermal noise power ``k_B T B`` in watts."""
    return BOLTZMANN * rf.noise_temp_k * rf.bandwidth_hz
