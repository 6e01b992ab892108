"""Scenario configuration: flat ``key = value`` files.

Lines are ``key = value``; ``#`` starts a comment; list values are comma
separated. Omitted keys take the desk-scale defaults below (standard system values,
with the satellite array shrunk to 8x8 and 16 UTs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .channel import UpaGeometry
from .geometry import OrbitConfig, RfConfig, db_to_linear

ALGORITHMS = ("mm", "wmmse", "lmo", "aslnr", "los", "wf")
SIGMA_MODELS = ("uniform", "exp_corr")

DEFAULTS = {
    "earth_radius_km": "6378",
    "altitude_km": "1000",
    "carrier_ghz": "2",
    "bandwidth_mhz": "20",
    "noise_temp_k": "300",
    "sat_gain_db": "3",
    "ut_gain_db": "3",
    "sat_nx": "8",
    "sat_ny": "8",
    "ut_nx": "6",
    "ut_ny": "6",
    "num_uts": "16",
    "kappa_db": "0",
    "sigma_model": "uniform",
    "sigma_rho": "0",
    "power_dbw": "0, 5, 10, 15, 20, 25, 30",
    "seeds": "0",
    "samples": "1000",
    "algorithms": "mm, wmmse, lmo, aslnr, los, wf",
    "eps": "1e-3",
    "max_iter": "200",
}


class ConfigError(ValueError):
    def __init__(self, key: str | None, message: str):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


@dataclass(frozen=True)
class ScenarioConfig:
    orbit: OrbitConfig
    rf: RfConfig
    sat_array: UpaGeometry
    ut_array: UpaGeometry
    num_uts: int
    kappa_db: float
    sigma_model: str
    sigma_rho: float
    power_dbw: tuple[float, ...]
    seeds: tuple[int, ...]
    samples: int
    algorithms: tuple[str, ...]
    eps: float
    max_iter: int

    @property
    def kappa(self) -> float:
        return db_to_linear(self.kappa_db)


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(None, f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(key, "unknown configuration key")
        if key in values:
            raise ConfigError(key, "duplicate key")
        values[key] = value
    return values


def _float(raw: dict, key: str) -> float:
    try:
        v = float(raw[key])
    except ValueError:
        raise ConfigError(key, f"not a number: {raw[key]!r}") from None
    if not math.isfinite(v):
        raise ConfigError(key, "must be finite")
    return v


def _int(raw: dict, key: str) -> int:
    try:
        return int(raw[key])
    except ValueError:
        raise ConfigError(key, f"not an integer: {raw[key]!r}") from None


def _list(raw: dict, key: str) -> list[str]:
    items = [s.strip() for s in raw[key].split(",")]
    if not raw[key].strip() or any(not s for s in items):
        raise ConfigError(key, "expected a non-empty comma-separated list")
    return items


def config_from_mapping(values: dict[str, str]) -> ScenarioConfig:
    raw = {**DEFAULTS, **values}

    def positive(key, v):
        if v <= 0:
            raise ConfigError(key, "must be positive")
        return v

    try:
        orbit = OrbitConfig(positive("earth_radius_km", _float(raw, "earth_radius_km")),
                            positive("altitude_km", _float(raw, "altitude_km")))
        rf = RfConfig.from_db(
            positive("carrier_ghz", _float(raw, "carrier_ghz")) * 1e9,
            positive("bandwidth_mhz", _float(raw, "bandwidth_mhz")) * 1e6,
            positive("noise_temp_k", _float(raw, "noise_temp_k")),
            _float(raw, "sat_gain_db"), _float(raw, "ut_gain_db"))
        dims = {k: positive(k, _int(raw, k))
                for k in ("sat_nx", "sat_ny", "ut_nx", "ut_ny")}
    except ConfigError:
        raise
    except ValueError as exc:  # invariant checks inside the dataclasses
        raise ConfigError(None, str(exc)) from None

    num_uts = _int(raw, "num_uts")
    if num_uts < 1:
        raise ConfigError("num_uts", "must be at least 1")
    sigma_model = raw["sigma_model"].strip()
    if sigma_model not in SIGMA_MODELS:
        raise ConfigError("sigma_model", f"must be one of {SIGMA_MODELS}")
    sigma_rho = _float(raw, "sigma_rho")
    if not 0.0 <= sigma_rho < 1.0:
        raise ConfigError("sigma_rho", "must satisfy 0 <= rho < 1")

    try:
        power = tuple(float(x) for x in _list(raw, "power_dbw"))
    except ValueError:
        raise ConfigError("power_dbw", "entries must be numbers") from None
    if not all(math.isfinite(x) for x in power):
        raise ConfigError("power_dbw", "entries must be finite")
    try:
        seeds = tuple(int(x) for x in _list(raw, "seeds"))
    except ValueError:
        raise ConfigError("seeds", "entries must be integers") from None
    if any(s < 0 for s in seeds):
        raise ConfigError("seeds", "entries must be nonnegative")

    samples = _int(raw, "samples")
    if samples < 1:
        raise ConfigError("samples", "must be at least 1")
    algorithms = tuple(dict.fromkeys(a.lower() for a in _list(raw, "algorithms")))
    bad = [a for a in algorithms if a not in ALGORITHMS]
    if bad:
        raise ConfigError("algorithms", f"unknown algorithm(s) {bad}; choose from {ALGORITHMS}")
    eps = positive("eps", _float(raw, "eps"))
    max_iter = _int(raw, "max_iter")
    if max_iter < 1:
        raise ConfigError("max_iter", "must be at least 1")

    return ScenarioConfig(
        orbit=orbit,
        rf=rf,
        sat_array=UpaGeometry(dims["sat_nx"], dims["sat_ny"]),
        ut_array=UpaGeometry(dims["ut_nx"], dims["ut_ny"]),
        num_uts=num_uts,
        kappa_db=_float(raw, "kappa_db"),
        sigma_model=sigma_model,
        sigma_rho=sigma_rho,
        power_dbw=power,
        seeds=seeds,
        samples=samples,
        algorithms=algorithms,
        eps=eps,
        max_iter=max_iter,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario file.

    Raises
    ------
    ConfigError
        Missing/unreadable file, syntax errors, or invalid values; the
        offending key is in ``.key`` when there is one.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(None, f"cannot read config {path}: {exc}") from None
    return config_from_mapping(parse_config_text(text))
