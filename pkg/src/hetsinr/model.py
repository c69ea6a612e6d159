"""Domain model for multi-tier downlink networks.

Holds the per-tier radio parameters, the global network configuration,
derived per-tier ratios, unit conversions, and the configuration file
loader.  All internal computation uses linear SI units (watts, BS per
square meter); dB and dBm appear only at interface boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import yaml

from .errors import (
    ConfigParseError,
    EmptyTierListError,
    IndexOutOfRangeError,
    InvalidExponentError,
    NonPositiveParameterError,
)

__all__ = [
    "TierParams",
    "NetworkConfig",
    "TierRatios",
    "validate",
    "ratios",
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "load_config",
]


def dbm_to_watts(x_dbm: float) -> float:
    """Convert a power from dBm to linear watts."""
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watts_to_dbm(x_watts: float) -> float:
    """Convert a power from linear watts to dBm."""
    if x_watts <= 0.0:
        raise NonPositiveParameterError("power must be > 0 W to express in dBm")
    return 10.0 * math.log10(x_watts) + 30.0


def db_to_linear(x_db: float) -> float:
    """Convert a dimensionless ratio from dB to linear scale."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    """Convert a dimensionless linear ratio to dB."""
    if x <= 0.0:
        raise NonPositiveParameterError("ratio must be > 0 to express in dB")
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class TierParams:
    """Radio parameters of one tier of base stations.

    Attributes:
        power: transmit power, linear watts.
        density: BS spatial density, BS per square meter.
        pathloss_exp: path loss exponent, strictly greater than 2.
        bias: association bias factor, linear (1.0 = unbiased).
    """

    power: float
    density: float
    pathloss_exp: float
    bias: float = 1.0

    @classmethod
    def from_db_units(cls, power_dbm: float, density_per_km2: float,
                      pathloss_exp: float, bias_db: float = 0.0) -> "TierParams":
        """Build a tier from interface-boundary units (dBm, per km2, dB)."""
        return cls(
            power=dbm_to_watts(power_dbm),
            density=density_per_km2 / 1e6,
            pathloss_exp=pathloss_exp,
            bias=db_to_linear(bias_db),
        )


@dataclass(frozen=True)
class NetworkConfig:
    """Full network description shared by the analytic and simulation paths.

    Attributes:
        tiers: per-tier parameters, user-facing index 1..K.
        noise_power: thermal noise power W in watts; 0 means
            interference-limited.
        ref_pathloss: linear path gain L0 at the reference distance.
        ref_distance: reference distance r0 in meters (default 1).
        user_density: user spatial density, users per square meter.
    """

    tiers: tuple[TierParams, ...]
    noise_power: float = 0.0
    ref_pathloss: float = 1.0
    ref_distance: float = 1.0
    user_density: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))

    @property
    def num_tiers(self) -> int:
        return len(self.tiers)

    def tier(self, k: int) -> TierParams:
        """Return tier k using the user-facing 1-based index."""
        check_tier_index(self, k)
        return self.tiers[k - 1]


@dataclass(frozen=True)
class TierRatios:
    """Power, bias, and exponent ratios of one tier relative to a fixed
    serving tier: (P_j/P_k, B_j/B_k, alpha_j/alpha_k)."""

    p_hat: float
    b_hat: float
    a_hat: float


def check_tier_index(config: NetworkConfig, k: int) -> None:
    if not 1 <= k <= config.num_tiers:
        raise IndexOutOfRangeError(
            f"tier index {k} outside 1..{config.num_tiers}")


def validate(config: NetworkConfig) -> NetworkConfig:
    """Check every model invariant; return the config unchanged if valid.

    Raises:
        EmptyTierListError: no tiers.
        NonPositiveParameterError: a tier power/density/bias, or a global
            parameter, violates its sign constraint (message names the
            offending tier or field).
        InvalidExponentError: some path loss exponent is <= 2.
    """
    if len(config.tiers) == 0:
        raise EmptyTierListError("configuration must contain at least one tier")
    for i, t in enumerate(config.tiers, start=1):
        if not t.power > 0.0:
            raise NonPositiveParameterError(f"tier {i}: power must be > 0 W")
        if not t.density > 0.0:
            raise NonPositiveParameterError(f"tier {i}: density must be > 0")
        if not t.bias > 0.0:
            raise NonPositiveParameterError(f"tier {i}: bias must be > 0")
        if not t.pathloss_exp > 2.0:
            raise InvalidExponentError(
                f"tier {i}: path loss exponent {t.pathloss_exp} must be > 2")
    if config.noise_power < 0.0:
        raise NonPositiveParameterError("noise_power must be >= 0 W")
    if not config.ref_pathloss > 0.0:
        raise NonPositiveParameterError("ref_pathloss must be > 0")
    if not config.ref_distance > 0.0:
        raise NonPositiveParameterError("ref_distance must be > 0")
    if config.user_density < 0.0:
        raise NonPositiveParameterError("user_density must be >= 0")
    return config


def ratios(config: NetworkConfig, serving_tier: int) -> list[TierRatios]:
    """Per-tier (power, bias, exponent) ratios relative to the serving tier.

    Element j-1 holds (P_j/P_k, B_j/B_k, alpha_j/alpha_k) for the 1-based
    serving tier k; the serving tier's own entry is exactly (1, 1, 1).
    """
    check_tier_index(config, serving_tier)
    ref = config.tiers[serving_tier - 1]
    out = []
    for j, t in enumerate(config.tiers, start=1):
        if j == serving_tier:
            out.append(TierRatios(1.0, 1.0, 1.0))
        else:
            out.append(TierRatios(t.power / ref.power,
                                  t.bias / ref.bias,
                                  t.pathloss_exp / ref.pathloss_exp))
    return out


def equal_pathloss_exponent(config: NetworkConfig) -> bool:
    """True when every tier has bitwise-identical path loss exponent."""
    first = config.tiers[0].pathloss_exp
    return all(t.pathloss_exp == first for t in config.tiers)


def equal_bias(config: NetworkConfig) -> bool:
    """True when every tier has bitwise-identical bias."""
    first = config.tiers[0].bias
    return all(t.bias == first for t in config.tiers)


# --- configuration file ------------------------------------------------

_TIER_KEYS = {"power_dbm", "density_per_km2", "alpha", "bias_db"}
_GLOBAL_KEYS = {"tiers", "noise_dbm", "l0_db", "user_density_per_km2", "r0_m"}


def load_config(path: str) -> NetworkConfig:
    """Load and validate a network configuration file.

    The file is YAML (JSON is a YAML subset and also accepted) with
    per-tier ``power_dbm``, ``density_per_km2``, ``alpha``, and optional
    ``bias_db`` (default 0), plus global ``l0_db``, optional ``noise_dbm``
    (absent or null means zero noise power), optional
    ``user_density_per_km2`` (default 0), and optional ``r0_m`` (default 1).
    Densities given per km2 are converted to per m2 internally.

    Raises:
        ConfigParseError: unreadable file, malformed document, unknown or
            missing keys, or any model invariant violation.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path!r}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"malformed config {path!r}: {exc}") from exc

    if not isinstance(doc, dict):
        raise ConfigParseError(f"config {path!r}: top level must be a mapping")
    unknown = set(doc) - _GLOBAL_KEYS
    if unknown:
        raise ConfigParseError(f"config {path!r}: unknown keys {sorted(unknown)}")
    raw_tiers = doc.get("tiers")
    if not isinstance(raw_tiers, list) or len(raw_tiers) == 0:
        raise ConfigParseError(f"config {path!r}: 'tiers' must be a non-empty list")

    tiers = []
    for i, entry in enumerate(raw_tiers, start=1):
        if not isinstance(entry, dict):
            raise ConfigParseError(f"config {path!r}: tier {i} must be a mapping")
        unknown = set(entry) - _TIER_KEYS
        if unknown:
            raise ConfigParseError(
                f"config {path!r}: tier {i} unknown keys {sorted(unknown)}")
        missing = {"power_dbm", "density_per_km2", "alpha"} - set(entry)
        if missing:
            raise ConfigParseError(
                f"config {path!r}: tier {i} missing keys {sorted(missing)}")
        try:
            tiers.append(TierParams.from_db_units(
                power_dbm=float(entry["power_dbm"]),
                density_per_km2=float(entry["density_per_km2"]),
                pathloss_exp=float(entry["alpha"]),
                bias_db=float(entry.get("bias_db", 0.0)),
            ))
        except (TypeError, ValueError) as exc:
            raise ConfigParseError(
                f"config {path!r}: tier {i} has a non-numeric field: {exc}") from exc

    if "l0_db" not in doc:
        raise ConfigParseError(f"config {path!r}: missing 'l0_db'")
    try:
        l0 = db_to_linear(float(doc["l0_db"]))
        noise_dbm = doc.get("noise_dbm")
        noise = 0.0 if noise_dbm is None else dbm_to_watts(float(noise_dbm))
        user_density = float(doc.get("user_density_per_km2", 0.0)) / 1e6
        r0 = float(doc.get("r0_m", 1.0))
    except (TypeError, ValueError) as exc:
        raise ConfigParseError(
            f"config {path!r}: non-numeric global field: {exc}") from exc

    config = NetworkConfig(tiers=tuple(tiers), noise_power=noise,
                           ref_pathloss=l0, ref_distance=r0,
                           user_density=user_density)
    try:
        return validate(config)
    except (EmptyTierListError, NonPositiveParameterError,
            InvalidExponentError) as exc:
        raise ConfigParseError(f"config {path!r}: {exc}") from exc
