"""Air-to-air and air-to-ground link budgets and the swarm coverage radius.

Powers and thresholds on the A2A side are in dBm, antenna gains in dB. The
A2G side works in linear units (W, W/Hz, bit/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError, LinkBudgetError

SPEED_OF_LIGHT_MPS = 2.99792458e8


@dataclass(frozen=True)
class A2AParams:
    """Head/tail UAV link. Defaults give a 200 m link range at 2.4 GHz."""

    tx_power_dbm: float = 20.0
    tx_gain_db: float = 0.0
    rx_gain_db: float = 0.0
    threshold_dbm: float = -66.07260796939512
    pathloss_exponent: float = 2.0
    carrier_hz: float = 2.4e9
    light_speed_mps: float = SPEED_OF_LIGHT_MPS

    def __post_init__(self) -> None:
        if not self.pathloss_exponent > 0:
            raise ConfigurationError("pathloss_exponent must be positive")
        if not self.carrier_hz > 0:
            raise ConfigurationError("carrier_hz must be positive")
        if self.light_speed_mps != SPEED_OF_LIGHT_MPS:
            raise ConfigurationError("light_speed_mps is fixed to the physical constant")

    @property
    def reference_distance_m(self) -> float:
        """Distance at which the path loss is 0 dB, ``v_c / (4 pi f_c)``."""
        return self.light_speed_mps / (4.0 * math.pi * self.carrier_hz)

    @property
    def margin_db(self) -> float:
        return self.tx_power_dbm + self.tx_gain_db + self.rx_gain_db - self.threshold_dbm


@dataclass(frozen=True)
class A2GParams:
    """Tail UAV to ground-user uplink. Defaults give 335.4 m reach (300 m radius at 150 m)."""

    ref_channel_gain: float = 1e-6
    gu_tx_power_w: float = 0.1
    bandwidth_hz: float = 1e6
    noise_density_w_per_hz: float = 4e-21
    rate_threshold_bps: float = 7802336.84729098

    def __post_init__(self) -> None:
        for name in (
            "ref_channel_gain",
            "gu_tx_power_w",
            "bandwidth_hz",
            "noise_density_w_per_hz",
            "rate_threshold_bps",
        ):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigurationError(f"{name} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class SwarmGeometry:
    a2a_radius_m: float
    tuav_cover_radius_m: float
    swarm_radius_m: float
    altitude_m: float


def _check_distance(distance_m: float) -> float:
    d = float(distance_m)
    if not d > 0:
        raise LinkBudgetError(f"distance must be positive, got {distance_m!r}")
    return d


def path_loss_db(params: A2AParams, distance_m: float) -> float:
    d = _check_distance(distance_m)
    return 10.0 * params.pathloss_exponent * math.log10(
        4.0 * math.pi * d * params.carrier_hz / params.light_speed_mps
    )


def received_power_dbm(params: A2AParams, distance_m: float) -> float:
    return (
        params.tx_power_dbm
        + params.tx_gain_db
        + params.rx_gain_db
        - path_loss_db(params, distance_m)
    )


def max_a2a_distance_m(params: A2AParams) -> float:
    """Largest head/tail separation whose received power still meets the threshold."""
    exponent = math.log(10.0) / (10.0 * params.pathloss_exponent) * params.margin_db
    try:
        return params.reference_distance_m * math.exp(exponent)
    except OverflowError as exc:
        raise LinkBudgetError(f"link margin {params.margin_db} dB overflows the range") from exc


def a2g_rate_bps(params: A2GParams, distance_m: float) -> float:
    d = _check_distance(distance_m)
    gain = params.ref_channel_gain / (d * d)
    snr = params.gu_tx_power_w * gain / (params.bandwidth_hz * params.noise_density_w_per_hz)
    return params.bandwidth_hz * math.log2(1.0 + snr)


def max_a2g_distance_m(params: A2GParams) -> float:
    """Distance at which the uplink rate drops to ``rate_threshold_bps``."""
    try:
        excess = math.expm1(math.log(2.0) * params.rate_threshold_bps / params.bandwidth_hz)
    except OverflowError as exc:
        raise LinkBudgetError(
            f"rate threshold {params.rate_threshold_bps} bit/s is out of range for "
            f"bandwidth {params.bandwidth_hz} Hz"
        ) from exc
    if math.isinf(excess):
        raise LinkBudgetError("2**(R_Th/B) overflows")
    return math.sqrt(
        params.gu_tx_power_w
        * params.ref_channel_gain
        / (excess * params.bandwidth_hz * params.noise_density_w_per_hz)
    )


def tuav_cover_radius_m(d_jm: float, h: float) -> float:
    """Ground radius served by one tail UAV at altitude ``h`` with slant reach ``d_jm``."""
    d_jm, h = float(d_jm), float(h)
    if h < 0:
        raise LinkBudgetError(f"altitude must be non-negative, got {h}")
    if d_jm < h:
        raise LinkBudgetError(f"slant reach {d_jm} m is below altitude {h} m; coverage disk is empty")
    return math.sqrt((d_jm - h) * (d_jm + h))


def swarm_radius_m(r_j: float, r_ij: float) -> float:
    if r_j < 0 or r_ij < 0:
        raise LinkBudgetError("radii must be non-negative")
    return float(r_j) + float(r_ij)


def swarm_geometry(a2a: A2AParams, a2g: A2GParams, altitude_m: float) -> SwarmGeometry:
    """Compose both link budgets into the swarm coverage radius at ``altitude_m``."""
    r_ij = max_a2a_distance_m(a2a)
    r_j = tuav_cover_radius_m(max_a2g_distance_m(a2g), altitude_m)
    return SwarmGeometry(r_ij, r_j, swarm_radius_m(r_j, r_ij), float(altitude_m))
