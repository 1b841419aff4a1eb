"""Radio channel: log-distance mean path loss with Nakagami-m fading, threshold receiver."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .core import RngStream
from .errors import InvalidConfig, InvalidShape, NonPositiveDistance

SPEED_OF_LIGHT = 299_792_458.0


class Variant(str, enum.Enum):
    DOT11 = "802.11"
    DOT11P = "802.11p"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, Variant):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        aliases = {"802.11": cls.DOT11, "dot11": cls.DOT11, "80211": cls.DOT11,
                   "802.11p": cls.DOT11P, "dot11p": cls.DOT11P, "80211p": cls.DOT11P}
        try:
            return aliases[key]
        except KeyError:
            raise InvalidConfig(f"unknown MAC/PHY variant {value!r}") from None


class Reception(enum.Enum):
    RECEIVED = "received"
    CARRIER_ONLY = "carrier_only"
    UNDETECTED = "undetected"
    COLLIDED = "collided"


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0) if isinstance(dbm, np.ndarray) else 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(mw) if isinstance(mw, np.ndarray) else 10.0 * math.log10(mw)


@dataclass(frozen=True)
class PhyParams:
    preset: Variant
    carrier_freq: float        # Hz
    channel_width: float       # Hz
    tx_power: float            # dBm
    data_rate: float           # bit/s
    rx_threshold: float        # dBm
    cs_threshold: float        # dBm
    noise_floor: float         # dBm

    def __post_init__(self):
        if self.cs_threshold > self.rx_threshold:
            raise InvalidConfig("cs_threshold must not exceed rx_threshold")
        if not self.data_rate > 0:
            raise InvalidConfig("data_rate must be > 0")


_PHY_PRESETS = {
    # 2 Mbit/s is the bandwidth used for every 802.11 run
    Variant.DOT11: dict(carrier_freq=2.4e9, channel_width=22e6, tx_power=20.0, data_rate=2e6,
                        rx_threshold=-68.0, cs_threshold=-74.0, noise_floor=-96.0),
    # 10 MHz OFDM at 5.9 GHz; 6 Mbit/s is the mandatory default rate for DSRC
    Variant.DOT11P: dict(carrier_freq=5.9e9, channel_width=10e6, tx_power=23.0, data_rate=6e6,
                         rx_threshold=-72.0, cs_threshold=-78.0, noise_floor=-99.0),
}


def phy_preset(kind, **overrides) -> PhyParams:
    kind = Variant.parse(kind)
    fields = dict(_PHY_PRESETS[kind])
    for key, value in overrides.items():
        if key not in fields:
            raise InvalidConfig(f"unknown phy parameter {key!r}")
        fields[key] = float(value)
    return PhyParams(preset=kind, **fields)


@dataclass(frozen=True)
class NakagamiParams:
    """Piecewise shape and path-loss exponent by distance.

    Each list holds ``(max_distance, value)`` pairs in increasing distance
    order; the last breakpoint should be ``inf``. ``ref_loss`` of ``None`` means
    free-space loss at ``ref_distance`` for the carrier in use.
    """

    m_by_distance: tuple[tuple[float, float], ...] = ((80.0, 1.5), (math.inf, 0.75))
    gamma_by_distance: tuple[tuple[float, float], ...] = ((200.0, 1.9), (math.inf, 3.8))
    ref_distance: float = 1.0
    ref_loss: float | None = None

    def __post_init__(self):
        for name, table in (("m_by_distance", self.m_by_distance), ("gamma_by_distance", self.gamma_by_distance)):
            if not table:
                raise InvalidConfig(f"{name} is empty")
            bounds = [b for b, _ in table]
            if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
                raise InvalidConfig(f"{name} breakpoints must be strictly increasing")
        if any(m < 0.5 for _, m in self.m_by_distance):
            raise InvalidConfig("Nakagami shape must be >= 0.5")
        if not self.ref_distance > 0:
            raise InvalidConfig("ref_distance must be > 0")

    def reference_loss(self, carrier_freq: float) -> float:
        if self.ref_loss is not None:
            return self.ref_loss
        wavelength = SPEED_OF_LIGHT / carrier_freq
        return 20.0 * math.log10(4.0 * math.pi * self.ref_distance / wavelength)

    def shape_at(self, d: float) -> float:
        for bound, m in self.m_by_distance:
            if d <= bound:
                return m
        return self.m_by_distance[-1][1]

    def shapes(self, d: np.ndarray) -> np.ndarray:
        bounds = np.array([b for b, _ in self.m_by_distance])
        values = np.array([m for _, m in self.m_by_distance])
        if len(values) == 2:
            return np.where(d <= bounds[0], values[0], values[1])
        idx = np.minimum(np.searchsorted(bounds, d, side="left"), len(values) - 1)
        return values[idx]

    def with_single_exponent(self, gamma: float) -> "NakagamiParams":
        return replace(self, gamma_by_distance=((math.inf, gamma),))


def _path_loss_db(naka: NakagamiParams, carrier_freq: float, d):
    """Continuous piecewise log-distance loss; each segment adds its own slope."""
    loss = naka.reference_loss(carrier_freq)
    lo = naka.ref_distance
    first = True
    for bound, gamma in naka.gamma_by_distance:
        if first:
            span = np.minimum(d, bound) / lo
            first = False
        else:
            span = np.clip(d, lo, bound) / lo
        loss = loss + 10.0 * gamma * np.log10(span)
        if not math.isfinite(bound):
            break
        lo = max(bound, naka.ref_distance)
    return loss


def mean_rx_power(phy: PhyParams, naka: NakagamiParams, d: float) -> float:
    if not d > 0:
        raise NonPositiveDistance(f"distance must be > 0, got {d}")
    return float(phy.tx_power - _path_loss_db(naka, phy.carrier_freq, d))


def mean_rx_power_array(phy: PhyParams, naka: NakagamiParams, d: np.ndarray) -> np.ndarray:
    d = np.maximum(d, 1e-3)
    return phy.tx_power - _path_loss_db(naka, phy.carrier_freq, d)


def sample_rx_power(mean_dbm: float, shape_m: float, rng: RngStream) -> float:
    """One Nakagami-m faded power sample: gamma(m, mean/m) in linear milliwatts."""
    if not shape_m >= 0.5:
        raise InvalidShape(f"Nakagami shape must be >= 0.5, got {shape_m}")
    mean_mw = 10.0 ** (mean_dbm / 10.0)
    return 10.0 * math.log10(rng.gen.gamma(shape_m, mean_mw / shape_m))


def sample_rx_power_array(mean_dbm: np.ndarray, shape_m: np.ndarray, rng: RngStream) -> np.ndarray:
    mean_mw = 10.0 ** (mean_dbm / 10.0)
    return 10.0 * np.log10(rng.gen.gamma(shape_m, mean_mw / shape_m))


def reception_decision(sample: float, phy: PhyParams, concurrent_interference: bool) -> Reception:
    if sample < phy.cs_threshold:
        return Reception.UNDETECTED
    if sample < phy.rx_threshold:
        return Reception.CARRIER_ONLY
    if concurrent_interference:
        return Reception.COLLIDED
    return Reception.RECEIVED


def dump_phy(phy: PhyParams) -> str:
    """Structured-text dump of a preset, one ``key = value`` per line."""
    lines = [f"[phy.{phy.preset.value}]"]
    for name in ("carrier_freq", "channel_width", "tx_power", "data_rate",
                 "rx_threshold", "cs_threshold", "noise_floor"):
        lines.append(f"{name} = {getattr(phy, name)!r}")
    return "\n".join(lines)


def nominal_range(phy: PhyParams, naka: NakagamiParams, threshold: float | None = None) -> float:
    """Distance at which the mean power crosses ``threshold`` (rx_threshold by default)."""
    threshold = phy.rx_threshold if threshold is None else threshold
    lo, hi = 1e-3, 1e6
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if mean_rx_power(phy, naka, mid) >= threshold:
            lo = mid
        else:
            hi = mid
    return lo
