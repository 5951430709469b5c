"""Path loss, directional antenna gain, SINR and MCS rate selection.

All functions are pure. Powers are in dBm, gains and losses in dB, angles
in radians and distances in meters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

SINR_FLOOR_DB = -50.0
SINR_CEIL_DB = 60.0


@dataclass(frozen=True)
class PathLossParams:
    alpha_db: float = 82.02
    d0_m: float = 5.0
    k_near: float = 2.0
    k_far: float = 2.36

    def __post_init__(self):
        if not (self.d0_m > 0 and self.k_near > 0 and self.k_far > 0):
            raise ValueError(f"invalid path loss parameters: {self}")


@dataclass(frozen=True)
class AntennaPattern:
    """Gaussian main-lobe pattern given by its two half-power beamwidths."""

    az_hpbw_rad: float
    el_hpbw_rad: float

    def __post_init__(self):
        for name in ("az_hpbw_rad", "el_hpbw_rad"):
            v = getattr(self, name)
            if not (0.0 < v < math.pi):
                raise ValueError(f"{name} must lie in (0, pi), got {v}")

    @property
    def boresight_gain_linear(self) -> float:
        return 16.0 * math.pi / (6.76 * self.el_hpbw_rad * self.az_hpbw_rad)

    @property
    def boresight_gain_db(self) -> float:
        return 10.0 * math.log10(self.boresight_gain_linear)


@dataclass(frozen=True)
class McsTable:
    """Ordered (SINR threshold in dB, bits per slot) entries."""

    entries: tuple

    def __post_init__(self):
        entries = tuple((float(t), int(r)) for t, r in self.entries)
        if not entries:
            raise ValueError("MCS table must not be empty")
        for (t0, r0), (t1, r1) in zip(entries, entries[1:]):
            if not (t1 > t0 and r1 > r0):
                raise ValueError("MCS thresholds and rates must be strictly increasing")
        if entries[0][1] <= 0:
            raise ValueError("MCS rates must be positive")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_thresholds", np.array([t for t, _ in entries]))

    @property
    def c_min(self) -> int:
        return self.entries[0][1]

    @property
    def c_max(self) -> int:
        return self.entries[-1][1]

    @property
    def thresholds_db(self) -> np.ndarray:
        return self._thresholds

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float
    tx_gain_db: float
    rx_gain_db: float
    path_loss_db: float
    noise_dbm: float

    @property
    def rx_power_dbm(self) -> float:
        return self.tx_power_dbm + self.tx_gain_db + self.rx_gain_db - self.path_loss_db

    def sinr_db(self, interferers_dbm: Sequence[float] = ()) -> float:
        return sinr_db(self.rx_power_dbm, interferers_dbm, self.noise_dbm)


def path_loss_db(d: float, params: PathLossParams = PathLossParams()) -> float:
    if not d > 0:
        raise ValueError(f"path length must be positive, got {d}")
    k = params.k_near if d <= params.d0_m else params.k_far
    return params.alpha_db + k * 10.0 * math.log10(d / params.d0_m)


def path_loss_db_array(d: np.ndarray, params: PathLossParams) -> np.ndarray:
    """Vectorised ``path_loss_db``; ``d`` must be strictly positive."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("path length must be positive")
    k = np.where(d <= params.d0_m, params.k_near, params.k_far)
    return params.alpha_db + k * 10.0 * np.log10(d / params.d0_m)


def antenna_gain_db(pattern: AntennaPattern, phi: float, beta: float) -> float:
    """Gain at elevation offset ``phi`` and azimuth offset ``beta``."""
    return (pattern.boresight_gain_db
            - 12.0 * phi ** 2 / pattern.el_hpbw_rad ** 2
            - 12.0 * beta ** 2 / pattern.az_hpbw_rad ** 2)


def antenna_gain_db_array(pattern: AntennaPattern, phi, beta) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return (pattern.boresight_gain_db
            - 12.0 * phi ** 2 / pattern.el_hpbw_rad ** 2
            - 12.0 * beta ** 2 / pattern.az_hpbw_rad ** 2)


def dbm_to_mw(p_dbm):
    return np.power(10.0, np.asarray(p_dbm, dtype=np.float64) / 10.0)


def mw_to_dbm(p_mw):
    return 10.0 * np.log10(np.asarray(p_mw, dtype=np.float64))


def sinr_db(signal_dbm: float, interferers_dbm: Sequence[float], noise_dbm: float) -> float:
    interference_mw = float(np.sum(dbm_to_mw(list(interferers_dbm)))) if len(interferers_dbm) else 0.0
    denom = interference_mw + float(dbm_to_mw(noise_dbm))
    return float(10.0 * math.log10(float(dbm_to_mw(signal_dbm)) / denom))


def clamp_sinr_db(value):
    return np.clip(value, SINR_FLOOR_DB, SINR_CEIL_DB)


def select_mcs(sinr: float, table: McsTable) -> Optional[tuple[int, int]]:
    """Highest MCS whose threshold is met (inclusive), or None when no link."""
    idx = int(np.searchsorted(table.thresholds_db, sinr, side="right")) - 1
    if idx < 0:
        return None
    return idx, table.entries[idx][1]


def rate_bits(sinr: float, table: McsTable) -> int:
    chosen = select_mcs(float(clamp_sinr_db(sinr)), table)
    return 0 if chosen is None else chosen[1]
