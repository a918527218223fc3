"""Exact waterfilling power allocation over parallel effective channels."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PowerAllocation:
    """Per-user transmit powers plus the water level that produced them."""

    powers: np.ndarray
    water_level: float

    @property
    def active_count(self) -> int:
        return int(np.count_nonzero(self.powers > 0.0))


def waterfill(gains: np.ndarray, noise_power: float, power_budget: float) -> PowerAllocation:
    """Maximize sum log2(1 + p_k g_k / noise) subject to sum p_k = budget, p_k >= 0.

    Exact finite algorithm: sort inverse gains noise/g_k ascending and shrink
    the active set from the full set downward until the implied water level
    exceeds the largest active inverse gain. No iterative tolerance is
    involved, so the KKT conditions hold to rounding error.
    """
    g = np.asarray(gains, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("gains must be a non-empty 1-D array")
    if np.any(g <= 0.0) or not np.all(np.isfinite(g)):
        raise ValueError("all gains must be positive and finite")
    if noise_power <= 0.0 or power_budget <= 0.0:
        raise ValueError("noise_power and power_budget must be positive")

    inv = noise_power / g
    order = np.argsort(inv, kind="stable")
    inv_sorted = inv[order]
    prefix = np.cumsum(inv_sorted)

    active = g.size
    while active > 1:
        level = (power_budget + prefix[active - 1]) / active
        if level > inv_sorted[active - 1]:
            break
        active -= 1
    level = (power_budget + prefix[active - 1]) / active

    powers = np.zeros_like(g)
    powers[order[:active]] = level - inv_sorted[:active]
    return PowerAllocation(powers, float(level))


def rate_from_gains(alloc: PowerAllocation, gains: np.ndarray, noise_power: float) -> float:
    """Interference-free sum rate implied by an allocation (bits/s/Hz)."""
    snr = alloc.powers * np.asarray(gains, dtype=float) / noise_power
    return float(np.sum(np.log2(1.0 + snr)))
