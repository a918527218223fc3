"""Received-SINR and sum-rate evaluation with full inter-user interference."""

from dataclasses import dataclass

import numpy as np

from .arrays import ChannelMatrix
from .precoding import PrecoderSet


@dataclass(frozen=True)
class RateReport:
    """Per-user SINRs and rates plus their aggregates for one scheduled set."""

    sinr: np.ndarray
    rates: np.ndarray  # bits/s/Hz per user
    sum_rate: float
    served_count: int  # users with strictly positive power


def _cross_gains(precoders: PrecoderSet, channels: ChannelMatrix) -> np.ndarray:
    if precoders.user_ids != channels.user_ids:
        raise ValueError("precoder/channel user orderings differ")
    # Entry [j, k] is f_j^H a_k: the leakage of stream j onto user k.
    return precoders.columns.conj().T @ channels.matrix


def sinr(
    k: int,
    precoders: PrecoderSet,
    powers: np.ndarray,
    channels: ChannelMatrix,
    noise_power: float,
) -> float:
    """SINR of the user at column position k under the given powers."""
    cross = np.abs(_cross_gains(precoders, channels)) ** 2
    p = np.asarray(powers, dtype=float)
    signal = p[k] * cross[k, k]
    interference = p @ cross[:, k] - signal
    return float(signal / (noise_power + interference))


def rate_report(
    precoders: PrecoderSet,
    powers: np.ndarray,
    channels: ChannelMatrix,
    noise_power: float,
) -> RateReport:
    """Evaluate every scheduled user's SINR and rate, interference included."""
    if noise_power <= 0.0:
        raise ValueError("noise_power must be positive")
    p = np.asarray(powers, dtype=float)
    if p.shape != (channels.num_users,):
        raise ValueError("powers length does not match the scheduled set")
    cross = np.abs(_cross_gains(precoders, channels)) ** 2
    signal = p * np.diagonal(cross)
    interference = p @ cross - signal
    sinr_vec = signal / (noise_power + interference)
    rates = np.log2(1.0 + sinr_vec)
    return RateReport(
        sinr=sinr_vec,
        rates=rates,
        sum_rate=float(rates.sum()),
        served_count=int(np.count_nonzero(p > 0.0)),
    )


def sum_rate(
    precoders: PrecoderSet,
    powers: np.ndarray,
    channels: ChannelMatrix,
    noise_power: float,
) -> float:
    return rate_report(precoders, powers, channels, noise_power).sum_rate
