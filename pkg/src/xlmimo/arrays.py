"""Uniform linear array geometry and line-of-sight downlink channel vectors."""

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

DEFAULT_SPACING = 0.0628
"""Default element spacing in meters; default wavelength is twice this."""

MODEL_SW = "sw"
MODEL_PW = "pw"
CHANNEL_MODELS = (MODEL_SW, MODEL_PW)


@dataclass(frozen=True)
class ArrayConfig:
    """Transmit array description plus the link-budget scalars the schedulers need.

    The array is centered at the origin and lies along the ordinate axis, so
    element positions are (0, m * element_spacing) with symmetric offsets m.
    """

    num_elements: int = 256
    element_spacing: float = DEFAULT_SPACING  # meters
    wavelength: float = 2.0 * DEFAULT_SPACING  # meters
    ref_gain: float = 1.0  # free-space channel gain at 1 m
    tx_power: float = 1.0  # total downlink power budget
    noise_power: float = 1.0  # per-user receiver noise variance

    def __post_init__(self) -> None:
        if self.num_elements < 1:
            raise ValueError(f"num_elements must be >= 1, got {self.num_elements}")
        for name in ("element_spacing", "wavelength", "ref_gain", "tx_power", "noise_power"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")

    def with_snr_db(self, snr_db: float) -> "ArrayConfig":
        """Copy of this config with noise power set for a transmit SNR in dB.

        Convention: unit power budget, so noise = ref_gain * 10^(-snr_db/10).
        """
        return replace(self, noise_power=self.ref_gain * 10.0 ** (-snr_db / 10.0))


@dataclass(frozen=True)
class UserPosition:
    """Polar user location: range in meters, azimuth in radians from broadside."""

    distance: float
    angle: float

    def __post_init__(self) -> None:
        if self.distance <= 0.0:
            raise ValueError(f"distance must be positive, got {self.distance!r}")
        if not abs(self.angle) < np.pi / 2:
            raise ValueError(f"angle must lie in (-pi/2, pi/2), got {self.angle!r}")


@dataclass(frozen=True)
class ChannelMatrix:
    """Column-per-user channel matrix tagged with user ids and the wavefront model."""

    matrix: np.ndarray  # shape (num_elements, num_users), complex
    user_ids: tuple
    model: str

    def __post_init__(self) -> None:
        if self.model not in CHANNEL_MODELS:
            raise ValueError(f"unknown channel model {self.model!r}")
        if self.matrix.ndim != 2 or self.matrix.shape[1] != len(self.user_ids):
            raise ValueError("matrix shape does not match user_ids")

    @property
    def num_users(self) -> int:
        return len(self.user_ids)

    def columns(self, ids: Sequence[int]) -> "ChannelMatrix":
        """Sub-matrix restricted to `ids`, preserving the requested order."""
        index = {u: j for j, u in enumerate(self.user_ids)}
        cols = [index[u] for u in ids]
        return ChannelMatrix(self.matrix[:, cols], tuple(ids), self.model)


def element_offsets(cfg: ArrayConfig) -> np.ndarray:
    """Symmetric element offsets m; half-integers when num_elements is even."""
    return np.arange(cfg.num_elements) - (cfg.num_elements - 1) / 2.0


def critical_distance(cfg: ArrayConfig) -> float:
    """Range beyond which the plane-wave approximation is considered valid (9*M*d)."""
    return 9.0 * cfg.num_elements * cfg.element_spacing


def element_distances(user: UserPosition, cfg: ArrayConfig) -> np.ndarray:
    """Exact distances from the user to every array element.

    Closed form in the normalized spacing d_k = d / r_k:

        r_km = r_k * sqrt(1 - 2 m d_k sin(theta_k) + d_k^2 m^2)

    which equals the Euclidean distance between (r cos(theta), r sin(theta))
    and (0, m d).
    """
    m = element_offsets(cfg)
    dk = cfg.element_spacing / user.distance
    arg = 1.0 - 2.0 * m * dk * np.sin(user.angle) + (dk * m) ** 2
    return user.distance * np.sqrt(arg)


def element_distance(user: UserPosition, element: int, cfg: ArrayConfig) -> float:
    """Distance from the user to one element, indexed 0..num_elements-1 edge to edge."""
    if not 0 <= element < cfg.num_elements:
        raise ValueError(f"element index {element} outside 0..{cfg.num_elements - 1}")
    return float(element_distances(user, cfg)[element])


def steering_vector_sw(user: UserPosition, cfg: ArrayConfig) -> np.ndarray:
    """Spherical-wavefront channel vector with per-element amplitude and phase.

    Each entry carries the free-space amplitude sqrt(ref_gain)/r_km and the
    phase accumulated over the exact element distance r_km.
    """
    r_km = element_distances(user, cfg)
    amp = np.sqrt(cfg.ref_gain) / r_km
    return amp * np.exp(-2j * np.pi * r_km / cfg.wavelength)


def steering_vector_pw(user: UserPosition, cfg: ArrayConfig) -> np.ndarray:
    """Plane-wave (far-field) channel vector.

    Common amplitude sqrt(ref_gain)/r_k; linear phase front across the array,
    first-order in the element offset.
    """
    m = element_offsets(cfg)
    amp = np.sqrt(cfg.ref_gain) / user.distance
    phase = user.distance - m * cfg.element_spacing * np.sin(user.angle)
    return amp * np.exp(-2j * np.pi * phase / cfg.wavelength)


def channel_matrix(
    users: Sequence[UserPosition],
    cfg: ArrayConfig,
    model: str = MODEL_SW,
    user_ids: Sequence[int] | None = None,
) -> ChannelMatrix:
    """Stack per-user channel vectors into a ChannelMatrix for the chosen model."""
    if model == MODEL_SW:
        build = steering_vector_sw
    elif model == MODEL_PW:
        build = steering_vector_pw
    else:
        raise ValueError(f"unknown channel model {model!r}")
    if not users:
        raise ValueError("at least one user required")
    ids = tuple(range(len(users))) if user_ids is None else tuple(user_ids)
    cols = np.column_stack([build(u, cfg) for u in users])
    return ChannelMatrix(cols, ids, model)
