"""Near-field power concentration and semi-orthogonality probability analysis.

The analysis quantifies how a spherical wavefront concentrates received power
on a contiguous patch of a very large array, and bounds the probability that a
matched-filter stream aimed at one user stays below a leakage threshold at a
random co-channel user. The bound machinery assumes half-wavelength element
spacing; the kernel and the Monte-Carlo oracle are valid for any spacing.
"""

from dataclasses import dataclass

import numpy as np

from .arrays import ArrayConfig, UserPosition, element_distances, steering_vector_sw


@dataclass(frozen=True)
class UniformAngles:
    """Symmetric uniform angle law on [-half_width, half_width] radians."""

    half_width: float = np.pi / 2

    def __post_init__(self) -> None:
        if not 0.0 < self.half_width <= np.pi / 2:
            raise ValueError(f"half_width must lie in (0, pi/2], got {self.half_width!r}")

    def interval_probability(self, lower: float, upper: float) -> float:
        """Probability mass of [lower, upper]; the interval may exceed the support."""
        lo = max(lower, -self.half_width)
        hi = min(upper, self.half_width)
        if hi <= lo:
            return 0.0
        return (hi - lo) / (2.0 * self.half_width)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(-self.half_width, self.half_width, count)


def angular_aperture(user: UserPosition, cfg: ArrayConfig) -> float:
    """Angle subtended by the array at the user's position (radians).

    Sum of the two half-apertures toward the array ends:
    atan((Md - 2 r sin(theta)) / (2 r cos(theta))) + atan((Md + 2 r sin(theta)) / (2 r cos(theta))).
    Tends to pi as the user approaches the array, to 0 far away.
    """
    span = cfg.num_elements * cfg.element_spacing
    across = 2.0 * user.distance * np.cos(user.angle)
    along = 2.0 * user.distance * np.sin(user.angle)
    return float(np.arctan((span - along) / across) + np.arctan((span + along) / across))


def power_concentration(user: UserPosition, cfg: ArrayConfig) -> float:
    """Mean-to-peak ratio of per-element received power, in closed form.

    Equals (nearest element distance)^2 * aperture / (M r d cos(theta)). Close
    to 1 in the far field (power spread evenly), small deep in the near field
    (power concentrated on few elements).
    """
    nearest = float(element_distances(user, cfg).min())
    denom = cfg.num_elements * user.distance * cfg.element_spacing * np.cos(user.angle)
    return float(nearest**2 * angular_aperture(user, cfg) / denom)


def effective_aperture(user: UserPosition, cfg: ArrayConfig, eta: float = 0.95) -> int:
    """Smallest odd number of strongest elements capturing an eta power share.

    Elements are ranked by received power, so the count corresponds to the
    contiguous patch nearest the user. Always odd, never above the array size
    (at even array sizes the count saturates at num_elements - 1).
    """
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta!r}")
    power = cfg.ref_gain / element_distances(user, cfg) ** 2
    ranked = np.sort(power)[::-1]
    cum = np.cumsum(ranked)
    count = int(np.searchsorted(cum, eta * cum[-1], side="left")) + 1
    if count % 2 == 0:
        count += 1
    if count > cfg.num_elements:
        count = cfg.num_elements - (1 - cfg.num_elements % 2)
    return count


def _check_kernel_args(r_k: float, r_j: float, m_prime: int) -> None:
    if r_k <= 0.0 or r_j <= 0.0:
        raise ValueError("user distances must be positive")
    if m_prime < 1 or m_prime % 2 == 0:
        raise ValueError(f"aperture count must be odd and >= 1, got {m_prime}")


def _kernel_amplitude(r_k: float, r_j: float, cfg: ArrayConfig) -> float:
    """Leading factor ref_gain / (||a_k|| r_k r_j) with the full-array norm at broadside."""
    norm = float(np.linalg.norm(steering_vector_sw(UserPosition(r_k, 0.0), cfg)))
    return cfg.ref_gain / (norm * r_k * r_j)


def interference_kernel(theta, r_k: float, r_j: float, m_prime: int, cfg: ArrayConfig):
    """Matched-filter leakage |f_k^H a_j| toward angle theta, far-field patch form.

    Closed Dirichlet form over the m_prime central elements:

        i(theta) = amplitude * |sin(pi d m_prime sin(theta) / wl)
                               / sin(pi d sin(theta) / wl)|

    evaluated in a singularity-free way (the theta = 0 limit is m_prime times
    the amplitude). Scalar in, scalar out; arrays broadcast.
    """
    _check_kernel_args(r_k, r_j, m_prime)
    theta_arr = np.asarray(theta, dtype=float)
    x = np.pi * cfg.element_spacing * np.sin(theta_arr) / cfg.wavelength
    ratio = m_prime * np.sinc(m_prime * x / np.pi) / np.sinc(x / np.pi)
    out = _kernel_amplitude(r_k, r_j, cfg) * np.abs(ratio)
    if np.isscalar(theta) or theta_arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class PartitionRow:
    """One sidelobe partition of [0, pi/2] with its threshold-crossing angles.

    The kernel is below the threshold on [lower, crossing_lower] and on
    [crossing_upper, upper]. A clamped row is entirely below the threshold and
    contributes its full width.
    """

    q: int
    lower: float
    upper: float
    crossing_lower: float
    crossing_upper: float
    clamped: bool


@dataclass(frozen=True)
class PartitionTable:
    """Sidelobe partitions covering [0, pi/2] plus the scaled threshold.

    scaled_threshold is the leakage threshold divided by the kernel amplitude,
    i.e. alpha * r_k * r_j * ||a_k|| / ref_gain.
    """

    rows: tuple
    scaled_threshold: float


def _check_half_wavelength(cfg: ArrayConfig) -> None:
    ratio = cfg.element_spacing / cfg.wavelength
    if abs(ratio - 0.5) > 1e-12:
        raise ValueError(
            "threshold partitions are supported only at half-wavelength spacing; "
            f"got spacing/wavelength = {ratio:g}"
        )


def partition_table(
    alpha: float,
    r_k: float,
    r_j: float,
    m_prime: int,
    cfg: ArrayConfig,
) -> PartitionTable:
    """Partition [0, pi/2] at the kernel nulls and solve the threshold crossings.

    Row q spans sin(theta) in [wl q / (d m_prime), wl (q+1) / (d m_prime)], one
    kernel half-lobe. Within a row the kernel denominator is bounded by its
    value at the upper row boundary, giving conservative crossing angles; rows
    whose bounded threshold reaches 1 are clamped (kernel below threshold over
    the whole row). The terminal row's upper edge saturates at pi/2.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    _check_kernel_args(r_k, r_j, m_prime)
    _check_half_wavelength(cfg)

    scaled = alpha / _kernel_amplitude(r_k, r_j, cfg)
    step = cfg.wavelength / (cfg.element_spacing * m_prime)  # sin-space row width
    rows = []
    for q in range((m_prime + 1) // 2):
        s_lower = step * q
        s_upper = step * (q + 1)
        lower = float(np.arcsin(min(1.0, s_lower)))
        upper = float(np.arcsin(min(1.0, s_upper)))
        tau = scaled * np.sin(np.pi * (q + 1) / m_prime)
        if tau >= 1.0:
            rows.append(PartitionRow(q, lower, upper, upper, upper, True))
            continue
        shift = np.arcsin(tau) * step / np.pi
        # The kernel peaks (not nulls) at the lower edge of row 0, so that row
        # has no lower-side crossing interval.
        crossing_lower = lower if q == 0 else float(np.arcsin(s_lower + shift))
        crossing_upper = float(np.arcsin(min(1.0, s_upper - shift)))
        rows.append(PartitionRow(q, lower, upper, crossing_lower, crossing_upper, False))
    return PartitionTable(tuple(rows), float(scaled))


def semiorth_prob_bound(
    alpha: float,
    r_k: float,
    r_j: float,
    m_prime: int,
    cfg: ArrayConfig,
    angle_model: UniformAngles | None = None,
) -> float:
    """Upper bound on P{kernel leakage at a random co-channel angle < alpha}.

    Sums the angle-law mass of the below-threshold intervals of every
    partition row, doubled for the symmetric negative angles. Exactly 0 for a
    single-element patch (no sidelobe structure to exploit) and saturates at 1
    once every row is clamped.
    """
    model = angle_model or UniformAngles()
    table = partition_table(alpha, r_k, r_j, m_prime, cfg)
    mass = 0.0
    for row in table.rows:
        mass += model.interval_probability(row.lower, row.crossing_lower)
        mass += model.interval_probability(row.crossing_upper, row.upper)
    return min(1.0, 2.0 * mass)


def semiorth_prob_mc(
    alpha: float,
    r_k: float,
    r_j: float,
    m_prime: int,
    cfg: ArrayConfig,
    samples: int = 100_000,
    seed: int = 0,
    angle_model: UniformAngles | None = None,
) -> tuple[float, float]:
    """Monte-Carlo estimate of P{kernel leakage < alpha} with its standard error.

    Draws co-channel angles from the angle law with a counter-based generator,
    so estimates are reproducible for a given seed regardless of call order.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    model = angle_model or UniformAngles()
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    theta = model.sample(rng, samples)
    hits = interference_kernel(theta, r_k, r_j, m_prime, cfg) < alpha
    estimate = float(np.mean(hits))
    stderr = float(np.sqrt(estimate * (1.0 - estimate) / samples))
    return estimate, stderr
