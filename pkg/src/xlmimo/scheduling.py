"""User-selection schedulers: distance-based, greedy projection, matched filter.

All greedy schedulers share the same machinery per accepted user: zero-forcing
precoders rebuilt from the Gram system, exact waterfilling over the effective
gains, and a stop-on-non-improvement rule on the resulting sum rate. They
differ only in how the next candidate is chosen, which is where their costs
diverge.
"""

import time
from dataclasses import dataclass

import numpy as np

from .arrays import ArrayConfig, ChannelMatrix
from .precoding import PrecoderSet, RankDeficientChannelError, effective_gains, zf_precoders
from .rates import RateReport, rate_report
from .waterfilling import PowerAllocation, rate_from_gains, waterfill


@dataclass(frozen=True)
class StoppingRule:
    """When a greedy scheduler stops admitting users.

    rate_reduction: stop (and revert the candidate) once admitting it no longer
        strictly improves the sum rate. This is the default criterion.
    max_equivalent_distance: optionally stop once the best remaining candidate's
        equivalent distance exceeds this many meters.
    max_served: optional cap on the served-set size; the array size is always
        a hard cap on top of this.
    """

    rate_reduction: bool = True
    max_equivalent_distance: float | None = None
    max_served: int | None = None


@dataclass(frozen=True)
class ScheduleResult:
    """Outcome of one scheduler run.

    served lists user ids in acceptance order. iterations counts candidate-set
    solves attempted (including rejected and reverted candidates), and
    rate_trajectory holds the sum rate after each accepted user.
    """

    served: tuple
    precoders: PrecoderSet
    powers: PowerAllocation
    report: RateReport
    iterations: int
    elapsed: float  # seconds, monotonic clock around the scheduler body
    rate_trajectory: tuple


def equivalent_distance(
    distance: float,
    channel: np.ndarray,
    precoders: PrecoderSet,
    cfg: ArrayConfig,
) -> float:
    """Interference-inflated distance of a candidate against the served set.

        r_eq = r * (1 - (r^2 / M) * sum_j |f_j^H a|^2) ** (-1/2)

    With no served users this reduces to r. A non-positive argument means the
    candidate's channel is effectively saturated by the served set's precoders;
    the distance is reported as inf and such candidates are never admitted.
    """
    if distance <= 0.0:
        raise ValueError("distance must be positive")
    if precoders.num_users == 0:
        return float(distance)
    proj = precoders.columns.conj().T @ channel
    load = float(np.sum(np.abs(proj) ** 2))
    arg = 1.0 - distance * distance / cfg.num_elements * load
    if arg <= 0.0:
        return float("inf")
    return float(distance / np.sqrt(arg))


@dataclass
class _SetState:
    precoders: PrecoderSet
    alloc: PowerAllocation
    gains: np.ndarray
    rate: float


def _solve_set(channels: ChannelMatrix, positions, cfg: ArrayConfig) -> _SetState | None:
    """ZF + waterfilling for one candidate set; None when the set is infeasible."""
    ids = tuple(channels.user_ids[p] for p in positions)
    sub = channels.columns(ids)
    try:
        pre = zf_precoders(sub)
    except RankDeficientChannelError:
        return None
    gains = effective_gains(pre, sub)
    alloc = waterfill(gains, cfg.noise_power, cfg.tx_power)
    return _SetState(pre, alloc, gains, rate_from_gains(alloc, gains, cfg.noise_power))


def _finish(
    channels: ChannelMatrix,
    positions,
    state: _SetState | None,
    cfg: ArrayConfig,
    iterations: int,
    trajectory,
    t0: float,
) -> ScheduleResult:
    if state is None:
        m = channels.matrix.shape[0]
        pre = PrecoderSet(np.zeros((m, 0), dtype=complex), ())
        alloc = PowerAllocation(np.zeros(0), 0.0)
        report = RateReport(np.zeros(0), np.zeros(0), 0.0, 0)
        served = ()
    else:
        served = tuple(channels.user_ids[p] for p in positions)
        pre = state.precoders
        alloc = state.alloc
        report = rate_report(pre, alloc.powers, channels.columns(served), cfg.noise_power)
    return ScheduleResult(
        served=served,
        precoders=pre,
        powers=alloc,
        report=report,
        iterations=iterations,
        elapsed=time.perf_counter() - t0,
        rate_trajectory=tuple(trajectory),
    )


def _served_cap(cfg: ArrayConfig, stop: StoppingRule) -> int:
    cap = cfg.num_elements  # ZF cannot separate more streams than elements
    if stop.max_served is not None:
        cap = min(cap, stop.max_served)
    return cap


def _check_distances(distances, num_users: int) -> np.ndarray:
    r = np.asarray(distances, dtype=float)
    if r.shape != (num_users,):
        raise ValueError("distances length does not match the channel columns")
    if np.any(r <= 0.0):
        raise ValueError("distances must be positive")
    return r


def dbs_schedule(
    channels: ChannelMatrix,
    distances,
    cfg: ArrayConfig,
    stop: StoppingRule | None = None,
) -> ScheduleResult:
    """Distance-based scheduling with equivalent-distance updates.

    Repeatedly takes the candidate with the smallest equivalent distance,
    refreshes that candidate's distance against the currently served set, and
    admits it once the refreshed value is still the pool minimum. Within one
    outer iteration each candidate is refreshed at most once; the pool minimum
    is taken over a mix of fresh and stale values, and acceptance is declared
    only on a fresh one.
    """
    t0 = time.perf_counter()
    stop = stop or StoppingRule()
    K = channels.num_users
    r = _check_distances(distances, K)
    cap = _served_cap(cfg, stop)

    r_eq = r.copy()
    alive = np.ones(K, dtype=bool)
    served: list[int] = []
    trajectory: list[float] = []
    state: _SetState | None = None
    attempts = 0

    while alive.any() and len(served) < cap:
        updated = np.zeros(K, dtype=bool)
        choice = -1
        while alive.any():
            masked = np.where(alive, r_eq, np.inf)
            k = int(masked.argmin())
            if updated[k]:
                choice = k
                break
            r_eq[k] = equivalent_distance(r[k], channels.matrix[:, k], _precoders(state), cfg)
            updated[k] = True
            if not np.isfinite(r_eq[k]):
                alive[k] = False  # saturated against the served set; out for this run
                continue
            if int(np.where(alive, r_eq, np.inf).argmin()) == k:
                choice = k
                break
        if choice < 0:
            break
        if (
            stop.max_equivalent_distance is not None
            and r_eq[choice] > stop.max_equivalent_distance
        ):
            break
        attempts += 1
        cand = _solve_set(channels, served + [choice], cfg)
        if cand is None:
            r_eq[choice] = np.inf
            alive[choice] = False
            continue
        if stop.rate_reduction and state is not None and cand.rate <= state.rate:
            break  # revert the candidate, keep the previous state
        served.append(choice)
        alive[choice] = False
        state = cand
        trajectory.append(cand.rate)

    return _finish(channels, served, state, cfg, attempts, trajectory, t0)


def _precoders(state: _SetState | None) -> PrecoderSet:
    if state is None:
        return _EMPTY_PRECODERS
    return state.precoders


_EMPTY_PRECODERS = PrecoderSet(np.zeros((1, 0), dtype=complex), ())


def dbs_s_schedule(
    channels: ChannelMatrix,
    distances,
    cfg: ArrayConfig,
    stop: StoppingRule | None = None,
) -> ScheduleResult:
    """Simplified distance-based scheduling: consume users by raw distance.

    No equivalent-distance updates; candidates are visited once in ascending
    range order (ties by user id), infeasible ones are skipped, and the run
    stops on the shared stopping rule.
    """
    t0 = time.perf_counter()
    stop = stop or StoppingRule()
    K = channels.num_users
    r = _check_distances(distances, K)
    cap = _served_cap(cfg, stop)

    served: list[int] = []
    trajectory: list[float] = []
    state: _SetState | None = None
    attempts = 0

    for k in np.argsort(r, kind="stable"):
        if len(served) >= cap:
            break
        if stop.max_equivalent_distance is not None and r[k] > stop.max_equivalent_distance:
            break  # sorted order: every later candidate is even farther
        attempts += 1
        cand = _solve_set(channels, served + [int(k)], cfg)
        if cand is None:
            continue
        if stop.rate_reduction and state is not None and cand.rate <= state.rate:
            break
        served.append(int(k))
        state = cand
        trajectory.append(cand.rate)

    return _finish(channels, served, state, cfg, attempts, trajectory, t0)


def sus_schedule(
    channels: ChannelMatrix,
    cfg: ArrayConfig,
    stop: StoppingRule | None = None,
    alpha: float = 1.0,
) -> ScheduleResult:
    """Greedy zero-forcing with semi-orthogonal user selection.

    Each iteration projects every remaining candidate onto the orthogonal
    complement of the span of the selected channels and admits the largest
    residual. With alpha < 1 the classical semi-orthogonality filter prunes
    candidates too correlated with each newly selected direction; alpha = 1
    disables the filter.
    """
    t0 = time.perf_counter()
    stop = stop or StoppingRule()
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    K = channels.num_users
    cap = _served_cap(cfg, stop)
    a = channels.matrix

    alive = np.ones(K, dtype=bool)
    basis: list[np.ndarray] = []
    served: list[int] = []
    trajectory: list[float] = []
    state: _SetState | None = None
    attempts = 0

    while alive.any() and len(served) < cap:
        pool = np.flatnonzero(alive)
        cand_cols = a[:, pool]
        if basis:
            q = np.column_stack(basis)
            resid = cand_cols - q @ (q.conj().T @ cand_cols)
        else:
            resid = cand_cols
        norms2 = np.einsum("ij,ij->j", resid.conj(), resid).real
        pick = int(norms2.argmax())  # ties resolve to the lowest user id
        k = int(pool[pick])
        attempts += 1
        cand = _solve_set(channels, served + [k], cfg)
        if cand is None:
            alive[k] = False
            continue
        if stop.rate_reduction and state is not None and cand.rate <= state.rate:
            break
        served.append(k)
        alive[k] = False
        state = cand
        trajectory.append(cand.rate)
        direction = resid[:, pick] / np.sqrt(norms2[pick])
        basis.append(direction)
        if alpha < 1.0 and alive.any():
            rest = np.flatnonzero(alive)
            corr = np.abs(a[:, rest].conj().T @ direction)
            corr /= np.linalg.norm(a[:, rest], axis=0)
            alive[rest[corr >= alpha]] = False

    return _finish(channels, served, state, cfg, attempts, trajectory, t0)


def mrt_schedule(channels: ChannelMatrix, cfg: ArrayConfig) -> ScheduleResult:
    """Matched-filter baseline: every user scheduled, waterfilling over ||a_k||^2.

    Interference is not nulled, so the reported rates come from the full
    cross-gain evaluation rather than the allocation's interference-free view.
    """
    t0 = time.perf_counter()
    a = channels.matrix
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("zero channel column cannot be matched-filtered")
    pre = PrecoderSet(a / norms, channels.user_ids)
    alloc = waterfill(norms**2, cfg.noise_power, cfg.tx_power)
    report = rate_report(pre, alloc.powers, channels, cfg.noise_power)
    elapsed = time.perf_counter() - t0
    return ScheduleResult(
        served=channels.user_ids,
        precoders=pre,
        powers=alloc,
        report=report,
        iterations=1,
        elapsed=elapsed,
        rate_trajectory=(report.sum_rate,),
    )


def exhaustive_schedule(
    channels: ChannelMatrix,
    cfg: ArrayConfig,
    max_users: int = 12,
) -> ScheduleResult:
    """Best ZF subset by enumeration; the oracle the greedy schedulers chase.

    Enumerates every non-empty subset in bitmask order and keeps the first
    subset achieving the best waterfilled sum rate. Exponential in the number
    of users, hence the hard cap.
    """
    t0 = time.perf_counter()
    K = channels.num_users
    if K > max_users:
        raise ValueError(f"{K} users exceed the enumeration cap {max_users}")
    best: _SetState | None = None
    best_set: list[int] = []
    attempts = 0
    for mask in range(1, 2**K):
        positions = [i for i in range(K) if mask >> i & 1]
        attempts += 1
        cand = _solve_set(channels, positions, cfg)
        if cand is None:
            continue
        if best is None or cand.rate > best.rate:
            best = cand
            best_set = positions
    trajectory = (best.rate,) if best is not None else ()
    return _finish(channels, best_set, best, cfg, attempts, trajectory, t0)
