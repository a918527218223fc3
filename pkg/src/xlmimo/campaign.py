"""Monte-Carlo campaign harness: scenario draws, grid sweeps, timing, CSV."""

from __future__ import annotations

import contextlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .arrays import (
    CHANNEL_MODELS,
    DEFAULT_SPACING,
    ArrayConfig,
    ChannelMatrix,
    UserPosition,
    channel_matrix,
)
from .scheduling import (
    ScheduleResult,
    dbs_s_schedule,
    dbs_schedule,
    mrt_schedule,
    sus_schedule,
)

METHOD_DBS = "dbs"
METHOD_DBS_S = "dbs_s"
METHOD_SUS = "sus"
METHOD_MRT = "mrt"
SCHEDULING_METHODS = (METHOD_DBS, METHOD_DBS_S, METHOD_SUS, METHOD_MRT)

CSV_HEADER = "snr_db,m,model,method,trial,sum_rate_bps_hz,served_users,elapsed_ms,iterations"
BENCH_CSV_HEADER = "method,snr_db,m,model,median_ms,reps"

# Aperture the default coverage window is scaled against when the literal
# 40 m margins would not leave a valid interval (small arrays).
_REF_CRITICAL = 9.0 * 1000 * DEFAULT_SPACING


def default_distance_range(num_elements: int, element_spacing: float = DEFAULT_SPACING) -> tuple[float, float]:
    """Coverage interval centered on the near/far-field boundary 9*M*d.

    The literal window [40, 2*9*M*d - 40] meters is used whenever it is a
    valid interval. Arrays too small for the fixed 40 m margins fall back to
    the same fractional window of the critical distance, which keeps the
    near-field user fraction at one half either way.
    """
    r_cri = 9.0 * num_elements * element_spacing
    lo, hi = 40.0, 2.0 * r_cri - 40.0
    if hi <= lo:
        lo = 40.0 * r_cri / _REF_CRITICAL
        hi = (2.0 * _REF_CRITICAL - 40.0) * r_cri / _REF_CRITICAL
    return (lo, hi)


@dataclass(frozen=True)
class CampaignConfig:
    """Sweep definition for one Monte-Carlo campaign.

    distance_range = None draws user ranges from the per-array default window
    (see default_distance_range). aperture_eta is not consumed by the sweep
    itself; it is carried so analysis tooling sees one configuration surface.
    """

    num_users: int = 200
    antenna_counts: tuple[int, ...] = (64, 128, 256)
    snr_grid_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
    distance_range: tuple[float, float] | None = None
    angle_range: tuple[float, float] = (-np.pi / 4.0, np.pi / 4.0)
    trials: int = 100
    seed: int = 0
    models: tuple[str, ...] = CHANNEL_MODELS
    methods: tuple[str, ...] = SCHEDULING_METHODS
    sus_alpha: float = 1.0
    aperture_eta: float = 0.95
    element_spacing: float = DEFAULT_SPACING
    wavelength: float = 2.0 * DEFAULT_SPACING
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "antenna_counts", tuple(int(m) for m in self.antenna_counts))
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "models", tuple(str(m) for m in self.models))
        object.__setattr__(self, "methods", tuple(str(m) for m in self.methods))
        object.__setattr__(self, "angle_range", tuple(float(a) for a in self.angle_range))
        if self.distance_range is not None:
            object.__setattr__(self, "distance_range", tuple(float(r) for r in self.distance_range))
        for name, minimum in (("num_users", 1), ("trials", 1), ("workers", 1)):
            if getattr(self, name) < minimum:
                raise ValueError(f"{name} must be >= {minimum}, got {getattr(self, name)}")
        if not self.antenna_counts or min(self.antenna_counts) < 1:
            raise ValueError(f"antenna_counts must be positive and nonempty, got {self.antenna_counts}")
        if not self.snr_grid_db:
            raise ValueError("snr_grid_db must be nonempty")
        bad = set(self.models) - set(CHANNEL_MODELS)
        if bad or not self.models:
            raise ValueError(f"models must be a nonempty subset of {CHANNEL_MODELS}, got {self.models}")
        bad = set(self.methods) - set(SCHEDULING_METHODS)
        if bad or not self.methods:
            raise ValueError(f"methods must be a nonempty subset of {SCHEDULING_METHODS}, got {self.methods}")
        if self.distance_range is not None:
            lo, hi = self.distance_range
            if not (0.0 < lo < hi):
                raise ValueError(f"distance_range must satisfy 0 < lo < hi, got {self.distance_range}")
        lo, hi = self.angle_range
        if not (-np.pi / 2.0 < lo < hi < np.pi / 2.0):
            raise ValueError(f"angle_range must lie inside (-pi/2, pi/2), got {self.angle_range}")
        for name in ("sus_alpha", "aperture_eta"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {getattr(self, name)}")
        for name in ("element_spacing", "wavelength"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


def desk_config(**overrides) -> CampaignConfig:
    """CI-sized default campaign: M in {64, 128, 256}, 200 users, 100 trials."""
    return CampaignConfig(**overrides)


def full_scale_config(**overrides) -> CampaignConfig:
    """Full-scale study: M = 1000 antennas, 1000 users, 1000 trials (hours, not CI)."""
    merged = {"num_users": 1000, "antenna_counts": (1000,), "trials": 1000}
    merged.update(overrides)
    return CampaignConfig(**merged)


def array_config(cfg: CampaignConfig, num_elements: int, snr_db: float | None = None) -> ArrayConfig:
    base = ArrayConfig(
        num_elements=num_elements,
        element_spacing=cfg.element_spacing,
        wavelength=cfg.wavelength,
    )
    return base if snr_db is None else base.with_snr_db(snr_db)


@dataclass(frozen=True)
class Scenario:
    """One reproducible user drop for a given array size.

    Positions are drawn from a counter-based stream keyed by
    (campaign seed, antenna count, trial id): all distances first, then all
    angles, so any single trial regenerates bit-exactly in isolation.
    """

    antenna_count: int
    trial_id: int
    seed_used: int
    distances: np.ndarray
    angles: np.ndarray

    @property
    def users(self) -> tuple[UserPosition, ...]:
        return tuple(
            UserPosition(float(r), float(a)) for r, a in zip(self.distances, self.angles)
        )

    def channel(self, model: str, cfg: ArrayConfig) -> ChannelMatrix:
        return channel_matrix(self.users, cfg, model)


def generate_scenario(cfg: CampaignConfig, num_elements: int, trial_id: int) -> Scenario:
    if trial_id < 0:
        raise ValueError(f"trial_id must be >= 0, got {trial_id}")
    seq = np.random.SeedSequence(cfg.seed, spawn_key=(num_elements, trial_id))
    rng = np.random.Generator(np.random.Philox(seq))
    lo, hi = cfg.distance_range or default_distance_range(num_elements, cfg.element_spacing)
    distances = rng.uniform(lo, hi, cfg.num_users)
    angles = rng.uniform(cfg.angle_range[0], cfg.angle_range[1], cfg.num_users)
    return Scenario(num_elements, trial_id, cfg.seed, distances, angles)


@dataclass(frozen=True)
class CampaignRow:
    snr_db: float
    m: int
    model: str
    method: str
    trial: int
    sum_rate_bps_hz: float
    served_users: int
    elapsed_ms: float
    iterations: int

    def sort_key(self):
        return (self.snr_db, self.m, self.model, self.method, self.trial)


@dataclass(frozen=True)
class CampaignResult:
    rows: tuple[CampaignRow, ...]
    failures: tuple[str, ...] = ()


@dataclass(frozen=True)
class SummaryRow:
    snr_db: float
    m: int
    model: str
    method: str
    trials: int
    mean_rate: float
    std_rate: float
    mean_served: float
    std_served: float
    mean_ms: float


@dataclass(frozen=True)
class BenchRow:
    method: str
    snr_db: float
    m: int
    model: str
    median_ms: float
    reps: int


def _schedule(method: str, channels: ChannelMatrix, distances: np.ndarray,
              acfg: ArrayConfig, cfg: CampaignConfig) -> ScheduleResult:
    if method == METHOD_DBS:
        return dbs_schedule(channels, distances, acfg)
    if method == METHOD_DBS_S:
        return dbs_s_schedule(channels, distances, acfg)
    if method == METHOD_SUS:
        return sus_schedule(channels, acfg, alpha=cfg.sus_alpha)
    if method == METHOD_MRT:
        return mrt_schedule(channels, acfg)
    raise ValueError(f"unknown scheduling method {method!r}")


def run_trial(scenario: Scenario, method: str, model: str,
              cfg: CampaignConfig, snr_db: float) -> CampaignRow:
    """Run one scheduler on one scenario and package the outcome as a row."""
    acfg = array_config(cfg, scenario.antenna_count, snr_db)
    channels = scenario.channel(model, acfg)
    try:
        res = _schedule(method, channels, scenario.distances, acfg, cfg)
    except Exception as exc:
        raise RuntimeError(
            f"m={scenario.antenna_count} trial={scenario.trial_id} "
            f"model={model} method={method} snr_db={snr_db:g}: {exc}"
        ) from exc
    return CampaignRow(
        snr_db=float(snr_db),
        m=scenario.antenna_count,
        model=model,
        method=method,
        trial=scenario.trial_id,
        sum_rate_bps_hz=float(res.report.sum_rate),
        served_users=int(res.report.served_count),
        elapsed_ms=res.elapsed * 1e3,
        iterations=int(res.iterations),
    )


def _run_unit(cfg: CampaignConfig, num_elements: int, trial_id: int):
    # One work unit = one (array size, trial) pair; the channel matrices are
    # shared across the SNR grid since geometry does not depend on noise.
    scenario = generate_scenario(cfg, num_elements, trial_id)
    users = scenario.users
    geo = array_config(cfg, num_elements)
    rows, failures = [], []
    for model in cfg.models:
        channels = channel_matrix(users, geo, model)
        for snr_db in cfg.snr_grid_db:
            acfg = geo.with_snr_db(snr_db)
            for method in cfg.methods:
                try:
                    res = _schedule(method, channels, scenario.distances, acfg, cfg)
                except Exception as exc:
                    failures.append(
                        f"m={num_elements} trial={trial_id} model={model} "
                        f"method={method} snr_db={snr_db:g}: {exc}"
                    )
                    continue
                rows.append(CampaignRow(
                    snr_db=float(snr_db),
                    m=num_elements,
                    model=model,
                    method=method,
                    trial=trial_id,
                    sum_rate_bps_hz=float(res.report.sum_rate),
                    served_users=int(res.report.served_count),
                    elapsed_ms=res.elapsed * 1e3,
                    iterations=int(res.iterations),
                ))
    return rows, failures


def _run_unit_star(args):
    return _run_unit(*args)


def _single_thread_blas():
    # Pinning the BLAS pool makes float results identical between sequential
    # and pooled execution; without the package we run with whatever is set.
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return contextlib.nullcontext()
    return threadpool_limits(limits=1)


_WORKER_BLAS_PIN = None


def _init_worker():
    global _WORKER_BLAS_PIN
    _WORKER_BLAS_PIN = _single_thread_blas()
    _WORKER_BLAS_PIN.__enter__()


def run_campaign(cfg: CampaignConfig) -> CampaignResult:
    """Execute the full grid x trials cross product defined by cfg.

    Work units (one per array size and trial) may run across a process pool;
    rows come back sorted by (snr, m, model, method, trial) so the result is
    identical for any worker count. Failed scheduler runs are reported as
    strings with their trial context and do not abort the campaign.
    """
    units = [(cfg, m, t) for m in cfg.antenna_counts for t in range(cfg.trials)]
    rows: list[CampaignRow] = []
    failures: list[str] = []
    if cfg.workers == 1:
        with _single_thread_blas():
            for unit in units:
                got_rows, got_failures = _run_unit(*unit)
                rows.extend(got_rows)
                failures.extend(got_failures)
    else:
        chunk = max(1, len(units) // (cfg.workers * 4))
        with ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker) as pool:
            for got_rows, got_failures in pool.map(_run_unit_star, units, chunksize=chunk):
                rows.extend(got_rows)
                failures.extend(got_failures)
    rows.sort(key=CampaignRow.sort_key)
    failures.sort()
    return CampaignResult(tuple(rows), tuple(failures))


def summarize(result: CampaignResult) -> tuple[SummaryRow, ...]:
    """Per-grid-point mean/std aggregates, computed straight from the raw rows."""
    groups: dict[tuple, list[CampaignRow]] = {}
    for row in result.rows:
        groups.setdefault((row.snr_db, row.m, row.model, row.method), []).append(row)
    out = []
    for key in sorted(groups):
        rows = groups[key]
        rates = np.array([r.sum_rate_bps_hz for r in rows])
        served = np.array([r.served_users for r in rows], dtype=float)
        times = np.array([r.elapsed_ms for r in rows])
        n = len(rows)
        out.append(SummaryRow(
            snr_db=key[0], m=key[1], model=key[2], method=key[3], trials=n,
            mean_rate=float(rates.mean()),
            std_rate=float(rates.std(ddof=1)) if n > 1 else 0.0,
            mean_served=float(served.mean()),
            std_served=float(served.std(ddof=1)) if n > 1 else 0.0,
            mean_ms=float(times.mean()),
        ))
    return tuple(out)


def benchmark_timing(cfg: CampaignConfig, repetitions: int = 20, warmup: int = 3) -> tuple[BenchRow, ...]:
    """Median scheduler wall time per (method, SNR, array size).

    Each repetition times one scheduler call on a fresh scenario (channel
    construction excluded); the first `warmup` calls are discarded. Runs
    strictly sequentially and refuses a parallel configuration so the numbers
    stay honest.
    """
    if cfg.workers != 1:
        raise RuntimeError("timing requires workers = 1; campaign parallelism skews the clock")
    if not {METHOD_DBS, METHOD_SUS} <= set(cfg.methods):
        raise ValueError("timing expects both dbs and sus so the reference ratio is measurable")
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    model = cfg.models[0]
    out = []
    with _single_thread_blas():
        for m in cfg.antenna_counts:
            geo = array_config(cfg, m)
            scenarios = [generate_scenario(cfg, m, t) for t in range(repetitions)]
            channels = [sc.channel(model, geo) for sc in scenarios]
            for snr_db in cfg.snr_grid_db:
                acfg = geo.with_snr_db(snr_db)
                for method in cfg.methods:
                    for _ in range(warmup):
                        _schedule(method, channels[0], scenarios[0].distances, acfg, cfg)
                    times = [
                        _schedule(method, channels[i], scenarios[i].distances, acfg, cfg).elapsed
                        for i in range(repetitions)
                    ]
                    out.append(BenchRow(
                        method=method, snr_db=float(snr_db), m=m, model=model,
                        median_ms=float(np.median(times)) * 1e3, reps=repetitions,
                    ))
    return tuple(out)


def _fmt(value: float) -> str:
    return format(float(value), ".9g")


def emit_csv(result: CampaignResult, path) -> None:
    lines = [CSV_HEADER]
    for r in result.rows:
        lines.append(",".join((
            _fmt(r.snr_db), str(r.m), r.model, r.method, str(r.trial),
            _fmt(r.sum_rate_bps_hz), str(r.served_users), _fmt(r.elapsed_ms),
            str(r.iterations),
        )))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path) -> CampaignResult:
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.splitlines() if line]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: expected header {CSV_HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split(",")
        if len(parts) != 9:
            raise ValueError(f"{path}:{lineno}: expected 9 fields, got {len(parts)}")
        rows.append(CampaignRow(
            snr_db=float(parts[0]), m=int(parts[1]), model=parts[2],
            method=parts[3], trial=int(parts[4]), sum_rate_bps_hz=float(parts[5]),
            served_users=int(parts[6]), elapsed_ms=float(parts[7]),
            iterations=int(parts[8]),
        ))
    return CampaignResult(tuple(rows))


def emit_bench_csv(rows: tuple[BenchRow, ...], path) -> None:
    lines = [BENCH_CSV_HEADER]
    for r in rows:
        lines.append(",".join((
            r.method, _fmt(r.snr_db), str(r.m), r.model, _fmt(r.median_ms), str(r.reps),
        )))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


_PLOT_SCRIPT = '''\
#!/usr/bin/env python3
"""Regenerate the standard campaign figures from {csv_name}.

Figure 1: mean sum rate vs SNR, largest array. Figure 2: mean served users
vs SNR. Figure 3: mean sum rate vs array size at the top SNR point.
Solid lines = sw model, dashed = pw.
"""
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

CSV_PATH = {csv_path!r}

rows = []
with open(CSV_PATH, newline="", encoding="utf-8") as fh:
    for rec in csv.DictReader(fh):
        rows.append(dict(snr=float(rec["snr_db"]), m=int(rec["m"]),
                         model=rec["model"], method=rec["method"],
                         rate=float(rec["sum_rate_bps_hz"]),
                         served=int(rec["served_users"])))

def mean_over_trials(rows, field):
    acc = defaultdict(list)
    for r in rows:
        acc[(r["snr"], r["m"], r["model"], r["method"])].append(r[field])
    return {{k: sum(v) / len(v) for k, v in acc.items()}}

styles = {{"sw": "-", "pw": "--"}}
m_top = max(r["m"] for r in rows)
snr_top = max(r["snr"] for r in rows)
snrs = sorted({{r["snr"] for r in rows}})
ms = sorted({{r["m"] for r in rows}})
methods = sorted({{r["method"] for r in rows}})
models = sorted({{r["model"] for r in rows}})

for fig_id, field, title in ((1, "rate", "sum rate (bits/s/Hz)"),
                             (2, "served", "served users")):
    means = mean_over_trials(rows, field)
    plt.figure(fig_id)
    for method in methods:
        for model in models:
            ys = [means.get((s, m_top, model, method)) for s in snrs]
            if any(y is not None for y in ys):
                plt.plot(snrs, ys, styles[model], label=f"{{method}}/{{model}}")
    plt.xlabel("transmit SNR (dB)")
    plt.ylabel(title)
    plt.title(f"M = {{m_top}}")
    plt.legend()
    plt.grid(True)

means = mean_over_trials(rows, "rate")
plt.figure(3)
for method in methods:
    for model in models:
        ys = [means.get((snr_top, m, model, method)) for m in ms]
        if any(y is not None for y in ys):
            plt.plot(ms, ys, styles[model], marker="o", label=f"{{method}}/{{model}}")
plt.xlabel("antennas M")
plt.ylabel("sum rate (bits/s/Hz)")
plt.title(f"SNR = {{snr_top:g}} dB")
plt.legend()
plt.grid(True)

plt.show()
'''


def emit_plot_script(csv_path, script_path) -> None:
    """Write a standalone matplotlib script that redraws the campaign figures."""
    csv_path = str(csv_path)
    text = _PLOT_SCRIPT.format(csv_path=csv_path, csv_name=Path(csv_path).name)
    Path(script_path).write_text(text, encoding="utf-8")


_LIST_FIELDS = {
    "antenna_counts": int,
    "snr_grid_db": float,
    "models": str,
    "methods": str,
    "distance_range": float,
    "angle_range": float,
}
_SCALAR_FIELDS = {
    "num_users": int,
    "trials": int,
    "seed": int,
    "workers": int,
    "sus_alpha": float,
    "aperture_eta": float,
    "element_spacing": float,
    "wavelength": float,
}


def parse_config_file(path) -> dict:
    """Parse a flat `key = value` UTF-8 config file into CampaignConfig updates.

    Blank lines and #-comments are ignored. List-valued keys take
    comma-separated values; distance_range also accepts `auto` for the per-M
    default window. Unknown keys are errors.
    """
    updates: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key in _SCALAR_FIELDS:
            updates[key] = _SCALAR_FIELDS[key](value)
        elif key in _LIST_FIELDS:
            if key == "distance_range" and value.lower() in ("auto", "none", "default"):
                updates[key] = None
                continue
            conv = _LIST_FIELDS[key]
            items = tuple(conv(part.strip()) for part in value.split(",") if part.strip())
            if not items:
                raise ValueError(f"{path}:{lineno}: empty value for {key}")
            updates[key] = items
        else:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return updates


def config_from_sources(base: CampaignConfig, config_path=None, **overrides) -> CampaignConfig:
    """Layer a config file and keyword overrides on top of a base config."""
    cfg = base
    if config_path is not None:
        cfg = replace(cfg, **parse_config_file(config_path))
    cleaned = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **cleaned) if cleaned else cfg
