import numpy as np
import pytest
from scipy import stats

import xlmimo.campaign as campaign
from xlmimo.arrays import ArrayConfig, critical_distance
from xlmimo.campaign import (
    CampaignConfig,
    CampaignResult,
    benchmark_timing,
    config_from_sources,
    default_distance_range,
    desk_config,
    emit_csv,
    full_scale_config,
    generate_scenario,
    parse_config_file,
    read_csv,
    run_campaign,
    summarize,
)


def tiny_config(**overrides):
    base = dict(
        num_users=6,
        antenna_counts=(16,),
        snr_grid_db=(5.0, 15.0),
        trials=2,
        seed=11,
    )
    base.update(overrides)
    return CampaignConfig(**base)


def strip_elapsed(result):
    return [
        (r.snr_db, r.m, r.model, r.method, r.trial, r.sum_rate_bps_hz,
         r.served_users, r.iterations)
        for r in result.rows
    ]


def test_default_distance_range_reference_window():
    assert default_distance_range(1000) == (40.0, pytest.approx(1090.4))


def test_default_distance_range_scales_down_for_small_arrays():
    # the literal window collapses for small arrays, so it shrinks
    # proportionally with the near-field extent
    lo, hi = default_distance_range(64)
    assert (lo, hi) == (pytest.approx(2.56), pytest.approx(69.7856))
    rc = critical_distance(ArrayConfig(num_elements=64))
    frac = (rc - lo) / (hi - lo)
    assert frac == pytest.approx(0.5, abs=1e-12)


def test_scenario_regenerates_bit_exactly():
    cfg = desk_config(trials=5)
    first = generate_scenario(cfg, 128, 3)
    again = generate_scenario(cfg, 128, 3)
    assert np.array_equal(first.distances, again.distances)
    assert np.array_equal(first.angles, again.angles)
    other_trial = generate_scenario(cfg, 128, 4)
    assert not np.array_equal(first.distances, other_trial.distances)
    other_m = generate_scenario(cfg, 64, 3)
    assert not np.array_equal(first.distances, other_m.distances)


def test_scenario_draw_statistics():
    cfg = desk_config(num_users=100_000, trials=1)
    scen = generate_scenario(cfg, 1000, 0)
    lo, hi = default_distance_range(1000)
    rc = critical_distance(ArrayConfig(num_elements=1000))
    near_frac = np.mean(scen.distances < rc)
    assert near_frac == pytest.approx(0.5, abs=0.01)
    ks = stats.kstest(scen.distances, "uniform", args=(lo, hi - lo))
    assert ks.pvalue > 0.01
    ks_ang = stats.kstest(scen.angles, "uniform", args=(-np.pi / 4, np.pi / 2))
    assert ks_ang.pvalue > 0.01


def test_campaign_row_grid_and_order():
    cfg = tiny_config()
    result = run_campaign(cfg)
    expect = (
        len(cfg.snr_grid_db) * len(cfg.antenna_counts) * len(cfg.models)
        * len(cfg.methods) * cfg.trials
    )
    assert len(result.rows) == expect
    assert result.failures == ()
    keys = [r.sort_key() for r in result.rows]
    assert keys == sorted(keys)


def test_worker_count_does_not_change_results():
    sequential = run_campaign(tiny_config(trials=3))
    pooled = run_campaign(tiny_config(trials=3, workers=3))
    assert strip_elapsed(sequential) == strip_elapsed(pooled)


def test_summarize_matches_raw_means():
    result = run_campaign(tiny_config(trials=4))
    summary = summarize(result)
    for s in summary:
        rates = [
            r.sum_rate_bps_hz
            for r in result.rows
            if (r.snr_db, r.m, r.model, r.method) == (s.snr_db, s.m, s.model, s.method)
        ]
        assert s.trials == len(rates)
        assert s.mean_rate == pytest.approx(np.mean(rates), rel=1e-12)
        assert s.std_rate == pytest.approx(np.std(rates, ddof=1), rel=1e-12)


def test_csv_round_trip_is_byte_stable(tmp_path):
    result = run_campaign(tiny_config())
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    emit_csv(result, first)
    emit_csv(read_csv(first), second)
    assert first.read_bytes() == second.read_bytes()
    assert first.read_text().splitlines()[0] == campaign.CSV_HEADER


def test_read_csv_rejects_foreign_files(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_csv(bad)
    truncated = tmp_path / "short.csv"
    truncated.write_text(campaign.CSV_HEADER + "\n5,16,sw,dbs\n")
    with pytest.raises(ValueError):
        read_csv(truncated)


def test_failures_are_recorded_not_raised(monkeypatch):
    real = campaign._schedule

    def flaky(method, channels, distances, acfg, cfg):
        if method == "mrt":
            raise RuntimeError("synthetic scheduler fault")
        return real(method, channels, distances, acfg, cfg)

    monkeypatch.setattr(campaign, "_schedule", flaky)
    result = run_campaign(tiny_config())
    assert all(r.method != "mrt" for r in result.rows)
    assert len(result.failures) == 2 * 2 * 2  # snr points x models x trials
    for note in result.failures:
        assert "method=mrt" in note and "synthetic scheduler fault" in note
        assert "m=16" in note and "trial=" in note


def test_config_validation():
    with pytest.raises(ValueError):
        CampaignConfig(methods=("dbs", "zf"))
    with pytest.raises(ValueError):
        CampaignConfig(models=("fw",))
    with pytest.raises(ValueError):
        CampaignConfig(antenna_counts=())
    with pytest.raises(ValueError):
        CampaignConfig(trials=0)
    with pytest.raises(ValueError):
        CampaignConfig(distance_range=(10.0, 5.0))
    with pytest.raises(ValueError):
        CampaignConfig(angle_range=(-2.0, 2.0))


def test_preset_shapes():
    desk = desk_config()
    assert desk.antenna_counts == (64, 128, 256)
    assert desk.num_users == 200 and desk.trials == 100
    assert desk.snr_grid_db == (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
    full = full_scale_config(trials=2)
    assert full.antenna_counts == (1000,) and full.num_users == 1000
    assert full.trials == 2


def test_parse_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        """
        # comment line
        num_users = 12
        antenna_counts = 16, 32
        snr_grid_db = 0, 10
        distance_range = auto
        methods = dbs, sus
        seed = 9
        sus_alpha = 0.9
        """
    )
    updates = parse_config_file(path)
    assert updates == dict(
        num_users=12,
        antenna_counts=(16, 32),
        snr_grid_db=(0.0, 10.0),
        distance_range=None,
        methods=("dbs", "sus"),
        seed=9,
        sus_alpha=0.9,
    )
    cfg = config_from_sources(desk_config(), config_path=path, trials=2)
    assert cfg.num_users == 12 and cfg.trials == 2 and cfg.seed == 9

    bad = tmp_path / "bad.cfg"
    bad.write_text("granularity = 3\n")
    with pytest.raises(ValueError, match="unknown key"):
        parse_config_file(bad)
    malformed = tmp_path / "malformed.cfg"
    malformed.write_text("just words\n")
    with pytest.raises(ValueError, match="key = value"):
        parse_config_file(malformed)


def test_override_layering_ignores_none():
    cfg = config_from_sources(desk_config(), trials=None, seed=4)
    assert cfg.trials == 100 and cfg.seed == 4


def test_benchmark_timing_refusals():
    with pytest.raises(RuntimeError):
        benchmark_timing(tiny_config(workers=2))
    with pytest.raises(ValueError):
        benchmark_timing(tiny_config(methods=("dbs", "mrt")))
    with pytest.raises(ValueError):
        benchmark_timing(tiny_config(), repetitions=0)


def test_benchmark_timing_rows():
    cfg = tiny_config(snr_grid_db=(15.0,), methods=("dbs", "sus"))
    rows = benchmark_timing(cfg, repetitions=3, warmup=1)
    assert len(rows) == 2
    for row in rows:
        assert row.median_ms > 0.0
        assert row.reps == 3
        assert row.model == cfg.models[0]


def test_emit_plot_script(tmp_path):
    result = run_campaign(tiny_config())
    csv_path = tmp_path / "campaign.csv"
    emit_csv(result, csv_path)
    script = tmp_path / "plots.py"
    campaign.emit_plot_script(csv_path, script)
    compile(script.read_text(), str(script), "exec")
