"""Segment-median detrending, normalization, and batch sampling."""

import numpy as np
import pytest

from tension_sentinel import synthgen
from tension_sentinel.errors import DegenerateChannelError, ShapeError
from tension_sentinel.preprocess import (
    THREADS_ENV_VAR,
    apply_normalizer,
    detrend,
    estimate_trend,
    fit_normalizer,
    invert_normalizer,
    mask_channels,
    sample_windows,
    worker_count,
)
from tension_sentinel.series import MultiChannelSeries


def make_series(values, rate=2.0, mask=None):
    values = np.asarray(values, dtype=np.float64)
    if mask is None:
        mask = np.ones(values.shape, dtype=bool)
    names = [f"C{i:02d}" for i in range(values.shape[1])]
    return MultiChannelSeries(names, rate, values, mask)


def test_constant_series_trend_is_constant():
    series = make_series(np.full((240, 3), 7.5))
    trend = estimate_trend(series, 30.0)
    np.testing.assert_allclose(trend.evaluate(), 7.5, rtol=0, atol=1e-12)


def test_segment_median_excludes_sparse_spike():
    # One 2-second segment of {1, 1, 1, 100}: the median stays at 1.
    series = make_series(np.array([[1.0], [1.0], [1.0], [100.0]]))
    trend = estimate_trend(series, 2.0)
    assert trend.medians[0, 0] == 1.0


def test_minimum_segment_size_enforced():
    series = make_series(np.zeros((10, 1)))
    with pytest.raises(ValueError, match="at least 4"):
        estimate_trend(series, 1.0)


def test_sinusoidal_trend_recovery_under_sparse_traffic():
    bridge = synthgen.BridgeModel()
    traffic = synthgen.TrafficScenario(arrival_rate=0.005, duration=6 * 3600.0)
    script = synthgen.ScenarioScript(noise_std=1.0)
    series, comp = synthgen.generate_corpus(bridge, traffic, script, seed=3,
                                            return_components=True)
    # 120 s segments: a slow heavy vehicle can occupy most of a 30 s segment
    # and shift its median, but not a 4-minute one.
    trend = estimate_trend(series, 120.0)
    true_trend = comp["dead"] + comp["temperature"]
    err = np.abs(trend.evaluate() - true_trend)
    assert np.max(err) < 0.05 * script.temperature_amplitude


def test_detrend_constant_gives_zeros():
    series = make_series(np.full((120, 2), 3.0))
    out = detrend(series, estimate_trend(series, 30.0))
    np.testing.assert_allclose(out.values, 0.0, rtol=0, atol=1e-12)


def test_detrended_segment_medians_near_zero():
    rng = np.random.default_rng(4)
    n = 600
    t = np.arange(n) / 2.0
    values = (10.0 * np.sin(2 * np.pi * t / 300.0))[:, None] + rng.normal(0, 0.5, (n, 1))
    series = make_series(values)
    out = detrend(series, estimate_trend(series, 30.0))
    seg = 60  # 30 s at 2 Hz
    for s in range(n // seg):
        med = np.median(out.values[s * seg : (s + 1) * seg, 0])
        # Residual = interpolation curvature error (~0.1 for a 300 s sine)
        # plus median sampling noise; well below the 10.0 signal amplitude.
        assert abs(med) < 0.6


def test_detrended_corpus_correlates_with_vehicle_term():
    bridge = synthgen.BridgeModel()
    traffic = synthgen.TrafficScenario(duration=4 * 3600.0)
    series, comp = synthgen.generate_corpus(
        bridge, traffic, synthgen.ScenarioScript(), seed=5, return_components=True
    )
    out = detrend(series, estimate_trend(series, 30.0))
    truth = comp["vehicle"] + comp["noise"]
    for ch in range(series.channel_count):
        r = np.corrcoef(out.values[:, ch], truth[:, ch])[0, 1]
        assert r > 0.95


def test_detrend_plus_trend_reconstructs_observed_values():
    bridge = synthgen.BridgeModel()
    traffic = synthgen.TrafficScenario(duration=1800.0)
    series = synthgen.generate_corpus(bridge, traffic, synthgen.ScenarioScript(), seed=6)
    trend = estimate_trend(series, 30.0)
    out = detrend(series, trend)
    recon = out.values + trend.evaluate()
    # Exact up to one rounding of (x - t) + t.
    np.testing.assert_allclose(
        recon[series.mask], series.values[series.mask], rtol=1e-12, atol=1e-9
    )


def test_trend_median_more_robust_than_mean():
    # Adding <= 10% large spikes moves the segment median strictly less
    # than it moves the segment mean.
    rng = np.random.default_rng(7)
    base = rng.normal(0.0, 1.0, 60)
    spiked = base.copy()
    spiked[:6] += 500.0
    series = make_series(spiked[:, None])
    trend = estimate_trend(series, 30.0)
    median_shift = abs(np.median(spiked) - np.median(base))
    mean_shift = abs(np.mean(spiked) - np.mean(base))
    assert median_shift < mean_shift
    assert abs(trend.medians[0, 0] - np.median(spiked)) < 1e-12


def test_fully_missing_channel_flagged_and_masked():
    values = np.random.default_rng(8).normal(size=(120, 2))
    mask = np.ones((120, 2), dtype=bool)
    mask[:, 1] = False
    series = make_series(values, mask=mask)
    trend = estimate_trend(series, 30.0)
    assert trend.undefined_channels == ["C01"]
    out = detrend(series, trend)
    assert not out.mask[:, 1].any()
    assert out.mask[:, 0].all()


def test_partially_missing_segment_bridged_by_interpolation():
    values = np.ones((240, 1))
    values[60:120] = np.nan
    mask = np.ones((240, 1), dtype=bool)
    mask[60:120, 0] = False
    series = make_series(values, mask=mask)
    trend = estimate_trend(series, 30.0)
    np.testing.assert_allclose(trend.evaluate(), 1.0, rtol=0, atol=1e-12)


def test_normalizer_round_trip_identity():
    rng = np.random.default_rng(9)
    series = make_series(rng.normal(3.0, 2.0, size=(200, 4)))
    stats = fit_normalizer(series)
    back = invert_normalizer(apply_normalizer(series, stats), stats)
    np.testing.assert_allclose(back.values, series.values, rtol=0, atol=1e-12)


def test_normalized_entries_have_zero_mean_unit_std():
    rng = np.random.default_rng(10)
    series = make_series(rng.normal(-5.0, 4.0, size=(500, 3)))
    norm = apply_normalizer(series, fit_normalizer(series))
    np.testing.assert_allclose(norm.values.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(norm.values.std(axis=0), 1.0, atol=1e-9)


def test_normalizer_uses_only_observed_entries():
    rng = np.random.default_rng(11)
    values = rng.normal(size=(100, 1))
    mask = np.ones((100, 1), dtype=bool)
    mask[50:, 0] = False
    values[50:, 0] = np.nan
    series = make_series(values, mask=mask)
    stats = fit_normalizer(series)
    assert stats.mean[0] == pytest.approx(values[:50, 0].mean())
    assert stats.std[0] == pytest.approx(values[:50, 0].std())


def test_degenerate_channels_rejected():
    with pytest.raises(DegenerateChannelError, match="zero variance"):
        fit_normalizer(make_series(np.ones((50, 1))))
    values = np.full((50, 1), np.nan)
    values[0, 0] = 1.0
    mask = np.zeros((50, 1), dtype=bool)
    mask[0, 0] = True
    with pytest.raises(DegenerateChannelError, match="observed samples"):
        fit_normalizer(make_series(values, mask=mask))


def test_channel_stats_record_round_trip():
    rng = np.random.default_rng(12)
    series = make_series(rng.normal(size=(80, 3)))
    stats = fit_normalizer(series)
    from tension_sentinel.preprocess import ChannelStats

    back = ChannelStats.from_records(stats.to_records())
    assert back.names == stats.names
    np.testing.assert_array_equal(back.mean, stats.mean)
    np.testing.assert_array_equal(back.std, stats.std)


def test_sample_windows_full_length_single_window():
    rng = np.random.default_rng(13)
    series = make_series(rng.normal(size=(50, 2)))
    batch, masks, starts = sample_windows(series, 50, 3, np.random.default_rng(0))
    assert np.all(starts == 0)
    for b in range(3):
        np.testing.assert_array_equal(batch[b], series.values)
    assert masks.all()


def test_sample_windows_starts_in_range():
    rng = np.random.default_rng(14)
    series = make_series(rng.normal(size=(300, 1)))
    _, _, starts = sample_windows(series, 60, 10_000, np.random.default_rng(1))
    assert starts.min() >= 0
    assert starts.max() <= 300 - 60
    # Uniformity sanity: both halves of the start range are visited.
    assert (starts < 120).any() and (starts >= 120).any()


def test_sample_windows_deterministic_and_copied():
    rng = np.random.default_rng(15)
    series = make_series(rng.normal(size=(100, 2)))
    b1, m1, s1 = sample_windows(series, 20, 5, np.random.default_rng(7))
    b2, m2, s2 = sample_windows(series, 20, 5, np.random.default_rng(7))
    np.testing.assert_array_equal(b1, b2)
    np.testing.assert_array_equal(s1, s2)
    b1[0, 0, 0] = 1e9
    assert series.values[s1[0], 0] != 1e9  # windows are copies, not views


def test_sample_windows_zero_fills_missing():
    values = np.ones((40, 2))
    mask = np.ones((40, 2), dtype=bool)
    mask[:, 1] = False
    values[:, 1] = np.nan
    series = make_series(values, mask=mask)
    batch, masks, _ = sample_windows(series, 10, 4, np.random.default_rng(2))
    np.testing.assert_array_equal(batch[:, :, 1], 0.0)
    assert not masks[:, :, 1].any()


def test_sample_windows_too_short_rejected():
    series = make_series(np.zeros((10, 1)))
    with pytest.raises(ShapeError):
        sample_windows(series, 20, 1, np.random.default_rng(0))


def test_mask_channels_k_zero_unchanged():
    rng = np.random.default_rng(16)
    batch = rng.normal(size=(4, 10, 14))
    out, dropped = mask_channels(batch, 0, np.random.default_rng(0))
    np.testing.assert_array_equal(out, batch)
    assert all(len(d) == 0 for d in dropped)


@pytest.mark.parametrize("k", [7, 12])
def test_mask_channels_exact_k_channels(k):
    rng = np.random.default_rng(17)
    batch = rng.normal(size=(6, 8, 14)) + 10.0  # offset so zeros are unambiguous
    out, dropped = mask_channels(batch, k, np.random.default_rng(3))
    for b in range(6):
        assert len(dropped[b]) == k
        zero_cols = np.all(out[b] == 0.0, axis=0)
        assert np.count_nonzero(zero_cols) == k
        np.testing.assert_array_equal(np.where(zero_cols)[0], dropped[b])


def test_mask_channels_consistent_across_timesteps():
    rng = np.random.default_rng(18)
    batch = rng.normal(size=(3, 20, 6)) + 5.0
    out, dropped = mask_channels(batch, 2, np.random.default_rng(4))
    for b in range(3):
        for ch in range(6):
            col = out[b][:, ch]
            assert np.all(col == 0.0) or np.all(col != 0.0)


def test_mask_channels_k_too_large_rejected():
    batch = np.zeros((1, 5, 4))
    with pytest.raises(ValueError):
        mask_channels(batch, 4, np.random.default_rng(0))


def test_worker_count_env_cap(monkeypatch):
    monkeypatch.setenv(THREADS_ENV_VAR, "2")
    assert worker_count(14) == 2
    assert worker_count(1) == 1
    monkeypatch.setenv(THREADS_ENV_VAR, "bogus")
    assert worker_count(14) == 1
    monkeypatch.delenv(THREADS_ENV_VAR)
    assert worker_count(3) >= 1
