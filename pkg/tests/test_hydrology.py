"""Tests for inflow ingestion, statistics, and the synthetic generator."""

import io

import numpy as np
import pytest

from resop.errors import (
    ConfigInvalid,
    DegenerateStatistics,
    InsufficientYears,
    MalformedRow,
    NegativeFlow,
    NonContiguousMonths,
    NonPositiveFlowUnderLog,
    NotPositiveDefinite,
)
from resop.fixtures import folsom_inflows_path
from resop.hydrology import (
    FlowSeries,
    MonthlyStats,
    SyntheticGenConfig,
    calendar_from_index,
    cfs_to_taf,
    cholesky_factor,
    generate_synthetic_flows,
    load_flow_csv,
    make_rng,
    monthly_statistics,
    month_index_from_calendar,
    taf_to_cfs,
    trim_to_water_years,
    write_flow_csv,
)


@pytest.fixture(scope="module")
def history():
    return load_flow_csv(folsom_inflows_path().read_text())


@pytest.fixture(scope="module")
def history_stats(history):
    return monthly_statistics(history)


class TestCalendar:
    def test_october_is_zero(self):
        assert month_index_from_calendar(10) == 0
        assert month_index_from_calendar(9) == 11
        assert month_index_from_calendar(1) == 3

    def test_round_trip(self):
        for wy in (1956, 2000):
            for idx in range(12):
                y, m = calendar_from_index(wy, idx)
                assert month_index_from_calendar(m) == idx
                assert (y + 1 if m >= 10 else y) == wy


class TestUnits:
    def test_zero_rate(self):
        assert cfs_to_taf(0.0, 30) == 0.0

    def test_one_cfs_day(self):
        # 86400 ft3 = 86400/43560 acre-ft
        assert cfs_to_taf(1.0, 1.0) == pytest.approx(0.00198347, rel=1e-5)

    def test_thousand_cfs_month(self):
        assert cfs_to_taf(1000.0, 30.0) == pytest.approx(59.504, rel=1e-4)

    def test_round_trip(self):
        rng = make_rng(1)
        for _ in range(100):
            rate = float(rng.uniform(0.1, 2e5))
            days = float(rng.uniform(1, 31))
            back = taf_to_cfs(cfs_to_taf(rate, days), days)
            assert back == pytest.approx(rate, rel=1e-9)

    def test_domain(self):
        with pytest.raises(ValueError):
            cfs_to_taf(-1.0, 30)
        with pytest.raises(ValueError):
            cfs_to_taf(1.0, 0)


class TestLoadFlowCsv:
    def test_two_rows(self):
        series = load_flow_csv("year,month,flow_taf\n1955,10,70.1\n1955,11,94.7\n")
        assert len(series) == 2
        assert series.start_year == 1956 and series.start_month == 0
        assert series.values[1] == 94.7

    def test_negative_flow(self):
        with pytest.raises(NegativeFlow):
            load_flow_csv("year,month,flow_taf\n1955,10,-3.0\n")

    def test_month_gap(self):
        with pytest.raises(NonContiguousMonths):
            load_flow_csv("year,month,flow_taf\n1955,10,1.0\n1955,12,1.0\n")

    def test_year_boundary_contiguity(self):
        series = load_flow_csv("year,month,flow_taf\n1955,12,1.0\n1956,1,2.0\n")
        assert len(series) == 2

    def test_malformed(self):
        with pytest.raises(MalformedRow):
            load_flow_csv("year,month,flow_taf\n1955,10\n")
        with pytest.raises(MalformedRow):
            load_flow_csv("bad,header,here\n1955,10,1\n")
        with pytest.raises(MalformedRow):
            load_flow_csv("year,month,flow_taf\n1955,oct,1.0\n")
        with pytest.raises(MalformedRow):
            load_flow_csv("year,month,flow_taf\n")

    def test_comments_skipped(self):
        series = load_flow_csv("# seed=7\nyear,month,flow_taf\n1955,10,1.0\n")
        assert len(series) == 1

    def test_write_round_trip(self):
        series = FlowSeries(1990, 0, np.array([1.25, 2.5, 3.125]))
        buf = io.StringIO()
        write_flow_csv(series, buf, seed=7)
        text = buf.getvalue()
        assert text.startswith("# seed=7\n")
        again = load_flow_csv(text)
        assert again.start_year == series.start_year
        np.testing.assert_array_equal(again.values, series.values)


class TestTrim:
    def test_trim_alignment(self):
        # starts in August (index 10): two lead months then 1 whole year
        series = FlowSeries(1990, 10, np.arange(1.0, 15.0 + 1))
        trimmed = trim_to_water_years(series)
        assert trimmed.start_month == 0
        assert trimmed.start_year == 1991
        assert len(trimmed) == 12
        assert trimmed.values[0] == 3.0

    def test_no_whole_year(self):
        with pytest.raises(InsufficientYears):
            trim_to_water_years(FlowSeries(1990, 1, np.ones(5)))


class TestMonthlyStatistics:
    def test_needs_three_years(self, history):
        short = FlowSeries(1956, 0, history.values[:24])
        with pytest.raises(InsufficientYears):
            monthly_statistics(short)

    def test_constant_series_degenerate(self):
        with pytest.raises(DegenerateStatistics):
            monthly_statistics(FlowSeries(1990, 0, np.full(48, 5.0)))

    def test_zero_flow_under_log(self):
        values = np.ones(36)
        values[5] = 0.0
        with pytest.raises(NonPositiveFlowUnderLog):
            monthly_statistics(FlowSeries(1990, 0, values))

    def test_three_year_hand_moments(self):
        # October flows e^1, e^2, e^3; the rest constant-free per-month ramps
        rng = make_rng(5)
        values = np.exp(rng.normal(2.0, 0.4, size=(3, 12)))
        values[:, 0] = [np.e, np.e**2, np.e**3]
        stats = monthly_statistics(FlowSeries(1990, 0, values.ravel()))
        # hand arithmetic: logs are 1, 2, 3 -> mean 2, sample std 1
        assert stats.log_mean[0] == pytest.approx(2.0, abs=1e-12)
        assert stats.log_std[0] == pytest.approx(1.0, abs=1e-12)

    def test_white_noise_correlations_near_zero(self):
        rng = make_rng(104)
        vals = np.exp(rng.normal(3.0, 0.5, size=(200, 12)))
        stats = monthly_statistics(FlowSeries(2000, 0, vals.ravel()))
        # oracle: direct Pearson on the same draws
        logs = np.log(vals)
        z = (logs - logs.mean(0)) / logs.std(0, ddof=1)
        direct = np.corrcoef(z, rowvar=False)
        np.testing.assert_allclose(stats.within_corr, direct, atol=1e-12)
        assert np.abs(stats.within_corr - np.eye(12)).max() < 0.15
        assert np.abs(stats.cross_corr - np.eye(12)).max() < 0.15

    def test_matrix_invariants(self, history_stats):
        for corr in (history_stats.within_corr, history_stats.cross_corr):
            np.testing.assert_array_equal(corr, corr.T)
            np.testing.assert_array_equal(np.diag(corr), np.ones(12))
        assert np.all(history_stats.log_std > 0)


class TestCholesky:
    def test_identity(self):
        np.testing.assert_array_equal(cholesky_factor(np.eye(4)), np.eye(4))

    def test_two_by_two(self):
        m = np.array([[4.0, 2.0], [2.0, 3.0]])
        lower = cholesky_factor(m)
        np.testing.assert_allclose(lower, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], atol=1e-12)
        np.testing.assert_allclose(lower @ lower.T, m, atol=1e-12)

    def test_indefinite_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            cholesky_factor(np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_random_spd_reconstruction(self):
        rng = make_rng(99)
        for _ in range(100):
            n = int(rng.integers(2, 13))
            a = rng.normal(size=(n, n))
            m = a @ a.T + n * np.eye(n)
            lower = cholesky_factor(m)
            assert np.abs(np.tril(lower) - lower).max() == 0.0
            np.testing.assert_allclose(lower @ lower.T, m, atol=1e-10)

    def test_semidefinite_jitter_repair(self):
        # rank-deficient PSD: plain Cholesky may fail, jitter should fix it
        v = np.ones((3, 1))
        m = v @ v.T
        lower = cholesky_factor(m)
        np.testing.assert_allclose(lower @ lower.T, m, atol=1e-9)


class TestGenerator:
    def test_config_validation(self):
        with pytest.raises(ConfigInvalid):
            SyntheticGenConfig(years=0, seed=1)

    def test_identity_matrices_no_mixing(self, history):
        stats = monthly_statistics(history)
        ident = MonthlyStats(stats.log_mean, stats.log_std, np.eye(12), np.eye(12),
                             stats.n_years)
        cfg = SyntheticGenConfig(years=8, seed=3)
        gen = generate_synthetic_flows(ident, cfg, history)
        # reproduce the bootstrap by hand: whitening with L = I is a no-op
        logs = np.log(history.year_matrix())
        z = (logs - stats.log_mean) / stats.log_std
        rng = make_rng(3)
        picks = rng.integers(0, stats.n_years, size=(8, 12))
        expected = np.exp(stats.log_mean + stats.log_std * z[picks, np.arange(12)])
        np.testing.assert_allclose(gen.year_matrix(), expected, rtol=1e-12)

    def test_deterministic_per_seed(self, history, history_stats):
        cfg = SyntheticGenConfig(years=30, seed=11)
        a = generate_synthetic_flows(history_stats, cfg, history)
        b = generate_synthetic_flows(history_stats, cfg, history)
        np.testing.assert_array_equal(a.values, b.values)
        c = generate_synthetic_flows(history_stats, SyntheticGenConfig(30, 12), history)
        assert not np.array_equal(a.values, c.values)

    def test_positive_and_aligned(self, history, history_stats):
        gen = generate_synthetic_flows(history_stats, SyntheticGenConfig(5, 2), history)
        assert gen.start_month == 0
        assert gen.start_year == 2021
        assert len(gen) == 60
        assert np.all(gen.values > 0)

    def test_statistics_preserved_500_years(self, history, history_stats):
        gen = generate_synthetic_flows(history_stats, SyntheticGenConfig(500, 17), history)
        gstats = monthly_statistics(gen)
        hist_mean = history.year_matrix().mean(axis=0)
        gen_mean = gen.year_matrix().mean(axis=0)
        assert np.all(np.abs(gen_mean - hist_mean) / hist_mean < 0.10)
        assert np.abs(gstats.within_corr - history_stats.within_corr).max() < 0.15
        # lag-1 autocorrelation across the whole record, boundary included
        def lag1(v):
            return np.corrcoef(v[:-1], v[1:])[0, 1]
        assert abs(lag1(gen.values) - lag1(history.values)) < 0.15

    def test_flag_mismatch(self, history, history_stats):
        cfg = SyntheticGenConfig(years=2, seed=1, log_transform=False)
        with pytest.raises(ConfigInvalid):
            generate_synthetic_flows(history_stats, cfg, history)
