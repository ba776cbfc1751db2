"""Power-law index fitting and the probability algebra on top of it."""

import math

import pytest

from epgauge.epfit import (
    EpIndex,
    expected_frequency,
    fit_ep,
    prob_ratio,
    probability_top,
    summary_csv_row,
)
from epgauge.errors import DegenerateFitError
from epgauge.percentile import PercentileLevel, ShareTable


def table_for(ep, levels, n_local=10_000):
    rows = tuple(
        (PercentileLevel.of(x), min(1.0, ep ** (2 - math.log10(x)))) for x in levels
    )
    return ShareTable(rows=rows, n_local=n_local)


def table_from_pairs(pairs, n_local=10_000):
    return ShareTable(
        rows=tuple((PercentileLevel.of(x), s) for x, s in pairs), n_local=n_local
    )


class TestFitEp:
    def test_exact_model_recovery(self):
        table = table_for(0.2, (1, 3, 7, 10, 20, 35))
        report = fit_ep(table)
        assert report.ep_full.value == pytest.approx(0.2, abs=1e-12)
        assert report.chosen.value == pytest.approx(0.2, abs=1e-12)
        assert not report.deviation_flag
        assert max(abs(r) for r in report.residuals) < 1e-12

    def test_world_average_identity(self):
        for levels in ((7, 10, 15, 20, 25, 35), (1, 3, 7, 10), (2, 50, 100)):
            table = table_from_pairs([(x, x / 100) for x in levels])
            report = fit_ep(table)
            assert report.ep_full.value == pytest.approx(0.1, abs=1e-12)

    def test_round_trip_grid(self):
        for ep in (0.06, 0.10, 0.15, 0.20):
            report = fit_ep(table_for(ep, (1, 3, 7, 10, 15, 20, 25, 35)))
            assert report.chosen.value == pytest.approx(ep, abs=1e-12)

    def test_reordered_rows_fit_identically(self):
        pairs = [(7, 0.05), (10, 0.08), (20, 0.17), (35, 0.30)]
        a = fit_ep(table_from_pairs(pairs))
        b = fit_ep(table_from_pairs(list(reversed(pairs))))
        assert a == b

    def test_zero_share_levels_dropped_and_listed(self):
        pairs = [(1, 0.0), (3, 0.004), (7, 0.012), (10, 0.02), (20, 0.05)]
        with pytest.warns(UserWarning):
            report = fit_ep(table_from_pairs(pairs))
        assert [str(level) for level in report.dropped_levels] == ["1"]
        assert len(report.levels_used) == 4

    def test_too_few_positive_rows(self):
        with pytest.raises(DegenerateFitError):
            fit_ep(table_from_pairs([(7, 0.05), (10, 0.08)]))
        with pytest.warns(UserWarning), pytest.raises(DegenerateFitError):
            fit_ep(table_from_pairs([(1, 0.0), (3, 0.0), (7, 0.05), (10, 0.08)]))

    def test_share_above_one_rejected(self):
        with pytest.raises(Exception):
            table_from_pairs([(7, 0.5), (10, 0.8), (20, 1.2)])

    def test_monotone_response_to_uniform_raise(self):
        base = [(7, 0.04), (10, 0.06), (20, 0.12), (35, 0.22)]
        previous = fit_ep(table_from_pairs(base)).ep_full.value
        for gamma in (1.1, 1.5, 3.0, 10.0):
            raised = [(x, min(1.0, s * gamma)) for x, s in base]
            fitted = fit_ep(table_from_pairs(raised)).ep_full.value
            assert fitted >= previous - 1e-15
            previous = fitted

    def test_deviation_flag_picks_low_fit(self):
        # lower levels follow 0.12, higher levels follow the steeper 0.2
        pairs = [
            (x, 0.12 ** (2 - math.log10(x))) for x in (1, 3, 7, 10)
        ] + [
            (x, 0.2 ** (2 - math.log10(x))) for x in (15, 20, 25, 35)
        ]
        report = fit_ep(table_from_pairs(pairs))
        assert report.deviation_flag
        assert report.ep_low is not None and report.ep_high is not None
        assert report.ep_high.value > report.ep_low.value * 1.05
        assert report.chosen == report.ep_low
        assert report.ep_low.value == pytest.approx(0.12, abs=1e-12)
        assert report.ep_high.value == pytest.approx(0.2, abs=1e-3)

    def test_no_flag_within_threshold(self):
        report = fit_ep(table_for(0.15, (1, 3, 7, 10, 15, 20, 25, 35)))
        assert not report.deviation_flag
        assert report.chosen == report.ep_full

    def test_segment_fits_need_two_levels(self):
        report = fit_ep(table_from_pairs([(7, 0.05), (10, 0.08), (20, 0.17)]))
        assert report.ep_low is not None
        assert report.ep_high is None  # only one level above the split
        assert not report.deviation_flag

    def test_json_dict_round_trips_levels(self):
        report = fit_ep(table_for(0.15, (1, 3, 7, 10, 20, 35)))
        obj = report.to_json_dict()
        assert obj["levels_used"] == ["1", "3", "7", "10", "20", "35"]
        assert obj["chosen"] == report.chosen.value

    def test_summary_csv_row(self):
        report = fit_ep(table_for(0.2, (1, 3, 7, 10, 20, 35)))
        row = summary_csv_row("demo", 1234, report)
        assert row.startswith("demo,1234,0.200,False,")

    def test_externally_supplied_five_level_table(self):
        # share tables from outside sources (five-level percentile reports)
        # load from the CSV schema and fit like counted ones
        csv = b"x,share,n_local\n"
        for x in (1, 5, 10, 25, 50):
            csv += f"{x},{0.13 ** (2 - math.log10(x))!r},5000\n".encode()
        table = ShareTable.from_csv(csv)
        report = fit_ep(table)
        assert report.chosen.value == pytest.approx(0.13, abs=1e-12)


class TestProbabilityTop:
    def test_reference_engineering_gap(self):
        assert probability_top(0.13, 0.01) == pytest.approx(2.8561e-4, rel=1e-6)
        assert probability_top(0.10, 0.01) == pytest.approx(1.0e-4, rel=1e-9)

    def test_level_100_is_certainty(self):
        for ep in (0.05, 0.1, 0.25, 1.0):
            assert probability_top(ep, 100) == 1.0

    def test_power_identities(self):
        for ep in (0.06, 0.1, 0.13, 0.2):
            assert probability_top(ep, 10) == pytest.approx(ep, rel=1e-14)
            assert probability_top(ep, 1) == pytest.approx(ep**2, rel=1e-13)
            assert probability_top(ep, 0.01) == pytest.approx(ep**4, rel=1e-12)

    def test_ep_index_bounds(self):
        with pytest.raises(ValueError):
            EpIndex(0.0)
        with pytest.raises(ValueError):
            EpIndex(1.2)
        with pytest.raises(ValueError):
            probability_top(1.5, 10)


class TestExpectedFrequency:
    def test_world_average_rate(self):
        assert expected_frequency(0.1, 0.01, 10_000) == pytest.approx(1.0, rel=1e-12)

    def test_strong_cohort_rate(self):
        assert expected_frequency(0.2, 0.01, 10_000) == pytest.approx(16.0, rel=1e-12)

    def test_negative_n_rejected(self):
        with pytest.raises(ValueError):
            expected_frequency(0.1, 0.01, -1)


class TestProbRatio:
    def test_reference_gap_ratio(self):
        assert prob_ratio(0.13, 0.10, 0.01) == pytest.approx(2.8561, rel=1e-4)

    def test_equal_is_one(self):
        assert prob_ratio(0.17, 0.17, 0.01) == 1.0

    def test_reference_comparison_row(self):
        # 2011 TECH: back out the indices from the breakthrough probabilities
        ep_a = 0.00051**0.25
        ep_b = 0.00163**0.25
        assert prob_ratio(ep_b, ep_a, 0.01) == pytest.approx(3.2, abs=0.05)
