"""Experiment drivers and their CSV report format."""

import numpy as np
import pytest

from iqpverify.errors import ParseError, ValidationError
from iqpverify.experiments import (
    ExperimentReport,
    exp_anticoncentration,
    exp_fig1a,
    exp_fig1b,
    exp_parseval,
    parallel_map,
    parse_report,
)


class TestReportFormat:
    def sample_report(self):
        return ExperimentReport(
            experiment="demo",
            params={"n": 6, "seed": 3, "label": "x"},
            columns=("a", "b"),
            rows=((1, 0.5), (2, -0.25), (3, 2.0**-0.5)),
            wall_clock=1.25,
        )

    def test_round_trip(self):
        report = self.sample_report()
        assert parse_report(report.to_csv()) == report

    def test_header_layout(self):
        text = self.sample_report().to_csv()
        lines = text.splitlines()
        assert lines[0] == "# experiment=demo"
        assert all(l.startswith("#") for l in lines[:5])
        assert lines[5] == "a,b"

    def test_cells_that_would_corrupt_are_rejected(self):
        report = ExperimentReport("demo", {}, ("a",), (("x,y",),), 0.0)
        with pytest.raises(ValidationError):
            report.to_csv()

    def test_parse_errors_carry_line_numbers(self):
        with pytest.raises(ParseError):
            parse_report("a,b\n1,2\n")  # no experiment line
        text = "# experiment=demo\n# wall_clock=0.1\na,b\n1,2,3\n"
        with pytest.raises(ParseError) as err:
            parse_report(text)
        assert "line 4" in str(err.value)

    def test_empty_string_cells_survive(self):
        report = ExperimentReport(
            "demo", {}, ("a", "b"), ((1, ""), (2, "t")), 0.5
        )
        assert parse_report(report.to_csv()) == report


class TestParallelMap:
    def test_preserves_order(self, monkeypatch):
        monkeypatch.setenv("IQP_VERIFY_THREADS", "4")
        assert parallel_map(lambda x: x * x, list(range(50))) == [
            x * x for x in range(50)
        ]

    def test_single_thread_env(self, monkeypatch):
        monkeypatch.setenv("IQP_VERIFY_THREADS", "1")
        assert parallel_map(lambda x: -x, [1, 2, 3]) == [-1, -2, -3]

    def test_thread_count_agnostic_results(self, monkeypatch):
        monkeypatch.setenv("IQP_VERIFY_THREADS", "1")
        serial = exp_fig1b(30, 5, seed=8)
        monkeypatch.setenv("IQP_VERIFY_THREADS", "6")
        threaded = exp_fig1b(30, 5, seed=8)
        assert serial.rows == threaded.rows

    def test_bad_env_value(self, monkeypatch):
        monkeypatch.setenv("IQP_VERIFY_THREADS", "lots")
        with pytest.raises(ValidationError):
            parallel_map(lambda x: x, [1])


class TestQuantizationHistograms:
    def test_fig1b_counts_and_levels(self):
        report = exp_fig1b(80, 5, seed=4)
        assert report.columns == ("g", "value", "count")
        assert sum(row[2] for row in report.rows) == 80
        for g, value, count in report.rows:
            assert count > 0
            if g == -1:
                assert value == 0.0
            else:
                assert value == pytest.approx(2.0 ** (-g / 2))

    def test_fig1b_deterministic(self):
        assert exp_fig1b(25, 4, seed=2).rows == exp_fig1b(25, 4, seed=2).rows

    def test_fig1a_fractions(self):
        report = exp_fig1a([3, 5], 60, seed=1)
        by_n = {}
        for n, g, value, fraction in report.rows:
            assert 0.0 < fraction <= 1.0
            by_n.setdefault(n, 0.0)
            by_n[n] += fraction
        assert set(by_n) == {3, 5}
        for total in by_n.values():
            assert total == pytest.approx(1.0)

    def test_round_trips(self):
        report = exp_fig1a([3], 20, seed=0)
        assert parse_report(report.to_csv()) == report


class TestAnticoncentration:
    def test_report_shape(self):
        report = exp_anticoncentration([4, 5], circuits=60, seed=3)
        metrics = {(row[0], row[1]) for row in report.rows}
        for n in (4, 5):
            assert (n, "mean_sq") in metrics
            assert (n, "stderr") in metrics
            assert (n, "bound") in metrics
            assert (n, "tail_empirical") in metrics
        for n, metric, a, value in report.rows:
            if metric == "bound":
                assert value == pytest.approx(3.0 / 2.0**n)
            if metric == "tail_empirical":
                assert 0.0 <= value <= 1.0

    def test_round_trip(self):
        report = exp_anticoncentration([4], circuits=30, seed=5)
        assert parse_report(report.to_csv()) == report

    def test_validation(self):
        with pytest.raises(ValidationError):
            exp_anticoncentration([4], circuits=1)


class TestParseval:
    def test_identity_holds(self):
        report = exp_parseval(6, 8, seed=7)
        for _, lhs, rhs, diff in report.rows:
            assert diff < 1e-9
            assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_round_trip_and_determinism(self):
        a = exp_parseval(5, 4, seed=1)
        b = exp_parseval(5, 4, seed=1)
        assert a.rows == b.rows
        assert parse_report(a.to_csv()) == a
