import csv

import pytest

from destrank.corpus import Dataset, Qrels, Query
from destrank.errors import MissingRanking
from destrank.evaluation import (
    MethodRow,
    compare_to_baseline,
    evaluate_run,
    save_sweep_csv,
    sweep,
    write_report,
)
from destrank.metrics import average_precision_at_k, r_precision, recall_at_k
from destrank.stats import mean_and_ci


def make_dataset(qrels_by_qid):
    queries = tuple(Query(qid=qid, text=f"query {qid}") for qid in qrels_by_qid)
    qrels = {
        qid: Qrels(qid=qid, relevant=frozenset(rel)) for qid, rel in qrels_by_qid.items()
    }
    return Dataset(queries=queries, qrels=qrels)


DATASET = make_dataset({"q1": {"a", "c"}, "q2": {"b"}})
RANKINGS = {"q1": ["a", "b", "c", "d"], "q2": ["c", "b", "a", "d"]}


class TestEvaluateRun:
    def test_matches_metric_oracles(self):
        reports = evaluate_run(RANKINGS, DATASET, ["recall@2", "map@2", "r-precision"])
        by_metric = {r.metric: r for r in reports}

        for qid in ("q1", "q2"):
            relevant = set(DATASET.qrels[qid].relevant)
            assert by_metric["recall@2"].per_query[qid] == recall_at_k(
                RANKINGS[qid], relevant, 2
            )
            assert by_metric["map@2"].per_query[qid] == average_precision_at_k(
                RANKINGS[qid], relevant, 2
            )
            assert by_metric["r-precision"].per_query[qid] == r_precision(
                RANKINGS[qid], relevant
            )
        values = list(by_metric["recall@2"].per_query.values())
        mean, lo, hi = mean_and_ci(values)
        assert by_metric["recall@2"].mean == pytest.approx(mean)
        assert (by_metric["recall@2"].ci_low, by_metric["recall@2"].ci_high) == (lo, hi)

    def test_metric_cardinality(self):
        reports = evaluate_run(RANKINGS, DATASET, ["recall@30", "map@50", "r-precision"])
        assert len(reports) == 3

    def test_single_query_mean_without_ci(self):
        dataset = make_dataset({"q1": {"a"}})
        reports = evaluate_run({"q1": ["a", "b"]}, dataset, ["recall@1"])
        report = reports[0]
        assert report.mean == 1.0
        assert report.ci_low == report.ci_high == report.mean

    def test_missing_ranking(self):
        with pytest.raises(MissingRanking):
            evaluate_run({"q1": ["a"]}, DATASET, ["recall@1"])

    def test_ci_brackets_mean(self):
        for report in evaluate_run(RANKINGS, DATASET, ["recall@2", "r-precision"]):
            assert report.ci_low <= report.mean <= report.ci_high


class TestSweep:
    def test_row_cardinality_and_alignment(self):
        calls = []

        def run_fn(value):
            calls.append(value)
            return RANKINGS

        result = sweep("top_n", list(range(1, 11)), run_fn, DATASET, ["recall@2", "map@2"])
        assert calls == list(range(1, 11))
        assert result.values == tuple(range(1, 11))
        assert all(len(col) == 10 for col in result.metrics.values())

    def test_deterministic_across_runs(self):
        def run_fn(value):
            return RANKINGS

        a = sweep("top_n", [1, 2, 3], run_fn, DATASET, ["recall@2"])
        b = sweep("top_n", [1, 2, 3], run_fn, DATASET, ["recall@2"])
        assert a == b

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            sweep("top_n", [], lambda v: RANKINGS, DATASET, ["recall@2"])

    def test_csv_output(self, tmp_path):
        result = sweep("top_n", [1, 2], lambda v: RANKINGS, DATASET, ["recall@2"])
        path = tmp_path / "sweep.csv"
        save_sweep_csv(result, path)
        with path.open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["top_n", "recall@2"]
        assert len(rows) == 3


class TestReport:
    def test_baseline_comparison_and_asterisks(self, tmp_path):
        n = 30
        dataset = make_dataset({f"q{i}": {"a"} for i in range(n)})
        good = {f"q{i}": ["a", "b"] for i in range(n)}
        bad = {
            f"q{i}": (["a", "b"] if i % 5 == 0 else ["b", "a"]) for i in range(n)
        }
        good_reports = evaluate_run(good, dataset, ["recall@1"])
        bad_reports = evaluate_run(bad, dataset, ["recall@1"])
        sig = compare_to_baseline(good_reports, bad_reports)
        assert sig["recall@1"].significant_at_01

        rows = [
            MethodRow(method="baseline", reports=bad_reports),
            MethodRow(method="candidate", reports=good_reports, significance=sig),
        ]
        md = tmp_path / "report.md"
        csv_path = tmp_path / "report.csv"
        write_report(rows, ["recall@1"], md, csv_path, baseline_method="baseline")
        content = md.read_text()
        assert "candidate" in content
        assert "*" in content

    def test_identical_runs_produce_no_test(self):
        reports = evaluate_run(RANKINGS, DATASET, ["recall@2"])
        sig = compare_to_baseline(reports, reports)
        assert sig["recall@2"] is None

    def test_csv_layout(self, tmp_path):
        reports = evaluate_run(RANKINGS, DATASET, ["recall@2", "map@2"])
        rows = [MethodRow(method="no-qr", reports=reports)]
        write_report(rows, ["recall@2", "map@2"], tmp_path / "r.md", tmp_path / "r.csv")
        with (tmp_path / "r.csv").open() as fh:
            parsed = list(csv.reader(fh))
        assert parsed[0] == ["method", "recall@2", "map@2"]
        assert parsed[1][0] == "no-qr"
        assert "±" in parsed[1][1]
