import math
import random

import pytest

from rankbench.car import TestCase, scale_priors
from rankbench.errors import DomainError
from rankbench.harness import (
    AGGREGATE_COLUMNS,
    RESULT_COLUMNS,
    AggregateRow,
    RunRecord,
    aggregate,
    aggregate_csv,
    figure_tables,
    mean_prior_label,
    posteriors_csv,
    read_results,
    report,
    results_csv,
    run_grid,
)
from rankbench.inference import posterior_marginals
from rankbench.kappa import ConversionPolicy, convert_network, plausible_set


def test_grid_counts(grid):
    engines = {}
    for r in grid:
        engines[r.engine] = engines.get(r.engine, 0) + 1
    assert engines == {"numeric": 696, "kappa": 2088}
    assert sum(len(r.posteriors) for r in grid if r.engine == "numeric") == 8352
    assert all(r.ok for r in grid)


def test_grid_is_sorted_and_unique(grid):
    assert grid == sorted(grid, key=RunRecord.sort_key)
    keys = {(r.case_id, r.odds_factor, r.engine, r.epsilon) for r in grid}
    assert len(keys) == len(grid)


def test_record_invariants(grid):
    for r in grid:
        assert 0.0 <= r.score <= 1.0
        assert 1 <= r.rank_of_true <= 12
        if r.engine == "numeric":
            assert r.score == r.posterior_true and r.epsilon is None and r.plausible_set_size is None
        else:
            assert r.plausible_set_size >= 1
            assert r.score in (0.0, 1.0 / r.plausible_set_size)


def test_kappa_record_matches_direct_computation(car, cases):
    case = cases[37]
    (rec,) = run_grid(car, [case], factors=[100], epsilons=[0.01], engines=["kappa"])
    ranks = convert_network(scale_priors(car, 100).network, ConversionPolicy(0.01))
    post = posterior_marginals(ranks, case.evidence, list(car.faults))
    phi = plausible_set({f: post[f]["present"] for f in car.faults})
    assert rec.plausible_set_size == len(phi)
    assert rec.score == (1 / len(phi) if case.true_fault in phi else 0.0)


def test_rank_of_true_uses_worst_tie(car, cases):
    case = next(c for c in cases if c.n_findings == 1)
    (rec,) = run_grid(car, [case], factors=[1], epsilons=[0.1], engines=["kappa"])
    # seven diagnoses share rank 0 with the true fault
    assert rec.plausible_set_size == 7 and rec.rank_of_true == 7


def test_empty_inputs(car, cases):
    assert run_grid(car, []) == []
    assert run_grid(car, cases[:2], engines=[]) == []
    assert results_csv([]) == ",".join(RESULT_COLUMNS) + "\n"
    assert aggregate_csv([]) == ",".join(AGGREGATE_COLUMNS) + "\n"
    assert aggregate([], "epsilon") == []


def test_failed_case_is_recorded_and_grid_continues(car, cases):
    bad = TestCase("bogus/01", "battery", {"engine-start": "sideways"})
    recs = run_grid(car, [cases[0], bad], factors=[1], engines=["numeric"])
    assert [r.ok for r in recs] == [False, True]  # sorted by case id
    failed = next(r for r in recs if not r.ok)
    assert failed.status.startswith("failed:") and math.isnan(failed.score)
    (row,) = aggregate(recs, "epsilon")
    assert row.run_count == 1 and row.failed_count == 1


def test_kappa_as_prob_engine(car, cases):
    recs = run_grid(car, cases[:5], factors=[1], epsilons=[0.1], engines=["kappa-as-prob"])
    assert len(recs) == 5
    assert all(r.ok and r.score == r.posterior_true and len(r.posteriors) == 12 for r in recs)


def test_parallel_matches_serial(car, cases):
    subset = cases[::10]
    serial = run_grid(car, subset, factors=[1, 300], threads=1)
    parallel = run_grid(car, subset, factors=[1, 300], threads=3)
    assert serial == parallel
    assert results_csv(serial) == results_csv(parallel)


@pytest.mark.parametrize("axis", ["epsilon", "n-findings", "prior-magnitude"])
def test_aggregation_is_permutation_invariant(grid, axis):
    shuffled = list(grid)
    random.Random(3).shuffle(shuffled)
    assert aggregate(shuffled, axis) == aggregate(grid, axis)


@pytest.mark.parametrize("axis", ["epsilon", "n-findings", "prior-magnitude"])
def test_means_cover_run_count(grid, axis):
    rows = aggregate(grid, axis)
    assert sum(r.run_count for r in rows) == len(grid)
    for row in rows[:5]:
        members = [r for r in grid if r.engine == row.engine and r.epsilon == row.epsilon]
        if axis == "n-findings":
            members = [r for r in members if r.n_findings == row.key]
        elif axis == "prior-magnitude":
            members = [r for r in members if mean_prior_label(r.odds_factor) == row.key]
        assert len(members) == row.run_count
        assert row.mean_score == pytest.approx(math.fsum(r.score for r in members) / len(members), abs=1e-12)


def test_single_record_aggregate(grid):
    rec = grid[0]
    (row,) = aggregate([rec], "n-findings")
    assert row == AggregateRow("n-findings", rec.n_findings, rec.engine, rec.epsilon, rec.score,
                               rec.plausible_set_size and float(rec.plausible_set_size), 1, 0)


def test_unknown_axis(grid):
    with pytest.raises(DomainError):
        aggregate(grid[:3], "colour")


def test_prior_magnitude_labels(grid):
    rows = [r for r in figure_tables(grid)["fig6"] if r.engine == "numeric"]
    assert [r.key for r in rows] == [0.00036, 0.00361, 0.0175, 0.03376, 0.089, 0.21364]


def test_figure_tables_shapes(grid):
    tables = figure_tables(grid)
    assert {(r.key, r.engine) for r in tables["fig3"]} == {(e, "kappa") for e in (0.001, 0.01, 0.1)}
    assert [r.key for r in tables["fig4"]] == list(range(1, 11))
    assert len(tables["fig5"]) == 20
    # one series per engine over six mean-prior points
    assert len(tables["fig6"]) == 12


def test_reports_are_byte_stable(grid, tmp_path):
    a = report(grid, tmp_path / "a")
    b = report(list(grid), tmp_path / "b")
    assert [p.name for p in a] == [p.name for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_results_round_trip(grid, tmp_path):
    (tmp_path / "results.csv").write_text(results_csv(grid), encoding="utf-8")
    back = read_results(tmp_path / "results.csv")
    assert back == grid
    assert results_csv(back) == results_csv(grid)
    for axis in ("epsilon", "n-findings", "prior-magnitude"):
        assert aggregate_csv(aggregate(back, axis)) == aggregate_csv(aggregate(grid, axis))


def test_posteriors_csv_rows(grid):
    lines = posteriors_csv(grid).splitlines()
    numeric = sum(len(r.posteriors) for r in grid if r.engine == "numeric")
    kappa = sum(len(r.posteriors) for r in grid if r.engine == "kappa")
    assert len(lines) == 1 + numeric + kappa


def test_unknown_report_format(grid, tmp_path):
    with pytest.raises(ValueError):
        report(grid, tmp_path, fmt="pdf")
