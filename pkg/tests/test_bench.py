import math
from dataclasses import replace

import numpy as np
import pytest

from snpmix.bench import (
    METHODS,
    aggregate_path,
    evaluate_metrics,
    run_benchmark,
    write_aggregate,
    write_summary,
)
from snpmix.errors import DomainError, ReplicateError
from snpmix.genotype_model import MINUS, NULL, PLUS
from snpmix.io_qc import load_truth, read_calls
from snpmix.pipeline import REFERENCE_PRIOR, FitConfig, fit_panel, resolve_hyper
from snpmix.simulate import SimSpec, SimTruth, simulate_dataset

SMALL = SimSpec(400, 40, 40, effects=(10, 10), seed=100)


def _truth(labels):
    labels = np.array(labels, dtype=np.int8)
    x = np.where(labels == PLUS, 0.3, np.where(labels == MINUS, 0.1, 0.2))
    y = np.where(labels == PLUS, 0.1, np.where(labels == MINUS, 0.3, 0.2))
    return SimTruth(labels, x, y)


def test_metrics_perfect_calls():
    t = _truth([0, 1, 2, 0, 1])
    m = evaluate_metrics(t.effective, t, t.labels)
    assert (m.fdr, m.sensitivity, m.direction_accuracy) == (0.0, 1.0, 1.0)


def test_metrics_mixed_calls():
    t = _truth([1, 2, 1, 2, 0, 0, 0, 0, 0, 0])
    m = evaluate_metrics([0, 1, 5], t)
    assert m.fdr == pytest.approx(1 / 3)
    assert m.sensitivity == 0.5
    assert m.n_called == 3 and m.n_effective == 4
    assert math.isnan(m.direction_accuracy)


def test_metrics_no_calls():
    t = _truth([1, 0, 0])
    m = evaluate_metrics(np.zeros(3, dtype=bool), t)
    assert m.no_calls and m.fdr == 0.0 and m.sensitivity == 0.0


def test_metrics_direction_ignored_for_true_positive():
    t = _truth([1, 2, 0])
    m = evaluate_metrics([0, 1], t, np.array([MINUS, MINUS, NULL]))
    assert m.sensitivity == 1.0 and m.direction_accuracy == 0.5


def test_metrics_errors():
    t = _truth([0, 0])
    with pytest.raises(DomainError):
        evaluate_metrics([0], t)
    m = evaluate_metrics([0], t, allow_no_effective=True)
    assert m.zero_effective and math.isnan(m.sensitivity) and m.fdr == 1.0
    with pytest.raises(DomainError):
        evaluate_metrics(np.zeros(3, dtype=bool), _truth([1, 0]))
    with pytest.raises(DomainError):
        evaluate_metrics([], SimTruth(np.zeros(0, np.int8), np.zeros(0), np.zeros(0)))


def test_resolve_hyper_options():
    ds, _ = simulate_dataset(SMALL)
    stats = ds.panel_stats()
    ref = resolve_hyper(stats, REFERENCE_PRIOR, (3, 3, 3))
    assert abs(ref.alpha - 3.29) < 0.02 and abs(ref.beta - 9.56) < 0.02
    assert resolve_hyper(stats, (2.0, 7.0), (3, 3, 3)).alpha == 2.0
    emp = resolve_hyper(stats, "empirical", (3, 3, 3))
    obs = resolve_hyper(stats, "observed-range", (3, 3, 3))
    assert emp != ref and obs != ref
    with pytest.raises(DomainError):
        resolve_hyper(stats, "flat", (3, 3, 3))


def test_fit_panel_finds_strong_effects():
    spec = SimSpec(2000, 150, 150, effects=(20, 20), seed=7)
    ds, truth = simulate_dataset(spec)
    hyper, fit, calls = fit_panel(ds)
    assert fit.converged
    assert np.all(np.diff(fit.log_posterior_trace) >= -1e-9)
    m = evaluate_metrics(calls.mask(2000), truth)
    assert m.sensitivity > 0.3 and m.fdr < 0.2
    assert calls.fdr_hat <= 0.05


def test_benchmark_rows_and_persisted_calls(tmp_path):
    summary = run_benchmark(SMALL, 2, METHODS, 0.05, FitConfig(), tmp_path / "calls")
    assert len(summary.rows) == 2 * len(METHODS)
    assert [r.seed for r in summary.rows[:: len(METHODS)]] == [100, 101]
    for row in summary.rows:
        ids, called, direction = read_calls(tmp_path / "calls" / f"rep{row.replicate:03d}_{row.method}.tsv")
        t_ids, labels, tx, ty = load_truth(tmp_path / "calls" / f"rep{row.replicate:03d}_truth.tsv")
        assert ids == t_ids
        m = evaluate_metrics(called, SimTruth(labels, tx, ty), direction, allow_no_effective=True)
        assert m == row.metrics
    base = {r.seed: r.metrics.sensitivity for r in summary.rows if r.method == "snpwise-trend"}
    for r in summary.rows:
        assert r.sensitivity_diff == pytest.approx(r.metrics.sensitivity - base[r.seed])


def test_summary_files_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        s = run_benchmark(SMALL, 2, ("mixture-beta25", "snpwise-trend"))
        write_summary(s, tmp_path / f"{name}.tsv")
        write_aggregate(s, aggregate_path(tmp_path / f"{name}.tsv"))
    assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()
    assert (tmp_path / "a.aggregate.tsv").read_bytes() == (tmp_path / "b.aggregate.tsv").read_bytes()
    header = (tmp_path / "a.tsv").read_text().splitlines()[0].split("\t")
    assert header[:3] == ["replicate", "seed", "method"]


def test_identical_hyperparameters_give_identical_arms():
    ds, _ = simulate_dataset(SMALL)
    emp = resolve_hyper(ds.panel_stats(), "empirical", (3, 3, 3))
    cfg = FitConfig(prior=(emp.alpha, emp.beta))
    s = run_benchmark(SMALL, 1, ("mixture-beta25", "mixture-empirical"), 0.05, cfg)
    a, b = s.rows
    assert a.metrics == b.metrics


def test_null_panel_reports_fdr_only():
    spec = replace(SMALL, pi=(1.0, 0.0, 0.0), effects=None)
    s = run_benchmark(spec, 1, ("mixture-beta25", "snpwise-trend"))
    for r in s.rows:
        assert r.metrics.zero_effective and math.isnan(r.metrics.sensitivity)
        assert 0.0 <= r.metrics.fdr <= 1.0


def test_aggregates():
    s = run_benchmark(SMALL, 3, ("mixture-beta25", "snpwise-trend"))
    agg = s.aggregates["mixture-beta25"]
    fdr = s.values("mixture-beta25", "fdr")
    assert agg["replicates"] == 3
    assert agg["median_fdr"] == pytest.approx(np.median(fdr))
    assert agg["median_abs_fdr_error"] == pytest.approx(np.median(np.abs(fdr - 0.05)))
    assert agg["n_sensitivity_ge"] + agg["n_sensitivity_lt"] == 3
    assert "n_sensitivity_ge" not in s.aggregates["snpwise-trend"]


def test_benchmark_validation():
    with pytest.raises(DomainError):
        run_benchmark(SMALL, 0)
    with pytest.raises(DomainError):
        run_benchmark(SMALL, 1, ("mixture-flat",))
    with pytest.raises(DomainError):
        run_benchmark(SMALL, 1, level=0.0)


def test_replicate_failure_names_seed():
    bad = FitConfig(prior="nonsense")
    with pytest.raises(ReplicateError) as info:
        run_benchmark(SMALL, 1, ("mixture-beta25",), 0.05, bad)
    assert info.value.seed == 100
    assert isinstance(info.value.__cause__, DomainError)


def test_aggregate_path():
    assert aggregate_path("out/summary.tsv").name == "summary.aggregate.tsv"
    assert aggregate_path("out/summary").name == "summary.aggregate.tsv"
