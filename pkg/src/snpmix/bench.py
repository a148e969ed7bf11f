"""Simulation benchmark: mixture calls versus SNP-wise BH calls.

Every replicate simulates one panel (seed = spec.seed + r) and runs each
requested method on it.  Per-replicate metrics go to a summary TSV; a
second TSV holds per-method aggregates and paired comparisons against the
trend-test baseline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DomainError, ReplicateError
from .io_qc import write_results, write_snpwise_results, write_truth
from .pipeline import FitConfig, fit_panel
from .simulate import simulate_dataset
from .snpwise import snpwise_pipeline

log = logging.getLogger(__name__)

METHODS = ("mixture-beta25", "mixture-empirical", "snpwise-trend", "snpwise-logistic")
BASELINE = "snpwise-trend"
SUMMARY_COLUMNS = (
    "replicate",
    "seed",
    "method",
    "n_called",
    "n_effective",
    "fdr",
    "abs_fdr_error",
    "sensitivity",
    "direction_accuracy",
    "no_calls",
    "sensitivity_diff_vs_baseline",
)


@dataclass(frozen=True)
class Metrics:
    fdr: float
    sensitivity: float
    n_called: int
    n_effective: int
    no_calls: bool
    direction_accuracy: float

    @property
    def zero_effective(self):
        return self.n_effective == 0


def _as_mask(calls, n):
    c = np.asarray(calls)
    if c.dtype == bool:
        if c.shape != (n,):
            raise DomainError("call mask length differs from the truth")
        return c
    mask = np.zeros(n, dtype=bool)
    mask[c.astype(np.int64)] = True
    return mask


def evaluate_metrics(calls, truth, direction=None, allow_no_effective=False):
    """Realized FDR and sensitivity of a call set against simulation truth.

    ``calls`` is a boolean mask or an index array.  A true positive need not
    match direction; ``direction`` (per-SNP cluster codes) only feeds the
    direction-accuracy column.  With no effective SNPs sensitivity is
    undefined: a DomainError unless ``allow_no_effective``, then NaN.
    """
    n = len(truth)
    if n == 0:
        raise DomainError("truth is empty")
    called = _as_mask(calls, n)
    eff = truth.effective
    n_eff = int(eff.sum())
    n_called = int(called.sum())
    if n_eff == 0 and not allow_no_effective:
        raise DomainError("sensitivity is undefined: the truth has no effective SNPs")
    tp = called & eff
    fdr = float((called & ~eff).sum() / n_called) if n_called else 0.0
    sens = float(tp.sum() / n_eff) if n_eff else float("nan")
    acc = float("nan")
    if direction is not None and tp.any():
        acc = float(np.mean(np.asarray(direction)[tp] == truth.labels[tp]))
    return Metrics(fdr, sens, n_called, n_eff, n_called == 0, acc)


@dataclass(frozen=True)
class ReplicateRow:
    replicate: int
    seed: int
    method: str
    metrics: Metrics
    sensitivity_diff: float = float("nan")


@dataclass
class BenchmarkSummary:
    rows: list
    methods: tuple
    level: float
    aggregates: dict = field(default_factory=dict)

    def values(self, method, attr):
        return np.array([getattr(r.metrics, attr) for r in self.rows if r.method == method])

    def paired(self, method, other=BASELINE):
        """Per-replicate (method, other) metric pairs, aligned on seed."""
        a = {r.seed: r.metrics for r in self.rows if r.method == method}
        b = {r.seed: r.metrics for r in self.rows if r.method == other}
        seeds = sorted(set(a) & set(b))
        return [(a[s], b[s]) for s in seeds]


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "NA" if not np.isfinite(x) else f"{x:.10g}"


def _run_method(method, dataset, truth, cfg, level):
    if method.startswith("mixture"):
        mcfg = cfg if method == "mixture-beta25" else replace(cfg, prior="empirical")
        _, fit, calls = fit_panel(dataset, replace(mcfg, fdr=level))
        n = fit.responsibilities.shape[0]
        m = evaluate_metrics(calls.mask(n), truth, calls.direction_by_snp(n), allow_no_effective=True)
        return m, (fit, calls)
    test = method.split("-", 1)[1]
    res = snpwise_pipeline(dataset, test, level)
    m = evaluate_metrics(res.called, truth, res.direction, allow_no_effective=True)
    return m, res


def _persist(out_dir, r, method, dataset, payload):
    path = Path(out_dir) / f"rep{r:03d}_{method}.tsv"
    if method.startswith("mixture"):
        fit, calls = payload
        write_results(fit, calls, path, dataset.snp_ids)
    else:
        write_snpwise_results(dataset.snp_ids, payload, path)


def run_benchmark(spec, replicates, methods=METHODS, level=0.05, fit_cfg=None, out_dir=None):
    """Run ``replicates`` simulated panels through each method.

    ``fit_cfg`` configures the mixture arms (its prior is used by
    mixture-beta25; mixture-empirical always moment-matches the data).
    When ``out_dir`` is given, per-replicate truth and call files are
    written there.
    """
    if int(replicates) < 1:
        raise DomainError("replicates must be >= 1")
    methods = tuple(methods)
    unknown = [m for m in methods if m not in METHODS]
    if unknown or not methods:
        raise DomainError(f"unknown methods {unknown}; choose from {METHODS}")
    if not (0.0 < level < 1.0):
        raise DomainError(f"level must lie in (0, 1), got {level}")
    cfg = fit_cfg or FitConfig()
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)

    rows = []
    for r in range(int(replicates)):
        seed = spec.seed + r
        try:
            dataset, truth = simulate_dataset(spec.with_seed(seed))
            if out_dir is not None:
                write_truth(dataset.snp_ids, truth, Path(out_dir) / f"rep{r:03d}_truth.tsv")
            rep = {}
            for method in methods:
                rep[method], payload = _run_method(method, dataset, truth, cfg, level)
                if out_dir is not None:
                    _persist(out_dir, r, method, dataset, payload)
        except Exception as exc:
            raise ReplicateError(f"replicate {r} (seed {seed}) failed: {exc}", seed=seed) from exc
        base = rep.get(BASELINE)
        for method in methods:
            m = rep[method]
            diff = m.sensitivity - base.sensitivity if base is not None else float("nan")
            rows.append(ReplicateRow(r, seed, method, m, diff))
        log.info("replicate %d (seed %d) done", r, seed)

    summary = BenchmarkSummary(rows, methods, float(level))
    summary.aggregates = aggregate(summary)
    return summary


def _quartiles(v):
    v = v[np.isfinite(v)]
    if v.size == 0:
        return (float("nan"),) * 3
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
    return float(q1), float(med), float(q3)


def aggregate(summary):
    """Per-method medians, quartiles and sign counts against the baseline."""
    out = {}
    for method in summary.methods:
        fdr = summary.values(method, "fdr")
        sens = summary.values(method, "sensitivity")
        err = np.abs(fdr - summary.level)
        q1f, medf, q3f = _quartiles(fdr)
        q1s, meds, q3s = _quartiles(sens)
        agg = {
            "replicates": int(fdr.size),
            "mean_fdr": float(fdr.mean()),
            "median_fdr": medf,
            "q1_fdr": q1f,
            "q3_fdr": q3f,
            "median_abs_fdr_error": float(np.median(err)),
            "median_sensitivity": meds,
            "q1_sensitivity": q1s,
            "q3_sensitivity": q3s,
            "no_call_replicates": int(sum(summary.values(method, "no_calls"))),
        }
        pairs = summary.paired(method)
        if pairs and method != BASELINE:
            d = np.array([a.sensitivity - b.sensitivity for a, b in pairs])
            closer = [abs(a.fdr - summary.level) <= abs(b.fdr - summary.level) for a, b in pairs]
            agg.update(
                {
                    "median_sensitivity_diff": float(np.median(d)) if np.isfinite(d).any() else float("nan"),
                    "n_sensitivity_ge": int(np.sum(d >= 0)),
                    "n_sensitivity_gt": int(np.sum(d > 0)),
                    "n_sensitivity_lt": int(np.sum(d < 0)),
                    "n_fdr_closer_or_equal": int(sum(closer)),
                }
            )
        out[method] = agg
    return out


AGGREGATE_COLUMNS = (
    "replicates",
    "mean_fdr",
    "median_fdr",
    "q1_fdr",
    "q3_fdr",
    "median_abs_fdr_error",
    "median_sensitivity",
    "q1_sensitivity",
    "q3_sensitivity",
    "no_call_replicates",
    "median_sensitivity_diff",
    "n_sensitivity_ge",
    "n_sensitivity_gt",
    "n_sensitivity_lt",
    "n_fdr_closer_or_equal",
)


def write_summary(summary, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(SUMMARY_COLUMNS) + "\n")
        for row in summary.rows:
            m = row.metrics
            vals = (
                row.replicate,
                row.seed,
                row.method,
                m.n_called,
                m.n_effective,
                m.fdr,
                abs(m.fdr - summary.level),
                m.sensitivity,
                m.direction_accuracy,
                m.no_calls,
                row.sensitivity_diff,
            )
            fh.write("\t".join(v if isinstance(v, str) else _fmt(v) for v in vals) + "\n")


def aggregate_path(summary_path):
    p = Path(summary_path)
    return p.with_name(p.stem + ".aggregate" + (p.suffix or ".tsv"))


def write_aggregate(summary, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method\t" + "\t".join(AGGREGATE_COLUMNS) + "\n")
        for method in summary.methods:
            agg = summary.aggregates[method]
            fh.write(method + "\t" + "\t".join(_fmt(agg.get(c, float("nan"))) for c in AGGREGATE_COLUMNS) + "\n")
