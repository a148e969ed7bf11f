"""Command-line interface: ``snpmix <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
Kernel modules are imported only after argument parsing so that
``--threads`` can size the numba thread pool before it starts.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("snpmix")


def _floats(n=None):
    def parse(text):
        try:
            vals = tuple(float(v) for v in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
        if n is not None and len(vals) not in ((n,) if isinstance(n, int) else n):
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
        return vals

    return parse


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _unit_open(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (0.0 < v < 1.0):
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {v}")
    return v


def _prior(text):
    """``empirical`` or ``beta:A,B`` (explicit prior) or ``beta:A,B,L,H`` (truncated reference)."""
    if text == "empirical":
        return text
    if not text.startswith("beta:"):
        raise argparse.ArgumentTypeError("prior must be 'empirical', 'beta:A,B' or 'beta:A,B,L,H'")
    vals = _floats((2, 4))(text[5:])
    if vals[0] <= 0 or vals[1] <= 0:
        raise argparse.ArgumentTypeError("Beta parameters must be positive")
    return vals


def _methods(text):
    return tuple(m.strip() for m in text.split(",") if m.strip())


def _add_dataset(p):
    p.add_argument("--genotypes", required=True, help="genotype TSV (snp_id, then one column per sample)")
    p.add_argument("--phenotype", required=True, help="phenotype TSV (sample_id, status 1/0)")


def _add_simulate(p):
    p.add_argument("--snps", type=_positive_int, default=20000)
    p.add_argument("--cases", type=_positive_int, default=100)
    p.add_argument("--controls", type=_positive_int, default=100)
    p.add_argument("--pi", type=_floats(3), default=(0.99, 0.005, 0.005), help="mixture weights 0,+,-")
    p.add_argument("--effects", type=_floats(2), default=None, help="exact numbers of + and - SNPs (overrides --pi)")
    p.add_argument("--maf-alpha", type=float, default=2.0)
    p.add_argument("--maf-beta", type=float, default=5.0)
    p.add_argument("--maf-lo", type=float, default=0.05)
    p.add_argument("--maf-hi", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)


def _add_fit(p):
    p.add_argument(
        "--prior",
        type=_prior,
        default=None,
        help="empirical | beta:A,B (used as is) | beta:A,B,L,H (moment-matched truncated Beta); "
        "default: truncated Beta(2,5) from the smallest observed MAF to 0.5 for fit, on [0.05, 0.5] for benchmark",
    )
    p.add_argument("--pseudo", type=_floats(3), default=(3.0, 3.0, 3.0), help="Dirichlet pseudo counts b0,b+,b-")
    p.add_argument("--fdr", type=_unit_open, default=0.05)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=_positive_int, default=1000)
    p.add_argument("--threads", type=_positive_int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="snpmix", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a case-control panel with known truth")
    _add_simulate(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("fit", help="fit the three-cluster mixture and call SNPs")
    _add_dataset(p)
    _add_fit(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("snpwise", help="SNP-wise tests with Benjamini-Hochberg calls")
    _add_dataset(p)
    p.add_argument("--test", choices=("trend", "logistic"), default="trend")
    p.add_argument("--fdr", type=_unit_open, default=0.05)
    p.add_argument("--out", required=True)

    p = sub.add_parser("qc", help="call-rate, MAF and HWE filtering")
    _add_dataset(p)
    p.add_argument("--min-call-rate", type=float, default=0.95)
    p.add_argument("--min-maf", type=float, default=0.01)
    p.add_argument("--hwe-alpha", type=float, default=1e-6)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("evaluate", help="realized FDR and sensitivity of a results file")
    p.add_argument("--results", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("benchmark", help="simulation benchmark of mixture against SNP-wise calls")
    p.add_argument("--replicates", type=_positive_int, default=20)
    _add_simulate(p)
    _add_fit(p)
    p.add_argument("--methods", type=_methods, default=None, help="comma-separated subset of the methods")
    p.add_argument("--calls-dir", default=None, help="directory for per-replicate truth and call files")
    p.add_argument("--out", required=True, help="summary TSV; aggregates go next to it")
    return parser


def _set_threads(k):
    if k is None:
        return
    current = int(os.environ.get("NUMBA_NUM_THREADS", "0") or 0)
    if "numba" not in sys.modules and current < k:
        os.environ["NUMBA_NUM_THREADS"] = str(k)
    import numba

    from . import numerics  # noqa: F401  (picks the threading layer first)

    numba.set_num_threads(min(k, numba.config.NUMBA_NUM_THREADS))


def _fit_config(args, default_prior):
    from .hyperprior import TruncatedBetaSpec
    from .mixture_em import EmConfig
    from .pipeline import FitConfig

    prior = default_prior if args.prior is None else args.prior
    if isinstance(prior, tuple) and len(prior) == 4:
        prior = TruncatedBetaSpec(*prior)
    return FitConfig(prior=prior, em=EmConfig(args.tol, args.max_iter, args.pseudo), fdr=args.fdr)


def _sim_spec(args):
    from .hyperprior import TruncatedBetaSpec
    from .simulate import SimSpec

    effects = None if args.effects is None else tuple(int(k) for k in args.effects)
    maf = TruncatedBetaSpec(args.maf_alpha, args.maf_beta, args.maf_lo, args.maf_hi)
    return SimSpec(args.snps, args.cases, args.controls, args.pi, maf, args.seed, effects)


def cmd_simulate(args):
    from pathlib import Path

    from .io_qc import TRUTH_FILE, dataset_paths, write_dataset, write_truth
    from .simulate import simulate_dataset

    dataset, truth = simulate_dataset(_sim_spec(args))
    Path(args.out).mkdir(parents=True, exist_ok=True)
    write_dataset(dataset, *dataset_paths(args.out))
    write_truth(dataset.snp_ids, truth, Path(args.out) / TRUTH_FILE)


def cmd_fit(args):
    from .io_qc import load_dataset, write_results
    from .pipeline import fit_panel

    dataset = load_dataset(args.genotypes, args.phenotype)
    hyper, fit, calls = fit_panel(dataset, _fit_config(args, "observed-range"))
    log.info("alpha=%.6g beta=%.6g pi=%s iterations=%d calls=%d", hyper.alpha, hyper.beta, fit.pi, fit.iterations, len(calls))
    write_results(fit, calls, args.out, dataset.snp_ids)


def cmd_snpwise(args):
    from .io_qc import load_dataset, write_snpwise_results
    from .snpwise import snpwise_pipeline

    dataset = load_dataset(args.genotypes, args.phenotype)
    write_snpwise_results(dataset.snp_ids, snpwise_pipeline(dataset, args.test, args.fdr), args.out)


def cmd_qc(args):
    from pathlib import Path

    from .io_qc import dataset_paths, load_dataset, qc_filter, write_dataset, write_qc_report

    dataset = load_dataset(args.genotypes, args.phenotype)
    kept, report = qc_filter(dataset, args.min_call_rate, args.min_maf, args.hwe_alpha)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    write_dataset(kept, *dataset_paths(args.out))
    write_qc_report(report, Path(args.out) / "qc_report.tsv")


def cmd_evaluate(args):
    import numpy as np

    from .bench import _fmt, evaluate_metrics
    from .errors import DataError
    from .io_qc import load_truth, read_calls
    from .simulate import SimTruth

    snp_ids, called, direction = read_calls(args.results)
    t_ids, labels, tx, ty = load_truth(args.truth)
    pos = {s: i for i, s in enumerate(t_ids)}
    missing = [s for s in snp_ids if s not in pos]
    if missing or len(snp_ids) != len(t_ids):
        raise DataError(f"results and truth cover different SNPs (e.g. {missing[:3] or 'count mismatch'})")
    order = np.array([pos[s] for s in snp_ids], dtype=np.int64)
    truth = SimTruth(labels[order], tx[order], ty[order])
    m = evaluate_metrics(called, truth, direction, allow_no_effective=True)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("metric\tvalue\n")
        for name, val in (
            ("n_snps", len(truth)),
            ("n_called", m.n_called),
            ("n_effective", m.n_effective),
            ("fdr", m.fdr),
            ("sensitivity", m.sensitivity),
            ("direction_accuracy", m.direction_accuracy),
            ("no_calls", m.no_calls),
            ("zero_effective", m.zero_effective),
        ):
            fh.write(f"{name}\t{_fmt(val)}\n")


def cmd_benchmark(args):
    from .bench import METHODS, aggregate_path, run_benchmark, write_aggregate, write_summary
    from .errors import DomainError
    from .pipeline import REFERENCE_PRIOR

    methods = args.methods or METHODS
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise DomainError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
    summary = run_benchmark(_sim_spec(args), args.replicates, methods, args.fdr, _fit_config(args, REFERENCE_PRIOR), args.calls_dir)
    write_summary(summary, args.out)
    write_aggregate(summary, aggregate_path(args.out))


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "snpwise": cmd_snpwise,
    "qc": cmd_qc,
    "evaluate": cmd_evaluate,
    "benchmark": cmd_benchmark,
}


def _exit_code(exc):
    from .errors import ConvergenceError, NumericalFailure, ReplicateError

    if isinstance(exc, ReplicateError) and exc.__cause__ is not None:
        return _exit_code(exc.__cause__)
    if isinstance(exc, (ConvergenceError, NumericalFailure, ArithmeticError)):
        return EXIT_NUMERIC
    if isinstance(exc, (ValueError, OSError, KeyError)):
        return EXIT_DATA
    return None


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    threads = getattr(args, "threads", None)
    _set_threads(threads)
    try:
        COMMANDS[args.command](args)
    except Exception as exc:
        code = _exit_code(exc)
        if code is None:
            raise
        print(f"snpmix {args.command}: error: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
