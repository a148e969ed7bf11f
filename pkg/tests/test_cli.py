import os
import subprocess
import sys

import pytest

from snpmix.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, _exit_code, main
from snpmix.errors import ConvergenceError, DataError, ReplicateError


def cli(argv):
    return main([str(a) for a in argv])


def _run(*args, threads_env=None):
    env = dict(os.environ)
    if threads_env is not None:
        env["NUMBA_NUM_THREADS"] = str(threads_env)
    return subprocess.run([sys.executable, "-m", "snpmix.cli", *map(str, args)], capture_output=True, text=True, env=env)


@pytest.fixture(scope="module")
def panel(tmp_path_factory):
    d = tmp_path_factory.mktemp("panel")
    assert cli(["simulate", "--snps", "600", "--cases", "60", "--controls", "60", "--effects", "15,15", "--seed", "3", "--out", d]) == 0
    return d


def test_simulate_writes_files(panel):
    assert {p.name for p in panel.iterdir()} >= {"genotypes.tsv", "phenotype.tsv", "truth.tsv"}


def test_fit_snpwise_evaluate(panel, tmp_path):
    g, p = panel / "genotypes.tsv", panel / "phenotype.tsv"
    assert cli(["fit", "--genotypes", g, "--phenotype", p, "--out", tmp_path / "fit.tsv"]) == EXIT_OK
    assert cli(["snpwise", "--genotypes", g, "--phenotype", p, "--test", "logistic", "--out", tmp_path / "sw.tsv"]) == EXIT_OK
    assert cli(["evaluate", "--results", tmp_path / "fit.tsv", "--truth", panel / "truth.tsv", "--out", tmp_path / "ev.tsv"]) == EXIT_OK
    rows = dict(line.split("\t") for line in (tmp_path / "ev.tsv").read_text().splitlines()[1:])
    assert rows["n_snps"] == "600" and rows["n_effective"] == "30"
    assert 0.0 <= float(rows["sensitivity"]) <= 1.0


def test_qc_subcommand(panel, tmp_path):
    g, p = panel / "genotypes.tsv", panel / "phenotype.tsv"
    assert cli(["qc", "--genotypes", g, "--phenotype", p, "--out", tmp_path]) == EXIT_OK
    assert (tmp_path / "qc_report.tsv").read_text().startswith("filter\tcount\ninput\t600\n")


def test_benchmark_subcommand(tmp_path):
    args = ["benchmark", "--replicates", "2", "--snps", "300", "--cases", "30", "--controls", "30", "--effects", "5,5"]
    args += ["--methods", "mixture-beta25,snpwise-trend", "--calls-dir", tmp_path / "calls", "--out", tmp_path / "s.tsv"]
    assert cli(args) == EXIT_OK
    assert len((tmp_path / "s.tsv").read_text().splitlines()) == 1 + 2 * 2
    assert (tmp_path / "s.aggregate.tsv").exists()
    assert (tmp_path / "calls" / "rep001_snpwise-trend.tsv").exists()


def test_exit_codes(tmp_path, capsys):
    assert cli(["fit", "--genotypes", tmp_path / "none.tsv", "--phenotype", tmp_path / "none.tsv", "--out", tmp_path / "o"]) == EXIT_DATA
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        cli(["fit", "--genotypes", "g", "--phenotype", "p", "--out", "o", "--fdr", "2"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        cli(["benchmark", "--out", "o", "--prior", "flat"])
    assert info.value.code == EXIT_USAGE
    bad = tmp_path / "bad.tsv"
    bad.write_text("snp_id\ta\tb\nrs1\t0\t7\n")
    (tmp_path / "p.tsv").write_text("a\t1\nb\t0\n")
    assert cli(["fit", "--genotypes", bad, "--phenotype", tmp_path / "p.tsv", "--out", tmp_path / "o"]) == EXIT_DATA
    assert cli(["benchmark", "--replicates", "1", "--snps", "50", "--methods", "bogus", "--out", tmp_path / "b.tsv"]) == EXIT_DATA


def test_exit_code_mapping():
    assert _exit_code(ConvergenceError("x")) == EXIT_NUMERIC
    assert _exit_code(DataError("x")) == EXIT_DATA
    wrapped = ReplicateError("r", seed=1)
    wrapped.__cause__ = ConvergenceError("x")
    assert _exit_code(wrapped) == EXIT_NUMERIC
    assert _exit_code(RuntimeError("x")) is None


@pytest.mark.slow
def test_results_identical_across_thread_counts(panel, tmp_path):
    g, p = panel / "genotypes.tsv", panel / "phenotype.tsv"
    outputs = []
    for k in (1, 4, 8):
        out = tmp_path / f"fit{k}.tsv"
        proc = _run("fit", "--genotypes", g, "--phenotype", p, "--threads", k, "--out", out, threads_env=8)
        assert proc.returncode == 0, proc.stderr
        assert "warning" not in proc.stderr.lower()
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
