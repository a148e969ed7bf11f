"""Genotype panels: in-memory type, TSV formats, and SNP quality control.

File formats (UTF-8, tab separated, LF line endings, ``NA`` is the only
missing token):

genotypes   ``snp_id<TAB>sample1<TAB>...`` header, then one SNP per line with
            cells ``0``, ``1``, ``2`` or ``NA`` (minor-allele counts).
phenotype   ``sample_id<TAB>status`` per line, status ``1`` case, ``0`` control.
            A leading ``sample_id<TAB>status`` header line is optional.
truth       ``snp_id<TAB>cluster<TAB>theta_case<TAB>theta_ctrl`` with cluster
            one of ``0``, ``+``, ``-``.
results     ``snp_id<TAB>gamma0<TAB>gamma_plus<TAB>gamma_minus<TAB>map_cluster
            <TAB>called<TAB>direction``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import DataError, EmptyPanelError
from .genotype_model import CLUSTERS, MISSING, NULL, PanelStats

MISSING_TOKEN = "NA"
_CELL = {"0": 0, "1": 1, "2": 2, MISSING_TOKEN: MISSING}
_CELL_TEXT = np.array(["0", "1", "2", MISSING_TOKEN])  # index -1 -> NA
_SYMBOL_CODE = {s: i for i, s in enumerate(CLUSTERS)}

GENOTYPE_FILE = "genotypes.tsv"
PHENOTYPE_FILE = "phenotype.tsv"
TRUTH_FILE = "truth.tsv"
RESULTS_HEADER = ("snp_id", "gamma0", "gamma_plus", "gamma_minus", "map_cluster", "called", "direction")
SNPWISE_HEADER = ("snp_id", "statistic", "p_raw", "p_adj", "flag", "called", "direction")


@dataclass(eq=False)
class GenotypeDataset:
    """SNP-major genotype matrix (int8, -1 = missing) with case/control labels.

    ``phenotype`` is 1 for cases and 0 for controls, aligned with
    ``sample_ids``.
    """

    snp_ids: list
    sample_ids: list
    phenotype: np.ndarray
    genotypes: np.ndarray

    def __post_init__(self):
        self.snp_ids = [str(s) for s in self.snp_ids]
        self.sample_ids = [str(s) for s in self.sample_ids]
        self.phenotype = np.asarray(self.phenotype, dtype=np.int8)
        self.genotypes = np.asarray(self.genotypes, dtype=np.int8)
        g, n = len(self.snp_ids), len(self.sample_ids)
        if self.genotypes.shape != (g, n):
            raise DataError(f"genotype matrix shape {self.genotypes.shape} does not match {g} SNPs x {n} samples")
        if self.phenotype.shape != (n,):
            raise DataError("phenotype length does not match the number of samples")
        if not np.all((self.phenotype == 0) | (self.phenotype == 1)):
            raise DataError("phenotype labels must be 0 (control) or 1 (case)")
        if not (self.phenotype == 1).any() or not (self.phenotype == 0).any():
            raise DataError("dataset needs at least one case and one control")
        if len(set(self.snp_ids)) != g:
            raise DataError("SNP ids must be unique")
        if len(set(self.sample_ids)) != n:
            raise DataError("sample ids must be unique")
        if self.genotypes.size and (self.genotypes.min() < MISSING or self.genotypes.max() > 2):
            raise DataError("genotype values must be 0, 1, 2 or missing")

    @property
    def n_snps(self):
        return len(self.snp_ids)

    @property
    def n_samples(self):
        return len(self.sample_ids)

    @property
    def case_mask(self):
        return self.phenotype == 1

    @cached_property
    def _counts(self):
        case = self.genotypes[:, self.case_mask]
        ctrl = self.genotypes[:, ~self.case_mask]
        tally = lambda block: np.stack([(block == k).sum(axis=1) for k in (0, 1, 2)], axis=1).astype(np.int64)
        return tally(case), tally(ctrl)

    def genotype_counts(self):
        """(case_counts, ctrl_counts), each G x 3 over genotypes 0, 1, 2."""
        return self._counts

    def panel_stats(self):
        return PanelStats.from_counts(*self._counts)

    def subset(self, snp_mask):
        idx = np.flatnonzero(snp_mask)
        return GenotypeDataset(
            [self.snp_ids[i] for i in idx], list(self.sample_ids), self.phenotype.copy(), self.genotypes[idx]
        )

    def equals(self, other):
        return (
            self.snp_ids == other.snp_ids
            and self.sample_ids == other.sample_ids
            and np.array_equal(self.phenotype, other.phenotype)
            and np.array_equal(self.genotypes, other.genotypes)
        )


# ---------------------------------------------------------------------------
# reading and writing


def _read_lines(path):
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if line:
                yield lineno, line


def load_phenotype(path):
    labels = {}
    for lineno, line in _read_lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"expected 2 columns, found {len(parts)}", line=lineno)
        sample, status = parts
        if lineno == 1 and sample == "sample_id" and status == "status":
            continue
        if status not in ("0", "1"):
            raise DataError(f"status must be 0 or 1, got {status!r}", line=lineno, column=2)
        if sample in labels:
            raise DataError(f"duplicate sample {sample!r}", line=lineno, column=1)
        labels[sample] = int(status)
    return labels


def load_dataset(genotype_path, phenotype_path):
    """Read a genotype TSV and its phenotype TSV into a GenotypeDataset."""
    lines = _read_lines(genotype_path)
    try:
        _, header = next(lines)
    except StopIteration:
        raise DataError("genotype file is empty", line=1) from None
    cols = header.split("\t")
    if cols[0] != "snp_id":
        raise DataError(f"first header column must be 'snp_id', got {cols[0]!r}", line=1, column=1)
    samples = cols[1:]
    if not samples:
        raise DataError("genotype header lists no samples", line=1)
    if len(set(samples)) != len(samples):
        raise DataError("duplicate sample ids in genotype header", line=1)
    width = len(cols)

    snp_ids, rows, seen = [], [], set()
    for lineno, line in lines:
        parts = line.split("\t")
        if len(parts) != width:
            raise DataError(f"expected {width} columns, found {len(parts)}", line=lineno)
        snp = parts[0]
        if snp in seen:
            raise DataError(f"duplicate SNP id {snp!r}", line=lineno, column=1)
        seen.add(snp)
        try:
            rows.append([_CELL[c] for c in parts[1:]])
        except KeyError:
            col = next(j for j, c in enumerate(parts) if j > 0 and c not in _CELL)
            raise DataError(f"illegal genotype value {parts[col]!r}", line=lineno, column=col + 1) from None
        snp_ids.append(snp)

    labels = load_phenotype(phenotype_path)
    missing = [s for s in samples if s not in labels]
    extra = [s for s in labels if s not in set(samples)]
    if missing or extra:
        raise DataError(
            "sample mismatch between genotype and phenotype files: "
            f"{len(missing)} without phenotype (e.g. {missing[:3]}), "
            f"{len(extra)} unknown in genotypes (e.g. {extra[:3]})"
        )
    geno = np.array(rows, dtype=np.int8).reshape(len(snp_ids), len(samples))
    return GenotypeDataset(snp_ids, samples, [labels[s] for s in samples], geno)


def write_dataset(dataset, genotype_path, phenotype_path):
    with open(genotype_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(["snp_id", *dataset.sample_ids]) + "\n")
        text = _CELL_TEXT[dataset.genotypes]
        for snp, row in zip(dataset.snp_ids, text):
            fh.write(snp + "\t" + "\t".join(row) + "\n")
    with open(phenotype_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("sample_id\tstatus\n")
        for s, y in zip(dataset.sample_ids, dataset.phenotype):
            fh.write(f"{s}\t{int(y)}\n")


def write_truth(snp_ids, truth, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("snp_id\tcluster\ttheta_case\ttheta_ctrl\n")
        for snp, k, tx, ty in zip(snp_ids, truth.labels, truth.theta_case, truth.theta_ctrl):
            fh.write(f"{snp}\t{CLUSTERS[k]}\t{tx:.17g}\t{ty:.17g}\n")


def load_truth(path):
    """Return (snp_ids, labels, theta_case, theta_ctrl)."""
    snp_ids, labels, tx, ty = [], [], [], []
    for lineno, line in _read_lines(path):
        parts = line.split("\t")
        if lineno == 1 and parts[0] == "snp_id":
            continue
        if len(parts) != 4:
            raise DataError(f"expected 4 columns, found {len(parts)}", line=lineno)
        if parts[1] not in _SYMBOL_CODE:
            raise DataError(f"cluster must be one of {CLUSTERS}, got {parts[1]!r}", line=lineno, column=2)
        snp_ids.append(parts[0])
        labels.append(_SYMBOL_CODE[parts[1]])
        try:
            tx.append(float(parts[2]))
            ty.append(float(parts[3]))
        except ValueError:
            raise DataError("theta values must be numeric", line=lineno) from None
    return snp_ids, np.array(labels, dtype=np.int8), np.array(tx), np.array(ty)


def _fmt_prob(x):
    return f"{x:.6g}"


def write_results(fit, calls, path, snp_ids=None):
    """Per-SNP responsibilities, MAP cluster and FDR calls, in input SNP order."""
    from .decision import assign_max_posterior

    gamma = fit.responsibilities
    n = gamma.shape[0]
    if snp_ids is None:
        snp_ids = [f"snp{i + 1}" for i in range(n)]
    if len(snp_ids) != n:
        raise DataError("snp_ids do not match the number of fitted SNPs")
    map_cluster = assign_max_posterior(gamma)
    called = calls.mask(n)
    direction = calls.direction_by_snp(n)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(RESULTS_HEADER) + "\n")
        for i in range(n):
            fh.write(
                "\t".join(
                    (
                        snp_ids[i],
                        _fmt_prob(gamma[i, 0]),
                        _fmt_prob(gamma[i, 1]),
                        _fmt_prob(gamma[i, 2]),
                        CLUSTERS[map_cluster[i]],
                        "1" if called[i] else "0",
                        CLUSTERS[direction[i]] if called[i] else MISSING_TOKEN,
                    )
                )
                + "\n"
            )


def write_snpwise_results(snp_ids, result, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(SNPWISE_HEADER) + "\n")
        for i, snp in enumerate(snp_ids):
            stat = result.statistic[i]
            fh.write(
                "\t".join(
                    (
                        snp,
                        MISSING_TOKEN if not math.isfinite(stat) else f"{stat:.6g}",
                        f"{result.p_raw[i]:.6g}",
                        f"{result.p_adj[i]:.6g}",
                        result.flag[i] or ".",
                        "1" if result.called[i] else "0",
                        CLUSTERS[result.direction[i]] if result.called[i] else MISSING_TOKEN,
                    )
                )
                + "\n"
            )


def read_calls(path):
    """Read ``snp_id``, ``called`` and ``direction`` from any results TSV.

    Returns (snp_ids, called bool array, direction codes with NULL for
    uncalled SNPs).
    """
    lines = _read_lines(path)
    try:
        _, header = next(lines)
    except StopIteration:
        raise DataError("results file is empty", line=1) from None
    cols = header.split("\t")
    try:
        i_snp, i_called, i_dir = cols.index("snp_id"), cols.index("called"), cols.index("direction")
    except ValueError:
        raise DataError("results header needs snp_id, called and direction columns", line=1) from None
    snp_ids, called, direction = [], [], []
    for lineno, line in lines:
        parts = line.split("\t")
        if len(parts) != len(cols):
            raise DataError(f"expected {len(cols)} columns, found {len(parts)}", line=lineno)
        if parts[i_called] not in ("0", "1"):
            raise DataError("called must be 0 or 1", line=lineno, column=i_called + 1)
        snp_ids.append(parts[i_snp])
        called.append(parts[i_called] == "1")
        direction.append(_SYMBOL_CODE.get(parts[i_dir], NULL))
    return snp_ids, np.array(called, dtype=bool), np.array(direction, dtype=np.int8)


# ---------------------------------------------------------------------------
# quality control


@dataclass
class QcReport:
    n_input: int
    removed_call_rate: int = 0
    removed_maf: int = 0
    removed_hwe: int = 0
    n_flipped: int = 0
    n_passed: int = 0
    thresholds: dict = field(default_factory=dict)

    def rows(self):
        return [
            ("input", self.n_input),
            ("removed_call_rate", self.removed_call_rate),
            ("removed_maf", self.removed_maf),
            ("removed_hwe", self.removed_hwe),
            ("flipped_minor_allele", self.n_flipped),
            ("passed", self.n_passed),
        ]


def hwe_chisq(counts):
    """One-degree-of-freedom chi-square test of HWE from (c0, c1, c2)."""
    stat, p = hwe_chisq_many(np.asarray(counts, dtype=float)[None, :])
    return float(stat[0]), float(p[0])


def hwe_chisq_many(counts):
    c = np.asarray(counts, dtype=float)
    n = c.sum(axis=1)
    if np.any(n <= 0):
        raise DataError("HWE test needs at least one observed genotype")
    p = (c[:, 1] + 2.0 * c[:, 2]) / (2.0 * n)
    q = 1.0 - p
    expected = n[:, None] * np.stack([q * q, 2.0 * p * q, p * p], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (c - expected) ** 2 / expected, 0.0)
    stat = terms.sum(axis=1)
    mono = (p <= 0.0) | (p >= 1.0)
    stat[mono] = 0.0
    pval = stats.chi2.sf(stat, df=1)
    pval[mono] = 1.0
    return stat, pval


def qc_filter(dataset, min_call_rate=0.95, min_maf=0.01, hwe_alpha=1e-6):
    """Call-rate, minor-allele-frequency and control-HWE filters, in that order.

    SNPs whose pooled minor-allele frequency exceeds 0.5 are recoded
    (genotype 0 <-> 2) so that the counted allele is the minor one.
    """
    report = QcReport(
        n_input=dataset.n_snps,
        thresholds={"min_call_rate": min_call_rate, "min_maf": min_maf, "hwe_alpha": hwe_alpha},
    )
    geno = dataset.genotypes.copy()
    observed = geno >= 0
    keep = observed.mean(axis=1) >= min_call_rate if dataset.n_samples else np.zeros(dataset.n_snps, bool)
    report.removed_call_rate = int((~keep).sum())

    n_obs = observed.sum(axis=1)
    m = np.where(observed, geno, 0).sum(axis=1, dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        maf = np.where(n_obs > 0, m / (2.0 * np.maximum(n_obs, 1)), np.nan)
    flip = keep & (maf > 0.5)
    if flip.any():
        rows = geno[flip]
        rows[rows >= 0] = 2 - rows[rows >= 0]
        geno[flip] = rows
        maf = np.where(flip, 1.0 - maf, maf)
    report.n_flipped = int(flip.sum())
    maf_ok = np.isfinite(maf) & (maf >= min_maf)
    report.removed_maf = int((keep & ~maf_ok).sum())
    keep &= maf_ok

    ctrl = geno[:, dataset.phenotype == 0]
    ctrl_counts = np.stack([(ctrl == k).sum(axis=1) for k in (0, 1, 2)], axis=1)
    has_ctrl = ctrl_counts.sum(axis=1) > 0
    hwe_p = np.ones(dataset.n_snps)
    idx = np.flatnonzero(keep & has_ctrl)
    if idx.size:
        hwe_p[idx] = hwe_chisq_many(ctrl_counts[idx])[1]
    hwe_ok = hwe_p >= hwe_alpha
    report.removed_hwe = int((keep & ~hwe_ok).sum())
    keep &= hwe_ok

    report.n_passed = int(keep.sum())
    if report.n_passed == 0:
        raise EmptyPanelError("quality control removed every SNP")
    filtered = GenotypeDataset(dataset.snp_ids, dataset.sample_ids, dataset.phenotype, geno).subset(keep)
    return filtered, report


def write_qc_report(report, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("filter\tcount\n")
        for name, count in report.rows():
            fh.write(f"{name}\t{count}\n")


def dataset_paths(directory):
    d = Path(directory)
    return d / GENOTYPE_FILE, d / PHENOTYPE_FILE
