"""Synthetic case-control panels with known cluster membership.

Each SNP draws its cluster from the mixture weights (or takes one of a fixed
number of effect slots), then its case/control MAFs: cluster 0 shares one
truncated-Beta draw, the effect clusters order two independent draws so the
pair follows the half-bell density exactly.  Genotypes are drawn under HWE.
All randomness comes from ``rng.uniforms`` keyed by (seed, SNP, slot), slot
0 for the cluster, 1-2 for the MAFs and 3 + j for subject j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from . import rng as crng
from .errors import DomainError
from .genotype_model import CLUSTERS, MINUS, NULL, PLUS
from .hyperprior import TruncatedBetaSpec
from .io_qc import GenotypeDataset

_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class SimSpec:
    """Simulation settings.

    ``effects`` optionally fixes the numbers of '+' and '-' SNPs exactly;
    when given, ``pi`` is ignored for label assignment.
    """

    n_snps: int
    n_cases: int
    n_controls: int
    pi: tuple = (0.99, 0.005, 0.005)
    maf: TruncatedBetaSpec = TruncatedBetaSpec(2.0, 5.0, 0.05, 0.5)
    seed: int = 0
    effects: tuple | None = None

    def __post_init__(self):
        for name in ("n_snps", "n_cases", "n_controls"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v}")
        pi = np.asarray(self.pi, dtype=float)
        if pi.shape != (3,) or np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-9:
            raise DomainError(f"pi must be a probability triple, got {self.pi}")
        object.__setattr__(self, "pi", tuple(float(p) for p in pi))
        if not (0 <= int(self.seed) < 1 << 64):
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.effects is not None:
            n_plus, n_minus = (int(k) for k in self.effects)
            if n_plus < 0 or n_minus < 0 or n_plus + n_minus > self.n_snps:
                raise DomainError(f"effects {self.effects} do not fit in {self.n_snps} SNPs")
            object.__setattr__(self, "effects", (n_plus, n_minus))

    def with_seed(self, seed):
        return SimSpec(self.n_snps, self.n_cases, self.n_controls, self.pi, self.maf, seed, self.effects)


@dataclass(frozen=True)
class SimTruth:
    labels: np.ndarray
    theta_case: np.ndarray
    theta_ctrl: np.ndarray

    def __post_init__(self):
        k, x, y = self.labels, self.theta_case, self.theta_ctrl
        if not (k.shape == x.shape == y.shape):
            raise DomainError("truth arrays must be equally long")
        if np.any((k == NULL) & (x != y)) or np.any((k == PLUS) & ~(x > y)) or np.any((k == MINUS) & ~(x < y)):
            raise DomainError("truth MAFs contradict their cluster labels")

    @property
    def effective(self):
        return self.labels != NULL

    def __len__(self):
        return self.labels.shape[0]


def _truncated_ppf(u, maf):
    lo_cdf = special.betainc(maf.alpha0, maf.beta0, maf.lo)
    hi_cdf = special.betainc(maf.alpha0, maf.beta0, maf.hi)
    if hi_cdf - lo_cdf < 1e-12:
        raise DomainError(f"truncation [{maf.lo}, {maf.hi}] of Beta({maf.alpha0}, {maf.beta0}) is degenerate")
    theta = special.betaincinv(maf.alpha0, maf.beta0, lo_cdf + u * (hi_cdf - lo_cdf))
    return np.clip(theta, maf.lo, maf.hi)


def _order_pair(cluster, t1, t2):
    hi = np.maximum(t1, t2)
    lo = np.minimum(t1, t2)
    hi = np.where(hi == lo, np.nextafter(hi, 1.0), hi)
    case = np.where(cluster == PLUS, hi, np.where(cluster == MINUS, lo, t1))
    ctrl = np.where(cluster == PLUS, lo, np.where(cluster == MINUS, hi, t1))
    return case, ctrl


def _cluster_code(cluster):
    if isinstance(cluster, str):
        if cluster not in CLUSTERS:
            raise DomainError(f"cluster must be one of {CLUSTERS}, got {cluster!r}")
        return CLUSTERS.index(cluster)
    if cluster not in (NULL, PLUS, MINUS):
        raise DomainError(f"unknown cluster code {cluster}")
    return int(cluster)


def draw_maf_pair(cluster, maf, rng):
    """(theta_case, theta_ctrl) for one SNP of the given cluster.

    ``rng`` is anything with a ``random(size)`` method, e.g. a numpy Generator.
    """
    k = _cluster_code(cluster)
    u1, u2 = rng.random(2)
    t = _truncated_ppf(np.array([u1, u2]), maf)
    case, ctrl = _order_pair(np.array([k]), t[:1], t[1:])
    return float(case[0]), float(ctrl[0])


def _labels(spec, keys):
    u = crng.uniforms(keys, 0)
    if spec.effects is not None:
        n_plus, n_minus = spec.effects
        rank = np.empty(spec.n_snps, dtype=np.int64)
        rank[np.lexsort((np.arange(spec.n_snps), u))] = np.arange(spec.n_snps)
        labels = np.full(spec.n_snps, NULL, dtype=np.int8)
        labels[rank < n_plus] = PLUS
        labels[(rank >= n_plus) & (rank < n_plus + n_minus)] = MINUS
        return labels
    cut0 = spec.pi[0]
    cut1 = spec.pi[0] + spec.pi[1]
    return np.where(u < cut0, NULL, np.where(u < cut1, PLUS, MINUS)).astype(np.int8)


def simulate_truth(spec):
    keys = crng.stream_keys(spec.seed, np.arange(spec.n_snps, dtype=np.uint64))
    labels = _labels(spec, keys)
    t1 = _truncated_ppf(crng.uniforms(keys, 1), spec.maf)
    t2 = _truncated_ppf(crng.uniforms(keys, 2), spec.maf)
    case, ctrl = _order_pair(labels, t1, t2)
    return keys, SimTruth(labels, case, ctrl)


def simulate_dataset(spec):
    """Simulate a panel; returns (GenotypeDataset, SimTruth).

    Cases come first in sample order.  The output depends only on ``spec``.
    """
    keys, truth = simulate_truth(spec)
    n = spec.n_cases + spec.n_controls
    is_case = np.arange(n) < spec.n_cases
    geno = np.empty((spec.n_snps, n), dtype=np.int8)
    slots = np.arange(3, 3 + n, dtype=np.uint64)[None, :]
    step = max(1, _CHUNK_CELLS // n)
    for start in range(0, spec.n_snps, step):
        stop = min(spec.n_snps, start + step)
        theta = np.where(is_case[None, :], truth.theta_case[start:stop, None], truth.theta_ctrl[start:stop, None])
        q = 1.0 - theta
        p0 = q * q
        p01 = p0 + 2.0 * theta * q
        u = crng.uniforms(keys[start:stop, None], slots)
        geno[start:stop] = np.where(u < p0, 0, np.where(u < p01, 1, 2))
    snp_ids = [f"snp{g + 1}" for g in range(spec.n_snps)]
    sample_ids = [f"case{i + 1}" for i in range(spec.n_cases)] + [f"ctrl{i + 1}" for i in range(spec.n_controls)]
    return GenotypeDataset(snp_ids, sample_ids, is_case.astype(np.int8), geno), truth
