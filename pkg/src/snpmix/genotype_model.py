"""Per-SNP marginal densities of genotypes under the three clusters.

Within one condition, n subjects with HWE genotype probabilities
((1-t)^2, 2t(1-t), t^2) contribute ``2^n1 * t^m * (1-t)^(2n - m)`` to the
likelihood, where m counts minor alleles and n1 heterozygotes.  Against a
Beta(alpha, beta) prior on t this integrates in closed form (null cluster,
one shared t) or reduces to a Beta-product integral restricted to one side
of the diagonal (the '+' and '-' clusters), which is a product of two
beta-binomial style marginals times Pr(U > V) for the two Beta posteriors.

Columns of every G x 3 array in the package follow the cluster order
(0, +, -); see ``CLUSTERS``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError
from .numerics import QuadratureConfig, log_exceedance_pairs

CLUSTERS = ("0", "+", "-")
NULL, PLUS, MINUS = 0, 1, 2
MISSING = -1

LN2 = math.log(2.0)


@dataclass(frozen=True)
class SnpSuffStats:
    """Minor-allele count, heterozygote count and observed subjects, per condition."""

    m_case: int
    n1_case: int
    nobs_case: int
    m_ctrl: int
    n1_ctrl: int
    nobs_ctrl: int

    def __post_init__(self):
        for m, n1, n in ((self.m_case, self.n1_case, self.nobs_case), (self.m_ctrl, self.n1_ctrl, self.nobs_ctrl)):
            _check_counts(np.asarray(m), np.asarray(n1), np.asarray(n))

    def swapped(self):
        return SnpSuffStats(self.m_ctrl, self.n1_ctrl, self.nobs_ctrl, self.m_case, self.n1_case, self.nobs_case)


def _check_counts(m, n1, n):
    if np.any(m < 0) or np.any(n1 < 0) or np.any(n < 0):
        raise DomainError("sufficient statistics must be non-negative")
    if np.any(m > 2 * n) or np.any(n1 > n) or np.any(m < n1) or np.any((m - n1) % 2 != 0):
        raise DomainError("inconsistent sufficient statistics (need n1 <= m <= 2n, m - n1 even, n1 <= n)")


@dataclass(frozen=True)
class PanelStats:
    """Column arrays of sufficient statistics for G SNPs."""

    m_case: np.ndarray
    n1_case: np.ndarray
    nobs_case: np.ndarray
    m_ctrl: np.ndarray
    n1_ctrl: np.ndarray
    nobs_ctrl: np.ndarray

    def __post_init__(self):
        arrays = [np.asarray(getattr(self, f), dtype=np.int64) for f in _FIELDS]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
            raise DomainError("sufficient statistic arrays must be one-dimensional and equally long")
        for name, a in zip(_FIELDS, arrays):
            object.__setattr__(self, name, a)
        _check_counts(self.m_case, self.n1_case, self.nobs_case)
        _check_counts(self.m_ctrl, self.n1_ctrl, self.nobs_ctrl)

    def __len__(self):
        return self.m_case.shape[0]

    def __getitem__(self, g):
        return SnpSuffStats(*(int(getattr(self, f)[g]) for f in _FIELDS))

    @classmethod
    def from_counts(cls, case_counts, ctrl_counts):
        """Build from (G, 3) genotype count tables (columns: genotype 0, 1, 2)."""
        case_counts = np.asarray(case_counts, dtype=np.int64)
        ctrl_counts = np.asarray(ctrl_counts, dtype=np.int64)
        return cls(
            case_counts[:, 1] + 2 * case_counts[:, 2], case_counts[:, 1], case_counts.sum(axis=1),
            ctrl_counts[:, 1] + 2 * ctrl_counts[:, 2], ctrl_counts[:, 1], ctrl_counts.sum(axis=1),
        )

    @classmethod
    def from_snps(cls, snps):
        snps = list(snps)
        return cls(*(np.array([getattr(s, f) for s in snps], dtype=np.int64) for f in _FIELDS))

    def swapped(self):
        return PanelStats(self.m_ctrl, self.n1_ctrl, self.nobs_ctrl, self.m_case, self.n1_case, self.nobs_case)

    def maf_case(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.nobs_case > 0, self.m_case / (2.0 * np.maximum(self.nobs_case, 1)), np.nan)

    def maf_ctrl(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.nobs_ctrl > 0, self.m_ctrl / (2.0 * np.maximum(self.nobs_ctrl, 1)), np.nan)

    def maf_pooled(self):
        n = self.nobs_case + self.nobs_ctrl
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(n > 0, (self.m_case + self.m_ctrl) / (2.0 * np.maximum(n, 1)), np.nan)


_FIELDS = ("m_case", "n1_case", "nobs_case", "m_ctrl", "n1_ctrl", "nobs_ctrl")


@dataclass(frozen=True)
class Hyperparams:
    """Beta(alpha, beta) prior on MAFs and Dirichlet pseudo counts (b0, b+, b-)."""

    alpha: float
    beta: float
    pseudo: tuple = field(default=(3.0, 3.0, 3.0))

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0 and math.isfinite(self.beta) and self.beta > 0):
            raise DomainError(f"alpha and beta must be positive and finite, got ({self.alpha}, {self.beta})")
        pseudo = tuple(float(b) for b in self.pseudo)
        if len(pseudo) != 3 or any(not math.isfinite(b) or b < 1 for b in pseudo):
            raise DomainError(f"pseudo counts must be three values >= 1, got {self.pseudo}")
        object.__setattr__(self, "pseudo", pseudo)


@dataclass(frozen=True)
class LogMarginals:
    log_xi0: float
    log_xi_plus: float
    log_xi_minus: float

    def as_tuple(self):
        return (self.log_xi0, self.log_xi_plus, self.log_xi_minus)


def hwe_probs(theta):
    """Genotype probabilities (p0, p1, p2) for minor-allele frequency ``theta``."""
    if not (0.0 < theta < 1.0):
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    q = 1.0 - theta
    return (q * q, 2.0 * theta * q, theta * theta)


def suff_stats(genotypes):
    """Return ``(m, n1, n_obs)`` for one condition's genotypes.

    Missing entries (``None``, NaN or -1) are skipped.
    """
    m = n1 = n = 0
    for gt in genotypes:
        if gt is None or gt == MISSING or (isinstance(gt, float) and math.isnan(gt)):
            continue
        gt = int(gt)
        if gt not in (0, 1, 2):
            raise DomainError(f"genotype must be 0, 1, 2 or missing, got {gt}")
        m += gt
        n1 += gt == 1
        n += 1
    return m, n1, n


def _posterior_params(m, n, h):
    return h.alpha + m, h.beta + 2 * n - m


def log_xi_null(s, h):
    """Log marginal under cluster 0: one shared MAF for cases and controls."""
    m = s.m_case + s.m_ctrl
    n = s.nobs_case + s.nobs_ctrl
    a, b = _posterior_params(m, n, h)
    return float((s.n1_case + s.n1_ctrl) * LN2 + special.betaln(a, b) - special.betaln(h.alpha, h.beta))


def log_xi_independent(s, h):
    """Log marginal with independent Beta priors on the case and control MAFs.

    The half-bell marginals for '+' and '-' each equal twice this quantity
    times Pr(theta_case > theta_ctrl) or Pr(theta_case < theta_ctrl) under the
    two Beta posteriors.
    """
    ax, bx = _posterior_params(s.m_case, s.nobs_case, h)
    ay, by = _posterior_params(s.m_ctrl, s.nobs_ctrl, h)
    # the case/control terms are summed first so swapping labels is bit-exact
    return (
        (s.n1_case + s.n1_ctrl) * LN2
        + (special.betaln(ax, bx) + special.betaln(ay, by))
        - 2.0 * special.betaln(h.alpha, h.beta)
    )


def log_xi_signed(s, h, sign, cfg=None):
    """Log marginal under the '+' (case MAF higher) or '-' half-bell prior."""
    if sign not in ("+", "-"):
        raise DomainError(f"sign must be '+' or '-', got {sign!r}")
    ax, bx = _posterior_params(s.m_case, s.nobs_case, h)
    ay, by = _posterior_params(s.m_ctrl, s.nobs_ctrl, h)
    gt, lt = log_exceedance_pairs([ax], [bx], [ay], [by], cfg)
    log_p = gt[0] if sign == "+" else lt[0]
    return float(log_xi_independent(s, h) + LN2 + log_p)


def log_marginals_one(s, h, cfg=None):
    stats = PanelStats.from_snps([s])
    row = log_marginals(stats, h, cfg)[0]
    return LogMarginals(*map(float, row))


def log_marginals(stats, h, cfg=None):
    """G x 3 array of log marginal densities (columns 0, +, -).

    Depends on the data only through ``stats`` and on the prior only through
    (alpha, beta), so it is computed once per fit.  Rows are independent.
    """
    cfg = cfg or QuadratureConfig()
    n1 = (stats.n1_case + stats.n1_ctrl).astype(float)
    ax, bx = _posterior_params(stats.m_case, stats.nobs_case, h)
    ay, by = _posterior_params(stats.m_ctrl, stats.nobs_ctrl, h)
    az, bz = _posterior_params(stats.m_case + stats.m_ctrl, stats.nobs_case + stats.nobs_ctrl, h)
    prior = special.betaln(h.alpha, h.beta)

    out = np.empty((len(stats), 3))
    out[:, NULL] = n1 * LN2 + special.betaln(az, bz) - prior
    indep = n1 * LN2 + (special.betaln(ax, bx) + special.betaln(ay, by)) - 2.0 * prior
    gt, lt = log_exceedance_pairs(ax, bx, ay, by, cfg)
    out[:, PLUS] = indep + LN2 + gt
    out[:, MINUS] = indep + LN2 + lt
    return out
