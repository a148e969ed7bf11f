"""Beta(alpha, beta) hyper-parameters for the MAF prior by moment matching.

Two references are supported: a truncated Beta distribution (by default
Beta(2, 5) on [min observed MAF, 0.5]) and the empirical spectrum of pooled
per-SNP MAF estimates.  Either is summarized by its mean and variance and
replaced by the Beta distribution with the same two moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTruncationError, DomainError, InfeasibleMomentsError
from .genotype_model import Hyperparams
from .numerics import log_beta, reg_inc_beta

DEFAULT_REFERENCE = (2.0, 5.0)
DEFAULT_LO = 0.05


@dataclass(frozen=True)
class TruncatedBetaSpec:
    alpha0: float
    beta0: float
    lo: float = DEFAULT_LO
    hi: float = 0.5

    def __post_init__(self):
        if not (self.alpha0 > 0 and self.beta0 > 0 and math.isfinite(self.alpha0) and math.isfinite(self.beta0)):
            raise DomainError(f"alpha0 and beta0 must be positive, got ({self.alpha0}, {self.beta0})")
        if not (0.0 <= self.lo < self.hi <= 1.0):
            raise DomainError(f"need 0 <= lo < hi <= 1, got lo={self.lo}, hi={self.hi}")

    def mass(self):
        return reg_inc_beta(self.hi, self.alpha0, self.beta0) - reg_inc_beta(self.lo, self.alpha0, self.beta0)


def truncated_beta_moments(spec):
    """Mean and variance of Beta(alpha0, beta0) restricted to [lo, hi]."""
    a, b = spec.alpha0, spec.beta0
    z = spec.mass()
    if z < 1e-12:
        raise DegenerateTruncationError(
            f"Beta({a}, {b}) has mass {z:.3g} on [{spec.lo}, {spec.hi}]; truncation is degenerate"
        )

    def raw_moment(r):
        ratio = math.exp(log_beta(a + r, b) - log_beta(a, b))
        return ratio * (reg_inc_beta(spec.hi, a + r, b) - reg_inc_beta(spec.lo, a + r, b)) / z

    mean = raw_moment(1)
    var = raw_moment(2) - mean * mean
    if not var > 0:
        raise DegenerateTruncationError(f"non-positive variance {var} for truncated Beta({a}, {b})")
    return mean, var


def moment_match(mean, variance):
    """Beta parameters with the given mean and variance."""
    if not (0.0 < mean < 1.0):
        raise InfeasibleMomentsError(f"mean must lie in (0, 1), got {mean}")
    if not (0.0 < variance < mean * (1.0 - mean)):
        raise InfeasibleMomentsError(
            f"no Beta distribution has mean {mean} and variance {variance} "
            f"(need 0 < variance < {mean * (1.0 - mean)})"
        )
    kappa = mean * (1.0 - mean) / variance - 1.0
    return mean * kappa, (1.0 - mean) * kappa


def _stats_of(data):
    return data.panel_stats() if hasattr(data, "panel_stats") else data


def min_observed_maf(data):
    """Smallest pooled MAF (folded to <= 0.5) among SNPs with observed genotypes."""
    p = _stats_of(data).maf_pooled()
    p = p[np.isfinite(p)]
    if p.size == 0:
        return None
    return float(np.min(np.minimum(p, 1.0 - p)))


def empirical_hyper(data):
    """Moment-match the spectrum of pooled per-SNP MAF estimates.

    ``data`` is a GenotypeDataset or PanelStats.  Sample variance uses the
    n - 1 denominator.
    """
    p = _stats_of(data).maf_pooled()
    p = p[np.isfinite(p)]
    if p.size < 2:
        raise InfeasibleMomentsError(
            "need at least two SNPs with observed genotypes for an empirical MAF prior; "
            "use the truncated Beta(2, 5) reference instead"
        )
    mean = float(np.mean(p))
    var = float(np.var(p, ddof=1))
    try:
        return moment_match(mean, var)
    except InfeasibleMomentsError as exc:
        raise InfeasibleMomentsError(
            f"{exc}; the MAF spectrum is too degenerate for an empirical prior, "
            "use the truncated Beta(2, 5) reference instead"
        ) from None


def default_truncated(data=None, alpha0=DEFAULT_REFERENCE[0], beta0=DEFAULT_REFERENCE[1], hi=0.5):
    """Truncated reference on [minimum observed MAF, hi], lo = 0.05 without data."""
    lo = DEFAULT_LO if data is None else min_observed_maf(data)
    if lo is None:
        lo = DEFAULT_LO
    return TruncatedBetaSpec(alpha0, beta0, lo, hi)


def hyper_from_truncated(spec, pseudo=(3.0, 3.0, 3.0)):
    alpha, beta = moment_match(*truncated_beta_moments(spec))
    return Hyperparams(alpha, beta, pseudo)


def hyper_from_data(data, pseudo=(3.0, 3.0, 3.0)):
    alpha, beta = empirical_hyper(data)
    return Hyperparams(alpha, beta, pseudo)
