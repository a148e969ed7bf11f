"""End-to-end mixture analysis of one panel."""

from __future__ import annotations

from dataclasses import dataclass, field

from .decision import call_fdr
from .errors import DomainError
from .genotype_model import Hyperparams, log_marginals
from .hyperprior import TruncatedBetaSpec, default_truncated, hyper_from_data, hyper_from_truncated
from .mixture_em import EmConfig, fit_em, init_memberships
from .numerics import QuadratureConfig
from .snpwise import trend_test_many

# Truncated Beta(2, 5) on the simulation MAF range; moment-matches to about Beta(3.29, 9.56).
REFERENCE_PRIOR = TruncatedBetaSpec(2.0, 5.0, 0.05, 0.5)


@dataclass(frozen=True)
class FitConfig:
    """Prior choice plus EM, quadrature and calling settings.

    ``prior`` is a TruncatedBetaSpec, an explicit (alpha, beta) pair, or one
    of the strings "empirical" (moment-match the observed MAF spectrum) and
    "observed-range" (truncated Beta(2, 5) on [minimum observed MAF, 0.5]).
    """

    prior: object = REFERENCE_PRIOR
    em: EmConfig = field(default_factory=EmConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    fdr: float = 0.05


def resolve_hyper(data, prior, pseudo):
    if isinstance(prior, str):
        if prior == "empirical":
            return hyper_from_data(data, pseudo)
        if prior == "observed-range":
            return hyper_from_truncated(default_truncated(data), pseudo)
        raise DomainError(f"unknown prior {prior!r}")
    if isinstance(prior, TruncatedBetaSpec):
        return hyper_from_truncated(prior, pseudo)
    alpha, beta = prior
    return Hyperparams(float(alpha), float(beta), pseudo)


def fit_panel(dataset, cfg=None):
    """Marginals, trend-test initialization, MAP-EM and posterior-FDR calls.

    Returns (hyperparams, MixtureFit, CallSet).
    """
    cfg = cfg or FitConfig()
    stats = dataset.panel_stats()
    hyper = resolve_hyper(stats, cfg.prior, cfg.em.pseudo)
    lm = log_marginals(stats, hyper, cfg.quadrature)
    case_counts, ctrl_counts = dataset.genotype_counts()
    _, p_raw, _ = trend_test_many(case_counts, ctrl_counts)
    init_pi = init_memberships(p_raw, stats.maf_case(), stats.maf_ctrl(), cfg.em.pseudo)
    fit = fit_em(lm, init_pi, cfg.em)
    return hyper, fit, call_fdr(fit.responsibilities, cfg.fdr)
