"""MAP-EM for the mixture weights and per-SNP responsibilities.

The per-SNP log marginals do not depend on the weights, so every EM
iteration is an O(G) reweighting of a fixed G x 3 array.  Reductions over
SNPs are numpy sums over a fixed array, so results do not depend on thread
count.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalFailure
from .genotype_model import MINUS, NULL, PLUS

log = logging.getLogger(__name__)

INIT_P_THRESHOLD = 0.05


@dataclass(frozen=True)
class EmConfig:
    tol: float = 1e-8
    max_iter: int = 1000
    pseudo: tuple = field(default=(3.0, 3.0, 3.0))

    def __post_init__(self):
        if not (0.0 < self.tol < 1.0):
            raise DomainError(f"tol must lie in (0, 1), got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise DomainError(f"max_iter must be a positive integer, got {self.max_iter}")
        pseudo = tuple(float(b) for b in self.pseudo)
        if len(pseudo) != 3 or any(b < 1 for b in pseudo):
            raise DomainError(f"pseudo counts must be three values >= 1, got {self.pseudo}")
        object.__setattr__(self, "pseudo", pseudo)


@dataclass(frozen=True)
class MixtureFit:
    pi: np.ndarray
    responsibilities: np.ndarray
    log_marginals: np.ndarray
    log_posterior_trace: np.ndarray
    iterations: int
    converged: bool

    @property
    def n_snps(self):
        return self.responsibilities.shape[0]


def _log_pi(pi):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(pi, dtype=float))


def _row_lse(x):
    m = np.max(x, axis=-1, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return (m_safe + np.log(np.sum(np.exp(x - m_safe), axis=-1, keepdims=True)))[..., 0]


def _check_pi(pi):
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (3,) or np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-9:
        raise DomainError(f"mixture weights must be a probability triple, got {pi}")
    return pi


def responsibilities(log_xi, pi):
    """Posterior cluster probabilities for one SNP (length-3) or many (G x 3)."""
    pi = _check_pi(pi)
    log_xi = np.asarray(log_xi, dtype=float)
    if np.any(~np.isfinite(log_xi)):
        raise DomainError("log marginals must be finite")
    weighted = _log_pi(pi) + log_xi
    norm = _row_lse(weighted)
    if np.any(~np.isfinite(norm)):
        raise NumericalFailure("all clusters have zero weight")
    return np.exp(weighted - norm[..., None])


def m_step_map(resp_sums, pseudo, n_snps):
    """Dirichlet-MAP update of the mixture weights from summed responsibilities."""
    r = np.asarray(resp_sums, dtype=float)
    b = np.asarray(pseudo, dtype=float)
    if r.shape != (3,) or b.shape != (3,):
        raise DomainError("resp_sums and pseudo must be triples")
    if np.any(r < 0) or abs(r.sum() - n_snps) > 1e-6 * max(1.0, n_snps):
        raise DomainError(f"responsibility sums {r} must be non-negative and add up to G={n_snps}")
    if np.any(b < 1):
        raise DomainError("pseudo counts must be >= 1")
    num = r + b - 1.0
    return num / (n_snps + b.sum() - 3.0)


def initial_labels(raw_pvalues, maf_case, maf_ctrl, threshold=INIT_P_THRESHOLD):
    """Hard initial clusters: + / - when p < threshold and MAFs differ, else 0."""
    p = np.asarray(raw_pvalues, dtype=float)
    x = np.asarray(maf_case, dtype=float)
    y = np.asarray(maf_ctrl, dtype=float)
    if not (p.shape == x.shape == y.shape) or p.ndim != 1 or p.size == 0:
        raise DomainError("raw_pvalues, maf_case and maf_ctrl must be equally long non-empty vectors")
    labels = np.full(p.shape, NULL, dtype=np.int8)
    sig = p < threshold
    labels[sig & (x > y)] = PLUS
    labels[sig & (x < y)] = MINUS
    return labels


def init_memberships(raw_pvalues, maf_case, maf_ctrl, pseudo=(3.0, 3.0, 3.0)):
    """Initial mixture weights from the hard initial clustering."""
    labels = initial_labels(raw_pvalues, maf_case, maf_ctrl)
    counts = np.bincount(labels, minlength=3).astype(float)
    return m_step_map(counts, pseudo, labels.size)


def map_objective(log_marginals, pi, pseudo):
    """Sum over SNPs of log mixture density plus the Dirichlet log prior kernel."""
    lp = _log_pi(pi)
    ll = _row_lse(lp + log_marginals)
    b = np.asarray(pseudo, dtype=float)
    # (b - 1) * log(pi) is 0 when b == 1, even at pi == 0
    prior = np.sum(np.where(b > 1.0, (b - 1.0) * lp, 0.0))
    return float(np.sum(ll) + prior), ll


def fit_em(log_marginals, init_pi, cfg=None):
    """Fit the mixture weights by MAP-EM on cached log marginals."""
    cfg = cfg or EmConfig()
    lm = np.asarray(log_marginals, dtype=float)
    if lm.ndim != 2 or lm.shape[1] != 3 or lm.shape[0] == 0:
        raise DomainError("log marginals must be a non-empty G x 3 array")
    bad = np.flatnonzero(~np.all(np.isfinite(lm), axis=1))
    if bad.size:
        raise NumericalFailure(f"non-finite log marginal at SNP {bad[0]}", index=int(bad[0]))
    pi = _check_pi(init_pi)
    if np.any(pi <= 0):
        raise DomainError("initial mixture weights must be strictly positive")
    n = lm.shape[0]

    def objective(p):
        val, ll = map_objective(lm, p, cfg.pseudo)
        if not np.isfinite(val):
            idx = np.flatnonzero(~np.isfinite(ll))
            i = int(idx[0]) if idx.size else None
            raise NumericalFailure(f"non-finite EM objective (SNP {i})", index=i)
        return val

    trace = [objective(pi)]
    converged = False
    it = 0
    while it < cfg.max_iter:
        it += 1
        gamma = responsibilities(lm, pi)
        pi = m_step_map(gamma.sum(axis=0), cfg.pseudo, n)
        trace.append(objective(pi))
        change = abs(trace[-1] - trace[-2]) / (abs(trace[-2]) + 1.0)
        if change < cfg.tol:
            converged = True
            break
    if not converged:
        log.warning("EM stopped after %d iterations without reaching tol=%g", it, cfg.tol)
    gamma = responsibilities(lm, pi)
    return MixtureFit(
        pi=pi,
        responsibilities=gamma,
        log_marginals=lm,
        log_posterior_trace=np.asarray(trace),
        iterations=it,
        converged=converged,
    )
