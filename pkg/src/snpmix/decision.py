"""Turning responsibilities into SNP calls."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .genotype_model import MINUS, NULL, PLUS


@dataclass(frozen=True)
class CallSet:
    """SNPs declared effective at a posterior-FDR target.

    ``called`` holds SNP indices in ranking order and ``direction`` the
    matching cluster codes (PLUS or MINUS).  ``fdr_hat`` is 0 when nothing
    is called; check ``no_calls`` rather than reading it as an estimate.
    """

    called: np.ndarray
    direction: np.ndarray
    tau: float
    fdr_hat: float
    target_fdr: float

    @property
    def no_calls(self):
        return self.called.size == 0

    def __len__(self):
        return int(self.called.size)

    def mask(self, n_snps):
        out = np.zeros(n_snps, dtype=bool)
        out[self.called] = True
        return out

    def direction_by_snp(self, n_snps):
        """Per-SNP cluster code: the call direction, or NULL when not called."""
        out = np.full(n_snps, NULL, dtype=np.int8)
        out[self.called] = self.direction
        return out


def _check_gamma(gamma):
    g = np.asarray(gamma, dtype=float)
    if g.ndim != 2 or g.shape[1] != 3:
        raise DomainError("responsibilities must be a G x 3 array")
    return g


def assign_max_posterior(gamma):
    """Cluster with the largest responsibility per SNP.

    Ties go to the earlier column of (0, +, -): any tie with 0 gives 0 and a
    +/- tie gives +.
    """
    return np.argmax(_check_gamma(gamma), axis=1).astype(np.int8)


def call_fdr(gamma, target):
    """Largest call set whose mean null responsibility stays within ``target``.

    SNPs are ranked by max(gamma+, gamma-) descending, then gamma0 ascending,
    then index.  The call set is the longest prefix of that ranking whose
    running mean of gamma0 is at most ``target``.
    """
    g = _check_gamma(gamma)
    if not (0.0 < target < 1.0):
        raise DomainError(f"target FDR must lie in (0, 1), got {target}")
    n = g.shape[0]
    effect = np.maximum(g[:, PLUS], g[:, MINUS])
    order = np.lexsort((np.arange(n), g[:, NULL], -effect))
    running = np.cumsum(g[order, NULL]) / np.arange(1, n + 1)
    ok = np.flatnonzero(running <= target)
    if ok.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return CallSet(empty, np.zeros(0, dtype=np.int8), 1.0, 0.0, float(target))
    k = int(ok[-1]) + 1
    called = order[:k]
    direction = np.where(g[called, MINUS] > g[called, PLUS], MINUS, PLUS).astype(np.int8)
    return CallSet(
        called=called,
        direction=direction,
        tau=float(effect[called[-1]]),
        fdr_hat=float(running[k - 1]),
        target_fdr=float(target),
    )
