"""SNP-wise association tests with Benjamini-Hochberg adjustment.

Both tests work on the 2 x 3 table of genotype counts (cases, controls by
genotype 0/1/2), so a panel of any sample size costs O(G).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import DomainError, SeparationError, UndefinedTestError
from .genotype_model import MINUS, PLUS

WEIGHTS = np.array([0.0, 1.0, 2.0])
SEPARATION_BOUND = 15.0
FLAG_MONOMORPHIC = "monomorphic"
FLAG_SEPARATION = "separation"


@dataclass(frozen=True)
class ContingencyTable23:
    """Genotype counts (r0, r1, r2) in cases and (s0, s1, s2) in controls."""

    case: tuple
    ctrl: tuple

    def __post_init__(self):
        case = tuple(int(c) for c in self.case)
        ctrl = tuple(int(c) for c in self.ctrl)
        if len(case) != 3 or len(ctrl) != 3 or min(case + ctrl) < 0:
            raise DomainError("a 2 x 3 table needs three non-negative counts per row")
        object.__setattr__(self, "case", case)
        object.__setattr__(self, "ctrl", ctrl)

    def swapped(self):
        return ContingencyTable23(self.ctrl, self.case)

    def arrays(self):
        return np.array([self.case], dtype=float), np.array([self.ctrl], dtype=float)


def _two_sided(z):
    return 2.0 * stats.norm.sf(np.abs(z))


def trend_test_many(case_counts, ctrl_counts):
    """Cochran-Armitage trend test per row; returns (z, p, undefined_mask).

    Undefined rows (zero variance) get z = NaN and p = 1.
    """
    r = np.asarray(case_counts, dtype=float)
    s = np.asarray(ctrl_counts, dtype=float)
    n = r + s
    big_r = r.sum(axis=1)
    big_n = n.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = big_r / big_n
        u = (r @ WEIGHTS) - frac * (n @ WEIGHTS)
        var = frac * (1.0 - frac) * ((n @ WEIGHTS**2) - (n @ WEIGHTS) ** 2 / big_n)
        undefined = ~(var > 1e-12 * np.maximum(big_n, 1.0))
        z = np.where(undefined, np.nan, u / np.sqrt(np.where(undefined, 1.0, var)))
    p = np.where(undefined, 1.0, _two_sided(np.nan_to_num(z)))
    return z, p, undefined


def cochran_armitage(table):
    """Trend test with weights (0, 1, 2); returns (z, two-sided p).

    Positive z means cases carry more minor alleles.
    """
    z, p, undefined = trend_test_many(*table.arrays())
    if undefined[0]:
        raise UndefinedTestError("trend test undefined: genotype variance is zero (monomorphic SNP or empty group)")
    return float(z[0]), float(p[0])


def logistic_wald_many(case_counts, ctrl_counts, tol=1e-8, max_iter=100):
    """Grouped-data logistic regression of case status on genotype, per row.

    Returns (beta1, p, flags) where flags holds '' or a reason; flagged rows
    get beta1 = NaN and p = 1.
    """
    y = np.asarray(case_counts, dtype=float)
    n = y + np.asarray(ctrl_counts, dtype=float)
    g = y.shape[0]
    x = WEIGHTS[None, :]
    flags = np.array([""] * g, dtype=object)
    mono = ((n > 0).sum(axis=1) < 2) | (y.sum(axis=1) == 0) | (y.sum(axis=1) == n.sum(axis=1))
    flags[mono] = FLAG_MONOMORPHIC

    with np.errstate(divide="ignore", invalid="ignore"):
        b0 = special.logit(np.clip(y.sum(axis=1) / np.maximum(n.sum(axis=1), 1.0), 1e-12, 1 - 1e-12))
    b1 = np.zeros(g)
    active = ~mono
    converged = np.zeros(g, dtype=bool)
    info00 = info01 = info11 = np.zeros(g)
    for _ in range(max_iter):
        if not active.any():
            break
        eta = b0[:, None] + b1[:, None] * x
        prob = special.expit(eta)
        resid = y - n * prob
        g0 = resid.sum(axis=1)
        g1 = (resid * x).sum(axis=1)
        w = n * prob * (1.0 - prob)
        info00 = w.sum(axis=1)
        info01 = (w * x).sum(axis=1)
        info11 = (w * x * x).sum(axis=1)
        done = active & (np.hypot(g0, g1) < tol)
        converged |= done
        active &= ~done
        det = info00 * info11 - info01 * info01
        step_ok = active & (det > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            d0 = np.where(step_ok, (info11 * g0 - info01 * g1) / det, 0.0)
            d1 = np.where(step_ok, (info00 * g1 - info01 * g0) / det, 0.0)
        b0 = b0 + d0
        b1 = b1 + d1
        diverged = active & ((np.abs(b1) > SEPARATION_BOUND) | ~(det > 0))
        flags[diverged] = FLAG_SEPARATION
        active &= ~diverged
    flags[~mono & ~converged & (flags == "")] = FLAG_SEPARATION

    ok = flags == ""
    det = info00 * info11 - info01 * info01
    with np.errstate(divide="ignore", invalid="ignore"):
        se = np.sqrt(info00 / det)
        p = np.where(ok, _two_sided(b1 / se), 1.0)
    beta1 = np.where(ok, b1, np.nan)
    flags[ok & ~(np.abs(beta1) <= SEPARATION_BOUND)] = FLAG_SEPARATION
    return beta1, np.where(flags == "", p, 1.0), flags


def logistic_wald(table, tol=1e-8):
    """Wald test of the genotype slope in a logistic model; returns (beta1, p)."""
    beta1, p, flags = logistic_wald_many(*table.arrays(), tol=tol)
    if flags[0] == FLAG_MONOMORPHIC:
        raise UndefinedTestError("logistic test undefined: genotype or status is constant")
    if flags[0] == FLAG_SEPARATION:
        raise SeparationError("logistic fit diverged (complete or quasi-separation)")
    return float(beta1[0]), float(p[0])


def bh_adjust(pvalues):
    """Benjamini-Hochberg step-up adjusted p-values, in input order."""
    p = np.asarray(pvalues, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DomainError("need a non-empty vector of p-values")
    if np.any(~np.isfinite(p)) or np.any((p < 0) | (p > 1)):
        raise DomainError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    adj_sorted = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(m)
    out[order] = np.minimum(adj_sorted, 1.0)
    return out


@dataclass(frozen=True)
class SnpwiseResult:
    statistic: np.ndarray
    p_raw: np.ndarray
    p_adj: np.ndarray
    flag: np.ndarray
    called: np.ndarray
    direction: np.ndarray
    test: str
    level: float

    @property
    def called_indices(self):
        return np.flatnonzero(self.called)


def raw_tests(case_counts, ctrl_counts, test="trend"):
    """(statistic, raw p, flags) for every SNP."""
    if test == "trend":
        z, p, undefined = trend_test_many(case_counts, ctrl_counts)
        flags = np.where(undefined, FLAG_MONOMORPHIC, "").astype(object)
        return z, p, flags
    if test == "logistic":
        return logistic_wald_many(case_counts, ctrl_counts)
    raise DomainError(f"unknown test {test!r}; expected 'trend' or 'logistic'")


def snpwise_pipeline(dataset, test="trend", level=0.05):
    """Per-SNP test, BH adjustment, and calls at adjusted p <= level."""
    if not (0.0 < level < 1.0):
        raise DomainError(f"level must lie in (0, 1), got {level}")
    case_counts, ctrl_counts = dataset.genotype_counts()
    stat, p, flags = raw_tests(case_counts, ctrl_counts, test)
    adj = bh_adjust(p)
    called = (adj <= level) & (flags == "")
    ps = dataset.panel_stats()
    direction = np.where(ps.maf_case() < ps.maf_ctrl(), MINUS, PLUS).astype(np.int8)
    return SnpwiseResult(stat, p, adj, flags, called, direction, test, float(level))
