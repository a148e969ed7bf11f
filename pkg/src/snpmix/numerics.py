"""Log-stable special functions and quadrature for Beta variables.

The hot path is ``log_exceedance_pairs``: for every SNP it needs
``log Pr(U > V)`` and ``log Pr(U < V)`` for two Beta posteriors, which is
done by composite Gauss-Legendre quadrature over a window fitted to the
integrand, with dyadic panel refinement.  The integrand carries the Beta
CDF, evaluated in log space by a continued fraction so that tail
probabilities far below the double-precision range of the CDF itself stay
usable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np
from numba import njit, prange
from scipy import special

from .errors import ConvergenceError, DomainError

# the bundled TBB is often too old; OpenMP or the workqueue pool are fine
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

LOG_HALF = math.log(0.5)
# stand-in for ln 0 where a probability rounds to exactly zero
LOG_TINY = math.log(1e-300)

_FPMIN = 1e-300
_CF_EPS = 1e-15
_CF_MAXIT = 20000

# kernel status codes
_OK = 0
_NOT_CONVERGED = 1
_NAN = 2


@dataclass(frozen=True)
class QuadratureConfig:
    node_count: int = 128
    refinement_limit: int = 8
    rel_tolerance: float = 1e-8

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 16:
            raise DomainError(f"node_count must be an integer >= 16, got {self.node_count}")
        if int(self.refinement_limit) != self.refinement_limit or self.refinement_limit < 1:
            raise DomainError(f"refinement_limit must be a positive integer, got {self.refinement_limit}")
        if not (0.0 < self.rel_tolerance < 1e-3):
            raise DomainError(f"rel_tolerance must lie in (0, 1e-3), got {self.rel_tolerance}")

    def rule(self):
        """Gauss-Legendre nodes on [-1, 1] and the log of their weights."""
        return _gauss_legendre(int(self.node_count))


@lru_cache(maxsize=16)
def _gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    lw = np.log(w)
    lw.setflags(write=False)
    return x, lw


def _check_positive(**params):
    for name, v in params.items():
        if not (np.isfinite(v) and v > 0):
            raise DomainError(f"{name} must be positive and finite, got {v}")


def log_beta(a, b):
    """``ln B(a, b)``."""
    _check_positive(a=a, b=b)
    return float(special.betaln(a, b))


# ---------------------------------------------------------------------------
# incomplete beta (continued fraction, modified Lentz)


@njit(cache=True, error_model="numpy")
def _betacf(x, a, b):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    return np.nan


@njit(cache=True, error_model="numpy")
def _betainc(x, a, b, lbeta):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = a * math.log(x) + b * math.log1p(-x) - lbeta
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(front - math.log(a)) * _betacf(x, a, b)
    return 1.0 - math.exp(front - math.log(b)) * _betacf(1.0 - x, b, a)


@njit(cache=True, error_model="numpy")
def _log_betainc(x, a, b, lbeta):
    if x <= 0.0:
        return -np.inf
    if x >= 1.0:
        return 0.0
    front = a * math.log(x) + b * math.log1p(-x) - lbeta
    if x < (a + 1.0) / (a + b + 2.0):
        return front - math.log(a) + math.log(_betacf(x, a, b))
    t = math.exp(front - math.log(b)) * _betacf(1.0 - x, b, a)
    if t >= 1.0:
        return -np.inf
    return math.log1p(-t)


@njit(cache=True, error_model="numpy")
def _log_betainc_uw(u, w, a, b, lbeta):
    """``ln I_u(a, b)`` given both ``u`` and ``w = 1 - u`` to full precision."""
    front = a * math.log(u) + b * math.log(w) - lbeta
    if u < (a + 1.0) / (a + b + 2.0):
        return front - math.log(a) + math.log(_betacf(u, a, b))
    t = math.exp(front - math.log(b)) * _betacf(w, b, a)
    if t >= 1.0:
        return -np.inf
    return math.log1p(-t)


@njit(cache=True, error_model="numpy")
def _septic(t):
    t2 = t * t
    return t2 * t2 * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t2 * t)


@njit(cache=True, error_model="numpy")
def _betainc_many(x, a, b, lbeta, out):
    for i in range(x.shape[0]):
        out[i] = _betainc(x[i], a[i], b[i], lbeta[i])


def reg_inc_beta(x, a, b):
    """Regularized incomplete beta function ``I_x(a, b)``.

    Accepts scalars or broadcastable arrays.
    """
    x_arr, a_arr, b_arr = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    )
    if np.any(~np.isfinite(x_arr)) or np.any((x_arr < 0) | (x_arr > 1)):
        raise DomainError("x must lie in [0, 1]")
    if np.any(~np.isfinite(a_arr) | (a_arr <= 0)) or np.any(~np.isfinite(b_arr) | (b_arr <= 0)):
        raise DomainError("a and b must be positive and finite")
    flat_x = np.ascontiguousarray(x_arr.ravel())
    flat_a = np.ascontiguousarray(a_arr.ravel())
    flat_b = np.ascontiguousarray(b_arr.ravel())
    out = np.empty_like(flat_x)
    _betainc_many(flat_x, flat_a, flat_b, special.betaln(flat_a, flat_b), out)
    if np.isnan(out).any():
        raise ConvergenceError("incomplete beta continued fraction did not converge")
    out = np.clip(out, 0.0, 1.0).reshape(x_arr.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Pr(U > V) by windowed Gauss-Legendre quadrature


@njit(cache=True, error_model="numpy")
def _bulk(a, b):
    """Interval holding all but a negligible tail of Beta(a, b).

    Ten standard deviations suffice near normality; the additive 30/(a+b)
    covers the gamma-like tail of strongly skewed shapes (a or b below ~15).
    """
    n = a + b
    mu = a / n
    sd = math.sqrt(a * b / (n * n * (n + 1.0)))
    r = 10.0 * sd + 30.0 / n
    return mu, sd, mu - r, mu + r


@njit(cache=True, error_model="numpy")
def _window(a1, b1, a2, b2):
    mu1, sd1, lo, hi = _bulk(a1, b1)
    mu2, sd2, _, _ = _bulk(a2, b2)
    # The integrand f_U(u) F_V(u) lives inside U's bulk unless Pr(U > V) is
    # tiny; then it concentrates near the precision-weighted meeting point.
    v1 = sd1 * sd1
    v2 = sd2 * sd2
    vs = v1 + v2
    ustar = (mu1 * v2 + mu2 * v1) / vs
    sc = math.sqrt(v1 * v2 / vs)
    lo = min(lo, ustar - 10.0 * sc)
    hi = max(hi, ustar + 10.0 * sc)
    # Far apart, the Gaussian guess drifts; the joint density along u = v
    # peaks at the mode of u^A (1 - u)^B, which tracks the true maximum.
    big_a = a1 + a2 - 2.0
    big_b = b1 + b2 - 2.0
    if big_a > 0.0 and big_b > 0.0:
        ud = big_a / (big_a + big_b)
        wd = big_b / (big_a + big_b)
        sd_d = 1.0 / math.sqrt(big_a / (ud * ud) + big_b / (wd * wd))
        lo = min(lo, ud - 12.0 * sd_d)
        hi = max(hi, ud + 12.0 * sd_d)
    if lo < 0.0:
        lo = 0.0
    if hi > 1.0:
        hi = 1.0
    if not (hi > lo):
        lo = 0.0
        hi = 1.0
    return lo, hi


@njit(cache=True, error_model="numpy")
def _breakpoints(a1, b1, a2, b2):
    lo, hi = _window(a1, b1, a2, b2)
    pts = np.empty(4)
    pts[0] = lo
    k = 1
    _, sd1, _, _ = _bulk(a1, b1)
    _, sd2, vlo, vhi = _bulk(a2, b2)
    # isolate a CDF step of V that is much sharper than U's density
    if sd2 < 0.25 * sd1:
        if lo < vlo < hi:
            pts[k] = vlo
            k += 1
        if lo < vhi < hi:
            pts[k] = vhi
            k += 1
    pts[k] = hi
    return pts[: k + 1]


@njit(cache=True, error_model="numpy")
def _log_quad(a1, b1, lb1, a2, b2, lb2, lo, hi, panels, xs, lw):
    # Endpoints of (0, 1) may carry algebraic singularities of the Beta
    # density; a polynomial map whose first three derivatives vanish there
    # turns u^(p) into t^(4p + 3), smooth enough for Gauss-Legendre.
    at0 = lo <= 0.0
    at1 = hi >= 1.0
    span = hi - lo
    width = 1.0 / panels
    half = 0.5 * width
    lhalf = math.log(half)
    m = -np.inf
    s = 0.0
    for p in range(panels):
        mid = (p + 0.5) * width
        for j in range(xs.shape[0]):
            t = mid + half * xs[j]
            r = (panels - p - 0.5) * width - half * xs[j]
            # u and its complement w are both formed without cancellation
            if at0 and at1:
                u = _septic(t)
                w = _septic(r)
                q = t * r
                dphi = 140.0 * q * q * q
            elif at0:
                t2 = t * t
                u = span * t2 * t2
                w = 1.0 - u
                dphi = 4.0 * t2 * t
            elif at1:
                r2 = r * r
                w = span * r2 * r2
                u = 1.0 - w
                dphi = 4.0 * r2 * r
            else:
                u = lo + span * t
                w = 1.0 - u
                dphi = 1.0
            if u <= 0.0 or w <= 0.0 or dphi <= 0.0:
                continue
            g = (
                lw[j]
                + lhalf
                + math.log(span * dphi)
                + (a1 - 1.0) * math.log(u)
                + (b1 - 1.0) * math.log(w)
                - lb1
                + _log_betainc_uw(u, w, a2, b2, lb2)
            )
            if g != g:
                return np.nan
            if g == -np.inf:
                continue
            if g > m:
                s = s * math.exp(m - g) + 1.0
                m = g
            else:
                s += math.exp(g - m)
    if s == 0.0:
        return -np.inf
    return m + math.log(s)


@njit(cache=True, error_model="numpy")
def _log_quad_pieces(a1, b1, lb1, a2, b2, lb2, pts, panels, xs, lw):
    m = -np.inf
    s = 0.0
    for i in range(pts.shape[0] - 1):
        g = _log_quad(a1, b1, lb1, a2, b2, lb2, pts[i], pts[i + 1], panels, xs, lw)
        if g != g:
            return np.nan
        if g == -np.inf:
            continue
        if g > m:
            s = s * math.exp(m - g) + 1.0
            m = g
        else:
            s += math.exp(g - m)
    if s == 0.0:
        return -np.inf
    return m + math.log(s)


@njit(cache=True, error_model="numpy")
def _log_exceed(a1, b1, lb1, a2, b2, lb2, xs, lw, tol, max_level):
    """Return (log Pr(U > V), status)."""
    pts = _breakpoints(a1, b1, a2, b2)
    prev = _log_quad_pieces(a1, b1, lb1, a2, b2, lb2, pts, 1, xs, lw)
    if prev != prev:
        return prev, _NAN
    panels = 1
    cur = prev
    for _ in range(max_level):
        panels *= 2
        cur = _log_quad_pieces(a1, b1, lb1, a2, b2, lb2, pts, panels, xs, lw)
        if cur != cur:
            return cur, _NAN
        if cur == -np.inf and prev == -np.inf:
            return cur, _OK
        if abs(cur - prev) <= tol:
            return cur, _OK
        prev = cur
    return cur, _NOT_CONVERGED


@njit(cache=True, error_model="numpy")
def _log_exceed_pair(a1, b1, lb1, a2, b2, lb2, xs, lw, tol, max_level):
    """Return (log Pr(U > V), log Pr(U < V), status).

    Only the smaller probability is integrated; the other follows by
    complement.  The choice of side depends on the unordered pair of
    distributions only, so swapping the arguments swaps the outputs exactly.
    """
    mu1 = a1 / (a1 + b1)
    mu2 = a2 / (a2 + b2)
    if mu1 < mu2:
        first = True
    elif mu1 > mu2:
        first = False
    elif a1 < a2 or (a1 == a2 and b1 < b2):
        first = True
    elif a1 == a2 and b1 == b2:
        return LOG_HALF, LOG_HALF, _OK
    else:
        first = False
    if first:
        small, status = _log_exceed(a1, b1, lb1, a2, b2, lb2, xs, lw, tol, max_level)
    else:
        small, status = _log_exceed(a2, b2, lb2, a1, b1, lb1, xs, lw, tol, max_level)
    # the integrated side is the one with the smaller mean, never close to 1
    if small > 0.0:
        small = 0.0
    large = math.log1p(-math.exp(small)) if small < 0.0 else LOG_TINY
    if first:
        return small, large, status
    return large, small, status


@njit(parallel=True, cache=True, error_model="numpy")
def _log_exceed_pairs_many(a1, b1, lb1, a2, b2, lb2, xs, lw, tol, max_level, out_gt, out_lt, status):
    for i in prange(a1.shape[0]):
        gt, lt, st = _log_exceed_pair(a1[i], b1[i], lb1[i], a2[i], b2[i], lb2[i], xs, lw, tol, max_level)
        out_gt[i] = gt
        out_lt[i] = lt
        status[i] = st


def log_beta_exceedance(a1, b1, a2, b2, cfg=None):
    """``ln Pr(U > V)`` for independent ``U ~ Beta(a1, b1)``, ``V ~ Beta(a2, b2)``."""
    _check_positive(a1=a1, b1=b1, a2=a2, b2=b2)
    cfg = cfg or QuadratureConfig()
    xs, lw = cfg.rule()
    val, _, status = _log_exceed_pair(
        float(a1), float(b1), float(special.betaln(a1, b1)),
        float(a2), float(b2), float(special.betaln(a2, b2)),
        xs, lw, cfg.rel_tolerance, cfg.refinement_limit,
    )
    if status == _NAN:
        raise ConvergenceError("incomplete beta continued fraction did not converge", estimate=None)
    if status == _NOT_CONVERGED:
        raise ConvergenceError(
            f"exceedance quadrature did not converge within {cfg.refinement_limit} refinements",
            estimate=float(min(1.0, math.exp(val))),
        )
    return float(min(val, 0.0))


def beta_exceedance(a1, b1, a2, b2, cfg=None):
    """Pr(U > V) for independent ``U ~ Beta(a1, b1)`` and ``V ~ Beta(a2, b2)``.

    Computed as the integral of ``I_u(a2, b2)`` against the density of U.
    """
    return float(min(1.0, max(0.0, math.exp(log_beta_exceedance(a1, b1, a2, b2, cfg)))))


def log_exceedance_pairs(a1, b1, a2, b2, cfg=None):
    """Vectorized ``(ln Pr(U > V), ln Pr(U < V))`` over parameter arrays.

    Each entry is independent, so the result does not depend on the number
    of threads.  Both columns are exact logs, with no floor: tail
    probabilities far below the double range stay finite and accurate.
    """
    cfg = cfg or QuadratureConfig()
    arrs = [np.ascontiguousarray(np.asarray(v, dtype=float).ravel()) for v in (a1, b1, a2, b2)]
    n = arrs[0].shape[0]
    if any(v.shape[0] != n for v in arrs):
        raise DomainError("parameter arrays must have equal length")
    for v in arrs:
        if np.any(~np.isfinite(v) | (v <= 0)):
            raise DomainError("Beta parameters must be positive and finite")
    a1, b1, a2, b2 = arrs
    xs, lw = cfg.rule()
    out_gt = np.empty(n)
    out_lt = np.empty(n)
    status = np.zeros(n, dtype=np.int8)
    if n:
        _log_exceed_pairs_many(
            a1, b1, special.betaln(a1, b1), a2, b2, special.betaln(a2, b2),
            xs, lw, cfg.rel_tolerance, cfg.refinement_limit, out_gt, out_lt, status,
        )
    bad = np.flatnonzero(status != _OK)
    if bad.size:
        i = int(bad[0])
        raise ConvergenceError(
            f"exceedance quadrature failed at entry {i} "
            f"(a1={a1[i]}, b1={b1[i]}, a2={a2[i]}, b2={b2[i]})",
            estimate=float(math.exp(out_gt[i])) if np.isfinite(out_gt[i]) else None,
        )
    return out_gt, out_lt


def log_sum_exp(values):
    """``ln sum(exp(values))`` without overflow or underflow."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DomainError("log_sum_exp of an empty array")
    if np.any(np.isnan(v)) or np.any(v == np.inf):
        raise DomainError("log_sum_exp entries must not be NaN or +inf")
    m = v.max()
    if m == -np.inf:
        return -np.inf
    return float(m + np.log(np.sum(np.exp(v - m))))
