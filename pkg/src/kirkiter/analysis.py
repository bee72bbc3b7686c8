"""Contraction factor sigma, recursion envelopes, perturbed-Picard bound, rate fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .operators import Operator
from .schemes import Family, IterationTrace, SchemeConfig


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class SigmaBreakdown:
    """sigma with its additive terms (nested families) or level factors (SP-shaped families)."""

    sigma: float
    terms: tuple[float, ...]
    inner_sums: tuple[float, ...]
    family: Family

    @property
    def contracts(self) -> bool:
        return 0.0 <= self.sigma < 1.0


def _powered_sum(weights: Sequence[float], a: float, start: int) -> float:
    return math.fsum(w * a**i for i, w in enumerate(weights) if i >= start)


def sigma(cfg: SchemeConfig, a: float, n: int = 0) -> SigmaBreakdown:
    """Per-step contraction factor of the configured scheme for constant ``a``.

    Kirk-multistep (and the one-power multistep family through its embedding)::

        alpha_0 + S_0 beta^1_0 + S_0 S_1 beta^2_0 + ... + S_0 ... S_{k-2} * last

    with S_0 = sum_{i>=1} alpha_i a^i, S_p = sum_{i>=1} beta^p_i a^i and
    last = sum_{i>=0} beta^{k-1}_i a^i. Kirk-SP (and the alternative multistep
    family) is the product over levels of sum_{i>=0} w_i a^i.
    """
    if not 0.0 <= a < 1.0:
        raise AnalysisError(f"a must lie in [0, 1), got {a}")
    rows = [r.weights for r in cfg.rows(n)]
    if cfg.family in (Family.KIRK_SP, Family.MULTISTEP_ALT):
        factors = tuple(_powered_sum(r, a, 0) for r in rows)
        value = math.prod(factors)
        return SigmaBreakdown(value, (value,), factors, cfg.family)

    k = cfg.k
    inner = [_powered_sum(rows[p], a, 1) for p in range(k - 1)]
    last = _powered_sum(rows[k - 1], a, 0)
    terms = [rows[0][0]]
    prefix = 1.0
    for m in range(1, k - 1):
        prefix *= inner[m - 1]
        terms.append(prefix * rows[m][0])
    prefix *= inner[k - 2]
    terms.append(prefix * last)
    return SigmaBreakdown(math.fsum(terms), tuple(terms), tuple(inner) + (last,), cfg.family)


def sup_sigma(cfg: SchemeConfig, a: float, n_steps: int) -> float:
    """max of sigma over steps 0..n_steps (constant schedules need only one)."""
    if all(s.mode.value == "constant" for s in (cfg.alpha, *cfg.betas)):
        return sigma(cfg, a, 0).sigma
    return max(sigma(cfg, a, n).sigma for n in range(n_steps + 1))


def verify_sigma_bound(cfg: SchemeConfig, a: float, n_steps: int = 0) -> bool:
    """True iff 0 <= sigma(cfg, a, n) < 1 for every n in 0..n_steps."""
    return all(sigma(cfg, a, n).contracts for n in range(n_steps + 1))


def lemma1_oracle(sigma: float, u0: float, eps: Sequence[float], n_max: Optional[int] = None) -> np.ndarray:
    """Extremal sequence u_{n+1} = sigma*u_n + eps_n, returned as u_0..u_{n_max}."""
    if not 0.0 <= sigma < 1.0:
        raise AnalysisError(f"sigma must lie in [0, 1), got {sigma}")
    eps = np.asarray(eps, dtype=np.float64)
    if n_max is None:
        n_max = len(eps)
    if len(eps) < n_max:
        raise AnalysisError(f"need {n_max} perturbation terms, got {len(eps)}")
    if np.any(eps < 0):
        raise AnalysisError("perturbation terms must be nonnegative")
    u = np.empty(n_max + 1)
    u[0] = u0
    for n in range(n_max):
        u[n + 1] = sigma * u[n] + eps[n]
    return u


def ostrowski_bound(T: Operator, x_trace: IterationTrace, y: Sequence, lam: float) -> np.ndarray:
    """Right-hand side of the perturbed-Picard error bound, one value per n.

    bound_n = d(q, x_{n+1}) + lam^(n+1) d(x_0, y_0) + sum_{i=0..n} lam^(n-i) eps_i,
    eps_i = d(y_{i+1}, T y_i). Compare against d(q, y_{n+1}).
    """
    if not 0.0 <= lam < 1.0:
        raise AnalysisError(f"lambda must lie in [0, 1), got {lam}")
    q = T.fixed_point
    if q is None:
        raise AnalysisError("operator has no known fixed point")
    xs = x_trace.points
    n_terms = min(len(xs), len(y)) - 1
    d0 = T.dist(xs[0], y[0])
    out = np.empty(n_terms)
    acc = 0.0
    for n in range(n_terms):
        acc = lam * acc + T.dist(y[n + 1], T(np.asarray(y[n], dtype=np.float64)))
        out[n] = T.dist(q, xs[n + 1]) + lam ** (n + 1) * d0 + acc
    return out


@dataclass(frozen=True)
class RateEstimate:
    fitted_rate: float
    window: tuple[int, int]
    r_squared: float


def estimate_rate(trace_or_errors, window: Optional[tuple[int, int]] = None) -> RateEstimate:
    """Least-squares fit of log(err_n) against n; the rate is exp(slope).

    The default window skips the first 10% of the run. A zero error inside the
    window truncates it just before that index.
    """
    errs = trace_or_errors.errors if isinstance(trace_or_errors, IterationTrace) else trace_or_errors
    if errs is None:
        raise AnalysisError("trace has no known-q errors")
    errs = np.asarray(errs, dtype=np.float64)
    if window is None:
        window = (len(errs) // 10, len(errs))
    lo, hi = window
    hi = min(hi, len(errs))
    zero = np.flatnonzero(errs[lo:hi] <= 0.0)
    if zero.size:
        hi = lo + int(zero[0])
    if hi - lo < 2:
        raise AnalysisError(f"window {window} has fewer than two positive errors")
    n = np.arange(lo, hi, dtype=np.float64)
    logs = np.log(errs[lo:hi])
    slope, intercept = np.polyfit(n, logs, 1)
    resid = logs - (slope * n + intercept)
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 if np.ptp(logs) == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return RateEstimate(float(math.exp(slope)), (lo, hi), r2)
