"""Perturbed-sequence experiments for stability with respect to T.

A scheme is stable with respect to T when residuals eps_n = |y_{n+1} - f(T, y_n)|
tending to 0 force y_n -> q. Limits are decided numerically by tail means over
the final 10% of steps.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import analysis
from .operators import Operator, as_vector, norm
from .schemes import (
    DIVERGENCE_NORM,
    DivergenceError,
    SchemeConfig,
    StopReason,
    run,
    step,
)


class StabilityError(ValueError):
    pass


class PerturbationKind(str, enum.Enum):
    NONE = "none"
    DECAYING = "decaying"
    PERSISTENT = "persistent"
    RANDOM_DECAYING = "random_decaying"


@dataclass(frozen=True)
class PerturbationModel:
    """delta_n added to each step: c*r^n*e_1, c*e_1, or uniform in [0, c*r^n]^d."""

    kind: PerturbationKind = PerturbationKind.NONE
    c: float = 0.0
    r: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", PerturbationKind(self.kind))
        if self.c < 0:
            raise StabilityError(f"PerturbationModel invariant violated: c must be >= 0, got {self.c}")
        if self.kind in (PerturbationKind.DECAYING, PerturbationKind.RANDOM_DECAYING) and not 0 <= self.r < 1:
            raise StabilityError(f"PerturbationModel invariant violated: r must lie in [0, 1), got {self.r}")

    @classmethod
    def none(cls):
        return cls(PerturbationKind.NONE)

    @classmethod
    def decaying(cls, c: float, r: float):
        return cls(PerturbationKind.DECAYING, c, r)

    @classmethod
    def persistent(cls, c: float):
        return cls(PerturbationKind.PERSISTENT, c)

    @classmethod
    def random_decaying(cls, c: float, r: float, seed: int = 0):
        return cls(PerturbationKind.RANDOM_DECAYING, c, r, seed)

    def deltas(self, n_steps: int, dim: int) -> np.ndarray:
        """All perturbation vectors delta_0..delta_{n_steps-1}, shape (n_steps, dim)."""
        out = np.zeros((n_steps, dim))
        if self.kind is PerturbationKind.NONE:
            return out
        if self.kind is PerturbationKind.RANDOM_DECAYING:
            rng = np.random.default_rng(self.seed)
            scale = self.c * self.r ** np.arange(n_steps)
            return rng.uniform(0.0, 1.0, size=(n_steps, dim)) * scale[:, None]
        if self.kind is PerturbationKind.PERSISTENT:
            out[:, 0] = self.c
        else:
            out[:, 0] = self.c * self.r ** np.arange(n_steps)
        return out

    def bound(self, n: int, T: Operator) -> float:
        """Upper bound on |delta_n| in T's norm."""
        if self.kind is PerturbationKind.NONE:
            return 0.0
        if self.kind is PerturbationKind.PERSISTENT:
            return self.c
        mag = self.c * self.r**n
        if self.kind is PerturbationKind.RANDOM_DECAYING:
            mag *= norm(np.ones(T.dimension), T.norm)
        return mag

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "c": self.c, "r": self.r, "seed": self.seed}


@dataclass
class PerturbedRun:
    points: list[np.ndarray]
    diverged: bool
    seed: int


def perturbed_run(T: Operator, cfg: SchemeConfig, y0, model: PerturbationModel, n_steps: int) -> PerturbedRun:
    """y_{n+1} = step(T, cfg, y_n, n) + delta_n; auxiliary levels are recomputed from y_n."""
    if n_steps < 1:
        raise StabilityError("n_steps must be >= 1")
    y = as_vector(y0, T.dimension)
    deltas = model.deltas(n_steps, T.dimension)
    points = [y]
    diverged = False
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(n_steps):
            try:
                y = step(T, cfg, y, n)
            except DivergenceError:
                diverged = True
                break
            if model.kind is not PerturbationKind.NONE:
                y = y + deltas[n]
            if not np.all(np.isfinite(y)):
                diverged = True
                break
            points.append(y)
            if T.size(y) > DIVERGENCE_NORM:
                diverged = True
                break
    return PerturbedRun(points, diverged, model.seed)


def measure_residuals(T: Operator, cfg: SchemeConfig, y) -> np.ndarray:
    """eps_n = |y_{n+1} - step(T, cfg, y_n, n)| for each consecutive pair."""
    pts = y.points if isinstance(y, PerturbedRun) else list(y)
    if len(pts) < 2:
        raise StabilityError("need at least two points")
    return np.array([
        T.dist(pts[n + 1], step(T, cfg, np.asarray(pts[n], dtype=np.float64), n))
        for n in range(len(pts) - 1)
    ])


class Verdict(str, enum.Enum):
    STABLE_CONSISTENT = "stable_consistent"
    HYPOTHESIS_FAILED = "hypothesis_failed"
    VIOLATION = "VIOLATION"


def tail_mean(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return math.inf
    m = max(1, int(math.ceil(0.1 * values.size)))
    return float(values[-m:].mean())


@dataclass
class StabilityReport:
    eps: np.ndarray
    y_errors: np.ndarray
    eps_tail: float
    y_tail: float
    verdict: Verdict
    converse_violation: bool
    conditional: bool
    sigma: float
    seed: int
    diverged: bool

    def summary(self) -> str:
        return (
            f"verdict={self.verdict.value} eps_tail={self.eps_tail!r} y_tail={self.y_tail!r} "
            f"sigma={self.sigma!r} seed={self.seed} converse_violation={str(self.converse_violation).lower()} "
            f"conditional={str(self.conditional).lower()}"
        )


def envelope_horizon(sig: float, u0: float, model: PerturbationModel, T: Operator,
                     tol: float, cap: int = 200_000) -> int:
    """Steps after which the recursion envelope keeps its final 10% below ``tol``.

    Useful for choosing ``n_steps`` when sigma is close to 1.
    """
    u = u0
    for n in range(cap):
        if u <= tol / 10:
            return min(cap, int(math.ceil(n / 0.9)) + 1)
        u = sig * u + model.bound(n, T)
    return cap


def stability_verdict(
    T: Operator,
    cfg: SchemeConfig,
    y0,
    model: PerturbationModel,
    n_steps: int = 1000,
    tol_eps: float = 1e-6,
    tol_y: float = 1e-6,
    tol_eps_converse: Optional[float] = None,
) -> StabilityReport:
    """Run a perturbed sequence and classify it.

    ``VIOLATION`` means residuals vanished but the sequence missed q.
    ``hypothesis_failed`` means residuals did not vanish, so nothing is claimed.
    The converse direction (y_n -> q implies eps_n -> 0) is flagged separately.
    ``conditional`` is set when the unperturbed run from y0 did not converge.
    """
    q = T.fixed_point
    if q is None:
        raise StabilityError("stability verdict needs an operator with a known fixed point")
    tol_eps_converse = tol_eps if tol_eps_converse is None else tol_eps_converse

    baseline = run(T, cfg, y0, tol=tol_y, max_iter=n_steps)
    conditional = baseline.stop_reason is not StopReason.TOLERANCE_MET

    pr = perturbed_run(T, cfg, y0, model, n_steps)
    eps = measure_residuals(T, cfg, pr) if len(pr.points) > 1 else np.array([])
    y_err = np.array([T.dist(p, q) for p in pr.points])
    eps_tail = tail_mean(eps)
    y_tail = math.inf if pr.diverged else tail_mean(y_err)

    if eps_tail > tol_eps:
        verdict = Verdict.HYPOTHESIS_FAILED
    elif y_tail > tol_y:
        verdict = Verdict.VIOLATION
    else:
        verdict = Verdict.STABLE_CONSISTENT
    converse_violation = y_tail <= tol_y and eps_tail > tol_eps_converse

    try:
        sig = analysis.sup_sigma(cfg, T.contract_a, n_steps)
    except analysis.AnalysisError:
        sig = math.nan
    return StabilityReport(eps, y_err, eps_tail, y_tail, verdict, converse_violation,
                           conditional, sig, model.seed, pr.diverged)
