"""Operators on R^d, comparison functions, and contractive-condition checkers.

Every operator carries the norm its declared constants refer to; all distances
measured on behalf of an operator go through :meth:`Operator.dist`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

DEFAULT_TOL = 1e-10
REL_GUARD = 1e-12
MAX_BOUND_POWER = 60


class OperatorError(ValueError):
    """Raised for invalid operator input (dimension, finiteness, constants)."""


class NormKind(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    SUP = "sup"
    L1 = "l1"


_NORM_ORD = {NormKind.EUCLIDEAN: 2, NormKind.SUP: np.inf, NormKind.L1: 1}


def norm(v: np.ndarray, kind: NormKind | str = NormKind.EUCLIDEAN) -> float:
    v = np.asarray(v, dtype=np.float64)
    if kind is NormKind.EUCLIDEAN or kind == "euclidean":
        return math.sqrt(float(np.dot(v, v)))
    return float(np.linalg.norm(v, ord=_NORM_ORD[NormKind(kind)]))


def as_vector(x, dim: Optional[int] = None) -> np.ndarray:
    """Coerce ``x`` to a finite 1-d float64 array, optionally of length ``dim``."""
    v = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if v.ndim != 1:
        raise OperatorError(f"vector must be 1-d, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise OperatorError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise OperatorError("vector has non-finite coordinates")
    return v


class PhiKind(str, enum.Enum):
    ZERO = "zero"
    LINEAR = "linear"
    SATURATING = "saturating"


@dataclass(frozen=True)
class PhiFunction:
    """Comparison function for the contractive-like condition.

    ``zero``: u -> 0; ``linear``: u -> c*u; ``saturating``: u -> c*u/(1+u).
    """

    kind: PhiKind = PhiKind.ZERO
    c: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PhiKind(self.kind))
        if not math.isfinite(self.c) or self.c < 0:
            raise OperatorError(f"phi parameter must be finite and >= 0, got {self.c}")

    @classmethod
    def zero(cls) -> "PhiFunction":
        return cls(PhiKind.ZERO, 0.0)

    @classmethod
    def linear(cls, c: float) -> "PhiFunction":
        return cls(PhiKind.LINEAR, float(c))

    @classmethod
    def saturating(cls, c: float) -> "PhiFunction":
        return cls(PhiKind.SATURATING, float(c))

    def __call__(self, u: float) -> float:
        if self.kind is PhiKind.ZERO:
            return 0.0
        if self.kind is PhiKind.LINEAR:
            return self.c * u
        return self.c * u / (1.0 + u)

    def iterate(self, j: int, u: float) -> float:
        """j-fold composition phi(phi(...phi(u)))."""
        for _ in range(j):
            u = self(u)
        return u

    def describe(self) -> str:
        if self.kind is PhiKind.ZERO:
            return "zero"
        return f"{self.kind.value}({self.c:g})"

    def check_axioms(self, n_samples: int = 1000, seed: int = 0, tol: float = 1e-12):
        """Sample the comparison-function axioms.

        Returns ``(violations, warnings)``; each entry is ``(axiom, args)``.
        Scaling failures with factor L < 1 are warnings, not violations.
        """
        rng = np.random.default_rng(seed)
        violations: list[tuple[str, tuple]] = []
        warnings: list[tuple[str, tuple]] = []
        if self(0.0) != 0.0:
            violations.append(("phi(0)=0", (0.0,)))
        us = rng.uniform(0.0, 100.0, size=(n_samples, 2))
        Ls = rng.uniform(0.0, 10.0, size=n_samples)
        for (u, v), L in zip(us, Ls):
            lo, hi = min(u, v), max(u, v)
            if self(lo) > self(hi) + tol:
                violations.append(("monotone", (lo, hi)))
            if self(u + v) > self(u) + self(v) + tol:
                violations.append(("subadditive", (u, v)))
            if self(L * u) > L * self(u) + tol:
                (violations if L >= 1.0 else warnings).append(("scaling", (L, u)))
        return violations, warnings


class Condition(str, enum.Enum):
    BANACH = "banach_1_6"
    CIRIC_MAX = "ciric_1_8"
    CIRIC_MAX_AVG = "ciric_1_9"
    OSILIKE = "osilike_1_10"
    IMORU_OLATINWO = "imoru_olatinwo_1_11"


@dataclass(frozen=True, eq=False)
class Operator:
    """A self-map of R^d with declared contractive constants.

    ``contract_class`` is None for maps that claim no contractive class (used
    as counterexamples); their ``contract_a`` is then nominal.
    """

    map: Callable[[np.ndarray], np.ndarray]
    dimension: int
    contract_a: float = 0.0
    contract_L: float = 0.0
    phi: PhiFunction = field(default_factory=PhiFunction.zero)
    fixed_point: Optional[np.ndarray] = None
    contract_class: Optional[Condition] = Condition.IMORU_OLATINWO
    norm: NormKind = NormKind.EUCLIDEAN
    name: str = ""

    def __post_init__(self):
        if self.dimension < 1:
            raise OperatorError("dimension must be >= 1")
        if not 0.0 <= self.contract_a < 1.0:
            raise OperatorError(f"contract_a must lie in [0, 1), got {self.contract_a}")
        if self.contract_L < 0:
            raise OperatorError(f"contract_L must be >= 0, got {self.contract_L}")
        object.__setattr__(self, "norm", NormKind(self.norm))
        if self.contract_class is not None:
            object.__setattr__(self, "contract_class", Condition(self.contract_class))
        if self.fixed_point is not None:
            q = as_vector(self.fixed_point, self.dimension)
            q.setflags(write=False)
            object.__setattr__(self, "fixed_point", q)
            res = self.dist(self(q), q)
            if res > 1e-12 * (1.0 + self.size(q)):
                raise OperatorError(f"declared fixed point is not fixed: |Tq - q| = {res:.3e}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dimension,):
            raise OperatorError(f"expected a vector of dimension {self.dimension}, got shape {x.shape}")
        return np.asarray(self.map(x), dtype=np.float64)

    def size(self, v: np.ndarray) -> float:
        return norm(v, self.norm)

    def dist(self, x: np.ndarray, y: np.ndarray) -> float:
        return norm(np.subtract(x, y), self.norm)

    def with_constants(self, *, contract_a=None, contract_L=None, phi=None, contract_class=None):
        """Copy of this operator with some declared constants replaced."""
        return Operator(
            map=self.map,
            dimension=self.dimension,
            contract_a=self.contract_a if contract_a is None else contract_a,
            contract_L=self.contract_L if contract_L is None else contract_L,
            phi=self.phi if phi is None else phi,
            fixed_point=self.fixed_point,
            contract_class=self.contract_class if contract_class is None else contract_class,
            norm=self.norm,
            name=self.name,
        )


def apply_power(T: Operator, i: int, x) -> np.ndarray:
    """Apply ``T`` to ``x`` ``i`` times, left to right."""
    if i < 0:
        raise OperatorError(f"power must be >= 0, got {i}")
    v = as_vector(x, T.dimension)
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, i + 1):
            v = T(v)
            if v.shape != (T.dimension,):
                raise OperatorError(f"map changed dimension at step {step}: {v.shape}")
            if not np.all(np.isfinite(v)):
                raise OperatorError(f"non-finite value at step {step} of T^{i}")
    return v


@dataclass(frozen=True)
class Violation:
    x: np.ndarray
    y: np.ndarray
    lhs: float
    rhs: float


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    samples_tested: int
    violations: tuple[Violation, ...] = ()

    @property
    def satisfied(self) -> bool:
        return not self.violations

    def worst(self) -> Optional[Violation]:
        if not self.violations:
            return None
        return max(self.violations, key=lambda v: v.lhs - v.rhs)


class UniformSampler:
    """Point pairs drawn uniformly from the cube [-radius, radius]^dim."""

    def __init__(self, dim: int, radius: float = 10.0, seed: int = 0):
        self.dim = dim
        self.radius = radius
        self.seed = seed

    def pairs(self, n: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        rng = np.random.default_rng(self.seed)
        pts = rng.uniform(-self.radius, self.radius, size=(n, 2, self.dim))
        for x, y in pts:
            yield x, y


def _exceeds(lhs: float, rhs: float, tol: float) -> bool:
    return lhs > rhs * (1.0 + REL_GUARD) + tol


def _condition_sides(T: Operator, cond: Condition, x, y, Tx, Ty) -> tuple[float, float]:
    d = T.dist
    lhs = d(Tx, Ty)
    a = T.contract_a
    if cond is Condition.BANACH:
        return lhs, a * d(x, y)
    if cond is Condition.CIRIC_MAX:
        return lhs, a * max(d(x, y), d(x, Ty), d(y, Tx))
    if cond is Condition.CIRIC_MAX_AVG:
        return lhs, a * max(d(x, y), (d(x, Tx) + d(y, Ty)) / 2, d(x, Ty), d(y, Tx))
    if cond is Condition.OSILIKE:
        return lhs, T.contract_L * d(x, Tx) + a * d(x, y)
    return lhs, T.phi(d(x, Tx)) + a * d(x, y)


_ASYMMETRIC = {Condition.OSILIKE, Condition.IMORU_OLATINWO}


def check_condition(
    T: Operator,
    condition: Condition | str,
    sampler: Optional[UniformSampler] = None,
    n_samples: int = 1000,
    tol: float = DEFAULT_TOL,
) -> ConditionReport:
    """Test one contractive inequality on sampled point pairs using T's constants."""
    try:
        cond = Condition(condition)
    except ValueError:
        raise OperatorError(f"unknown condition {condition!r}") from None
    if n_samples < 1:
        raise OperatorError("n_samples must be >= 1")
    sampler = sampler or UniformSampler(T.dimension)
    violations = []
    for x, y in sampler.pairs(n_samples):
        x = as_vector(x, T.dimension)
        y = as_vector(y, T.dimension)
        Tx, Ty = T(x), T(y)
        orders = [(x, y, Tx, Ty), (y, x, Ty, Tx)] if cond in _ASYMMETRIC else [(x, y, Tx, Ty)]
        for u, v, Tu, Tv in orders:
            lhs, rhs = _condition_sides(T, cond, u, v, Tu, Tv)
            if _exceeds(lhs, rhs, tol):
                violations.append(Violation(u, v, lhs, rhs))
    return ConditionReport(cond.value, n_samples, tuple(violations))


_BINOM = [[math.comb(i, j) for j in range(i + 1)] for i in range(MAX_BOUND_POWER + 1)]


def _iterate_bound_terms(a: float, phi: PhiFunction, u: float, d: float, i_max: int) -> list[float]:
    # bounds for i = 0..i_max given u = |x - Tx| and d = |x - y|
    if phi.kind is PhiKind.ZERO:
        return [a**i * d for i in range(i_max + 1)]
    phis = [u]
    for _ in range(i_max):
        phis.append(phi(phis[-1]))
    return [
        math.fsum(_BINOM[i][j] * a ** (i - j) * phis[j] for j in range(1, i + 1)) + a**i * d
        for i in range(i_max + 1)
    ]


def lemma2_bound(T: Operator, x, y, i: int) -> float:
    """Upper bound on |T^i x - T^i y| for an operator of the contractive-like class.

    sum_{j=1..i} C(i, j) a^(i-j) phi^j(|x - Tx|) + a^i |x - y|, with phi^j the
    j-fold composition of phi.
    """
    if i < 0:
        raise OperatorError(f"power must be >= 0, got {i}")
    if i > MAX_BOUND_POWER:
        raise OperatorError(f"power {i} exceeds cap {MAX_BOUND_POWER} (binomial overflow)")
    x = as_vector(x, T.dimension)
    y = as_vector(y, T.dimension)
    return _iterate_bound_terms(T.contract_a, T.phi, T.dist(x, T(x)), T.dist(x, y), i)[i]


def verify_lemma2(
    T: Operator,
    sampler: Optional[UniformSampler] = None,
    n_samples: int = 1000,
    i_max: int = 10,
    tol: float = DEFAULT_TOL,
) -> ConditionReport:
    """Check |T^i x - T^i y| <= lemma2_bound(T, x, y, i) for i in 0..i_max."""
    if i_max > MAX_BOUND_POWER:
        raise OperatorError(f"power {i_max} exceeds cap {MAX_BOUND_POWER} (binomial overflow)")
    sampler = sampler or UniformSampler(T.dimension)
    violations = []
    for x, y in sampler.pairs(n_samples):
        x = as_vector(x, T.dimension)
        y = as_vector(y, T.dimension)
        Tx = T(x)
        bounds = _iterate_bound_terms(T.contract_a, T.phi, T.dist(x, Tx), T.dist(x, y), i_max)
        Tix, Tiy = x, y
        for i in range(i_max + 1):
            if i > 0:
                Tix, Tiy = (Tx, T(Tiy)) if i == 1 else (T(Tix), T(Tiy))
            lhs = T.dist(Tix, Tiy)
            if _exceeds(lhs, bounds[i], tol):
                violations.append(Violation(x, y, lhs, bounds[i]))
    return ConditionReport("iterate_bound", n_samples, tuple(violations))


def fixed_point_candidates(T: Operator, candidates: Sequence, tol: float = 1e-10) -> list[np.ndarray]:
    """Return the candidates that are fixed points of T.

    An operator of a contractive class has at most one fixed point, so two
    distinct fixed candidates mean its declared class is wrong.
    """
    fixed = []
    for c in candidates:
        v = as_vector(c, T.dimension)
        if T.dist(T(v), v) <= tol:
            if any(T.dist(v, f) > tol for f in fixed) and T.contract_class is not None:
                raise OperatorError(
                    f"operator {T.name or '<anon>'} declares class {T.contract_class.value} "
                    "but has two distinct fixed points (uniqueness violated)"
                )
            fixed.append(v)
    return fixed
