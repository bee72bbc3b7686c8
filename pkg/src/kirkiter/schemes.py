"""Weight schedules, step functions for the four multistep families, and ``run``.

Structural difference worth keeping in mind: in the Kirk-multistep scheme the
inner levels p = 1..k-2 anchor their zeroth-power term on ``x_n`` while the
powers act on the next level's point; in Kirk-SP every level (including its
zeroth-power term) acts on the previous level's output.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .operators import Operator, as_vector

SIMPLEX_TOL = 1e-12
DIVERGENCE_NORM = 1e12


class ConfigError(ValueError):
    """A scheme configuration violates one of its invariants."""


class DivergenceError(ArithmeticError):
    """A step produced a non-finite point."""


class Family(str, enum.Enum):
    KIRK_MULTISTEP = "kirk_multistep_1_4"
    KIRK_SP = "kirk_sp_1_3"
    MULTISTEP_RS = "multistep_rs_1_1"
    MULTISTEP_ALT = "multistep_alt_1_2"


KIRK_FAMILIES = {Family.KIRK_MULTISTEP, Family.KIRK_SP}


@dataclass(frozen=True)
class WeightRow:
    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "weights", w)
        if not w:
            raise ConfigError("WeightRow invariant violated: row is empty")
        for v in w:
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"WeightRow invariant violated: weight {v!r} outside [0, 1] in {w}")
        total = math.fsum(w)
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ConfigError(
                f"WeightRow simplex invariant violated: weights {w} sum to {total!r}, "
                f"must equal 1 within {SIMPLEX_TOL:g}"
            )

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, i):
        return self.weights[i]

    @classmethod
    def two_point(cls, theta: float) -> "WeightRow":
        """The row (1 - theta, theta) used by the one-power families."""
        return cls((1.0 - theta, theta))


def _rule_decaying_two_point(n: int, theta0: float, power: float = 1.0, floor: float = 0.0):
    theta = max(floor, theta0 / (n + 1) ** power)
    return (1.0 - theta, theta)


def _rule_uniform_tail(n: int, s: int, anchor: float):
    return (anchor,) + ((1.0 - anchor) / s,) * s


GENERATED_RULES = {
    "decaying_two_point": _rule_decaying_two_point,
    "uniform_tail": _rule_uniform_tail,
}


class ScheduleMode(str, enum.Enum):
    CONSTANT = "constant"
    TABULATED = "tabulated"
    GENERATED = "generated"


@dataclass(frozen=True)
class WeightSchedule:
    """Per-step weight rows. Tabulated schedules repeat their last row past the table end."""

    mode: ScheduleMode
    rows: tuple[WeightRow, ...] = ()
    rule: Optional[str] = None
    params: tuple[tuple[str, Any], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "mode", ScheduleMode(self.mode))
        object.__setattr__(self, "rows", tuple(
            r if isinstance(r, WeightRow) else WeightRow(tuple(r)) for r in self.rows))
        if self.mode is ScheduleMode.GENERATED:
            if self.rule not in GENERATED_RULES:
                raise ConfigError(f"WeightSchedule invariant violated: unknown rule {self.rule!r}")
            self.row(0)
        elif not self.rows:
            raise ConfigError("WeightSchedule invariant violated: no rows given")
        elif self.mode is ScheduleMode.CONSTANT and len(self.rows) != 1:
            raise ConfigError("WeightSchedule invariant violated: constant mode takes exactly one row")

    @classmethod
    def constant(cls, row) -> "WeightSchedule":
        return cls(ScheduleMode.CONSTANT, (row if isinstance(row, WeightRow) else WeightRow(tuple(row)),))

    @classmethod
    def tabulated(cls, rows) -> "WeightSchedule":
        return cls(ScheduleMode.TABULATED, tuple(rows))

    @classmethod
    def generated(cls, rule: str, **params) -> "WeightSchedule":
        return cls(ScheduleMode.GENERATED, rule=rule, params=tuple(sorted(params.items())))

    def row(self, n: int) -> WeightRow:
        if self.mode is ScheduleMode.CONSTANT:
            return self.rows[0]
        if self.mode is ScheduleMode.TABULATED:
            return self.rows[min(n, len(self.rows) - 1)]
        return WeightRow(GENERATED_RULES[self.rule](n, **dict(self.params)))

    def row_length(self) -> int:
        return len(self.row(0))

    def to_dict(self) -> dict:
        if self.mode is ScheduleMode.CONSTANT:
            return {"constant": list(self.rows[0].weights)}
        if self.mode is ScheduleMode.TABULATED:
            return {"tabulated": [list(r.weights) for r in self.rows]}
        return {"generated": self.rule, **dict(self.params)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "WeightSchedule":
        d = dict(d)
        if "constant" in d:
            return cls.constant(d["constant"])
        if "tabulated" in d:
            return cls.tabulated(d["tabulated"])
        if "generated" in d:
            rule = d.pop("generated")
            return cls.generated(rule, **d)
        raise ConfigError(f"WeightSchedule invariant violated: need constant/tabulated/generated, got {sorted(d)}")


def as_schedule(spec) -> WeightSchedule:
    """Coerce a schedule, a single row, a list of rows, or a mapping to a schedule."""
    if isinstance(spec, WeightSchedule):
        return spec
    if isinstance(spec, WeightRow):
        return WeightSchedule.constant(spec)
    if isinstance(spec, Mapping):
        return WeightSchedule.from_dict(spec)
    seq = list(spec)
    if seq and isinstance(seq[0], (list, tuple, WeightRow)):
        return WeightSchedule.tabulated(seq)
    return WeightSchedule.constant(seq)


def two_point_schedule(theta) -> WeightSchedule:
    """Schedule of rows (1 - theta_n, theta_n) from a constant or a sequence of thetas."""
    if isinstance(theta, WeightSchedule):
        return theta
    if isinstance(theta, (int, float)):
        return WeightSchedule.constant(WeightRow.two_point(float(theta)))
    return WeightSchedule.tabulated([WeightRow.two_point(float(t)) for t in theta])


@dataclass(frozen=True)
class SchemeConfig:
    """Family, depth, power caps and per-level weight schedules.

    ``alpha`` drives the outermost level (power cap ``powers[0]``); ``betas[p-1]``
    drives level p with power cap ``powers[p]``.
    """

    family: Family
    powers: tuple[int, ...]
    alpha: WeightSchedule
    betas: tuple[WeightSchedule, ...]
    enforce_alpha0_nonzero: bool = True
    label: str = field(default="", compare=False)

    def __post_init__(self):
        try:
            object.__setattr__(self, "family", Family(self.family))
        except ValueError:
            raise ConfigError(f"SchemeConfig invariant violated: unknown family {self.family!r}") from None
        object.__setattr__(self, "powers", tuple(int(s) for s in self.powers))
        object.__setattr__(self, "alpha", as_schedule(self.alpha))
        object.__setattr__(self, "betas", tuple(as_schedule(b) for b in self.betas))
        k = len(self.powers)
        if k < 2:
            raise ConfigError(f"SchemeConfig invariant violated: depth k must be >= 2, got {k}")
        if self.family is Family.KIRK_SP and k != 3:
            raise ConfigError(f"SchemeConfig invariant violated: kirk_sp_1_3 has depth 3, got {k}")
        if any(s < 0 for s in self.powers):
            raise ConfigError(f"SchemeConfig invariant violated: powers must be >= 0, got {self.powers}")
        if any(a < b for a, b in zip(self.powers, self.powers[1:])):
            raise ConfigError(f"SchemeConfig invariant violated: powers must be non-increasing, got {self.powers}")
        if self.family in (Family.MULTISTEP_RS, Family.MULTISTEP_ALT) and set(self.powers) != {1}:
            raise ConfigError(
                f"SchemeConfig invariant violated: {self.family.value} uses unit powers, got {self.powers}")
        if len(self.betas) != k - 1:
            raise ConfigError(
                f"SchemeConfig invariant violated: need k-1 = {k - 1} beta schedules, got {len(self.betas)}")
        for sched in (self.alpha, *self.betas):
            if sched.mode is ScheduleMode.GENERATED:
                self.rows(0)
            else:
                for n in range(len(sched.rows)):
                    self.rows(n)
        if self.family in KIRK_FAMILIES and not self.enforce_alpha0_nonzero:
            warnings.warn(
                "anchor-weight constraint disabled: convergence and stability guarantees do not apply",
                stacklevel=2,
            )

    @property
    def k(self) -> int:
        return len(self.powers)

    def rows(self, n: int) -> list[WeightRow]:
        """Validated rows [alpha, beta^1, ..., beta^(k-1)] for step n."""
        rows = [self.alpha.row(n)] + [b.row(n) for b in self.betas]
        for level, (row, s) in enumerate(zip(rows, self.powers)):
            name = "alpha" if level == 0 else f"beta^{level}"
            if len(row) != s + 1:
                raise ConfigError(
                    f"SchemeConfig invariant violated: {name} row at step {n} has length {len(row)}, "
                    f"power cap s_{level + 1}={s} needs length {s + 1}"
                )
            if self.family in KIRK_FAMILIES and self.enforce_alpha0_nonzero and row[0] <= 0.0:
                raise ConfigError(
                    f"SchemeConfig invariant violated: {name} anchor weight at step {n} is 0 "
                    "(anchor weights must be nonzero; set enforce_alpha0_nonzero=false to allow)"
                )
        return rows

    def to_dict(self) -> dict:
        d = {
            "family": self.family.value,
            "powers": list(self.powers),
            "enforce_alpha0_nonzero": self.enforce_alpha0_nonzero,
            "alpha": self.alpha.to_dict(),
            "betas": [b.to_dict() for b in self.betas],
        }
        if self.label:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "SchemeConfig":
        """Build from a config mapping; a ``name`` key routes through :func:`specialize`."""
        d = dict(d)
        if "name" in d:
            name = d.pop("name")
            label = d.pop("label", name)
            cfg = specialize(name, **d)
            return cfg if not label else _relabel(cfg, label)
        missing = {"family", "powers", "alpha", "betas"} - set(d)
        if missing:
            raise ConfigError(f"SchemeConfig invariant violated: missing keys {sorted(missing)}")
        return cls(
            family=d["family"],
            powers=tuple(d["powers"]),
            alpha=as_schedule(d["alpha"]),
            betas=tuple(as_schedule(b) for b in d["betas"]),
            enforce_alpha0_nonzero=bool(d.get("enforce_alpha0_nonzero", True)),
            label=d.get("label", ""),
        )


def _relabel(cfg: SchemeConfig, label: str) -> SchemeConfig:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return SchemeConfig(cfg.family, cfg.powers, cfg.alpha, cfg.betas, cfg.enforce_alpha0_nonzero, label)


def _combine(T: Operator, row: WeightRow, anchor: np.ndarray, base: np.ndarray) -> np.ndarray:
    # row[0]*anchor + sum_{i>=1} row[i] * T^i(base); powers applied left to right
    acc = row[0] * anchor
    z = base
    for w in row.weights[1:]:
        z = T(z)
        acc = acc + w * z
    return acc


def _finite(v: np.ndarray, n: int) -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise DivergenceError(f"non-finite iterate produced at step {n}")
    return v


def _require(cfg: SchemeConfig, family: Family):
    if cfg.family is not family:
        raise ConfigError(f"step for {family.value} called with a {cfg.family.value} config")


def kirk_multistep_step(T: Operator, cfg: SchemeConfig, x, n: int) -> np.ndarray:
    _require(cfg, Family.KIRK_MULTISTEP)
    x = as_vector(x, T.dimension)
    rows = cfg.rows(n)
    k = cfg.k
    y = _combine(T, rows[k - 1], x, x)
    for p in range(k - 2, 0, -1):
        y = _combine(T, rows[p], x, y)
    return _finite(_combine(T, rows[0], x, y), n)


def kirk_sp_step(T: Operator, cfg: SchemeConfig, x, n: int) -> np.ndarray:
    _require(cfg, Family.KIRK_SP)
    x = as_vector(x, T.dimension)
    alpha, beta1, beta2 = cfg.rows(n)
    y2 = _combine(T, beta2, x, x)
    y1 = _combine(T, beta1, y2, y2)
    return _finite(_combine(T, alpha, y1, y1), n)


def multistep_rs_step(T: Operator, cfg: SchemeConfig, x, n: int) -> np.ndarray:
    _require(cfg, Family.MULTISTEP_RS)
    x = as_vector(x, T.dimension)
    rows = cfg.rows(n)
    y = x
    for p in range(cfg.k - 1, 0, -1):
        y = rows[p][0] * x + rows[p][1] * T(y)
    return _finite(rows[0][0] * x + rows[0][1] * T(y), n)


def multistep_alt_step(T: Operator, cfg: SchemeConfig, x, n: int) -> np.ndarray:
    _require(cfg, Family.MULTISTEP_ALT)
    x = as_vector(x, T.dimension)
    rows = cfg.rows(n)
    y = x
    for p in range(cfg.k - 1, 0, -1):
        y = rows[p][0] * y + rows[p][1] * T(y)
    return _finite(rows[0][0] * y + rows[0][1] * T(y), n)


STEP_FUNCTIONS = {
    Family.KIRK_MULTISTEP: kirk_multistep_step,
    Family.KIRK_SP: kirk_sp_step,
    Family.MULTISTEP_RS: multistep_rs_step,
    Family.MULTISTEP_ALT: multistep_alt_step,
}


def step(T: Operator, cfg: SchemeConfig, x, n: int) -> np.ndarray:
    """One iteration x_n -> x_{n+1} of the configured scheme."""
    return STEP_FUNCTIONS[cfg.family](T, cfg, x, n)


def _random_row(rng: np.random.Generator, s: int, min_anchor: float) -> WeightRow:
    w = rng.dirichlet(np.ones(s + 1))
    w = (1.0 - min_anchor) * w
    w[0] += min_anchor
    w /= math.fsum(w)
    return WeightRow(tuple(np.clip(w, 0.0, 1.0)))


def random_config(
    rng: np.random.Generator,
    family: Family | str = Family.KIRK_MULTISTEP,
    k: Optional[int] = None,
    s1: Optional[int] = None,
    min_anchor: float = 0.05,
) -> SchemeConfig:
    """A random valid Kirk-type config with constant rows and anchor weights >= min_anchor.

    Depth defaults to k in {2..5} (3 for Kirk-SP), s_1 to {1..4}; later caps
    are drawn non-increasing.
    """
    family = Family(family)
    if family not in KIRK_FAMILIES:
        raise ConfigError("random_config builds Kirk-type configs only")
    if k is None:
        k = 3 if family is Family.KIRK_SP else int(rng.integers(2, 6))
    if s1 is None:
        s1 = int(rng.integers(1, 5))
    powers = [s1]
    for _ in range(k - 1):
        powers.append(int(rng.integers(0, powers[-1] + 1)))
    rows = [WeightSchedule.constant(_random_row(rng, s, min_anchor)) for s in powers]
    return SchemeConfig(family, tuple(powers), rows[0], tuple(rows[1:]))


SCHEME_NAMES = (
    "picard", "krasnoselskij", "mann", "ishikawa", "noor", "sp", "thianwan",
    "kirk", "kirk_mann", "kirk_ishikawa", "kirk_noor",
)


def _unit_beta():
    return WeightSchedule.constant((1.0, 0.0))


def specialize(name: str, **params) -> SchemeConfig:
    """Realize a classic scheme as a parameter setting of one of the engines.

    Scalar-sequence parameters (``alpha``, ``beta``, ``gamma``, ``lam``) accept a
    constant, a list of per-step values, or a two-point schedule. Kirk-type
    parameters (``alpha``, ``betas``) accept rows or schedules; the power caps
    follow from the row lengths.
    """
    if name not in SCHEME_NAMES:
        raise ConfigError(f"unknown scheme name {name!r}; known: {', '.join(SCHEME_NAMES)}")
    enforce = params.pop("enforce_alpha0_nonzero", None)
    label = params.pop("label", name)

    def take(key, default=None, required=True):
        if key in params:
            return params.pop(key)
        if required and default is None:
            raise ConfigError(f"scheme {name!r} requires parameter {key!r}")
        return default

    def build(family, powers, alpha, betas, default_enforce=True):
        if params:
            raise ConfigError(f"scheme {name!r} got unexpected parameters {sorted(params)}")
        return SchemeConfig(family, tuple(powers), alpha, tuple(betas),
                            default_enforce if enforce is None else bool(enforce), label)

    KM = Family.KIRK_MULTISTEP
    if name == "picard":
        return build(KM, (1, 1), two_point_schedule(1.0), [_unit_beta()], default_enforce=False)
    if name == "krasnoselskij":
        lam = float(take("lam"))
        return build(KM, (1, 1), two_point_schedule(lam), [_unit_beta()])
    if name == "mann":
        return build(KM, (1, 1), two_point_schedule(take("alpha")), [_unit_beta()])
    if name == "ishikawa":
        return build(KM, (1, 1), two_point_schedule(take("alpha")), [two_point_schedule(take("beta"))])
    if name == "noor":
        return build(KM, (1, 1, 1), two_point_schedule(take("alpha")),
                     [two_point_schedule(take("beta")), two_point_schedule(take("gamma"))])
    if name in ("sp", "thianwan"):
        fam = Family.MULTISTEP_ALT
        inner = [two_point_schedule(take("beta"))]
        if name == "sp":
            inner.append(two_point_schedule(take("gamma")))
        return build(fam, (1,) * (len(inner) + 1), two_point_schedule(take("alpha")), inner,
                     default_enforce=False)

    alpha = as_schedule(take("alpha"))
    s1 = alpha.row_length() - 1
    if name in ("kirk", "kirk_mann"):
        if name == "kirk" and alpha.mode is not ScheduleMode.CONSTANT:
            raise ConfigError("scheme 'kirk' uses a constant alpha row")
        return build(KM, (s1, 0), alpha, [WeightSchedule.constant((1.0,))])
    if name in ("kirk_ishikawa", "kirk_noor"):
        betas = [as_schedule(b) for b in take("betas")]
        want = 1 if name == "kirk_ishikawa" else 2
        if len(betas) != want:
            raise ConfigError(f"scheme {name!r} needs {want} beta schedule(s), got {len(betas)}")
        powers = [s1] + [b.row_length() - 1 for b in betas]
        return build(KM, powers, alpha, betas)
    raise ConfigError(f"unknown scheme name {name!r}; known: {', '.join(SCHEME_NAMES)}")


class StopReason(str, enum.Enum):
    TOLERANCE_MET = "tolerance_met"
    MAX_ITER = "max_iter"
    DIVERGED = "diverged"


class StopMode(str, enum.Enum):
    ERROR = "error"
    DIFFERENCE = "difference"
    NONE = "none"


@dataclass
class IterationTrace:
    points: list[np.ndarray]
    errors: Optional[list[float]]
    stop_reason: StopReason
    iterations: int

    @property
    def final_error(self) -> Optional[float]:
        return self.errors[-1] if self.errors else None


def run(
    T: Operator,
    cfg: SchemeConfig,
    x0,
    tol: float = 1e-10,
    max_iter: int = 1000,
    stop: StopMode | str | None = None,
) -> IterationTrace:
    """Iterate the configured scheme from ``x0``.

    ``stop`` selects the tolerance test: ``error`` (|x_n - q| <= tol, the
    default when q is known), ``difference`` (|x_{n+1} - x_n| <= tol, the
    default otherwise) or ``none`` (always take ``max_iter`` steps).
    Divergence (norm above 1e12 or a non-finite value) always stops the run.
    """
    if tol <= 0:
        raise ConfigError("tol must be > 0")
    if max_iter < 1:
        raise ConfigError("max_iter must be >= 1")
    q = T.fixed_point
    if stop is None:
        stop = StopMode.ERROR if q is not None else StopMode.DIFFERENCE
    stop = StopMode(stop)
    if stop is StopMode.ERROR and q is None:
        raise ConfigError("stop mode 'error' needs an operator with a known fixed point")
    x = as_vector(x0, T.dimension)
    points = [x]
    errors = [T.dist(x, q)] if q is not None else None
    if stop is StopMode.ERROR and errors[0] <= tol:
        return IterationTrace(points, errors, StopReason.TOLERANCE_MET, 0)

    reason = StopReason.MAX_ITER
    n = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while n < max_iter:
            try:
                x_next = step(T, cfg, x, n)
            except DivergenceError:
                reason = StopReason.DIVERGED
                break
            n += 1
            points.append(x_next)
            if errors is not None:
                errors.append(T.dist(x_next, q))
            if T.size(x_next) > DIVERGENCE_NORM:
                reason = StopReason.DIVERGED
                break
            if stop is StopMode.ERROR and errors[-1] <= tol:
                reason = StopReason.TOLERANCE_MET
                break
            if stop is StopMode.DIFFERENCE and T.dist(x_next, x) <= tol:
                reason = StopReason.TOLERANCE_MET
                break
            x = x_next
    return IterationTrace(points, errors, reason, n)
