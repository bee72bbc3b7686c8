"""TOML experiment documents.

Top-level keys: ``action``, ``operator``, ``x0``, ``tol``, ``max_iter``,
``n_steps``, ``seed``, ``output``, ``a``, ``tol_eps``, ``tol_y``,
``n_samples``, ``i_max``, ``conditions``. Tables: ``[scheme]`` (one scheme),
``[[schemes]]`` (compare), ``[perturbation]`` (stability). See
``docs/config.md`` for one annotated example per action.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .corpus import get_operator
from .operators import Condition, Operator, OperatorError, as_vector
from .schemes import ConfigError, SchemeConfig
from .stability import PerturbationModel

ACTIONS = ("run", "sigma", "stability", "check-operator", "compare")


@dataclass
class ExperimentConfig:
    action: str
    operator_id: str
    operator: Operator
    schemes: list[SchemeConfig] = field(default_factory=list)
    x0: Optional[list[float]] = None
    tol: float = 1e-10
    max_iter: int = 1000
    n_steps: int = 1000
    seed: int = 0
    a: Optional[float] = None
    tol_eps: float = 1e-6
    tol_y: float = 1e-6
    perturbation: Optional[PerturbationModel] = None
    n_samples: int = 10_000
    i_max: int = 10
    conditions: Optional[list[str]] = None
    output_path: Optional[str] = None

    @property
    def scheme(self) -> SchemeConfig:
        return self.schemes[0]


def parse_config(doc: dict, action: Optional[str] = None) -> ExperimentConfig:
    """Validate a decoded document; every failure raises ConfigError naming the invariant."""
    doc = dict(doc)
    action = action or doc.get("action")
    if action not in ACTIONS:
        raise ConfigError(f"ExperimentConfig invariant violated: action must be one of {ACTIONS}, got {action!r}")
    if doc.get("action", action) != action:
        raise ConfigError(
            f"ExperimentConfig invariant violated: document action {doc['action']!r} "
            f"does not match subcommand {action!r}")
    op_id = doc.get("operator")
    if not op_id:
        raise ConfigError("ExperimentConfig invariant violated: 'operator' (corpus id) is required")
    try:
        T = get_operator(op_id)
    except OperatorError as exc:
        raise ConfigError(f"ExperimentConfig invariant violated: {exc}") from None

    schemes: list[SchemeConfig] = []
    if action == "compare":
        docs = doc.get("schemes") or []
        if len(docs) < 2:
            raise ConfigError("ExperimentConfig invariant violated: compare needs at least two [[schemes]]")
        for i, sd in enumerate(docs):
            try:
                schemes.append(SchemeConfig.from_dict(sd))
            except ConfigError as exc:
                raise ConfigError(f"scheme #{i + 1}: {exc}") from None
    elif action != "check-operator":
        if "scheme" not in doc:
            raise ConfigError("ExperimentConfig invariant violated: a [scheme] table is required")
        schemes.append(SchemeConfig.from_dict(doc["scheme"]))

    x0 = doc.get("x0")
    if x0 is not None:
        try:
            x0 = [float(v) for v in as_vector(x0, T.dimension)]
        except OperatorError as exc:
            raise ConfigError(f"ExperimentConfig invariant violated: x0 {exc}") from None
    elif action in ("run", "stability", "compare"):
        raise ConfigError("ExperimentConfig invariant violated: 'x0' is required for this action")

    pert = None
    if "perturbation" in doc:
        pd = dict(doc["perturbation"])
        try:
            pert = PerturbationModel(pd.get("kind", "none"), float(pd.get("c", 0.0)),
                                     float(pd.get("r", 0.0)), int(pd.get("seed", doc.get("seed", 0))))
        except ValueError as exc:
            raise ConfigError(f"PerturbationModel invariant violated: {exc}") from None
    elif action == "stability":
        pert = PerturbationModel.none()

    conditions = doc.get("conditions")
    if conditions is not None:
        for c in conditions:
            try:
                Condition(c)
            except ValueError:
                raise ConfigError(f"ConditionReport invariant violated: unknown condition {c!r}") from None

    cfg = ExperimentConfig(
        action=action,
        operator_id=op_id,
        operator=T,
        schemes=schemes,
        x0=x0,
        tol=float(doc.get("tol", 1e-10)),
        max_iter=int(doc.get("max_iter", 1000)),
        n_steps=int(doc.get("n_steps", 1000)),
        seed=int(doc.get("seed", 0)),
        a=None if doc.get("a") is None else float(doc["a"]),
        tol_eps=float(doc.get("tol_eps", 1e-6)),
        tol_y=float(doc.get("tol_y", 1e-6)),
        perturbation=pert,
        n_samples=int(doc.get("n_samples", 10_000)),
        i_max=int(doc.get("i_max", 10)),
        conditions=conditions,
        output_path=doc.get("output"),
    )
    if cfg.tol <= 0 or cfg.max_iter < 1 or cfg.n_steps < 1:
        raise ConfigError("ExperimentConfig invariant violated: tol > 0, max_iter >= 1, n_steps >= 1 required")
    return cfg


def load_config(path: str | Path, action: Optional[str] = None) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from None
    return parse_config(doc, action)
