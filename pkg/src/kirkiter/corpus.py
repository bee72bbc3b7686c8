"""Named operator corpus addressable by string id."""

from __future__ import annotations

import math

import numpy as np

from .operators import Condition, NormKind, Operator, OperatorError, PhiFunction

# Classes whose members satisfy the contractive-like condition with the
# induced comparison function (Banach: phi = 0; Osilike: phi(u) = L*u).
CONTRACTIVE_LIKE = {Condition.BANACH, Condition.OSILIKE, Condition.IMORU_OLATINWO}


def _picard_fixed_point(f, x0, iters=400):
    x = np.asarray(x0, dtype=np.float64)
    for _ in range(iters):
        x = f(x)
    return x


def _jump(x):
    # discontinuous at 1, so not Banach; the Osilike bound needs L >= 2 * jump
    return np.where(x >= 1.0, x / 2 - 0.5, x / 2)


def _rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _build():
    ops = []

    ops.append(Operator(lambda x: x / 2, 1, 0.5, fixed_point=[0.0],
                        contract_class=Condition.BANACH, name="halving-1d"))
    ops.append(Operator(lambda x: (x + 1) / 2, 1, 0.5, fixed_point=[1.0],
                        contract_class=Condition.BANACH, name="affine-1d-half"))

    A = np.array([[0.3, 0.1], [0.0, 0.2]])
    b = np.array([1.0, 1.0])
    # spectral norm of A is ~0.3256
    ops.append(Operator(lambda x: A @ x + b, 2, 0.33, fixed_point=np.linalg.solve(np.eye(2) - A, b),
                        contract_class=Condition.BANACH, name="affine-2d-a03"))

    R = 0.7 * _rotation(math.pi / 5)
    br = np.array([1.0, 0.0])
    ops.append(Operator(lambda x: R @ x + br, 2, 0.7, fixed_point=np.linalg.solve(np.eye(2) - R, br),
                        contract_class=Condition.BANACH, name="rotation-2d"))

    def trig(x):
        return np.array([0.3 * np.sin(x[1]) + 1.0, 0.3 * np.cos(x[0])])

    ops.append(Operator(trig, 2, 0.3, fixed_point=_picard_fixed_point(trig, [0.0, 0.0]),
                        contract_class=Condition.BANACH, name="trig-2d"))

    def half_cos(x):
        return 0.5 * np.cos(x)

    ops.append(Operator(half_cos, 1, 0.5, fixed_point=_picard_fixed_point(half_cos, [0.0]),
                        contract_class=Condition.BANACH, name="cosine-1d"))

    def arctan(x):
        return 0.8 * np.arctan(x) + 0.5

    ops.append(Operator(arctan, 1, 0.8, fixed_point=_picard_fixed_point(arctan, [0.0], iters=1000),
                        contract_class=Condition.BANACH, name="arctan-1d"))

    b3 = np.array([1.0, -2.0, 0.5])
    ops.append(Operator(lambda x: 0.6 * x + b3, 3, 0.6, fixed_point=b3 / 0.4,
                        contract_class=Condition.BANACH, name="scaled-3d"))

    ops.append(Operator(lambda x: 0.5 * np.maximum(x, np.roll(x, 1)) + 1.0, 3, 0.5,
                        fixed_point=np.full(3, 2.0), contract_class=Condition.BANACH,
                        norm=NormKind.SUP, name="maxshift-3d"))

    ops.append(Operator(_jump, 1, 0.5, contract_L=1.0, phi=PhiFunction.linear(1.0),
                        fixed_point=[0.0], contract_class=Condition.OSILIKE, name="jump-1d"))
    ops.append(Operator(_jump, 1, 0.5, phi=PhiFunction.saturating(1.6), fixed_point=[0.0],
                        contract_class=Condition.IMORU_OLATINWO, name="jump-1d-sat"))

    # counterexample: no contractive class, constants are nominal
    ops.append(Operator(lambda x: 2 * x, 1, 0.0, fixed_point=[0.0], contract_class=None,
                        name="doubling-1d"))
    return {op.name: op for op in ops}


CORPUS: dict[str, Operator] = _build()


def get_operator(op_id: str) -> Operator:
    try:
        return CORPUS[op_id]
    except KeyError:
        raise OperatorError(
            f"unknown operator id {op_id!r}; known: {', '.join(sorted(CORPUS))}"
        ) from None


def is_contractive_like(T: Operator) -> bool:
    return T.contract_class in CONTRACTIVE_LIKE


def contractive_like_ids(with_fixed_point: bool = True) -> list[str]:
    return [
        k for k, T in CORPUS.items()
        if is_contractive_like(T) and (T.fixed_point is not None or not with_fixed_point)
    ]


def corpus_table() -> list[dict]:
    """Machine-readable listing: id, dimension, class, a, L, phi, q, norm."""
    rows = []
    for k, T in CORPUS.items():
        q = "" if T.fixed_point is None else " ".join(repr(float(c)) for c in T.fixed_point)
        rows.append({
            "id": k,
            "dimension": T.dimension,
            "class": T.contract_class.value if T.contract_class else "none",
            "a": T.contract_a,
            "L": T.contract_L,
            "phi": T.phi.describe(),
            "q": q,
            "norm": T.norm.value,
        })
    return rows
