"""Discretized coefficients and the finite primal/dual LP pair they define."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .coeff import CLPInstance
from .errors import DataError
from .mesh import Partition


@dataclass(frozen=True)
class DiscreteLPData:
    """Interval infima/suprema of the coefficients on a partition.

    Shapes: ``delta`` (N,), ``a`` (N, q), ``c`` (N, p), ``B`` (N, p, q) and
    ``K`` (N, N, p, q). Only the strict lower block triangle ``K[u, v]``,
    v < u, is filled; other entries stay zero and are never read.
    """

    delta: np.ndarray
    a: np.ndarray
    c: np.ndarray
    B: np.ndarray
    K: np.ndarray

    @property
    def N(self) -> int:
        return self.delta.shape[0]

    @property
    def p(self) -> int:
        return self.c.shape[1]

    @property
    def q(self) -> int:
        return self.a.shape[1]

    def perturbed(self, c_shift: float = 0.0, a_shift: float = 0.0) -> "DiscreteLPData":
        """Data of the perturbed problems: c + c_shift and a - a_shift.

        Constant shifts commute with interval inf/sup, so this equals
        discretizing the shifted coefficients.
        """
        return replace(self, c=self.c + c_shift, a=self.a - a_shift)


def discretize(inst: CLPInstance, part: Partition) -> DiscreteLPData:
    N, p, q = part.N, inst.p, inst.q
    a = np.zeros((N, q))
    c = np.zeros((N, p))
    B = np.zeros((N, p, q))
    K = np.zeros((N, N, p, q))
    for u in range(N):
        lo, hi = part.interval(u)
        for j in range(q):
            a[u, j] = inst.a[j].inf_on(lo, hi)
        for i in range(p):
            c[u, i] = inst.c[i].inf_on(lo, hi)
            for j in range(q):
                B[u, i, j] = inst.B[i][j].sup_on(lo, hi)
    for u in range(1, N):
        for v in range(u):
            rect = (*part.interval(u), *part.interval(v))
            for i in range(p):
                for j in range(q):
                    K[u, v, i, j] = inst.K[i][j].inf_on(*rect)
    return DiscreteLPData(part.widths, a, c, B, K)


@dataclass(frozen=True)
class FiniteLP:
    """``sense`` cost'x subject to A x (<= | >=) b, x >= 0.

    ``labels[k]`` is the (block u, component) pair of flat variable k; the
    ordering is block-major.
    """

    sense: str
    cost: np.ndarray
    A: np.ndarray
    b: np.ndarray
    relation: str
    labels: Optional[tuple[tuple[int, int], ...]] = None

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise DataError(f"unknown sense {self.sense!r}")
        if self.relation not in ("<=", ">="):
            raise DataError(f"unknown relation {self.relation!r}")
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        cost = np.asarray(self.cost, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape != (b.size, cost.size):
            raise DataError(f"constraint matrix {A.shape} does not match b ({b.size}) and cost ({cost.size})")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(cost))):
            raise DataError("LP data must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "b", b)

    @property
    def n_vars(self) -> int:
        return self.cost.size

    @property
    def n_cons(self) -> int:
        return self.b.size

    def objective(self, x) -> float:
        return float(self.cost @ np.asarray(x, dtype=float))

    def violation(self, x) -> float:
        """Largest constraint or sign violation of x (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        slack = self.A @ x - self.b
        if self.relation == ">=":
            slack = -slack
        return float(max(np.max(slack, initial=0.0), np.max(-x, initial=0.0), 0.0))

    def to_dict(self) -> dict:
        rows, cols = np.nonzero(self.A)
        return {
            "sense": self.sense,
            "relation": self.relation,
            "n_vars": self.n_vars,
            "n_cons": self.n_cons,
            "cost": self.cost.tolist(),
            "rhs": self.b.tolist(),
            "triplets": [[int(r), int(c), float(self.A[r, c])] for r, c in zip(rows, cols)],
            "labels": [list(x) for x in self.labels] if self.labels else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteLP":
        A = np.zeros((d["n_cons"], d["n_vars"]))
        for r, c, v in d["triplets"]:
            A[r, c] = v
        labels = tuple(tuple(x) for x in d["labels"]) if d.get("labels") else None
        return cls(d["sense"], np.array(d["cost"]), A, np.array(d["rhs"]), d["relation"], labels)

    @classmethod
    def from_json(cls, text: str) -> "FiniteLP":
        return cls.from_dict(json.loads(text))


def assemble_primal(D: DiscreteLPData) -> FiniteLP:
    """max sum_u delta_u a_u'z_u  s.t.  B_u z_u - sum_{v<u} delta_v K_uv z_v <= c_u."""
    N, p, q = D.N, D.p, D.q
    A = np.zeros((N * p, N * q))
    for u in range(N):
        A[u * p : (u + 1) * p, u * q : (u + 1) * q] = D.B[u]
        for v in range(u):
            A[u * p : (u + 1) * p, v * q : (v + 1) * q] = -D.delta[v] * D.K[u, v]
    cost = (D.delta[:, None] * D.a).ravel()
    labels = tuple((u, j) for u in range(N) for j in range(q))
    return FiniteLP("max", cost, A, D.c.ravel(), "<=", labels)


def assemble_dual(D: DiscreteLPData) -> FiniteLP:
    """min sum_u delta_u c_u'w_u  s.t.  B_u'w_u - sum_{v>u} delta_v K_vu'w_v >= a_u."""
    N, p, q = D.N, D.p, D.q
    A = np.zeros((N * q, N * p))
    for u in range(N):
        A[u * q : (u + 1) * q, u * p : (u + 1) * p] = D.B[u].T
        for v in range(u + 1, N):
            A[u * q : (u + 1) * q, v * p : (v + 1) * p] = -D.delta[v] * D.K[v, u].T
    cost = (D.delta[:, None] * D.c).ravel()
    labels = tuple((u, i) for u in range(N) for i in range(p))
    return FiniteLP("min", cost, A, D.a.ravel(), ">=", labels)


def blocks(x, N: int) -> np.ndarray:
    """Reshape a flat block-major vector into (N, dim)."""
    x = np.asarray(x, dtype=float)
    return x.reshape(N, -1)


def rescale_dual(w_hat, D: DiscreteLPData) -> np.ndarray:
    """Unscaled multipliers (N, p) -> dual blocks w_u = w_hat_u / delta_u."""
    return blocks(w_hat, D.N) / D.delta[:, None]


def unscale_dual(w, D: DiscreteLPData) -> np.ndarray:
    return blocks(w, D.N) * D.delta[:, None]


def unscaled_dual_objective(w_hat, D: DiscreteLPData) -> float:
    """Objective sum_u c_u' w_hat_u of the dual written in unscaled variables."""
    return float(np.sum(D.c * blocks(w_hat, D.N)))
