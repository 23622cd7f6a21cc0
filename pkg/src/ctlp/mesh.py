"""Partitions of [0, T] that contain every coefficient breakpoint."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coeff import BREAK_TOL, CLPInstance
from .errors import ConfigurationError, StructuralError


@dataclass(frozen=True)
class Partition:
    points: tuple[float, ...]
    kappa: float = 2.0

    def __post_init__(self):
        pts = tuple(float(x) for x in self.points)
        if len(pts) < 2 or pts[0] != 0.0:
            raise StructuralError("partition must start at 0 and have at least one interval")
        if any(b <= a for a, b in zip(pts[:-1], pts[1:])):
            raise StructuralError("partition points must be strictly increasing")
        if not self.kappa >= 1:
            raise ConfigurationError(f"kappa must be >= 1, got {self.kappa}")
        object.__setattr__(self, "points", pts)

    @property
    def T(self) -> float:
        return self.points[-1]

    @property
    def N(self) -> int:
        return len(self.points) - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(np.asarray(self.points))

    @property
    def mesh_norm(self) -> float:
        return float(self.widths.max())

    def interval(self, u: int) -> tuple[float, float]:
        """Endpoints of the u-th interval, zero-based."""
        return self.points[u], self.points[u + 1]

    def satisfies_kappa(self) -> bool:
        return self.mesh_norm <= self.kappa * self.T / self.N * (1 + 1e-12)

    def contains(self, breakpoints: Sequence[float]) -> bool:
        pts = np.asarray(self.points)
        tol = BREAK_TOL * max(1.0, self.T)
        return all(np.min(np.abs(pts - b)) <= tol for b in breakpoints)

    def to_json(self) -> str:
        return json.dumps(list(self.points))

    @classmethod
    def from_json(cls, text: str, kappa: float = 2.0) -> "Partition":
        return cls(tuple(json.loads(text)), kappa)


def _allocate(lengths: np.ndarray, N: int) -> list[int]:
    # greedy equal-split allocation: always split the seed interval whose
    # current sub-width is largest (ties -> leftmost); optimal for max width
    counts = [1] * len(lengths)
    for _ in range(N - len(lengths)):
        widths = lengths / np.asarray(counts)
        counts[int(np.argmax(widths))] += 1
    return counts


def _uniform_points(seed: Sequence[float], counts: Sequence[int]) -> list[float]:
    pts = [seed[0]]
    for a, b, n in zip(seed[:-1], seed[1:], counts):
        h = (b - a) / n
        pts.extend(a + k * h for k in range(1, n))
        pts.append(b)
    return pts


def _partition_from_seed(seed: Sequence[float], N: int, kappa: float) -> Partition | None:
    lengths = np.diff(np.asarray(seed))
    counts = _allocate(lengths, N)
    part = Partition(tuple(_uniform_points(seed, counts)), kappa)
    return part if part.satisfies_kappa() else None


def partition_from_breakpoints(seed: Sequence[float], N: int, kappa: float = 2.0) -> Partition:
    """Partition with exactly N intervals refining ``seed`` and obeying the kappa rule."""
    if not kappa >= 1:
        raise ConfigurationError(f"kappa must be >= 1, got {kappa}")
    seed = sorted(set(float(x) for x in seed))
    M = len(seed) - 1
    if N >= M:
        part = _partition_from_seed(seed, N, kappa)
        if part is not None:
            return part
    n_min = M
    while _partition_from_seed(seed, n_min, kappa) is None:
        n_min += 1
        if n_min > 1_000_000:
            raise ConfigurationError("no feasible mesh size found below 10^6 intervals")
    raise ConfigurationError(
        f"N={N} infeasible for {M} breakpoint intervals with kappa={kappa}; minimum feasible N is {n_min}"
    )


def build_partition(inst: CLPInstance, N: int, kappa: float = 2.0) -> Partition:
    return partition_from_breakpoints(inst.breakpoints(), N, kappa)


def uniform_partition(T: float, N: int, kappa: float = 1.0) -> Partition:
    return Partition(tuple(_uniform_points([0.0, T], [N])), kappa)


def refine(part: Partition, factor: int) -> Partition:
    if factor < 2:
        raise ConfigurationError("refinement factor must be >= 2")
    return Partition(tuple(_uniform_points(part.points, [factor] * part.N)), part.kappa)


@dataclass(frozen=True)
class OscillationTable:
    """sup - inf of every coefficient on every interval (rectangle) of a partition.

    ``a``: (N, q), ``c``: (N, p), ``B``: (N, p, q), ``K``: (N, N, p, q) with
    ``K[u, v]`` the rectangle (t in interval u) x (s in interval v).
    """

    a: np.ndarray
    c: np.ndarray
    B: np.ndarray
    K: np.ndarray
    max_by_coefficient: dict = field(default_factory=dict)

    @property
    def max(self) -> float:
        return float(max(self.max_by_coefficient.values(), default=0.0))


def oscillations(inst: CLPInstance, part: Partition) -> OscillationTable:
    N, p, q = part.N, inst.p, inst.q
    osc_a = np.zeros((N, q))
    osc_c = np.zeros((N, p))
    osc_B = np.zeros((N, p, q))
    osc_K = np.zeros((N, N, p, q))
    for u in range(N):
        lo, hi = part.interval(u)
        for j in range(q):
            osc_a[u, j] = inst.a[j].sup_on(lo, hi) - inst.a[j].inf_on(lo, hi)
        for i in range(p):
            osc_c[u, i] = inst.c[i].sup_on(lo, hi) - inst.c[i].inf_on(lo, hi)
            for j in range(q):
                osc_B[u, i, j] = inst.B[i][j].sup_on(lo, hi) - inst.B[i][j].inf_on(lo, hi)
    for u in range(N):
        for v in range(N):
            rect = (*part.interval(u), *part.interval(v))
            for i in range(p):
                for j in range(q):
                    K = inst.K[i][j]
                    osc_K[u, v, i, j] = K.sup_on(*rect) - K.inf_on(*rect)
    return OscillationTable(
        osc_a,
        osc_c,
        osc_B,
        osc_K,
        {
            "a": float(osc_a.max(initial=0.0)),
            "c": float(osc_c.max(initial=0.0)),
            "B": float(osc_B.max(initial=0.0)),
            "K": float(osc_K.max(initial=0.0)),
        },
    )
