"""Step-function reconstruction and the boundedness certificates behind it."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coeff import GlobalBounds
from .disc import DiscreteLPData, assemble_dual
from .errors import CertificationError, DataError, DomainError
from .mesh import Partition

RATES = ("nu", "eta")


@dataclass(frozen=True)
class StepFunction:
    """Vector step function: ``values[u]`` on [t_u, t_{u+1}), the last interval closed at T."""

    points: tuple[float, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        if vals.shape[0] != len(self.points) - 1:
            raise DataError(f"{vals.shape[0]} blocks for {len(self.points) - 1} intervals")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def index(self, t):
        T = self.points[-1]
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0) or np.any(arr > T):
            raise DomainError(f"time outside [0, {T}]")
        return np.clip(np.searchsorted(self.points, arr, side="right") - 1, 0, self.N - 1)

    def __call__(self, t):
        return self.values[self.index(t)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_lo", "t_hi", *[f"x{k}" for k in range(self.dim)]])
        for u in range(self.N):
            w.writerow([repr(self.points[u]), repr(self.points[u + 1]), *map(repr, self.values[u].tolist())])
        return buf.getvalue()


def _step(blocks, part: Partition, dim: Optional[int]) -> StepFunction:
    vals = np.asarray(blocks, dtype=float)
    if vals.ndim == 1:
        if vals.size % part.N:
            raise DataError(f"{vals.size} values cannot be split into {part.N} blocks")
        vals = vals.reshape(part.N, -1)
    if vals.shape[0] != part.N:
        raise DataError(f"expected {part.N} blocks, got {vals.shape[0]}")
    if dim is not None and vals.shape[1] != dim:
        raise DataError(f"expected blocks of dimension {dim}, got {vals.shape[1]}")
    return StepFunction(part.points, vals)


def primal_step(z_blocks, part: Partition, q: Optional[int] = None) -> StepFunction:
    return _step(z_blocks, part, q)


def dual_step(w_blocks, part: Partition, p: Optional[int] = None) -> StepFunction:
    return _step(w_blocks, part, p)


def _rate_value(bounds: GlobalBounds, rate: str) -> float:
    if rate not in RATES:
        raise ValueError(f"rate must be one of {RATES}, got {rate!r}")
    return bounds.nu if rate == "nu" else bounds.eta


def rho(t, T: float, bounds: GlobalBounds, rate: str = "nu", eps: float = 0.0):
    """Dual bounding curve ((tau - eps) / sigma) * exp(rate * (T - t) / sigma)."""
    sigma = bounds.sigma
    if sigma is None or sigma <= 0:
        raise CertificationError("rho needs a certified sigma > 0")
    k = _rate_value(bounds, rate)
    return (bounds.tau - eps) / sigma * np.exp(k * (T - np.asarray(t, dtype=float)) / sigma)


def dual_certificate(part: Partition, bounds: GlobalBounds, p: int) -> np.ndarray:
    """Explicit feasible dual blocks: every entry of block u is
    (tau / sigma) * (1 + |P| nu / sigma)^(N - u)."""
    sigma = bounds.require_sigma()
    u = np.arange(1, part.N + 1)
    level = bounds.tau / sigma * (1.0 + part.mesh_norm * bounds.nu / sigma) ** (part.N - u)
    return np.repeat(level[:, None], p, axis=1)


def truncate_dual(
    d_blocks,
    D: DiscreteLPData,
    part: Partition,
    bounds: GlobalBounds,
    rate: str = "nu",
    feas_tol: float = 1e-9,
) -> np.ndarray:
    """Clamp a feasible dual solution at rho(t_u), keeping it feasible.

    Requires K_uv >= 0 and a certified sigma. With ``rate="eta"`` the clamp
    is only guaranteed feasible when the column sums of K are bounded by
    eta (always the case for p = 1); ``rate="nu"`` is safe in general.
    """
    bounds.require_sigma()
    if np.any(D.K < -1e-12):
        raise CertificationError("truncation needs K >= 0 on every rectangle")
    d = np.asarray(d_blocks, dtype=float).reshape(D.N, D.p)
    viol = assemble_dual(D).violation(d.ravel())
    if viol > feas_tol:
        raise CertificationError(f"input is not dual feasible (violation {viol:.3g})")
    cap = rho(np.asarray(part.points[1:]), part.T, bounds, rate)
    return np.minimum(d, cap[:, None])


def discrete_gronwall(theta1: float, theta2: float, N: int) -> np.ndarray:
    """Bounds theta1 * (1 + theta2)^(u - 1) for u = 1..N."""
    if theta1 < 0 or theta2 <= 0:
        raise ValueError("need theta1 >= 0 and theta2 > 0")
    return theta1 * (1.0 + theta2) ** np.arange(N)


def gronwall_bound(theta1: float, theta2: float, t):
    if theta1 < 0 or theta2 <= 0:
        raise ValueError("need theta1 >= 0 and theta2 > 0")
    return theta1 * np.exp(theta2 * np.asarray(t, dtype=float))


def primal_bound(bounds: GlobalBounds, p: int, eps: float, t):
    """Pointwise bound (p (zeta + eps) / sigma) exp(p phi t / sigma) on feasible primal solutions."""
    sigma = bounds.require_sigma()
    return p * (bounds.zeta + eps) / sigma * np.exp(p * bounds.phi * np.asarray(t, dtype=float) / sigma)


@dataclass(frozen=True)
class CertificateBundle:
    """Everything needed to re-check the boundedness certificates of one run."""

    T: float
    tau: float
    sigma: float
    rate_name: str
    rate: float
    eps: float
    dual_point: np.ndarray
    theta1: float
    theta2: float
    primal_cap: float
    dual_cap: float

    def rho(self, t):
        return (self.tau - self.eps) / self.sigma * np.exp(self.rate * (self.T - np.asarray(t)) / self.sigma)


def certificate_bundle(part: Partition, bounds: GlobalBounds, p: int, eps: float = 0.0, rate: str = "nu") -> CertificateBundle:
    """Constants of the discrete boundedness certificates.

    The primal constants use p where the row sums of c and K are taken; the
    discrete Gronwall step is theta1 * (1 + theta2)^(u - 1) with
    theta1 = p (zeta + eps) / sigma and theta2 = p nu |P| / sigma.
    """
    sigma = bounds.require_sigma()
    k = _rate_value(bounds, rate)
    theta1 = p * (bounds.zeta + eps) / sigma
    theta2 = p * bounds.nu * part.mesh_norm / sigma
    return CertificateBundle(
        T=part.T,
        tau=bounds.tau,
        sigma=sigma,
        rate_name=rate,
        rate=k,
        eps=eps,
        dual_point=dual_certificate(part, bounds, p),
        theta1=theta1,
        theta2=theta2,
        primal_cap=theta1 * math.exp(p * bounds.nu * part.kappa * part.T / sigma),
        dual_cap=bounds.tau / sigma * math.exp(k * part.T / sigma),
    )
