"""Continuous-time checks of reconstructed step solutions.

Residuals are evaluated on a grid strictly inside every partition interval
(midpoint plus Chebyshev points), with the Volterra integrals of the step
functions computed exactly interval by interval.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .coeff import CLPInstance, GlobalBounds
from .disc import DiscreteLPData, assemble_dual, assemble_primal, discretize
from .errors import CertificationError, ConfigurationError
from .mesh import OscillationTable, Partition, oscillations
from .recon import StepFunction, certificate_bundle, rho
from .simplex import solve

MONOTONE_TOL = 1e-9


def check_grid(points: Sequence[float], per_interval: int = 8):
    """Interior check points of every interval and the interval each belongs to."""
    if per_interval < 3:
        raise ConfigurationError("need at least 3 check points per interval")
    n = per_interval - 1
    k = np.arange(1, n + 1)
    local = np.unique(np.concatenate([[0.0], np.cos(np.pi * (2 * k - 1) / (2 * n))]))
    pts, idx = [], []
    for u, (lo, hi) in enumerate(zip(points[:-1], points[1:])):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        pts.append(mid + half * local)
        idx.append(np.full(local.size, u))
    return np.concatenate(pts), np.concatenate(idx)


def primal_slack(zhat: StepFunction, inst: CLPInstance, grid: int = 8):
    """B(t) z(t) - c(t) - int_0^t K(t, s) z(s) ds at every check point, shape (n_pts, p)."""
    pts, idx = check_grid(zhat.points, grid)
    z = zhat.values
    bp = zhat.points
    out = np.zeros((pts.size, inst.p))
    for i in range(inst.p):
        acc = -inst.c[i](pts)
        for j in range(inst.q):
            acc += inst.B[i][j](pts) * z[idx, j]
            K = inst.K[i][j]
            for v in range(zhat.N - 1):
                mask = idx > v
                if z[v, j] != 0.0 and mask.any():
                    acc[mask] -= z[v, j] * K.integrate_in_s(pts[mask], bp[v], bp[v + 1])
            for k, t in enumerate(pts):
                u = idx[k]
                if z[u, j] != 0.0:
                    acc[k] -= z[u, j] * K.integrate_in_s(t, bp[u], t)
        out[:, i] = acc
    return pts, out


def dual_slack(what: StepFunction, inst: CLPInstance, grid: int = 8):
    """a(t) + int_t^T K(s, t)' w(s) ds - B(t)' w(t) at every check point, shape (n_pts, q)."""
    pts, idx = check_grid(what.points, grid)
    w = what.values
    bp = what.points
    out = np.zeros((pts.size, inst.q))
    for j in range(inst.q):
        acc = inst.a[j](pts).astype(float)
        for i in range(inst.p):
            acc -= inst.B[i][j](pts) * w[idx, i]
            K = inst.K[i][j]
            for v in range(1, what.N):
                mask = idx < v
                if w[v, i] != 0.0 and mask.any():
                    acc[mask] += w[v, i] * K.integrate_in_t(pts[mask], bp[v], bp[v + 1])
            for k, t in enumerate(pts):
                u = idx[k]
                if w[u, i] != 0.0:
                    acc[k] += w[u, i] * K.integrate_in_t(t, t, bp[u + 1])
        out[:, j] = acc
    return pts, out


def primal_residual(zhat: StepFunction, inst: CLPInstance, grid: int = 8) -> float:
    _, s = primal_slack(zhat, inst, grid)
    return float(max(s.max(initial=0.0), 0.0))


def dual_residual(what: StepFunction, inst: CLPInstance, grid: int = 8) -> float:
    _, s = dual_slack(what, inst, grid)
    return float(max(s.max(initial=0.0), 0.0))


def primal_objective(zhat: StepFunction, inst: CLPInstance) -> float:
    """int_0^T a(t)' z(t) dt, exact for polynomial pieces."""
    bp = zhat.points
    return float(
        sum(
            zhat.values[u, j] * inst.a[j].integrate(bp[u], bp[u + 1])
            for u in range(zhat.N)
            for j in range(inst.q)
        )
    )


def dual_objective(what: StepFunction, inst: CLPInstance) -> float:
    bp = what.points
    return float(
        sum(
            what.values[u, i] * inst.c[i].integrate(bp[u], bp[u + 1])
            for u in range(what.N)
            for i in range(inst.p)
        )
    )


def _l1_integral(f: StepFunction) -> float:
    return float(np.diff(f.points) @ np.abs(f.values).sum(axis=1))


@dataclass
class ResidualReport:
    primal_violation: float
    dual_violation: float
    primal_worst: tuple[float, int]
    dual_worst: tuple[float, int]
    primal_objective: float
    dual_objective: float
    grid: int
    certified_eps: Optional[float] = None

    @property
    def gap(self) -> float:
        return self.dual_objective - self.primal_objective

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "value"])
        for name, value in (
            ("primal_violation", self.primal_violation),
            ("primal_worst_t", self.primal_worst[0]),
            ("primal_worst_row", self.primal_worst[1]),
            ("dual_violation", self.dual_violation),
            ("dual_worst_t", self.dual_worst[0]),
            ("dual_worst_col", self.dual_worst[1]),
            ("primal_objective", self.primal_objective),
            ("dual_objective", self.dual_objective),
            ("gap", self.gap),
            ("certified_eps", self.certified_eps),
            ("grid", self.grid),
        ):
            w.writerow([name, repr(value)])
        return buf.getvalue()

    def summary(self) -> str:
        lines = [
            f"primal violation  {self.primal_violation:.3e} at t={self.primal_worst[0]:.6g} (row {self.primal_worst[1]})",
            f"dual violation    {self.dual_violation:.3e} at t={self.dual_worst[0]:.6g} (column {self.dual_worst[1]})",
            f"int a'z           {self.primal_objective:.12g}",
            f"int c'w           {self.dual_objective:.12g}",
            f"continuous gap    {self.gap:.3e}",
        ]
        if self.certified_eps is not None:
            lines.append(f"certified eps     {self.certified_eps:.3e}")
        return "\n".join(lines)


def _worst(pts, slack):
    flat = int(np.argmax(slack))
    k, r = divmod(flat, slack.shape[1])
    return float(max(slack[k, r], 0.0)), (float(pts[k]), int(r))


def residual_report(
    zhat: StepFunction,
    what: StepFunction,
    inst: CLPInstance,
    grid: int = 8,
    certified_eps: Optional[float] = None,
) -> ResidualReport:
    pp, ps = primal_slack(zhat, inst, grid)
    dp, ds = dual_slack(what, inst, grid)
    pv, pw = _worst(pp, ps)
    dv, dw = _worst(dp, ds)
    return ResidualReport(
        primal_violation=pv,
        dual_violation=dv,
        primal_worst=pw,
        dual_worst=dw,
        primal_objective=primal_objective(zhat, inst),
        dual_objective=dual_objective(what, inst),
        grid=grid,
        certified_eps=certified_eps,
    )


@dataclass(frozen=True)
class WeakDualityVerdict:
    status: str  # "holds" | "violated" | "not applicable"
    primal_objective: float
    dual_objective: float
    slack: float
    primal_residual: float
    dual_residual: float

    @property
    def holds(self) -> bool:
        return self.status == "holds"


def weak_duality_check(
    zhat: StepFunction,
    what: StepFunction,
    inst: CLPInstance,
    tol_feas: float = 1e-9,
    grid: int = 8,
) -> WeakDualityVerdict:
    """Check int a'z <= int c'w up to the slack implied by the measured residuals.

    With primal residual rP and dual residual rD the inequality degrades by
    at most rP * int |w| + rD * int |z|; zero residuals demand the exact
    inequality (plus rounding).
    """
    rp = primal_residual(zhat, inst, grid)
    rd = dual_residual(what, inst, grid)
    po, do = primal_objective(zhat, inst), dual_objective(what, inst)
    slack = rp * _l1_integral(what) + rd * _l1_integral(zhat) + 1e-12 * (1.0 + abs(po) + abs(do))
    if rp > tol_feas or rd > tol_feas or np.any(zhat.values < -tol_feas) or np.any(what.values < -tol_feas):
        status = "not applicable"
    else:
        status = "holds" if po <= do + slack else "violated"
    return WeakDualityVerdict(status, po, do, slack, rp, rd)


@dataclass(frozen=True)
class EpsilonCertificate:
    """eps = eps_bar + eps1 + eps2 with eps_bar = max(oscillation, |P|),
    eps1 = p eps_bar W and eps2 = p eps_bar W (eta + kappa T), W bounding the dual blocks."""

    oscillation: float
    eps_bar: float
    dual_norm: float
    eps1: float
    eps2: float
    discrete_violation: float

    @property
    def eps(self) -> float:
        return self.eps_bar + self.eps1 + self.eps2 + self.discrete_violation


def certify_epsilon(
    inst: CLPInstance,
    part: Partition,
    bounds: GlobalBounds,
    dual_norm: Optional[float] = None,
    osc: Optional[OscillationTable] = None,
    discrete_violation: float = 0.0,
    rate: str = "nu",
) -> EpsilonCertificate:
    """Level eps for which the reconstructed dual step function is feasible for the eps-perturbed dual.

    ``dual_norm`` bounds every dual block entry; by default the truncation
    cap (tau / sigma) exp(rate T / sigma) is used, which requires sigma.
    """
    if dual_norm is None:
        sigma = bounds.require_sigma()
        k = bounds.nu if rate == "nu" else bounds.eta
        dual_norm = bounds.tau / sigma * math.exp(k * part.T / sigma)
    if osc is None:
        osc = oscillations(inst, part)
    eps_bar = max(osc.max, part.mesh_norm)
    eps1 = inst.p * eps_bar * dual_norm
    eps2 = eps1 * (bounds.eta + part.kappa * part.T)
    return EpsilonCertificate(osc.max, eps_bar, float(dual_norm), eps1, eps2, float(discrete_violation))


def primal_residual_bound(part: Partition, bounds: GlobalBounds, z_blocks, osc_max: float) -> float:
    """A-priori bound nu |P| max|z| + osc (1 + max|z|) on the primal residual of an LP-feasible step function."""
    zmax = float(np.abs(np.asarray(z_blocks)).sum(axis=-1).max(initial=0.0))
    return bounds.nu * part.mesh_norm * zmax + osc_max * (1.0 + zmax)


@dataclass
class AuditReport:
    primal_norms: np.ndarray
    primal_bounds: np.ndarray
    primal_cap: float
    primal_pass: np.ndarray
    dual_max: np.ndarray
    dual_bounds: np.ndarray
    dual_cap: float
    dual_pass: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(self.primal_pass.all() and self.dual_pass.all())

    def failures(self) -> list[str]:
        out = [f"primal block {u + 1}: |z|={self.primal_norms[u]:.6g} > {self.primal_bounds[u]:.6g}"
               for u in np.nonzero(~self.primal_pass)[0]]
        out += [f"dual block {u + 1}: max w={self.dual_max[u]:.6g} > {self.dual_bounds[u]:.6g}"
                for u in np.nonzero(~self.dual_pass)[0]]
        return out


def _leq(x, bound, rtol=1e-9, atol=1e-12):
    return x <= bound * (1.0 + rtol) + atol


def bound_audit(
    z_blocks,
    w_blocks,
    part: Partition,
    bounds: GlobalBounds,
    p: int,
    eps: float = 0.0,
    rate: str = "nu",
) -> AuditReport:
    """Check primal blocks against the discrete Gronwall bound and its exponential
    cap, and (truncated) dual blocks against rho(t_u) and its cap."""
    cert = certificate_bundle(part, bounds, p, eps, rate)
    z = np.asarray(z_blocks, dtype=float).reshape(part.N, -1)
    w = np.asarray(w_blocks, dtype=float).reshape(part.N, -1)
    znorm = np.abs(z).sum(axis=1)
    zb = cert.theta1 * (1.0 + cert.theta2) ** np.arange(part.N)
    ppass = _leq(znorm, zb) & _leq(znorm, cert.primal_cap)
    wmax = w.max(axis=1)
    wb = rho(np.asarray(part.points[1:]), part.T, bounds, rate)
    dpass = _leq(wmax, wb) & _leq(wmax, cert.dual_cap)
    return AuditReport(znorm, zb, cert.primal_cap, ppass, wmax, wb, cert.dual_cap, dpass)


@dataclass
class PerturbationRow:
    eps: float
    primal_status: str
    dual_status: str
    primal_objective: Optional[float]
    dual_objective: Optional[float]


@dataclass
class PerturbationTable:
    rows: list[PerturbationRow] = field(default_factory=list)

    def _series(self, attr):
        return [getattr(r, attr) for r in self.rows if getattr(r, attr) is not None]

    @property
    def primal_nondecreasing(self) -> bool:
        s = self._series("primal_objective")
        return all(b >= a - MONOTONE_TOL for a, b in zip(s[:-1], s[1:]))

    @property
    def dual_nonincreasing(self) -> bool:
        s = self._series("dual_objective")
        return all(b <= a + MONOTONE_TOL for a, b in zip(s[:-1], s[1:]))

    @property
    def monotone(self) -> bool:
        return self.primal_nondecreasing and self.dual_nonincreasing

    def check(self):
        if not self.primal_nondecreasing:
            raise CertificationError("M_N(eps) is not nondecreasing")
        if not self.dual_nonincreasing:
            raise CertificationError("dual M_N(eps) is not nonincreasing")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "primal_status", "primal_objective", "dual_status", "dual_objective"])
        for r in self.rows:
            w.writerow([repr(r.eps), r.primal_status, repr(r.primal_objective), r.dual_status, repr(r.dual_objective)])
        return buf.getvalue()


def perturbation_monotonicity(
    inst: CLPInstance,
    part: Partition,
    eps_list: Sequence[float],
    D: Optional[DiscreteLPData] = None,
) -> PerturbationTable:
    """Optimal values of the discretized perturbed primal (c + eps) and dual (a - eps) for each eps."""
    eps_list = [float(e) for e in eps_list]
    if any(e < 0 for e in eps_list) or eps_list != sorted(eps_list):
        raise ConfigurationError("eps values must be nonnegative and sorted")
    if D is None:
        D = discretize(inst, part)
    table = PerturbationTable()
    for e in eps_list:
        ps = solve(assemble_primal(D.perturbed(c_shift=e)))
        ds = solve(assemble_dual(D.perturbed(a_shift=e)))
        table.rows.append(
            PerturbationRow(
                e,
                ps.status,
                ds.status,
                ps.objective if ps.optimal else None,
                ds.objective if ds.optimal else None,
            )
        )
    return table
