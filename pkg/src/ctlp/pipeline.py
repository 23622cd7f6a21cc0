"""End-to-end runs: discretize, solve, reconstruct, verify."""

from __future__ import annotations

import csv
import io
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .coeff import (
    CLPInstance,
    GlobalBounds,
    PiecewiseFn1D,
    PolyPiece,
    SampledPiece,
    detect_sigma,
    global_bounds,
)
from .disc import DiscreteLPData, FiniteLP, assemble_dual, assemble_primal, blocks, discretize
from .errors import CertificationError, CLPError, StageError
from .mesh import OscillationTable, Partition, build_partition, oscillations
from .recon import (
    CertificateBundle,
    StepFunction,
    certificate_bundle,
    dual_step,
    primal_step,
    truncate_dual,
)
from .simplex import LPSolution, solve
from .verify import (
    AuditReport,
    EpsilonCertificate,
    PerturbationTable,
    ResidualReport,
    bound_audit,
    certify_epsilon,
    perturbation_monotonicity,
    primal_residual_bound,
    residual_report,
)

LP_GAP_TOL = 1e-8
TREND_SLACK = 0.10


@contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (CLPError, ValueError, ArithmeticError) as exc:
        raise StageError(name, exc) from exc


def _shift_piece(pc, shift: float):
    if isinstance(pc, PolyPiece):
        c = list(pc.coeffs)
        c[0] += shift
        return PolyPiece(tuple(c))
    func = pc.func
    return SampledPiece(lambda t, f=func: np.asarray(f(t), dtype=float) + shift, pc.lipschitz, pc.delta)


def _shift(f: PiecewiseFn1D, shift: float) -> PiecewiseFn1D:
    return PiecewiseFn1D(f.breakpoints, tuple(_shift_piece(pc, shift) for pc in f.pieces))


def perturb_instance(inst: CLPInstance, c_shift: float = 0.0, a_shift: float = 0.0) -> CLPInstance:
    """The instance with c + c_shift and a - a_shift."""
    return replace(
        inst,
        a=tuple(_shift(f, -a_shift) for f in inst.a) if a_shift else inst.a,
        c=tuple(_shift(f, c_shift) for f in inst.c) if c_shift else inst.c,
    )


@dataclass
class SolveReport:
    N: int
    kappa: float
    eps: float
    grid: int
    partition: Partition
    data: DiscreteLPData
    primal_lp: LPSolution
    dual_lp: LPSolution
    bounds: GlobalBounds
    oscillation: OscillationTable
    z: StepFunction
    w_raw: StepFunction
    w: StepFunction
    residuals: ResidualReport
    primal_residual_bound: float
    certificate: Optional[CertificateBundle] = None
    epsilon: Optional[EpsilonCertificate] = None
    audit: Optional[AuditReport] = None
    notes: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def lp_gap(self) -> float:
        return abs(self.primal_lp.objective - self.dual_lp.objective)

    @property
    def eps_feasible(self) -> Optional[bool]:
        if self.epsilon is None:
            return None
        return self.residuals.dual_violation <= self.epsilon.eps

    @property
    def primal_within_bound(self) -> bool:
        return self.residuals.primal_violation <= self.primal_residual_bound * (1 + 1e-9) + 1e-12

    @property
    def passed(self) -> bool:
        """LP gap, a-priori primal residual bound, eps-feasibility and bound audits all pass."""
        ok = self.lp_gap <= LP_GAP_TOL and self.primal_within_bound
        if self.epsilon is not None:
            ok = ok and bool(self.eps_feasible)
        if self.audit is not None:
            ok = ok and self.audit.passed
        return ok

    def summary_rows(self) -> list[tuple[str, object]]:
        r = self.residuals
        rows = [
            ("N", self.N),
            ("kappa", self.kappa),
            ("eps", self.eps),
            ("grid", self.grid),
            ("mesh_norm", self.partition.mesh_norm),
            ("primal_lp_objective", self.primal_lp.objective),
            ("dual_lp_objective", self.dual_lp.objective),
            ("lp_gap", self.lp_gap),
            ("primal_iterations", self.primal_lp.iterations),
            ("dual_iterations", self.dual_lp.iterations),
            ("tau", self.bounds.tau),
            ("zeta", self.bounds.zeta),
            ("eta", self.bounds.eta),
            ("nu", self.bounds.nu),
            ("phi", self.bounds.phi),
            ("sigma", self.bounds.sigma),
            ("oscillation", self.oscillation.max),
            ("primal_objective", r.primal_objective),
            ("dual_objective", r.dual_objective),
            ("continuous_gap", r.gap),
            ("primal_violation", r.primal_violation),
            ("primal_residual_bound", self.primal_residual_bound),
            ("dual_violation", r.dual_violation),
            ("certified_eps", None if self.epsilon is None else self.epsilon.eps),
            ("eps_feasible", self.eps_feasible),
            ("audit_passed", None if self.audit is None else self.audit.passed),
            ("passed", self.passed),
        ]
        return rows

    def to_csv(self) -> str:
        """Deterministic long-format CSV: summary rows, then block values and rho_u."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["record", "u", "component", "value"])
        for k, v in self.summary_rows():
            w.writerow(["summary", "", k, repr(v) if isinstance(v, float) else v])
        for name, step in (("z", self.z), ("w_raw", self.w_raw), ("w", self.w)):
            for u in range(step.N):
                for k in range(step.dim):
                    w.writerow([name, u + 1, k, repr(float(step.values[u, k]))])
        if self.certificate is not None:
            for u, t in enumerate(self.partition.points[1:]):
                w.writerow(["rho", u + 1, "", repr(float(self.certificate.rho(t)))])
        for note in self.notes:
            w.writerow(["note", "", "", note])
        return buf.getvalue()

    def text(self) -> str:
        lines = [
            f"N={self.N}  kappa={self.kappa}  eps={self.eps}  |P|={self.partition.mesh_norm:.6g}",
            f"LP primal {self.primal_lp.objective:.12g}  LP dual {self.dual_lp.objective:.12g}  gap {self.lp_gap:.3e}",
            self.residuals.summary(),
            f"primal residual bound {self.primal_residual_bound:.3e} ({'ok' if self.primal_within_bound else 'EXCEEDED'})",
        ]
        if self.epsilon is not None:
            e = self.epsilon
            lines.append(
                f"eps certificate: osc {e.oscillation:.3e}, eps_bar {e.eps_bar:.3e}, W {e.dual_norm:.6g}, "
                f"eps1 {e.eps1:.3e}, eps2 {e.eps2:.3e} -> eps {e.eps:.3e} ({'ok' if self.eps_feasible else 'FAILED'})"
            )
        if self.audit is not None:
            lines.append(f"bound audit: {'pass' if self.audit.passed else 'FAIL'}")
            lines.extend("  " + f for f in self.audit.failures())
            lines.append(
                "  primal bounds use p in place of the unnamed row-count constant; "
                f"cap {self.audit.primal_cap:.6g}, dual cap {self.audit.dual_cap:.6g}"
            )
        lines.extend(f"note: {n}" for n in self.notes)
        lines.append(f"result: {'PASS' if self.passed else 'FAIL'}  ({self.wall_time:.2f}s)")
        return "\n".join(lines)


def run_solve(
    inst: CLPInstance,
    N: int = 64,
    kappa: float = 2.0,
    eps: float = 0.0,
    grid: int = 8,
    rate: str = "nu",
    part: Optional[Partition] = None,
) -> SolveReport:
    """Full pipeline for one mesh. ``eps`` shifts c (the perturbed primal and its exact LP dual)."""
    start = time.perf_counter()
    notes = []
    with stage("partition"):
        part = part or build_partition(inst, N, kappa)
    with stage("discretize"):
        D0 = discretize(inst, part)
        D = D0.perturbed(c_shift=eps) if eps else D0
        target = perturb_instance(inst, c_shift=eps) if eps else inst
    with stage("assemble"):
        primal, dual = assemble_primal(D), assemble_dual(D)
    with stage("solve"):
        P = solve(primal)
        Dl = solve(dual)
        for name, s in (("primal", P), ("dual", Dl)):
            if not s.optimal:
                raise CertificationError(f"{name} LP is {s.status}")
    with stage("duality"):
        gap = abs(P.objective - Dl.objective)
        if gap > LP_GAP_TOL:
            raise CertificationError(f"LP pair gap {gap:.3e} exceeds {LP_GAP_TOL}")
    with stage("certify"):
        try:
            sigma = detect_sigma(inst.B)
        except CertificationError as exc:
            sigma = None
            notes.append(f"sigma not certified: {exc}")
        bounds = global_bounds(target, sigma)
        osc = oscillations(target, part)
    with stage("reconstruct"):
        z_blocks = blocks(P.primal, part.N)
        d_blocks = blocks(Dl.primal, part.N)
        z = primal_step(z_blocks, part, inst.q)
        w_raw = dual_step(d_blocks, part, inst.p)
    cert = eps_cert = audit = None
    w = w_raw
    with stage("truncate"):
        if sigma is not None:
            try:
                w_blocks = truncate_dual(d_blocks, D, part, bounds, rate)
                w = dual_step(w_blocks, part, inst.p)
                cert = certificate_bundle(part, bounds, inst.p, eps, rate)
            except CertificationError as exc:
                notes.append(f"truncation skipped: {exc}")
    with stage("verify"):
        if cert is not None:
            eps_cert = certify_epsilon(
                target,
                part,
                bounds,
                dual_norm=float(w.values.max(initial=0.0)),
                osc=osc,
                discrete_violation=dual.violation(w.values.ravel()),
            )
            audit = bound_audit(z_blocks, w.values, part, bounds, inst.p, eps, rate)
        residuals = residual_report(z, w, target, grid, None if eps_cert is None else eps_cert.eps)
        pbound = primal_residual_bound(part, bounds, z_blocks, osc.max)
    return SolveReport(
        N=part.N,
        kappa=part.kappa,
        eps=eps,
        grid=grid,
        partition=part,
        data=D,
        primal_lp=P,
        dual_lp=Dl,
        bounds=bounds,
        oscillation=osc,
        z=z,
        w_raw=w_raw,
        w=w,
        residuals=residuals,
        primal_residual_bound=pbound,
        certificate=cert,
        epsilon=eps_cert,
        audit=audit,
        notes=notes,
        wall_time=time.perf_counter() - start,
    )


@dataclass
class ConvergenceRow:
    N: int
    mesh_norm: Optional[float] = None
    primal_lp: Optional[float] = None
    dual_lp: Optional[float] = None
    lp_gap: Optional[float] = None
    primal_objective: Optional[float] = None
    dual_objective: Optional[float] = None
    continuous_gap: Optional[float] = None
    certified_eps: Optional[float] = None
    primal_violation: Optional[float] = None
    dual_violation: Optional[float] = None
    wall_time: float = 0.0
    error: Optional[str] = None

    COLUMNS = (
        "N", "mesh_norm", "primal_lp", "dual_lp", "lp_gap", "primal_objective", "dual_objective",
        "continuous_gap", "certified_eps", "primal_violation", "dual_violation", "error",
    )


@dataclass
class ConvergenceReport:
    rows: list[ConvergenceRow]

    @property
    def trend_ok(self) -> bool:
        """|continuous gap| may not grow by more than 10% from one mesh to the next."""
        gaps = [abs(r.continuous_gap) for r in self.rows if r.error is None]
        return all(b <= (1 + TREND_SLACK) * a + 1e-12 for a, b in zip(gaps[:-1], gaps[1:]))

    @property
    def lp_gaps_ok(self) -> bool:
        return all(r.error is None and r.lp_gap <= LP_GAP_TOL for r in self.rows)

    @property
    def passed(self) -> bool:
        return self.trend_ok and self.lp_gaps_ok

    def to_csv(self) -> str:
        """Wall time is left out so identical runs give identical bytes."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ConvergenceRow.COLUMNS)
        for r in self.rows:
            w.writerow([repr(v) if isinstance(v, float) else ("" if v is None else v) for v in (getattr(r, c) for c in ConvergenceRow.COLUMNS)])
        return buf.getvalue()

    def text(self) -> str:
        head = f"{'N':>6} {'|P|':>10} {'LP primal':>16} {'LP gap':>10} {'cont gap':>11} {'eps':>10} {'time':>7}"
        lines = [head]
        for r in self.rows:
            if r.error:
                lines.append(f"{r.N:>6} error: {r.error}")
                continue
            eps = "-" if r.certified_eps is None else f"{r.certified_eps:.3e}"
            lines.append(
                f"{r.N:>6} {r.mesh_norm:>10.4g} {r.primal_lp:>16.12g} {r.lp_gap:>10.2e} "
                f"{r.continuous_gap:>11.3e} {eps:>10} {r.wall_time:>6.2f}s"
            )
        lines.append(f"gap trend {'ok' if self.trend_ok else 'NOT nonincreasing'}; LP gaps {'ok' if self.lp_gaps_ok else 'FAILED'}")
        return "\n".join(lines)


def run_convergence(inst: CLPInstance, Ns: Sequence[int], kappa: float = 2.0, grid: int = 8, rate: str = "nu") -> ConvergenceReport:
    Ns = [int(n) for n in Ns]
    if Ns != sorted(set(Ns)):
        raise StageError("converge", "mesh sizes must be strictly increasing")
    rows = []
    for n in Ns:
        try:
            rep = run_solve(inst, n, kappa, 0.0, grid, rate)
        except StageError as exc:
            rows.append(ConvergenceRow(n, error=str(exc)))
            continue
        r = rep.residuals
        rows.append(
            ConvergenceRow(
                N=n,
                mesh_norm=rep.partition.mesh_norm,
                primal_lp=rep.primal_lp.objective,
                dual_lp=rep.dual_lp.objective,
                lp_gap=rep.lp_gap,
                primal_objective=r.primal_objective,
                dual_objective=r.dual_objective,
                continuous_gap=r.gap,
                certified_eps=None if rep.epsilon is None else rep.epsilon.eps,
                primal_violation=r.primal_violation,
                dual_violation=r.dual_violation,
                wall_time=rep.wall_time,
            )
        )
    return ConvergenceReport(rows)


def run_perturbation(inst: CLPInstance, N: int, eps_list: Sequence[float], kappa: float = 2.0) -> PerturbationTable:
    with stage("partition"):
        part = build_partition(inst, N, kappa)
    with stage("perturb"):
        return perturbation_monotonicity(inst, part, eps_list)


def lp_from_report(rep: SolveReport) -> tuple[FiniteLP, FiniteLP]:
    return assemble_primal(rep.data), assemble_dual(rep.data)
