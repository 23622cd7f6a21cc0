"""Discretization solver for continuous-time linear programs with duality certificates."""

from .coeff import (
    CLPInstance,
    GlobalBounds,
    PiecewiseFn1D,
    PiecewiseFn2D,
    Poly2Piece,
    PolyPiece,
    Sampled2Piece,
    SampledPiece,
    SeparablePiece,
    TableFunction,
    detect_sigma,
    eval1d,
    global_bounds,
    inf_on_interval,
    inf_on_rectangle,
    integrate_1d,
    integrate_2d_in_s,
    sup_on_interval,
    sup_on_rectangle,
)
from .disc import DiscreteLPData, FiniteLP, assemble_dual, assemble_primal, discretize, rescale_dual, unscale_dual
from .errors import (
    CertificationError,
    CLPError,
    ConfigurationError,
    DataError,
    DomainError,
    NumericalError,
    StageError,
    StructuralError,
)
from .io import load_instance
from .mesh import Partition, build_partition, oscillations, refine
from .pipeline import ConvergenceReport, SolveReport, run_convergence, run_perturbation, run_solve
from .recon import (
    CertificateBundle,
    StepFunction,
    discrete_gronwall,
    dual_certificate,
    dual_step,
    gronwall_bound,
    primal_bound,
    primal_step,
    rho,
    truncate_dual,
)
from .simplex import LPSolution, RevisedSimplex, brute_force_solve, solve
from .verify import (
    ResidualReport,
    bound_audit,
    certify_epsilon,
    dual_residual,
    perturbation_monotonicity,
    primal_residual,
    weak_duality_check,
)

__version__ = "0.1.0"

__all__ = [
    "CLPInstance",
    "GlobalBounds",
    "PiecewiseFn1D",
    "PiecewiseFn2D",
    "Poly2Piece",
    "PolyPiece",
    "Sampled2Piece",
    "SampledPiece",
    "SeparablePiece",
    "TableFunction",
    "detect_sigma",
    "eval1d",
    "global_bounds",
    "inf_on_interval",
    "inf_on_rectangle",
    "integrate_1d",
    "integrate_2d_in_s",
    "sup_on_interval",
    "sup_on_rectangle",
    "DiscreteLPData",
    "FiniteLP",
    "assemble_dual",
    "assemble_primal",
    "discretize",
    "rescale_dual",
    "unscale_dual",
    "CertificationError",
    "CLPError",
    "ConfigurationError",
    "DataError",
    "DomainError",
    "NumericalError",
    "StageError",
    "StructuralError",
    "load_instance",
    "Partition",
    "build_partition",
    "oscillations",
    "refine",
    "ConvergenceReport",
    "SolveReport",
    "run_convergence",
    "run_perturbation",
    "run_solve",
    "CertificateBundle",
    "StepFunction",
    "discrete_gronwall",
    "dual_certificate",
    "dual_step",
    "gronwall_bound",
    "primal_bound",
    "primal_step",
    "rho",
    "truncate_dual",
    "LPSolution",
    "RevisedSimplex",
    "brute_force_solve",
    "solve",
    "ResidualReport",
    "bound_audit",
    "certify_epsilon",
    "dual_residual",
    "perturbation_monotonicity",
    "primal_residual",
    "weak_duality_check",
    "__version__",
]
