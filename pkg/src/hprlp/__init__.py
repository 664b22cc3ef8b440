"""Restarted Halpern Peaceman-Rachford solver for linear programming (CPU)."""

from .core import Iterate, NumericalBreakdownError, SolverState, Variant
from .driver import (KktResidual, SolveReport, SolveStatus, SolverConfig,
                     check_restart, check_termination, kkt_residual,
                     sigma_update, solve)
from .exact import (DenseCholesky, RankDeficiencyError, halpern_padmm_trace,
                    hpr_no_prox_trace, max_trace_gap, solve_equality_exact,
                    solve_normal_equations)
from .mps import (MpsParseError, QapInstance, generate_known_solution_lp,
                  generate_qap_lp, load_mps, parse_mps, write_mps)
from .oracle import (BoundReport, OracleSolution, check_complexity_bound,
                     vertex_enumeration_solve)
from .problem import (LpProblem, PrimalDualPoint, dual_objective,
                      primal_objective, project_onto_box,
                      project_onto_dual_cone)
from .scaling import ScalingInfo, scale_problem
from .sparse import (PowerMethodEstimate, SparseMatrix,
                     power_method_lambda_max, spmv, spmv_t)

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "DenseCholesky", "Iterate", "KktResidual", "LpProblem",
    "MpsParseError", "NumericalBreakdownError", "OracleSolution",
    "PowerMethodEstimate", "PrimalDualPoint", "QapInstance",
    "RankDeficiencyError", "ScalingInfo", "SolveReport", "SolveStatus",
    "SolverConfig", "SolverState", "SparseMatrix", "Variant",
    "check_complexity_bound", "check_restart", "check_termination",
    "dual_objective", "generate_known_solution_lp", "generate_qap_lp",
    "halpern_padmm_trace", "hpr_no_prox_trace", "kkt_residual", "load_mps",
    "max_trace_gap", "parse_mps", "power_method_lambda_max",
    "primal_objective", "project_onto_box", "project_onto_dual_cone",
    "scale_problem", "sigma_update", "solve", "solve_equality_exact",
    "solve_normal_equations", "spmv", "spmv_t", "vertex_enumeration_solve",
    "write_mps",
]
