"""Traveling-wave solutions of the reduced (2+1)-dimensional BKP equation
by the G'/(G'+G+A) expansion method, with independent residual checks."""

__version__ = "0.1.0"

from .algebra import ParamPoly, PhiPoly, differentiate, parse, phi_derivative_rule
from .closed_form import (
    ALL_KINDS,
    CaseTag,
    SolutionKind,
    WaveConfig,
    eval_G,
    eval_phi,
    eval_U,
    eval_w,
    poles,
    xi,
)
from .engine import (
    AlgebraicSystem,
    ParamSet,
    ReducedODE,
    SetTag,
    balance_number,
    bkp_reduced_ode,
    bkp_system,
    build_ansatz,
    collect_system,
    p_from_eta,
    paper_parameter_sets,
    solve_system,
)
from .verification import ResidualReport, Target, verify_all

__all__ = [
    "ALL_KINDS", "AlgebraicSystem", "CaseTag", "ParamPoly", "ParamSet", "PhiPoly",
    "ReducedODE", "ResidualReport", "SetTag", "SolutionKind", "Target", "WaveConfig",
    "balance_number", "bkp_reduced_ode", "bkp_system", "build_ansatz", "collect_system",
    "differentiate", "eval_G", "eval_U", "eval_phi", "eval_w", "p_from_eta",
    "paper_parameter_sets", "parse", "phi_derivative_rule", "poles", "solve_system",
    "verify_all", "xi",
]
