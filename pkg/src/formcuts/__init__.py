"""Binarized formulations of fixed-charge network problems and the
rank-1 rounding cuts they expose."""

from .branchbound import BnbConfig, BnbResult, solve_mip
from .cutloop import (CutLoopConfig, CutLoopReport, closed_gap_percent,
                      gap_percent, run_cut_loop)
from .cuts import (BaseInequality, Cut, CutPool, base_inequalities_from_row,
                   gmi, mir, separate_formulation_cuts, validate_cut)
from .errors import NumericalBreakdownError, ParseError, ValidationError
from .formulations import FormulationKind, VarMap, build_fct, build_formulation
from .instances import (CmstInstance, FctInstance, bundled_cmst20,
                        build_multigraph, generate_fct, load_instance,
                        parse_cmst, save_instance)
from .lpio import model_from_json, model_to_json, parse_lp, write_lp
from .model import (Constraint, LinearExpr, MipModel, ModelBuilder, Sense,
                    Solution, VarKind, Variable, check_feasibility,
                    lp_relaxation, model_stats)
from .simplex import LpResult, LpStatus, SimplexConfig, solve_lp

__version__ = "0.1.0"

__all__ = [
    "BnbConfig", "BnbResult", "solve_mip",
    "CutLoopConfig", "CutLoopReport", "closed_gap_percent", "gap_percent",
    "run_cut_loop",
    "BaseInequality", "Cut", "CutPool", "base_inequalities_from_row", "gmi",
    "mir", "separate_formulation_cuts", "validate_cut",
    "NumericalBreakdownError", "ParseError", "ValidationError",
    "FormulationKind", "VarMap", "build_fct", "build_formulation",
    "CmstInstance", "FctInstance", "bundled_cmst20", "build_multigraph",
    "generate_fct", "load_instance", "parse_cmst", "save_instance",
    "model_from_json", "model_to_json", "parse_lp", "write_lp",
    "Constraint", "LinearExpr", "MipModel", "ModelBuilder", "Sense",
    "Solution", "VarKind", "Variable", "check_feasibility", "lp_relaxation",
    "model_stats",
    "LpResult", "LpStatus", "SimplexConfig", "solve_lp",
    "__version__",
]
