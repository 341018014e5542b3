"""Exact differential algebra for a nonisospectral 2+1 hierarchy of
Camassa-Holm type: the linear pair and its compatibility closure, the
transversal symmetry families, the registry of reductions to 1+1 form,
and a randomized numeric oracle that cross-checks every asserted zero.
"""

from .expr import (
    Expr,
    FunctionSymbol,
    add,
    diff,
    diff_multi,
    epow,
    equal,
    is_zero,
    jet,
    make_exp,
    make_log,
    mul,
    par,
    rat,
    scale,
    sub,
    substitute,
    sym_ref,
    var,
)
from .equations import Equation, PDESystem
from .parser import parse, render, render_latex
from .lax import (
    Hierarchy,
    LaxPair,
    apply_J,
    apply_K,
    build_ch_lax,
    check_recursion_form,
    compatibility,
    hierarchy_from_pair,
    specialize_flow,
)
from .numeric import OracleError, ZeroCert, ZeroOracle
from .symmetry import (
    SymmetryCandidate,
    SymmetryReport,
    t_mode_family,
    verify_symmetry,
    x_mode_family,
    y_mode_family,
)
from .reduction import (
    CASE_IDS,
    CaseReport,
    appendix_equivalence,
    build_case,
    case_registry,
    export_cases,
    import_cases,
    reflection_check,
    verify_case,
    verify_section6,
)
from .report import Report, RunConfig, run

__version__ = "0.1.0"

__all__ = [
    "Expr",
    "FunctionSymbol",
    "add",
    "diff",
    "diff_multi",
    "epow",
    "equal",
    "is_zero",
    "jet",
    "make_exp",
    "make_log",
    "mul",
    "par",
    "rat",
    "render",
    "scale",
    "sub",
    "substitute",
    "sym_ref",
    "var",
    "Equation",
    "PDESystem",
    "parse",
    "render",
    "render_latex",
    "Hierarchy",
    "LaxPair",
    "apply_J",
    "apply_K",
    "build_ch_lax",
    "check_recursion_form",
    "compatibility",
    "hierarchy_from_pair",
    "specialize_flow",
    "OracleError",
    "ZeroCert",
    "ZeroOracle",
    "SymmetryCandidate",
    "SymmetryReport",
    "t_mode_family",
    "verify_symmetry",
    "x_mode_family",
    "y_mode_family",
    "CASE_IDS",
    "CaseReport",
    "appendix_equivalence",
    "build_case",
    "case_registry",
    "export_cases",
    "import_cases",
    "reflection_check",
    "verify_case",
    "verify_section6",
    "Report",
    "RunConfig",
    "run",
]
