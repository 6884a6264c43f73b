from .cbf import export_cbf, parse_cbf, read_cbf, write_cbf
from .program import (ChanceRecord, ConicProgram, ProgramBuilder, RsocBlock, SocBlock,
                      canonical_serialization, program_from_arrays)
from .solver import (INFEASIBLE, ITER_LIMIT, OPTIMAL, UNBOUNDED, BranchBoundParams,
                     ConicSolution, FeasibilityReport, fix_and_reduce, polish, solve_continuous, solve_fixed,
                     solve_misocp, verify_point)

__all__ = [
    "BranchBoundParams", "ChanceRecord", "ConicProgram", "ConicSolution", "FeasibilityReport",
    "INFEASIBLE", "ITER_LIMIT", "OPTIMAL", "ProgramBuilder", "RsocBlock", "SocBlock",
    "UNBOUNDED", "canonical_serialization", "export_cbf", "fix_and_reduce", "parse_cbf", "polish",
    "program_from_arrays", "read_cbf", "solve_continuous", "solve_fixed", "solve_misocp", "verify_point",
    "write_cbf",
]
