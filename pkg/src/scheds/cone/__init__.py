"""Second-order cone programs: representation and two solvers."""

from .cones import ProductCone, soc_project
from .program import (
    BlockRows,
    ConeProgram,
    constraint_violations,
    dump_program,
    load_program,
    residuals,
)
from .solution import ConeSolution, SolverConfig
from .solve import solve

__all__ = [
    "BlockRows",
    "ConeProgram",
    "ConeSolution",
    "ProductCone",
    "SolverConfig",
    "constraint_violations",
    "dump_program",
    "load_program",
    "residuals",
    "soc_project",
    "solve",
]
