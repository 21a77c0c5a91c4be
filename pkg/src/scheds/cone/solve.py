from __future__ import annotations

from .first_order import first_order
from .interior import interior_point
from .program import ConeProgram
from .solution import ConeSolution, SolverConfig


def solve(program: ConeProgram, config: SolverConfig | None = None) -> ConeSolution:
    """Solve ``program`` with the algorithm named in ``config``.

    Deterministic: no internal randomness in either algorithm.
    """
    config = config or SolverConfig()
    if config.algorithm == "interior_point":
        return interior_point(program, config.tol, config.max_iter, config.verbose)
    return first_order(program, config.tol, config.max_iter, config.verbose)
