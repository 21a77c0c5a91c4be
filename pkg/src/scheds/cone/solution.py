from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

ALGORITHMS = ("interior_point", "first_order")
STATUSES = ("optimal", "max_iter", "infeasible_suspected")

_DEFAULTS = {
    "interior_point": {"tol": 1e-8, "max_iter": 200},
    "first_order": {"tol": 1e-5, "max_iter": 50000},
}


@dataclass(frozen=True)
class SolverConfig:
    """Solver choice and stopping rule; ``None`` picks the algorithm default."""

    algorithm: str = "interior_point"
    tol: Optional[float] = None
    max_iter: Optional[int] = None
    verbose: bool = False

    def __post_init__(self):
        alias = {"ip": "interior_point", "ofo": "first_order"}
        algo = alias.get(self.algorithm, self.algorithm)
        if algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        object.__setattr__(self, "algorithm", algo)
        if self.tol is None:
            object.__setattr__(self, "tol", _DEFAULTS[algo]["tol"])
        if self.max_iter is None:
            object.__setattr__(self, "max_iter", _DEFAULTS[algo]["max_iter"])
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be >= 1")
        object.__setattr__(self, "max_iter", int(self.max_iter))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ConeSolution:
    x: np.ndarray
    status: str
    objective: float
    primal_residual: float
    gap_proxy: float
    iterations: int
    seconds_per_iteration: float
    algorithm: str = "interior_point"
    z: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def summary(self) -> dict:
        """JSON-ready report without the solution vectors."""
        return {
            "algorithm": self.algorithm,
            "status": self.status,
            "objective": float(self.objective),
            "primal_residual": float(self.primal_residual),
            "gap_proxy": float(self.gap_proxy),
            "iterations": int(self.iterations),
            "seconds_per_iteration": float(self.seconds_per_iteration),
        }
