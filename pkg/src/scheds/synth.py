"""Synthetic sparse-regression benchmark.

Each trial draws a Gaussian design, a randomly placed block of ``s*`` unit
coefficients and homoscedastic Gaussian noise of level ``sigma*``, then runs
two-step (select, refit) ScHeDs and the square-root Lasso and records

    ||beta_hat - beta*||_2,   |s_hat - s*|,   10 |sigma_hat - sigma*|.

Trial ``i`` of a configuration with seed ``s`` uses the Philox stream keyed
by ``(s, i)``, so results do not depend on scheduling.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baselines import sqrt_lasso, sqrt_lasso_bias_correct, universal_lambda
from .cone import SolverConfig, solve
from .estimator import ScHeDsProblem, assemble_program, bias_correct, fit
from .model import GroupPartition, RegressionData, normalize_columns

log = logging.getLogger(__name__)

__all__ = ["SynthConfig", "BenchReport", "generate", "run_trial", "run_benchmark",
           "timing_profile", "TABLE1_CONFIGS", "METHODS", "METRICS"]

METHODS = ("ScHeDs", "SqrtLasso")
METRICS = ("beta_err", "s_err", "sigma_err10")
MAX_FAIL_FRACTION = 0.02

# (T, p, s*, sigma*) settings of the reference table
TABLE1_CONFIGS = [
    (100, 100, 2, 0.5), (100, 100, 5, 0.5), (100, 100, 2, 1.0), (100, 100, 5, 1.0),
    (200, 100, 5, 0.5), (200, 100, 5, 1.0), (200, 500, 8, 0.5), (200, 500, 8, 1.0),
    (200, 1000, 5, 1.0),
]


@dataclass(frozen=True)
class SynthConfig:
    T: int
    p: int
    s_star: int
    sigma_star: float
    trials: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.T < 1 or self.p < 1:
            raise ValueError("T and p must be >= 1")
        if not 1 <= self.s_star <= self.p:
            raise ValueError("s_star must lie in [1, p]")
        if not self.sigma_star > 0:
            raise ValueError("sigma_star must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    @property
    def key(self) -> str:
        return f"{self.T}_{self.p}_{self.s_star}_{self.sigma_star:g}"


def _rng(seed: int, trial_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & (2 ** 64 - 1), int(trial_index)])
    return np.random.Generator(np.random.Philox(ss))


def generate(config: SynthConfig, trial_index: int, rng: Optional[np.random.Generator] = None):
    """``(X, Y, beta_star, phi_star, support)`` for one trial.

    ``Y = X beta* + sigma* xi`` with ``phi* = beta* / sigma*``.
    """
    rng = _rng(config.seed, trial_index) if rng is None else rng
    T, p, s = config.T, config.p, config.s_star
    X = rng.standard_normal((T, p))
    xi = rng.standard_normal(T)
    beta0 = np.zeros(p)
    beta0[:s] = 1.0
    beta = beta0[rng.permutation(p)]
    phi = beta / config.sigma_star
    Y = config.sigma_star * (X @ phi + xi)
    support = np.flatnonzero(beta)
    return X, Y, beta, phi, support


def _scheds_trial(X, Y, solver):
    T, p = X.shape
    Xs, scaling = normalize_columns(X)
    data = RegressionData(Xs, Y, np.ones((T, 1)), GroupPartition.singletons(p), scaling)
    problem = ScHeDsProblem.build(data)
    first = fit(problem, config=solver)
    second = bias_correct(problem, first, solver)
    return second.coef(raw=True), len(second.selected_groups), 1.0 / float(second.alpha_hat[0]), \
        first.solver_report.get("iterations", 0)


def _sqrt_lasso_trial(X, Y, solver):
    T, p = X.shape
    Xs, scaling = normalize_columns(X)
    first = sqrt_lasso(Xs, Y, universal_lambda(p, T), solver)
    second = sqrt_lasso_bias_correct(Xs, Y, first)
    return scaling.to_raw(second.beta_hat), len(second.selected), second.sigma_hat, \
        first.solver_report.get("iterations", 0)


_RUNNERS = {"ScHeDs": _scheds_trial, "SqrtLasso": _sqrt_lasso_trial}


def run_trial(config: SynthConfig, trial_index: int, solver: Optional[SolverConfig] = None,
              methods: Sequence[str] = METHODS) -> list[dict]:
    """Raw records (one per method) for a single trial."""
    solver = solver or SolverConfig()
    X, Y, beta, _, support = generate(config, trial_index)
    out = []
    for name in methods:
        rec = {"config": config.key, "T": config.T, "p": config.p, "s_star": config.s_star,
               "sigma_star": config.sigma_star, "trial": trial_index, "method": name}
        t0 = time.perf_counter()
        try:
            b, s_hat, sigma, iters = _RUNNERS[name](X, Y, solver)
        except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
            rec.update(status="failed", error=str(exc), seconds=time.perf_counter() - t0)
            log.warning("trial %d of %s failed for %s: %s", trial_index, config.key, name, exc)
            out.append(rec)
            continue
        rec.update(status="ok", seconds=time.perf_counter() - t0, iterations=int(iters),
                   s_hat=int(s_hat), sigma_hat=float(sigma),
                   beta_err=float(np.linalg.norm(b - beta)),
                   s_err=float(abs(s_hat - support.size)),
                   sigma_err10=float(10.0 * abs(sigma - config.sigma_star)))
        out.append(rec)
    return out


def _run_chunk(args):
    config, indices, solver, methods = args
    recs = []
    for i in indices:
        recs.extend(run_trial(config, i, solver, methods))
    return recs


@dataclass
class BenchReport:
    configs: list
    records: list
    solver: dict
    summary: dict = field(default_factory=dict)
    notes: list = field(default_factory=lambda: [
        "beta errors are measured in the original (unnormalised) column scale",
        "standard deviations use the population convention (ddof = 0)",
    ])

    def __post_init__(self):
        if not self.summary:
            self.summary = self.aggregate()

    def aggregate(self) -> dict:
        out = {}
        for cfg in self.configs:
            key = cfg.key
            out[key] = {}
            for m in sorted({r["method"] for r in self.records if r["config"] == key}):
                recs = [r for r in self.records if r["config"] == key and r["method"] == m]
                ok = [r for r in recs if r["status"] == "ok"]
                row = {"trials": len(recs), "failed": len(recs) - len(ok)}
                for metric in METRICS:
                    vals = np.array([r[metric] for r in ok], dtype=float)
                    row[f"{metric}_mean"] = float(vals.mean()) if vals.size else float("nan")
                    row[f"{metric}_std"] = float(vals.std()) if vals.size else float("nan")
                secs = np.array([r["seconds"] for r in ok], dtype=float)
                row["seconds_mean"] = float(secs.mean()) if secs.size else float("nan")
                out[key][m] = row
        return out

    @property
    def failed(self) -> bool:
        """True if any configuration/method lost more than 2% of its trials."""
        return any(row["failed"] > MAX_FAIL_FRACTION * row["trials"]
                   for cfg in self.summary.values() for row in cfg.values())

    def rows(self):
        for cfg in self.configs:
            for m, row in self.summary[cfg.key].items():
                yield cfg, m, row

    def write_csv(self, directory, header: str = "") -> list[str]:
        """One file per configuration, ``bench_<T>_<p>_<s>_<sigma>.csv``.

        Wall-clock times are left out so reruns produce identical files;
        they stay in the JSON report.
        """
        os.makedirs(directory, exist_ok=True)
        paths = []
        cols = ["T", "p", "s_star", "sigma_star", "method", "trials", "failed"] + \
            [f"{m}_{s}" for m in METRICS for s in ("mean", "std")]
        for cfg in self.configs:
            path = os.path.join(directory, f"bench_{cfg.key}.csv")
            with open(path, "w", newline="") as fh:
                if header:
                    for line in header.splitlines():
                        fh.write(f"# {line}\n")
                w = csv.writer(fh)
                w.writerow(cols)
                for m, row in self.summary[cfg.key].items():
                    vals = [cfg.T, cfg.p, cfg.s_star, cfg.sigma_star, m, row["trials"], row["failed"]]
                    vals += [f"{row[f'{mt}_{s}']:.6g}" for mt in METRICS for s in ("mean", "std")]
                    w.writerow(vals)
            paths.append(path)
        return paths

    def to_dict(self) -> dict:
        return {"configs": [asdict(c) for c in self.configs], "solver": self.solver,
                "summary": self.summary, "records": self.records, "notes": self.notes}

    def write_json(self, path, provenance: Optional[dict] = None) -> None:
        d = self.to_dict()
        if provenance:
            d = {"provenance": provenance, **d}
        with open(path, "w") as fh:
            json.dump(d, fh, indent=2)


def run_benchmark(configs: Sequence[SynthConfig], solver: Optional[SolverConfig] = None,
                  n_jobs: int = 1, methods: Sequence[str] = METHODS) -> BenchReport:
    """Run every trial of every configuration; records are ordered by
    (configuration, trial, method) whatever ``n_jobs`` is."""
    solver = solver or SolverConfig()
    for m in methods:
        if m not in _RUNNERS:
            raise ValueError(f"unknown method {m!r}")
    jobs = []
    for cfg in configs:
        idx = list(range(cfg.trials))
        chunks = max(1, min(len(idx), 4 * max(1, n_jobs)))
        for part in np.array_split(np.arange(len(idx)), chunks):
            if part.size:
                jobs.append((cfg, [int(i) for i in part], solver, tuple(methods)))
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            parts = list(ex.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    records = [r for part in parts for r in part]
    report = BenchReport(list(configs), records, solver.to_dict())
    for key, per in report.summary.items():
        for m, row in per.items():
            if row["failed"]:
                log.warning("%s / %s: %d of %d trials failed", key, m, row["failed"], row["trials"])
    return report


def timing_profile(p_values: Sequence[int], T: int = 200, s_star: int = 2, sigma_star: float = 0.1,
                   seed: int = 0, ip_iters: int = 3, ofo_iters: int = 300) -> list[dict]:
    """Seconds per iteration of both solvers on one ScHeDs program per ``p``.

    Runs are capped at a few iterations: only per-iteration cost is measured,
    not time to convergence.
    """
    out = []
    for p in p_values:
        X, Y, *_ = generate(SynthConfig(T, p, min(s_star, p), sigma_star, 1, seed), 0)
        Xs, scaling = normalize_columns(X)
        data = RegressionData(Xs, Y, np.ones((T, 1)), GroupPartition.singletons(p), scaling)
        program = assemble_program(ScHeDsProblem.build(data))
        row = {"p": int(p), "T": int(T), "n": program.n, "m": program.m}
        for name, cfg in (("interior_point", SolverConfig("interior_point", max_iter=ip_iters)),
                          ("first_order", SolverConfig("first_order", max_iter=ofo_iters))):
            sol = solve(program, cfg)
            row[f"{name}_seconds_per_iteration"] = sol.seconds_per_iteration
            row[f"{name}_iterations"] = sol.iterations
        out.append(row)
    return out
