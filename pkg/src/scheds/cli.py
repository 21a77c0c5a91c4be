"""Command-line interface.

    scheds fit        --data FILE --response COL --covariates A,B,...
    scheds predict    --model model.json --data FILE
    scheds bench      --preset table1 --trials 10 --seed 7
    scheds diagnose   --model model.json --data FILE [--gre --N 2]
    scheds socp-solve program.txt

Options may also come from ``--config file.json`` (keys are the long option
names with dashes replaced by underscores); command-line flags win over the
file, the file over built-in defaults.  The resolved configuration is written
to ``<out>/config.json``.  ``<out>`` defaults to ``$SCHEDS_OUTPUT_DIR`` or
``./scheds_out``.

Exit codes: 0 success, 1 input or configuration error, 2 solver did not
reach optimality (partial results are still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import platform
import sys

import numpy as np
import scipy

from . import __version__
from .cone import SolverConfig, load_program, solve
from .diagnostics import gre_probe, ks_test, theory_constants
from .estimator import (ScHeDsEstimate, ScHeDsProblem, SolverError, assemble_program, bias_correct,
                        check_feasible, fit, predict, saturation_residual)
from .features import (GSOD_MAPPING, build_temperature_design, build_variance_dictionary, load_csv,
                       load_mapping, temperature_covariates)
from .model import GroupPartition, RegressionData, normalize_columns
from .synth import TABLE1_CONFIGS, SynthConfig, run_benchmark, timing_profile

log = logging.getLogger("scheds")

OUTPUT_ENV = "SCHEDS_OUTPUT_DIR"
TEMPERATURE_FIELDS = ("temp", "max", "min", "wind")


class InputError(Exception):
    """Bad input or configuration (exit code 1)."""


# -- options ---------------------------------------------------------------------

def _csv_list(text):
    return [s.strip() for s in str(text).split(",") if s.strip()]


_SOLVER_DEFAULTS = {"solver": "interior_point", "tol": None, "max_iter": None}
_DATA_DEFAULTS = {"data": None, "response": None, "covariates": [], "time": None,
                  "variance_columns": [], "recipe": "linear", "mapping": None, "delimiter": ","}

DEFAULTS = {
    "fit": {**_DATA_DEFAULTS, **_SOLVER_DEFAULTS, "lambda_mode": "scaled_sqrt_rank", "lambda0": None,
            "eps": 0.1, "bound_ly": None, "bound_mu": None, "bias_correct": False,
            "normalize": True},
    "predict": {"model": None, "data": None, "delimiter": ",", "mapping": None},
    "bench": {**_SOLVER_DEFAULTS, "preset": None, "T": None, "p": None, "s": None, "sigma": None,
              "trials": 100, "seed": 0, "jobs": 1, "methods": ["ScHeDs", "SqrtLasso"],
              "timing": False, "p_values": [200, 1000]},
    "diagnose": {"model": None, "data": None, "delimiter": ",", "mapping": None, "gre": False,
                 "N": 1, "budget": 200, "seed": 0, "test_fraction": 0.0},
    "socp-solve": {**_SOLVER_DEFAULTS, "program": None},
}


def _add_solver(p):
    p.add_argument("--solver", choices=["interior_point", "first_order", "ip", "ofo"],
                   help="cone solver (default interior_point)")
    p.add_argument("--tol", type=float, help="solver tolerance (solver default if omitted)")
    p.add_argument("--max-iter", type=int, help="iteration cap (solver default if omitted)")


def _add_data(p, response=True):
    p.add_argument("--data", help="CSV file with a header row")
    p.add_argument("--delimiter", help="CSV delimiter (default ',')")
    p.add_argument("--mapping", help="column mapping JSON file, or 'gsod'")
    if response:
        p.add_argument("--response", help="response column (linear recipe)")
        p.add_argument("--covariates", type=_csv_list, help="comma-separated covariate columns")
        p.add_argument("--time", help="time column (default: row number)")
        p.add_argument("--variance-columns", type=_csv_list,
                       help="non-negative columns forming R (default: a column of ones)")
        p.add_argument("--recipe", choices=["linear", "temperature"],
                       help="design recipe: raw covariates with one group per column, or the "
                            "daily-temperature dictionaries (default linear)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scheds", description=__doc__.split("\n\n")[0],
                                     argument_default=argparse.SUPPRESS)
    parser.add_argument("--version", action="version", version=f"scheds {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file of option values")
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./scheds_out)")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress")

    p = sub.add_parser("fit", help="fit ScHeDs on CSV data", argument_default=argparse.SUPPRESS)
    common(p)
    _add_data(p)
    _add_solver(p)
    p.add_argument("--lambda-mode", choices=["scaled_sqrt_rank", "theorem2"],
                   help="penalty rule (default scaled_sqrt_rank)")
    p.add_argument("--lambda0", type=float, help="lambda0 for scaled_sqrt_rank (default sqrt(2 log p))")
    p.add_argument("--eps", type=float, help="confidence level for theorem2 (default 0.1)")
    p.add_argument("--bound-ly", type=float, help="bound on |mean| / scale")
    p.add_argument("--bound-mu", type=float, help="upper bound on the inverse scale")
    p.add_argument("--bias-correct", action="store_true", help="refit on the selected groups")
    p.add_argument("--no-normalize", dest="normalize", action="store_false",
                   help="keep raw column norms")

    p = sub.add_parser("predict", help="predict mean and scale for new rows",
                       argument_default=argparse.SUPPRESS)
    common(p)
    p.add_argument("--model", help="model JSON written by 'fit'")
    _add_data(p, response=False)

    p = sub.add_parser("bench", help="synthetic benchmark", argument_default=argparse.SUPPRESS)
    common(p)
    _add_solver(p)
    p.add_argument("--preset", choices=["table1"], help="run all nine reference settings")
    p.add_argument("--T", type=int, help="sample size")
    p.add_argument("--p", type=int, help="dimension")
    p.add_argument("--s", type=int, help="sparsity s*")
    p.add_argument("--sigma", type=float, help="noise level sigma*")
    p.add_argument("--trials", type=int, help="trials per setting (default 100)")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p.add_argument("--methods", type=_csv_list, help="subset of ScHeDs,SqrtLasso")
    p.add_argument("--timing", action="store_true",
                   help="also measure seconds per solver iteration across --p-values")
    p.add_argument("--p-values", type=lambda s: [int(v) for v in _csv_list(s)],
                   help="dimensions for --timing (default 200,1000)")

    p = sub.add_parser("diagnose", help="residual KS test, constants and GRE probe",
                       argument_default=argparse.SUPPRESS)
    common(p)
    p.add_argument("--model", help="model JSON written by 'fit'")
    _add_data(p, response=False)
    p.add_argument("--gre", action="store_true", help="run the GRE probe")
    p.add_argument("--N", type=int, help="GRE subset size (default 1)")
    p.add_argument("--budget", type=int, help="GRE directions per subset (default 200)")
    p.add_argument("--seed", type=int, help="GRE seed (default 0)")
    p.add_argument("--test-fraction", type=float,
                   help="use the last fraction of rows for the KS test (default 0: all rows)")

    p = sub.add_parser("socp-solve", help="solve a plain-text cone program dump",
                       argument_default=argparse.SUPPRESS)
    common(p)
    p.add_argument("program", nargs="?", help="program file")
    _add_solver(p)
    return parser


def resolve(command: str, ns: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    given = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "out", "verbose")}
    cfg = dict(DEFAULTS[command])
    path = getattr(ns, "config", None)
    if path:
        try:
            with open(path) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {path}: {exc}") from None
        if not isinstance(from_file, dict):
            raise InputError(f"config {path} must hold a JSON object")
        unknown = sorted(set(from_file) - set(cfg))
        if unknown:
            raise InputError(f"unknown config keys for {command}: {', '.join(unknown)}")
        cfg.update(from_file)
    cfg.update(given)
    return cfg


def _out_dir(ns) -> str:
    out = getattr(ns, "out", None) or os.environ.get(OUTPUT_ENV) or "scheds_out"
    os.makedirs(out, exist_ok=True)
    return out


def provenance(command: str, cfg: dict) -> dict:
    return {
        "command": command,
        "config": cfg,
        "seed": cfg.get("seed"),
        "versions": {"scheds": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
    }


def _header(prov: dict) -> str:
    return "\n".join([f"scheds {prov['command']}",
                      "config: " + json.dumps(prov["config"], sort_keys=True),
                      "versions: " + json.dumps(prov["versions"], sort_keys=True)])


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_jsonable)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _write_csv(path, header, names, rows):
    with open(path, "w", newline="") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(names)
        for row in rows:
            w.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in row])


def _solver_config(cfg) -> SolverConfig:
    kw = {k: cfg[k] for k in ("tol", "max_iter") if cfg.get(k) is not None}
    try:
        return SolverConfig(cfg.get("solver") or "interior_point", **kw)
    except ValueError as exc:
        raise InputError(str(exc)) from None


# -- design recipes ------------------------------------------------------------------

def _mapping(spec):
    if not spec:
        return None
    if spec == "gsod":
        return GSOD_MAPPING
    return load_mapping(spec)


def build_design(recipe: dict, path, delimiter=",", mapping=None, with_response=True):
    """``(X, R, Y, t, partition)`` from a CSV file and a recipe.

    The recipe is stored in the model file, so ``predict`` and ``diagnose``
    rebuild exactly the design used for fitting.
    """
    kind = recipe.get("recipe", "linear")
    if kind == "temperature":
        names = recipe.get("fields") or list(TEMPERATURE_FIELDS)
        ds = load_csv(path, names[0], names[1:], delimiter=delimiter, mapping=mapping)
        temp = ds.response
        tmax, tmin, wind = (ds.columns[n] for n in names[1:])
        t, U, y = temperature_covariates(temp, tmax, tmin, wind, lags=int(recipe.get("lags", 7)))
        X, partition = build_temperature_design(t, U)
        return X, build_variance_dictionary(t), y, t, partition
    if kind != "linear":
        raise InputError(f"unknown design recipe {kind!r}")
    covs = list(recipe.get("covariates") or [])
    if not covs:
        raise InputError("the linear recipe needs --covariates")
    vcols = list(recipe.get("variance_columns") or [])
    response = recipe.get("response")
    if with_response and not response:
        raise InputError("--response is required")
    if response and with_response:
        ds = load_csv(path, response, covs + vcols, recipe.get("time"), delimiter, mapping)
        Y = ds.response
    else:
        # prediction: the response column may be absent; anchor rows on a covariate
        ds = load_csv(path, covs[0], covs + vcols, recipe.get("time"), delimiter, mapping)
        Y = None
        if response:
            try:
                Y = load_csv(path, response, covs + vcols, recipe.get("time"), delimiter,
                             mapping).response
            except ValueError:
                Y = None
    X = ds.matrix(covs)
    R = ds.matrix(vcols) if vcols else np.ones((ds.T, 1))
    if ds.dropped:
        log.warning("%s: dropped %d incomplete rows", path, ds.dropped)
    return X, R, Y, ds.t, GroupPartition.singletons(len(covs))


def _recipe_from_cfg(cfg) -> dict:
    rec = {"recipe": cfg["recipe"]}
    if cfg["recipe"] == "linear":
        rec.update(response=cfg["response"], covariates=list(cfg["covariates"]),
                   variance_columns=list(cfg["variance_columns"]), time=cfg["time"])
    return rec


def _load_model(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read model {path}: {exc}") from None
    if "recipe" not in d:
        raise InputError(f"{path}: model has no design recipe")
    return ScHeDsEstimate.from_dict(d), d["recipe"], d


# -- commands ------------------------------------------------------------------------

def cmd_fit(cfg, out, prov) -> int:
    if not cfg.get("data"):
        raise InputError("--data is required")
    recipe = _recipe_from_cfg(cfg)
    mapping = _mapping(cfg.get("mapping"))
    X, R, Y, t, partition = build_design(recipe, cfg["data"], cfg["delimiter"], mapping)
    if cfg["normalize"]:
        Xs, scaling = normalize_columns(X)
    else:
        Xs, scaling = X, None
    data = RegressionData(Xs, Y, R, partition, scaling)
    problem = ScHeDsProblem.build(data, mode=cfg["lambda_mode"], lambda0=cfg["lambda0"], eps=cfg["eps"],
                                  bound_Ly=cfg["bound_ly"], bound_mu_star=cfg["bound_mu"])
    solver = _solver_config(cfg)
    code = 0
    try:
        est = fit(problem, config=solver)
    except SolverError as exc:
        est = exc.estimate
        est.notes.append(f"non-optimal: {exc}")
        print(f"scheds fit: {exc}", file=sys.stderr)
        code = 2
    stage1 = est
    if code == 0 and cfg["bias_correct"]:
        est = bias_correct(problem, est, solver)
    slacks = check_feasible(problem, stage1.phi_hat, stage1.alpha_hat, stage1.v_hat, stage1.u_hat)
    model = est.to_dict()
    model["optimal"] = code == 0
    model["recipe"] = recipe
    model["provenance"] = prov
    _write_json(os.path.join(out, "model.json"), model)
    _write_json(os.path.join(out, "slacks.json"),
                {"provenance": prov,
                 "min_slack": {k: float(np.min(v)) if np.size(v) else None for k, v in slacks.items()},
                 "slacks": {k: np.asarray(v).tolist() for k, v in slacks.items()}})
    sat = saturation_residual(problem, stage1)
    sat_rel = saturation_residual(problem, stage1, relative=True)
    _write_json(os.path.join(out, "saturation.json"),
                {"provenance": prov, "residual": sat.tolist(), "relative": sat_rel.tolist()})
    print(json.dumps({"status": stage1.solver_report.get("status"), "stage": est.stage,
                      "selected_groups": est.selected_groups, "out": out}))
    return code


def cmd_predict(cfg, out, prov) -> int:
    if not cfg.get("model") or not cfg.get("data"):
        raise InputError("--model and --data are required")
    est, recipe, _ = _load_model(cfg["model"])
    X, R, _, t, _ = build_design(recipe, cfg["data"], cfg["delimiter"], _mapping(cfg.get("mapping")),
                                 with_response=False)
    if X.shape[1] != est.phi_hat.size:
        raise InputError(f"model expects {est.phi_hat.size} features, data gives {X.shape[1]}")
    mean, sigma = predict(est, X, R, raw=True)
    path = os.path.join(out, "predictions.csv")
    _write_csv(path, _header(prov), ["t", "y_hat", "sigma_hat"],
               zip(np.asarray(t, dtype=float), np.atleast_1d(mean), np.atleast_1d(sigma)))
    print(json.dumps({"rows": int(np.size(mean)), "out": path}))
    return 0


def cmd_bench(cfg, out, prov) -> int:
    if cfg.get("preset") == "table1":
        settings = TABLE1_CONFIGS
    else:
        vals = [cfg.get(k) for k in ("T", "p", "s", "sigma")]
        if any(v is None for v in vals):
            raise InputError("give --preset table1 or all of --T --p --s --sigma")
        settings = [tuple(vals)]
    try:
        configs = [SynthConfig(int(T), int(p), int(s), float(sg), int(cfg["trials"]), int(cfg["seed"]))
                   for T, p, s, sg in settings]
    except ValueError as exc:
        raise InputError(str(exc)) from None
    try:
        report = run_benchmark(configs, _solver_config(cfg), int(cfg["jobs"]), tuple(cfg["methods"]))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    header = _header(prov)
    paths = report.write_csv(out, header)
    report.write_json(os.path.join(out, "bench.json"), prov)
    for c, m, row in report.rows():
        print(f"{c.key:>18s} {m:>10s}  beta_err {row['beta_err_mean']:.3f} ({row['beta_err_std']:.3f})"
              f"  s_err {row['s_err_mean']:.2f} ({row['s_err_std']:.2f})"
              f"  10|sigma err| {row['sigma_err10_mean']:.2f} ({row['sigma_err10_std']:.2f})"
              f"  failed {row['failed']}")
    if cfg.get("timing"):
        rows = timing_profile(cfg["p_values"], seed=int(cfg["seed"]))
        names = list(rows[0])
        _write_csv(os.path.join(out, "timing.csv"), header, names, [[r[k] for k in names] for r in rows])
        paths.append(os.path.join(out, "timing.csv"))
    print(json.dumps({"files": paths}))
    if report.failed:
        print("scheds bench: more than 2% of trials failed for some setting", file=sys.stderr)
        return 2
    return 0


def cmd_diagnose(cfg, out, prov) -> int:
    if not cfg.get("model") or not cfg.get("data"):
        raise InputError("--model and --data are required")
    est, recipe, _ = _load_model(cfg["model"])
    X, R, Y, t, partition = build_design(recipe, cfg["data"], cfg["delimiter"],
                                         _mapping(cfg.get("mapping")))
    if X.shape[1] != est.phi_hat.size or R.shape[1] != est.alpha_hat.size:
        raise InputError("data do not match the model's design")
    Xs = est.scaling.apply(X) if est.scaling is not None else X
    frac = float(cfg["test_fraction"])
    if not 0.0 <= frac < 1.0:
        raise InputError("--test-fraction must lie in [0, 1)")
    rows = np.arange(Y.size)
    if frac > 0:
        rows = rows[int(round((1 - frac) * Y.size)):]
    Ra = R @ est.alpha_hat
    resid = Y * Ra - Xs @ est.phi_hat
    try:
        D, pval = ks_test(resid[rows])
    except ValueError as exc:
        raise InputError(f"KS test: {exc}") from None
    report = {"provenance": prov, "ks": {"statistic": D, "p_value": pval, "n": int(rows.size)}}
    try:
        report["constants_plugin"] = theory_constants(Xs, R, est.phi_hat, est.alpha_hat).to_dict()
    except ValueError as exc:
        report["constants_plugin"] = {"error": str(exc)}
    if cfg.get("gre"):
        lam = est.rule.values if est.rule is not None else 1.0
        try:
            res = gre_probe(Xs, partition, lam, int(cfg["N"]), int(cfg["budget"]), int(cfg["seed"]))
        except ValueError as exc:
            raise InputError(f"GRE probe: {exc}") from None
        report["gre"] = res.to_dict()
    _write_json(os.path.join(out, "diagnostics.json"), report)
    mean = (Xs @ est.phi_hat) / Ra
    _write_csv(os.path.join(out, "plot_series.csv"), _header(prov),
               ["t", "observed", "mean_hat", "sigma_hat"], zip(np.asarray(t, float), Y, mean, 1.0 / Ra))
    print(json.dumps({k: v for k, v in report.items() if k != "provenance"}, default=_jsonable)[:2000])
    return 0


def cmd_socp_solve(cfg, out, prov) -> int:
    if not cfg.get("program"):
        raise InputError("program file required")
    try:
        program = load_program(cfg["program"])
    except OSError as exc:
        raise InputError(str(exc)) from None
    sol = solve(program, _solver_config(cfg))
    summary = sol.summary()
    _write_json(os.path.join(out, "solution.json"),
                {"provenance": prov, **summary, "x": sol.x.tolist()})
    print(json.dumps(summary))
    return 0 if sol.optimal else 2


COMMANDS = {"fit": cmd_fit, "predict": cmd_predict, "bench": cmd_bench, "diagnose": cmd_diagnose,
            "socp-solve": cmd_socp_solve}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(ns.command, ns)
        out = _out_dir(ns)
        prov = provenance(ns.command, cfg)
        _write_json(os.path.join(out, "config.json"), prov)
        return COMMANDS[ns.command](cfg, out, prov)
    except (InputError, ValueError, KeyError, FileNotFoundError) as exc:
        if isinstance(exc, FileNotFoundError):
            msg = f"file not found: {exc.filename or exc}"
        elif isinstance(exc, KeyError) and exc.args:
            msg = exc.args[0]
        else:
            msg = exc
        print(f"scheds {ns.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
