"""Interior point against the first-order solver on ScHeDs programs.

Per-iteration cost of the interior-point method grows with the cube of the
dimension (dense normal equations); the first-order method only multiplies
by the constraint matrix.  Both reach the same optimum.
"""

import argparse

import numpy as np

from scheds import GroupPartition, RegressionData, ScHeDsProblem, SolverConfig, fit, normalize_columns
from scheds.synth import SynthConfig, generate, timing_profile


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p-values", default="100,200,500,1000")
    ap.add_argument("--T", type=int, default=200)
    args = ap.parse_args()
    ps = [int(v) for v in args.p_values.split(",")]

    # same answer from both solvers on one moderate instance
    X, Y, beta, *_ = generate(SynthConfig(100, 50, 3, 0.5, trials=1), 0)
    Xs, scaling = normalize_columns(X)
    problem = ScHeDsProblem.build(RegressionData(Xs, Y, np.ones((100, 1)), GroupPartition.singletons(50), scaling))
    a = fit(problem)
    b = fit(problem, config=SolverConfig("first_order"))
    print(f"objective IP {a.solver_report['objective']:.6f} in {a.solver_report['iterations']} iterations")
    print(f"objective OFO {b.solver_report['objective']:.6f} in {b.solver_report['iterations']} iterations")
    print(f"supports: IP {a.selected_groups}, OFO {b.selected_groups}\n")

    rows = timing_profile(ps, T=args.T)
    base = rows[0]
    print(f"{'p':>6}{'IP s/iter':>12}{'ratio':>8}{'OFO s/iter':>13}{'ratio':>8}")
    for r in rows:
        ip, ofo = r["interior_point_seconds_per_iteration"], r["first_order_seconds_per_iteration"]
        print(f"{r['p']:>6}{ip:>12.4f}{ip / base['interior_point_seconds_per_iteration']:>8.2f}"
              f"{ofo:>13.6f}{ofo / base['first_order_seconds_per_iteration']:>8.2f}")


if __name__ == "__main__":
    main()
