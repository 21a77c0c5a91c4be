"""Fit a heteroscedastic sparse regression and inspect the certificate.

The noise level grows with |x_0|; the mean depends on two of
thirty columns.  One cone program recovers both.
"""

import argparse

import numpy as np

from scheds import (GroupPartition, RegressionData, ScHeDsProblem, bias_correct, check_feasible, fit,
                    normalize_columns, saturation_residual)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=int, default=200)
    ap.add_argument("--p", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    X = rng.standard_normal((args.T, args.p))
    beta = np.zeros(args.p)
    beta[[0, 3]] = [1.0, -0.8]
    level = np.abs(X[:, 0])
    sigma = 0.2 + 0.4 * level
    Y = X @ beta + sigma * rng.standard_normal(args.T)

    # variance dictionary: 1 / sigma is modelled as a non-negative combination
    # of these columns; here a constant and |x_0|
    R = np.column_stack([np.ones(args.T), level])
    Xs, scaling = normalize_columns(X)
    data = RegressionData(Xs, Y, R, GroupPartition.singletons(args.p), scaling)
    problem = ScHeDsProblem.build(data)

    est = fit(problem)
    print(f"solver: {est.solver_report['status']} in {est.solver_report['iterations']} iterations")
    print(f"selected columns: {est.selected_groups}   (true: [0, 3])")

    # alpha is free apart from R alpha > 0; with one variance column the
    # variance-score row is tight at the optimum, with several only some are
    sat = saturation_residual(problem, est, relative=True)
    for l, (a, r) in enumerate(zip(est.alpha_hat, sat)):
        print(f"  variance column {l}: alpha {a:.3e}, relative saturation residual {r:+.1e}")
    slack = min(float(s.min()) for s in check_feasible(problem, est.phi_hat, est.alpha_hat,
                                                          est.v_hat, est.u_hat).values())
    print(f"worst constraint slack {slack:.1e}")

    # second stage removes the shrinkage on the selected columns
    refit = bias_correct(problem, est)
    # mean = X phi / (R alpha); the true mean over the true sigma is X beta / sigma
    err = np.sqrt(np.mean((refit.mean_hat - X @ beta) ** 2))
    corr = np.corrcoef(refit.sigma_hat, sigma)[0, 1]
    print(f"rms error of the fitted mean: {err:.3f} (noise rms {np.sqrt(np.mean(sigma ** 2)):.3f})")
    print(f"correlation of fitted and true noise level: {corr:.3f}")


if __name__ == "__main__":
    main()
