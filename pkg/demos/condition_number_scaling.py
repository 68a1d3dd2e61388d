"""
Gradient evaluations versus condition number
============================================

The number of gradient evaluations per node needed to reach a fixed accuracy
should grow like sqrt(kappa_g). We sweep kappa_g over four decades on one
graph and fit the slope on a log-log scale.
"""

import numpy as np

from daccgd import graphs, mixing, objectives as ob, optimizer as op

seq = graphs.random_geometric(20, radius=0.5, seed=7)
est = mixing.estimate_contraction(seq, tau=1)

kappas = np.array([10.0, 1e2, 1e3, 1e4])
evals = []
for k in kappas:
    p = ob.synthetic_least_squares(20, 10, k, seed=0)
    plan = op.plan_parameters(p, est, 1e-6, np.zeros(10))
    tr = op.run_daccgd(p, seq, plan.algo_params(), np.zeros(10), plan.N)
    evals.append(tr.evals_to_gap(1e-6))
    print(f"kappa_g = {k:8.0f}: {evals[-1]:5d} evaluations (N = {plan.N}, T = {plan.T})")

slope = np.polyfit(np.log(kappas), np.log(evals), 1)[0]
print(f"log-log slope {slope:.3f} (sqrt scaling gives 0.5)")
