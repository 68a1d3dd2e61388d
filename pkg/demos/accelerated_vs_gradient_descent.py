"""
Accelerated decentralized descent against the plain baseline
============================================================

Twenty agents on a random geometric graph minimize a least-squares objective
with condition number 100. Round counts and outer iterations come from the
parameter formulas; the baseline takes gradient steps of size 1 / L_l
followed by the same number of gossip rounds.
"""

import sys
from pathlib import Path

import numpy as np

from daccgd import graphs, mixing, objectives as ob, optimizer as op
from daccgd.plotting import emit_plot

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

p = ob.synthetic_least_squares(n=20, d=10, kappa_g=100.0, seed=0)
seq = graphs.random_geometric(20, radius=0.5, seed=7)
est = mixing.estimate_contraction(seq, tau=1)
print(p.constants.as_dict())

x0 = np.zeros(p.d)
plan = op.plan_parameters(p, est, epsilon=1e-6, x0=x0)
print(f"delta' = {plan.delta_prime:.3e}, T = {plan.T}, N = {plan.N}")

acc = op.run_daccgd(p, seq, plan.algo_params(), x0, plan.N)
acc.label = "daccgd"
gd = op.run_inexact_gd(p, seq, 1.0 / p.constants.L_l, plan.T, 10 * plan.N, x0, epsilon=1e-6)
gd.label = "inexact-gd"

for tr in (acc, gd):
    print(f"{tr.label:>10}: {tr.evals_to_gap(1e-6)} gradient evaluations to 1e-6")

# the accelerated gap oscillates but sits under a geometrically shrinking envelope
emit_plot([acc, gd], out / "accelerated_vs_gd.svg", title="kappa_g = 100, n = 20")
print("wrote", out / "accelerated_vs_gd.svg")
