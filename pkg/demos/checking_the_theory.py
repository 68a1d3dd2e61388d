"""
Checking the analysis numerically
=================================

Runs every checker in ``daccgd.theory`` on one instance: the inexact oracle
sandwich, coefficient growth, the outer-loop bound, and consensus
maintenance. A second run with a quarter of the required gossip rounds
shows the consensus checks catching the violation.
"""

import numpy as np

from daccgd import graphs, mixing, objectives as ob, optimizer as op, theory as th

rng = np.random.default_rng(0)
p = ob.synthetic_least_squares(n=10, d=4, kappa_g=50.0, seed=3, spread=0.3)
seq = graphs.static(10, "ring")
est = mixing.estimate_contraction(seq, tau=1)
x_star, f_star = ob.minimizer_oracle(p)
plan = op.plan_parameters(p, est, epsilon=1e-6, x0=np.zeros(4), x_star=x_star)

# a state whose consensus error sits just inside delta'
x_bar = x_star + rng.standard_normal(4)
E = rng.standard_normal((10, 4))
E -= E.mean(0)
X = x_bar + E * np.sqrt(0.9 * plan.delta_prime) / np.linalg.norm(E)
ys = th.sample_ball(x_bar, 10 * np.linalg.norm(x_bar - x_star), 1000, rng)

trace = op.run_daccgd(p, seq, plan.algo_params(), np.zeros(4), 200, x_star, f_star,
                      early_stop=False)
reports = [
    th.check_model_inequality(p, X, ys, plan.delta_prime),
    th.check_coefficient_bounds(plan.L, plan.mu),
    th.check_lemma3_bound(trace, plan.delta, plan.mu),
    th.check_lemma4_sufficiency(trace, plan.delta_prime, plan.D),
    th.check_consensus_maintenance(trace, plan.delta_prime),
]
print(th.reports_to_text(reports))

# negative control: too few gossip rounds
short = op.AlgoParams(plan.L, plan.mu, plan.T // 4, plan.delta_prime, plan.epsilon)
bad = op.run_daccgd(p, seq, short, np.zeros(4), 200, x_star, f_star, early_stop=False)
print(th.check_lemma4_sufficiency(bad, plan.delta_prime, plan.D))
