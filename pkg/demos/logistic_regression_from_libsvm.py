"""
Logistic regression on a LIBSVM file
====================================

Loads a file in LIBSVM format, splits the rows across agents and runs the
method with the derived gossip count and with a fixed T = 5. With few rows per
agent the local functions differ a lot, and five rounds leave a consensus
floor that stops progress.

Pass a path to a full dataset (e.g. a9a) as the first argument; the default
is the small sample shipped with the tests.
"""

import sys
from pathlib import Path

import numpy as np

from daccgd import graphs, mixing, objectives as ob, optimizer as op

path = Path(sys.argv[1]) if len(sys.argv) > 1 else \
    Path(__file__).resolve().parents[1] / "tests" / "data" / "a9a_sample.txt"
rows, labels = ob.load_libsvm(path)
print(f"{rows.shape[0]} rows, {rows.shape[1]} features, {rows.nnz} nonzeros")

locals_ = ob.partition_dataset(rows, labels, 20, scheme="shuffled", seed=0,
                               kind="logistic", theta=0.01)
p = ob.ProblemInstance(locals_)
seq = graphs.random_geometric(20, radius=0.5, seed=0)
est = mixing.estimate_contraction(seq, tau=1)
x0 = np.zeros(p.d)
x_star, f_star = ob.minimizer_oracle(p)

for T in (None, 5):
    plan = op.plan_parameters(p, est, 1e-6, x0, x_star, T=T)
    tr = op.run_daccgd(p, seq, plan.algo_params(), x0, 2000, x_star, f_star)
    print(f"T = {plan.T:4d}: {len(tr) - 1} outer steps, final gap {tr.f_gap[-1]:.2e}, "
          f"consensus error {tr.consensus_err[-1]:.2e}")
