"""Decentralized accelerated gradient descent over time-varying networks."""

from . import consensus, graphs, mixing, objectives, optimizer, theory
from .consensus import ConsensusCounter, consensus as gossip, consensus_error
from .graphs import (EdgeSet, GraphSequence, edge_set_at, is_union_connected, random_geometric,
                     static, tau_connected)
from .mixing import (ContractionEstimate, MixingMatrix, contraction_factor_static,
                     estimate_contraction, metropolis_weights, verify_mixing)
from .objectives import (LogisticL2, ProblemInstance, QuadraticBlock, average_gradient,
                         compute_constants, minimizer_oracle, parse_libsvm, partition_dataset,
                         stacked_gradient)
from .optimizer import (AlgoParams, CoefficientState, PlannedParameters, RunTrace, next_coefficients,
                        plan_parameters, run_daccgd, run_inexact_gd)

__version__ = "0.1.0"
