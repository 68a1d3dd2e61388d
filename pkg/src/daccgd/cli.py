"""
Command-line experiment runner.

    daccgd run <config>      one optimizer run: trace.csv, meta.json, convergence.svg
    daccgd verify <config>   theory checks: verify_report.txt / verify_report.csv
    daccgd sweep <config>    one run per sweep.kappa_g value plus summary.csv

Exit status is 0 on success, 1 on configuration errors and 2 on numerical
failures. Set ``DACCGD_LOG`` (e.g. ``DEBUG``) to change log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import graphs, mixing, theory
from .config import ConfigError, ExperimentConfig, load_config
from .graphs import GraphGenerationError
from .mixing import NotContractingError, estimate_contraction
from .objectives import (ConvergenceError, NotStronglyConvexError, ProblemInstance, consensual,
                         load_libsvm, minimizer_oracle, partition_dataset, synthetic_least_squares,
                         synthetic_logistic)
from .optimizer import DivergenceError, RunTrace, plan_parameters, run_daccgd, run_inexact_gd
from .plotting import emit_plot

__all__ = ["main", "run_experiment", "build_problem", "build_graph", "write_trace_csv",
           "TRACE_HEADER"]

log = logging.getLogger("daccgd")

TRACE_HEADER = ("iter", "grad_evals", "comm_rounds", "f_gap", "consensus_err_sq")
NUMERICAL_ERRORS = (DivergenceError, ConvergenceError, NotContractingError, NotStronglyConvexError,
                    GraphGenerationError, np.linalg.LinAlgError)


def build_problem(cfg: ExperimentConfig, kappa_g: float | None = None) -> ProblemInstance:
    pr = cfg.problem
    if pr.kind == "synthetic-quadratic":
        return synthetic_least_squares(pr.agents, pr.dim, kappa_g or pr.kappa_g, seed=cfg.seed,
                                       spread=pr.spread, heterogeneity=pr.heterogeneity,
                                       noise=pr.noise)
    if pr.kind == "synthetic-logistic":
        return synthetic_logistic(pr.agents, pr.dim, pr.rows_per_agent, pr.theta, seed=cfg.seed)
    binary = pr.kind == "logistic"
    rows, labels = load_libsvm(cfg.dataset_path(), binary=binary)
    kind = "logistic" if binary else "least-squares"
    return ProblemInstance(partition_dataset(rows, labels, pr.agents, pr.partition, cfg.seed,
                                             kind=kind, theta=pr.theta))


def build_graph(cfg: ExperimentConfig, n: int) -> graphs.GraphSequence:
    g = cfg.graph
    seed = cfg.seed if g.seed is None else g.seed
    if g.kind == "static":
        return graphs.static(n, g.topology, seed)
    if g.kind == "random-geometric":
        return graphs.random_geometric(n, g.radius, seed)
    if g.kind == "per-step-connected":
        return graphs.per_step_connected(n, seed, g.extra_prob)
    return graphs.tau_connected(n, g.tau, seed, base=g.base, extra_prob=g.extra_prob)


def write_trace_csv(trace: RunTrace, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for it, ge, cr, gap, cons in trace.rows():
            w.writerow([it, ge, cr, repr(float(gap)), repr(float(cons))])
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n",
                          encoding="utf-8")


def _single_run(cfg: ExperimentConfig, out: Path, kappa_g: float | None = None,
                plot: bool = True, max_outer: int | None = None) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    p = build_problem(cfg, kappa_g)
    seq = build_graph(cfg, p.n)
    contraction = estimate_contraction(seq, seq.tau, cfg.graph.horizon)
    x0 = np.zeros(p.d)
    x_star, f_star = minimizer_oracle(p)
    al = cfg.algorithm
    tp = plan_parameters(p, contraction, al.epsilon, x0, x_star, T=al.T)
    cap = max_outer or al.max_outer
    if al.name == "daccgd":
        trace = run_daccgd(p, seq, tp.algo_params(), x0, cap or tp.N, x_star, f_star,
                           early_stop=al.early_stop, step_form=al.step_form)
    else:
        gamma = al.gamma or 1.0 / p.constants.L_l
        trace = run_inexact_gd(p, seq, gamma, tp.T, cap or 10 * tp.N, x0,
                               al.epsilon if al.early_stop else None, x_star, f_star)
    log.info("%s: %d outer iterations, final gap %.3e", al.name, len(trace) - 1, trace.f_gap[-1])
    write_trace_csv(trace, out / "trace.csv")
    meta = {
        "algorithm": al.name,
        "graph": seq.describe(),
        "constants": p.constants.as_dict(),
        "parameters": tp.as_dict(),
        "outer_iterations": len(trace) - 1,
        "final_f_gap": trace.f_gap[-1],
        "grad_evals_to_eps": trace.evals_to_gap(al.epsilon),
        "comm_rounds_total": trace.comm_rounds[-1],
        "f_star": f_star,
    }
    _write_json(meta, out / "meta.json")
    if plot:
        emit_plot([trace], out / "convergence.svg", title=f"{al.name}, n={p.n}")
    return {"trace": trace, "meta": meta, "params": tp}


def _verify(cfg: ExperimentConfig, out: Path) -> list:
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    p = build_problem(cfg)
    seq = build_graph(cfg, p.n)
    reports = []

    # mixing matrices over the horizon
    bad = 0
    worst = 0.0
    for k in range(cfg.graph.horizon):
        rep = mixing.verify_mixing(mixing.metropolis_weights(seq.edge_set_at(k)), 1e-12)
        bad += not rep.passed
        worst = max(worst, max(w for _, w in rep.checks.values()))
    reports.append(theory.CheckReport("mixing_matrices", -worst if worst else 0.0, cfg.graph.horizon, bad,
                                      tol=-1e-12))

    contraction = estimate_contraction(seq, seq.tau, cfg.graph.horizon)
    reports.append(theory.check_contraction(seq, contraction.lam, rng=rng,
                                            windows=min(cfg.graph.horizon, 50)))

    params = plan_parameters(p, contraction, cfg.algorithm.epsilon, np.zeros(p.d), T=cfg.algorithm.T)
    reports.append(theory.check_coefficient_bounds(params.L, params.mu, 1000))

    x_star, f_star = minimizer_oracle(p)
    trace = run_daccgd(p, seq, params.algo_params(), np.zeros(p.d), params.N, x_star, f_star,
                       step_form=cfg.algorithm.step_form)

    parts = []
    for _ in range(cfg.verify.instances):
        xbar = x_star + rng.standard_normal(p.d)
        noise = rng.standard_normal((p.n, p.d))
        noise -= noise.mean(axis=0)
        X = consensual(xbar, p.n) + noise * np.sqrt(0.99 * params.delta_prime) / np.linalg.norm(noise)
        ys = theory.sample_ball(xbar, 10 * np.linalg.norm(xbar - x_star), cfg.verify.points, rng)
        parts.append(theory.check_model_inequality(p, X, ys, params.delta_prime))
    reports.append(theory.CheckReport("model_inequality", min(r.worst_slack for r in parts),
                                      sum(r.n_checked for r in parts),
                                      sum(r.violations for r in parts)))
    reports.append(theory.check_lemma3_bound(trace, params.delta, params.mu))
    reports.append(theory.check_lemma4_sufficiency(trace, params.delta_prime, params.D))
    reports.append(theory.check_consensus_maintenance(trace, params.delta_prime))

    (out / "verify_report.txt").write_text(theory.reports_to_text(reports), encoding="utf-8")
    (out / "verify_report.csv").write_text(theory.reports_to_csv(reports), encoding="utf-8")
    _write_json({"parameters": params.as_dict(), "graph": seq.describe(),
                 "constants": p.constants.as_dict()}, out / "meta.json")
    return reports


def _sweep_job(args):
    cfg, out, kappa, plot, max_outer = args
    res = _single_run(cfg, out, kappa, plot, max_outer)
    tr = res["trace"]
    eps = cfg.algorithm.epsilon
    to_eps = tr.evals_to_gap(eps)
    rounds = None
    if to_eps is not None:
        rounds = tr.comm_rounds[tr.grad_evals.index(to_eps)]
    return {"kappa_g": kappa, "grad_evals_to_eps": to_eps, "comm_rounds_to_eps": rounds,
            "N": res["params"].N, "T": res["params"].T}


def _sweep(cfg: ExperimentConfig, out: Path, plot: bool, max_outer) -> list:
    if cfg.problem.kind != "synthetic-quadratic":
        raise ConfigError("sweep mode needs problem.kind = synthetic-quadratic")
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, out / f"kappa_{k:g}", k, plot, max_outer) for k in cfg.sweep.kappa_g]
    if cfg.sweep.workers > 1:
        with ProcessPoolExecutor(cfg.sweep.workers) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(j) for j in jobs]
    with (out / "summary.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kappa_g", "grad_evals_to_eps", "comm_rounds_to_eps", "N", "T"])
        for r in rows:
            w.writerow([repr(r["kappa_g"]), r["grad_evals_to_eps"], r["comm_rounds_to_eps"],
                        r["N"], r["T"]])
    return rows


def run_experiment(cfg: ExperimentConfig, output_dir=None, plot: bool = True,
                   max_outer: int | None = None):
    """Execute ``cfg`` according to its mode and write artifacts to disk."""
    out = Path(output_dir) if output_dir is not None else Path(cfg.output)
    if cfg.mode == "run":
        return _single_run(cfg, out, plot=plot, max_outer=max_outer)
    if cfg.mode == "verify":
        return _verify(cfg, out)
    return _sweep(cfg, out, plot, max_outer)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="daccgd", description=__doc__.split("\n\n")[0].strip())
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in ("run", "verify", "sweep"):
        sp = sub.add_parser(verb)
        sp.add_argument("config", help="TOML experiment config")
        sp.add_argument("--output-dir", help="override the config's output directory")
        sp.add_argument("--seed", type=int, help="override the config's seed")
        sp.add_argument("--no-plot", action="store_true", help="skip convergence.svg")
        sp.add_argument("--max-outer", type=int, help="cap on outer iterations")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("DACCGD_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = dataclasses.replace(cfg, mode=args.verb)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.max_outer is not None and args.max_outer < 1:
            raise ConfigError("--max-outer must be >= 1")
        result = run_experiment(cfg, args.output_dir, plot=not args.no_plot,
                                max_outer=args.max_outer)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    if args.verb == "verify":
        print(theory.reports_to_text(result), end="")
        return 0 if all(r.passed for r in result) else 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
