"""
Experiment configuration files.

Configs are TOML documents with up to six tables. Every key is optional
except where noted; unknown keys are rejected. See ``configs/`` in the
repository for complete examples.

.. code-block:: toml

    mode = "run"            # run | verify | sweep
    seed = 0
    output = "out/run"

    [problem]
    kind = "synthetic-quadratic"   # | synthetic-logistic | logistic | least-squares
    agents = 20
    dim = 10
    kappa_g = 100.0
    spread = 0.0
    heterogeneity = 1.0
    noise = 0.1
    dataset = "data/a9a"           # logistic / least-squares only (required there)
    theta = 0.01
    partition = "contiguous"       # | shuffled
    rows_per_agent = 50            # synthetic-logistic only

    [graph]
    kind = "random-geometric"      # static | per-step-connected | tau-connected
    radius = 0.5
    topology = "complete"          # static only
    tau = 2                        # tau-connected only
    base = "random"                # tau-connected: random | ring
    extra_prob = 0.0
    horizon = 200                  # window count for measuring lambda

    [algorithm]
    name = "daccgd"                # | inexact-gd
    epsilon = 1e-6
    T = 5                          # override of the derived round count
    gamma = 0.01                   # inexact-gd step (default 1 / L_l)
    max_outer = 1000               # default: derived N (x10 for inexact-gd)
    early_stop = true
    step_form = "prox"             # | unscaled

    [sweep]
    kappa_g = [10.0, 100.0, 1000.0]
    workers = 1

    [verify]
    instances = 5
    points = 1000
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "ProblemConfig",
    "GraphConfig",
    "AlgorithmConfig",
    "SweepConfig",
    "VerifyConfig",
    "ExperimentConfig",
    "load_config",
    "parse_config",
]

MODES = ("run", "verify", "sweep")
PROBLEM_KINDS = ("synthetic-quadratic", "synthetic-logistic", "logistic", "least-squares")
GRAPH_KINDS = ("static", "random-geometric", "per-step-connected", "tau-connected")
ALGORITHMS = ("daccgd", "inexact-gd")


class ConfigError(ValueError):
    pass


@dataclass
class ProblemConfig:
    kind: str = "synthetic-quadratic"
    agents: int = 20
    dim: int = 10
    kappa_g: float = 100.0
    spread: float = 0.0
    heterogeneity: float = 1.0
    noise: float = 0.1
    dataset: str | None = None
    theta: float = 0.01
    partition: str = "contiguous"
    rows_per_agent: int = 50


@dataclass
class GraphConfig:
    kind: str = "random-geometric"
    radius: float = 0.5
    topology: str = "complete"
    tau: int = 1
    base: str = "random"
    extra_prob: float = 0.0
    horizon: int = 200
    seed: int | None = None


@dataclass
class AlgorithmConfig:
    name: str = "daccgd"
    epsilon: float = 1e-6
    T: int | None = None
    gamma: float | None = None
    max_outer: int | None = None
    early_stop: bool = True
    step_form: str = "prox"


@dataclass
class SweepConfig:
    kappa_g: list = field(default_factory=lambda: [10.0, 100.0, 1000.0])
    workers: int = 1


@dataclass
class VerifyConfig:
    instances: int = 5
    points: int = 1000


@dataclass
class ExperimentConfig:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    algorithm: AlgorithmConfig = field(default_factory=AlgorithmConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    mode: str = "run"
    seed: int = 0
    output: str = "out"
    base_dir: Path = field(default=Path("."), repr=False)

    def dataset_path(self) -> Path | None:
        if self.problem.dataset is None:
            return None
        p = Path(self.problem.dataset)
        return p if p.is_absolute() else self.base_dir / p


_SECTIONS = {"problem": ProblemConfig, "graph": GraphConfig, "algorithm": AlgorithmConfig,
             "sweep": SweepConfig, "verify": VerifyConfig}
_TOP = {"mode": str, "seed": int, "output": str}


def _coerce(where: str, value, default, annotation: str):
    if isinstance(value, bool) and "bool" not in annotation:
        raise ConfigError(f"{where}: expected {annotation}, got boolean")
    if "bool" in annotation:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected boolean, got {value!r}")
        return value
    if annotation.startswith("int"):
        if not isinstance(value, int):
            raise ConfigError(f"{where}: expected integer, got {value!r}")
        return value
    if annotation.startswith("float"):
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected number, got {value!r}")
        return float(value)
    if annotation.startswith("str"):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected string, got {value!r}")
        return value
    if annotation == "list":
        if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                                  for v in value):
            raise ConfigError(f"{where}: expected list of numbers, got {value!r}")
        return [float(v) for v in value]
    return value


def _build(section: str, cls, raw) -> object:
    if not isinstance(raw, dict):
        raise ConfigError(f"[{section}] must be a table")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in fields:
            raise ConfigError(f"unknown key {section}.{key}")
        f = fields[key]
        kwargs[key] = _coerce(f"{section}.{key}", value, f.default, str(f.type))
    return cls(**kwargs)


def _validate(cfg: ExperimentConfig):
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(cfg.mode in MODES, f"mode must be one of {MODES}")
    pr, gr, al = cfg.problem, cfg.graph, cfg.algorithm
    need(pr.kind in PROBLEM_KINDS, f"problem.kind must be one of {PROBLEM_KINDS}")
    need(pr.agents >= 1, "problem.agents must be >= 1")
    need(pr.dim >= 1, "problem.dim must be >= 1")
    need(pr.kappa_g >= 1, "problem.kappa_g must be >= 1")
    need(pr.theta >= 0, "problem.theta must be >= 0")
    need(pr.partition in ("contiguous", "shuffled"), "problem.partition must be contiguous or shuffled")
    if pr.kind in ("logistic", "least-squares"):
        need(pr.dataset is not None, f"problem.dataset is required for kind={pr.kind}")
        path = cfg.dataset_path()
        need(path.exists(), f"dataset not found: {path}")
    if pr.kind in ("logistic", "synthetic-logistic"):
        need(pr.theta > 0, "problem.theta must be > 0 for logistic problems")
    need(gr.kind in GRAPH_KINDS, f"graph.kind must be one of {GRAPH_KINDS}")
    need(gr.tau >= 1, "graph.tau must be >= 1")
    need(gr.radius > 0, "graph.radius must be > 0")
    need(0 <= gr.extra_prob <= 1, "graph.extra_prob must lie in [0, 1]")
    need(gr.horizon >= gr.tau, "graph.horizon must be >= graph.tau")
    need(al.name in ALGORITHMS, f"algorithm.name must be one of {ALGORITHMS}")
    need(al.epsilon > 0, "algorithm.epsilon must be > 0")
    need(al.T is None or al.T >= 1, "algorithm.T must be >= 1")
    need(al.gamma is None or al.gamma > 0, "algorithm.gamma must be > 0")
    need(al.max_outer is None or al.max_outer >= 1, "algorithm.max_outer must be >= 1")
    need(al.step_form in ("prox", "unscaled"), "algorithm.step_form must be prox or unscaled")
    need(len(cfg.sweep.kappa_g) >= 1 and all(k >= 1 for k in cfg.sweep.kappa_g),
         "sweep.kappa_g must be a nonempty list of values >= 1")
    need(cfg.sweep.workers >= 1, "sweep.workers must be >= 1")
    need(cfg.verify.instances >= 1 and cfg.verify.points >= 1, "verify counts must be >= 1")


def parse_config(text: str, base_dir: Path | str = ".") -> ExperimentConfig:
    """Parse and validate TOML config text."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    kwargs = {"base_dir": Path(base_dir)}
    for key, value in raw.items():
        if key in _SECTIONS:
            kwargs[key] = _build(key, _SECTIONS[key], value)
        elif key in _TOP:
            kwargs[key] = _coerce(key, value, None, _TOP[key].__name__)
        else:
            raise ConfigError(f"unknown key {key}")
    cfg = ExperimentConfig(**kwargs)
    _validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)
