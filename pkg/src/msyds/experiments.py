"""Trial runner behind the ``sweep``, ``validate-*`` and ``learn`` commands.

Seeding: trial ``t`` uses ``seed = base_seed + t``. Inside a trial every
random draw has its own generator keyed by the trial seed, so any CSV row
can be recomputed alone:

=====================  ===========================================
target thresholds      ``default_rng([seed, 0])``
random unknown set     ``default_rng([seed, 1, sigma])``
training set           ``default_rng([seed, 2, p_key])``
evaluation sample      ``default_rng([seed, 3, p_key, train_size])``
=====================  ===========================================

``p_key = round(p * 1e6)``. Training sets for different sizes are prefixes
of one draw, so larger sets always contain the smaller ones.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import partial
from typing import IO, Any, Sequence

import numpy as np

from .dynamics import MasterKind, ThresholdSystem, load_thresholds, random_thresholds
from .graph import MultilayerNetwork, generate_multi_gnp, read_edge_list
from .learner import (
    DEFAULT_EVAL_SAMPLES,
    BernoulliDistribution,
    LearningProblem,
    empirical_risk,
    evaluate_hypothesis,
    make_training_set,
    pac_learn,
    sample_size_pac,
    sample_size_pmac,
)

CSV_TAG = "# msyds-csv v1"

__all__ = [
    "CSV_TAG",
    "ConfigError",
    "ExperimentConfig",
    "SummaryRow",
    "TrialRow",
    "ValidationReport",
    "build_network",
    "resolve_unknown",
    "run_trial",
    "summarize",
    "sweep",
    "target_for_trial",
    "validate_pac",
    "validate_pmac",
    "write_csv",
]


class ConfigError(ValueError):
    """Inconsistent or incomplete experiment configuration."""


@dataclass
class ExperimentConfig:
    """Everything needed to rerun an experiment.

    The graph comes from ``graph`` (an edge-list file) or is generated from
    ``n``, ``k`` and one of ``avg_deg`` / ``edge_prob`` with ``graph_seed``
    (defaults to ``seed``). ``unknown`` entries are ``"all"``,
    ``"random:SIGMA"`` or a path to a file of vertex ids.
    """

    graph: str | None = None
    n: int | None = None
    k: int = 2
    avg_deg: float | None = None
    edge_prob: float | None = None
    graph_seed: int | None = None
    thresholds: str | None = None
    master: str = "or"
    unknown: list[str] = field(default_factory=lambda: ["all"])
    p: list[float] = field(default_factory=lambda: [0.5])
    train_size: list[int] = field(default_factory=lambda: [500])
    eval_samples: int = DEFAULT_EVAL_SAMPLES
    trials: int = 50
    seed: int = 0
    jobs: int = 1
    csv: str | None = None

    def __post_init__(self):
        for name in ("unknown", "p", "train_size"):
            val = getattr(self, name)
            if not isinstance(val, (list, tuple)):
                setattr(self, name, [val])

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_mapping(data)

    def merged(self, overrides: dict[str, Any]) -> "ExperimentConfig":
        """Copy with every non-None override applied."""
        data = asdict(self)
        data.update({k: v for k, v in overrides.items() if v is not None and k in data})
        return ExperimentConfig(**data)

    def validate(self) -> "ExperimentConfig":
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.eval_samples < 1:
            raise ConfigError("eval_samples must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if any(q < 0 for q in self.train_size):
            raise ConfigError("training sizes must be >= 0")
        if any(not 0.0 <= p <= 1.0 for p in self.p):
            raise ConfigError("p values must lie in [0, 1]")
        try:
            MasterKind.parse(self.master)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.graph is None:
            if self.n is None:
                raise ConfigError("give a graph file or generator parameters (n, k, avg_deg or edge_prob)")
            if (self.avg_deg is None) == (self.edge_prob is None):
                raise ConfigError("give exactly one of avg_deg and edge_prob")
        paths = [self.graph, self.thresholds] + [u for u in self.unknown if not _is_generated_unknown(u)]
        for path in paths:
            if path is not None and not os.path.exists(path):
                raise FileNotFoundError(f"file not found: {path}")
        return self


def _is_generated_unknown(spec: str) -> bool:
    return spec == "all" or spec.startswith("random:")


def build_network(cfg: ExperimentConfig) -> MultilayerNetwork:
    if cfg.graph is not None:
        return read_edge_list(cfg.graph)
    n = cfg.n
    if cfg.edge_prob is not None:
        prob = cfg.edge_prob
    else:
        prob = cfg.avg_deg / (n - 1) if n > 1 else 0.0
        if prob > 1:
            raise ConfigError(f"average degree {cfg.avg_deg} impossible with n={n}")
    seed = cfg.seed if cfg.graph_seed is None else cfg.graph_seed
    return generate_multi_gnp(n, cfg.k, prob, np.random.default_rng(seed))


def resolve_unknown(spec: str, net: MultilayerNetwork, seed: int) -> np.ndarray:
    """Vertex ids named by an unknown-set spec (sorted)."""
    if spec == "all":
        return np.arange(net.n)
    if spec.startswith("random:"):
        try:
            sigma = int(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad unknown spec {spec!r}") from None
        if not 0 <= sigma <= net.n:
            raise ConfigError(f"random:{sigma} needs 0 <= sigma <= n={net.n}")
        rng = np.random.default_rng([seed, 1, sigma])
        return np.sort(rng.choice(net.n, size=sigma, replace=False))
    with open(spec, encoding="utf-8") as fh:
        tokens = [t for line in fh if not line.lstrip().startswith("#") for t in line.split()]
    try:
        ids = np.unique(np.array([int(t) for t in tokens], dtype=np.int64))
    except ValueError:
        raise ValueError(f"{spec}: unknown-vertex file must hold integer ids") from None
    if ids.size and (ids[0] < 0 or ids[-1] >= net.n):
        raise ValueError(f"{spec}: vertex id out of range for n={net.n}")
    return ids


def target_for_trial(net: MultilayerNetwork, master, seed: int, tau: np.ndarray | None = None) -> ThresholdSystem:
    if tau is None:
        tau = random_thresholds(net, np.random.default_rng([seed, 0]))
    return ThresholdSystem(net, MasterKind.parse(master), tau)


def _p_key(p: float) -> int:
    return int(round(p * 1_000_000))


@dataclass(frozen=True)
class TrialRow:
    trial: int
    seed: int
    p: float
    train_size: int
    sigma: int
    k: int
    loss: float
    empirical_risk: int
    conservative: bool
    one_sided_violations: int
    pmac_loss: float | None = None


@dataclass(frozen=True)
class _TrialContext:
    net: MultilayerNetwork
    master: MasterKind
    unknown: tuple[str, ...]
    ps: tuple[float, ...]
    sizes: tuple[int, ...]
    eval_samples: int
    base_seed: int
    tau: np.ndarray | None = None
    beta: float | None = None


def run_trial(ctx: _TrialContext, trial: int) -> list[TrialRow]:
    seed = ctx.base_seed + trial
    net = ctx.net
    target = target_for_trial(net, ctx.master, seed, ctx.tau)
    sizes = sorted(set(ctx.sizes))
    problems = []
    for spec in ctx.unknown:
        u = resolve_unknown(spec, net, seed)
        problems.append(LearningProblem.from_target(target, u))
    rows = []
    for p in ctx.ps:
        dist = BernoulliDistribution(p)
        full = make_training_set(target, dist, sizes[-1] if sizes else 0, np.random.default_rng([seed, 2, _p_key(p)]))
        for problem in problems:
            u = problem.unknown
            for q in sizes:
                train = full.head(q)
                h = pac_learn(problem, train)
                if ctx.master is MasterKind.OR:
                    conservative = bool(np.all(h.tau[:, u] <= target.tau[:, u]))
                else:
                    conservative = bool(np.all(h.tau[:, u] >= target.tau[:, u]))
                ev = evaluate_hypothesis(
                    h, target, dist, ctx.eval_samples, np.random.default_rng([seed, 3, _p_key(p), q]),
                    beta=ctx.beta, unknown=u if ctx.beta is not None else None)
                wrong_side = ev.missed_ones if ctx.master is MasterKind.OR else ev.false_ones
                rows.append(TrialRow(trial, seed, p, q, problem.sigma, net.k, ev.loss,
                                     empirical_risk(h, train), conservative, wrong_side, ev.pmac_loss))
    return rows


def _run_trials(ctx: _TrialContext, trials: int, jobs: int) -> list[TrialRow]:
    work = partial(run_trial, ctx)
    if jobs <= 1 or trials == 1:
        chunks = [work(t) for t in range(trials)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map yields in submission order, whatever the completion order
            chunks = list(pool.map(work, range(trials)))
    return [row for chunk in chunks for row in chunk]


def _context(cfg: ExperimentConfig, net: MultilayerNetwork, sizes: Sequence[int], beta=None) -> _TrialContext:
    tau = load_thresholds_file(cfg.thresholds, net) if cfg.thresholds else None
    return _TrialContext(net, MasterKind.parse(cfg.master), tuple(cfg.unknown), tuple(cfg.p),
                         tuple(sizes), cfg.eval_samples, cfg.seed, tau, beta)


def load_thresholds_file(path: str, net: MultilayerNetwork) -> np.ndarray:
    with open(path, "rb") as fh:
        return load_thresholds(fh, net)


def sweep(cfg: ExperimentConfig, net: MultilayerNetwork | None = None) -> list[TrialRow]:
    """One row per (trial, p, unknown set, training size)."""
    cfg.validate()
    net = build_network(cfg) if net is None else net
    return _run_trials(_context(cfg, net, cfg.train_size), cfg.trials, cfg.jobs)


@dataclass(frozen=True)
class SummaryRow:
    p: float
    train_size: int
    sigma: int
    k: int
    trials: int
    mean_loss: float
    std_loss: float


def summarize(rows: Sequence[TrialRow]) -> list[SummaryRow]:
    """Mean and sample standard deviation of the loss per (p, train_size, sigma) cell."""
    cells: dict[tuple, list[float]] = {}
    for r in rows:
        cells.setdefault((r.p, r.train_size, r.sigma, r.k), []).append(r.loss)
    out = []
    for (p, q, sigma, k), losses in cells.items():
        a = np.asarray(losses)
        std = float(a.std(ddof=1)) if a.size > 1 else 0.0
        out.append(SummaryRow(p, q, sigma, k, a.size, float(a.mean()), std))
    return out


@dataclass(frozen=True)
class ValidationReport:
    kind: str
    eps: float
    delta: float
    beta: float | None
    q: int
    trials: int
    failures: int
    slack: float
    rows: list[TrialRow] = field(repr=False)

    @property
    def failure_fraction(self) -> float:
        return self.failures / self.trials

    @property
    def passed(self) -> bool:
        return self.failure_fraction <= self.delta + self.slack

    def lines(self) -> list[str]:
        return [
            f"kind: {self.kind}",
            f"eps: {self.eps}",
            f"delta: {self.delta}",
            *([f"beta: {self.beta}"] if self.beta is not None else []),
            f"q: {self.q}",
            f"trials: {self.trials}",
            f"failures: {self.failures}",
            f"failure_fraction: {self.failure_fraction}",
            f"slack: {self.slack}",
            f"verdict: {'PASS' if self.passed else 'FAIL'}",
        ]


def default_slack(delta: float, trials: int) -> float:
    """Three binomial standard errors at success probability ``delta``."""
    return 3.0 * math.sqrt(delta * (1.0 - delta) / trials)


def _single_problem(cfg: ExperimentConfig, net) -> tuple[int, int]:
    if len(cfg.unknown) != 1 or len(cfg.p) != 1:
        raise ConfigError("validation runs take exactly one unknown spec and one p value")
    sigma = len(resolve_unknown(cfg.unknown[0], net, cfg.seed))
    if sigma < 1:
        raise ConfigError("validation needs at least one unknown vertex")
    return sigma, net.k


def validate_pac(cfg: ExperimentConfig, eps: float, delta: float, slack: float | None = None,
                 net: MultilayerNetwork | None = None) -> ValidationReport:
    """Trials at ``q = sample_size_pac``; a trial fails when its estimated loss is at least ``eps``."""
    cfg.validate()
    net = build_network(cfg) if net is None else net
    sigma, k = _single_problem(cfg, net)
    q = sample_size_pac(eps, delta, sigma, k)
    rows = _run_trials(_context(cfg, net, [q]), cfg.trials, cfg.jobs)
    failures = sum(r.loss >= eps for r in rows)
    slack = default_slack(delta, cfg.trials) if slack is None else slack
    return ValidationReport("pac", eps, delta, None, q, cfg.trials, failures, slack, rows)


def validate_pmac(cfg: ExperimentConfig, eps: float, delta: float, beta: float, slack: float | None = None,
                  net: MultilayerNetwork | None = None) -> ValidationReport:
    """Trials at ``q = sample_size_pmac``; failure means the PMAC loss is at least ``eps``."""
    cfg.validate()
    net = build_network(cfg) if net is None else net
    sigma, k = _single_problem(cfg, net)
    q = sample_size_pmac(eps, delta, beta, sigma, k)
    rows = _run_trials(_context(cfg, net, [q], beta=beta), cfg.trials, cfg.jobs)
    failures = sum(r.pmac_loss >= eps for r in rows)
    slack = default_slack(delta, cfg.trials) if slack is None else slack
    return ValidationReport("pmac", eps, delta, beta, q, cfg.trials, failures, slack, rows)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    return repr(v) if isinstance(v, float) else str(v)


def write_csv(rows: Sequence, fh: IO[str]) -> None:
    """Write dataclass rows under the versioned header comment."""
    fh.write(CSV_TAG + "\n")
    if not rows:
        return
    names = [f.name for f in fields(rows[0])]
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(names)
    for r in rows:
        w.writerow([_fmt(getattr(r, name)) for name in names])
