"""Consistent threshold learner, loss estimators and sample-size bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Iterator, Protocol

import numpy as np

from .dynamics import (
    MasterKind,
    ThresholdSystem,
    apply_thresholds,
    as_config,
    format_bits,
    layer_scores,
)
from .graph import MultilayerNetwork

__all__ = [
    "BernoulliDistribution",
    "ConfigSampler",
    "ErrorSummary",
    "LearningProblem",
    "TrainingSet",
    "TrajectorySampler",
    "empirical_risk",
    "estimate_pmac_error",
    "estimate_true_error",
    "evaluate_hypothesis",
    "load_training_set",
    "make_training_set",
    "pac_learn",
    "pmac_mismatch",
    "sample_config",
    "sample_size_generic",
    "sample_size_pac",
    "sample_size_pmac",
]

DEFAULT_EVAL_SAMPLES = 10_000
_CHUNK = 2048


class ConfigSampler(Protocol):
    def sample(self, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``size`` configurations of length ``n`` as a ``(size, n)`` bool array."""


@dataclass(frozen=True)
class BernoulliDistribution:
    """Product distribution: every vertex is 0 with probability ``p``, independently."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    def sample(self, n: int, size: int, rng) -> np.ndarray:
        rng = np.random.default_rng(rng)
        return rng.random((size, n)) >= self.p


@dataclass(frozen=True, eq=False)
class TrajectorySampler:
    """Uniform draws from a fixed list of configurations, e.g. one trajectory.

    Only the listed configurations get positive probability, which models
    learning from observed dynamics rather than from a product distribution.
    """

    configs: np.ndarray

    def __post_init__(self):
        c = np.array(self.configs, dtype=bool)
        if c.ndim != 2 or len(c) == 0:
            raise ValueError("need a non-empty (m, n) array of configurations")
        object.__setattr__(self, "configs", c)

    def sample(self, n: int, size: int, rng) -> np.ndarray:
        if self.configs.shape[1] != n:
            raise ValueError("configuration length does not match n")
        rng = np.random.default_rng(rng)
        return self.configs[rng.integers(0, len(self.configs), size=size)]


def sample_config(dist: ConfigSampler, n: int, rng) -> np.ndarray:
    return dist.sample(n, 1, rng)[0]


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Ordered pairs ``(before[j], after[j])`` of configuration snapshots."""

    before: np.ndarray
    after: np.ndarray

    def __post_init__(self):
        b = np.array(self.before, dtype=bool)
        a = np.array(self.after, dtype=bool)
        if b.ndim != 2 or b.shape != a.shape:
            raise ValueError(f"pair arrays must have equal (q, n) shapes, got {b.shape} and {a.shape}")
        object.__setattr__(self, "before", b)
        object.__setattr__(self, "after", a)

    @classmethod
    def empty(cls, n: int) -> "TrainingSet":
        return cls(np.zeros((0, n), bool), np.zeros((0, n), bool))

    @classmethod
    def from_pairs(cls, pairs, n: int | None = None) -> "TrainingSet":
        pairs = list(pairs)
        if not pairs:
            if n is None:
                raise ValueError("cannot infer n from an empty pair list")
            return cls.empty(n)
        b = np.array([as_config(c) for c, _ in pairs])
        a = np.array([as_config(c2) for _, c2 in pairs])
        return cls(b, a)

    @property
    def n(self) -> int:
        return self.before.shape[1]

    def __len__(self) -> int:
        return self.before.shape[0]

    def __iter__(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        return zip(self.before, self.after)

    def __add__(self, other: "TrainingSet") -> "TrainingSet":
        return TrainingSet(np.vstack([self.before, other.before]), np.vstack([self.after, other.after]))

    def head(self, q: int) -> "TrainingSet":
        return TrainingSet(self.before[:q], self.after[:q])

    def dump(self, fh: IO[str]) -> None:
        for c, c2 in self:
            fh.write(f"{format_bits(c)} {format_bits(c2)}\n")


def load_training_set(source: IO, n: int | None = None) -> TrainingSet:
    """Read ``C Csucc`` bit-string lines (``#`` comments allowed)."""
    pairs = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected two bit strings, got {text!r}")
        try:
            c, c2 = as_config(parts[0], n), as_config(parts[1], n)
        except ValueError as e:
            raise ValueError(f"line {lineno}: {e}") from None
        if len(c) != len(c2):
            raise ValueError(f"line {lineno}: bit strings differ in length")
        n = len(c)
        pairs.append((c, c2))
    if not pairs and n is None:
        raise ValueError("empty training file and no n given")
    return TrainingSet.from_pairs(pairs, n)


def make_training_set(target: ThresholdSystem, dist: ConfigSampler, q: int, rng) -> TrainingSet:
    if q < 0:
        raise ValueError("q must be non-negative")
    rng = np.random.default_rng(rng)
    before = dist.sample(target.net.n, q, rng)
    after = target(before) if q else np.zeros_like(before)
    return TrainingSet(before, after)


@dataclass(eq=False)
class LearningProblem:
    """What the learner is told about the target system.

    ``known_tau`` holds the thresholds of the known vertices; the columns of
    the unknown vertices are ``-1`` so target values there can never leak in.
    """

    net: MultilayerNetwork
    master: MasterKind
    unknown: np.ndarray
    known_tau: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.master = MasterKind.parse(self.master)
        u = np.unique(np.asarray(self.unknown, dtype=np.int64))
        if u.size and (u[0] < 0 or u[-1] >= self.net.n):
            raise ValueError("unknown vertex out of range")
        self.unknown = u
        tau = np.array(self.known_tau, dtype=np.int64)
        if tau.shape != (self.net.k, self.net.n):
            raise ValueError("known_tau must have shape (k, n)")
        mask = self.unknown_mask
        if np.any(tau[:, mask] != -1):
            raise ValueError("known_tau must hold -1 in the columns of unknown vertices")
        known = tau[:, ~mask]
        hi = self.net.degrees[:, ~mask] + 2
        if np.any((known < 0) | (known > hi)):
            raise ValueError("a known threshold lies outside [0, deg + 2]")
        self.known_tau = tau

    @classmethod
    def from_target(cls, target: ThresholdSystem, unknown) -> "LearningProblem":
        tau = np.array(target.tau, dtype=np.int64)
        u = np.unique(np.asarray(list(unknown), dtype=np.int64))
        tau[:, u] = -1
        return cls(target.net, target.master, u, tau)

    @classmethod
    def all_unknown(cls, net: MultilayerNetwork, master) -> "LearningProblem":
        return cls(net, master, np.arange(net.n), np.full((net.k, net.n), -1))

    @property
    def sigma(self) -> int:
        return int(self.unknown.size)

    @property
    def unknown_mask(self) -> np.ndarray:
        m = np.zeros(self.net.n, dtype=bool)
        m[self.unknown] = True
        return m

    def system(self, tau_unknown) -> ThresholdSystem:
        """Complete the known thresholds with values for the unknown columns.

        ``tau_unknown`` is either a full ``(k, n)`` table (only unknown columns
        are read) or a ``(k, sigma)`` table in the order of ``self.unknown``.
        """
        tu = np.asarray(tau_unknown, dtype=np.int64)
        tau = self.known_tau.copy()
        if tu.shape == (self.net.k, self.net.n):
            tau[:, self.unknown] = tu[:, self.unknown]
        elif tu.shape == (self.net.k, self.sigma):
            tau[:, self.unknown] = tu
        else:
            raise ValueError("unknown-threshold table has the wrong shape")
        return ThresholdSystem(self.net, self.master, tau)


def pac_learn(problem: LearningProblem, training: TrainingSet) -> ThresholdSystem:
    """Consistent learner.

    OR: each unknown threshold is one more than the largest score observed
    with a 0 outcome (0 if no such example). AND: the smallest score
    observed with a 1 outcome (``deg + 2`` if no such example).
    """
    net = problem.net
    if training.n != net.n:
        raise ValueError(f"training pairs have length {training.n}, network has n={net.n}")
    ceiling = net.degrees + 2
    if problem.master is MasterKind.OR:
        best = np.full((net.k, net.n), -1, dtype=np.int64)
    else:
        best = ceiling.copy()
    for start in range(0, len(training), _CHUNK):
        b = training.before[start:start + _CHUNK]
        a = training.after[start:start + _CHUNK]
        s = layer_scores(net, b)
        if problem.master is MasterKind.OR:
            best = np.maximum(best, np.where(~a[None], s, -1).max(axis=1))
        else:
            best = np.minimum(best, np.where(a[None], s, ceiling[:, None, :]).min(axis=1))
    learned = best + 1 if problem.master is MasterKind.OR else best
    return problem.system(learned)


def empirical_risk(h: ThresholdSystem, training: TrainingSet) -> int:
    if len(training) == 0:
        return 0
    return int(np.any(h(training.before) != training.after, axis=1).sum())


def _paired_successors(h: ThresholdSystem, target: ThresholdSystem, x: np.ndarray):
    if h.net is not target.net and h.net != target.net:
        raise ValueError("hypothesis and target live on different networks")
    s = layer_scores(target.net, x)
    return apply_thresholds(s, h.tau, h.master), apply_thresholds(s, target.tau, target.master)


def _sampled_pairs(h, target, dist, samples, rng):
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(rng)
    left = samples
    while left:
        size = min(left, _CHUNK)
        x = dist.sample(target.net.n, size, rng)
        yield x, *_paired_successors(h, target, x)
        left -= size


def estimate_true_error(h: ThresholdSystem, target: ThresholdSystem, dist: ConfigSampler,
                        samples: int = DEFAULT_EVAL_SAMPLES, rng=None) -> float:
    """Fraction of sampled configurations whose successors differ under ``h`` and ``target``."""
    wrong = 0
    for _, ph, pt in _sampled_pairs(h, target, dist, samples, rng):
        wrong += int(np.any(ph != pt, axis=1).sum())
    return wrong / samples


def pmac_mismatch(h_c, t_c, unknown) -> int:
    """Number of unknown vertices whose predicted state differs."""
    h_c, t_c = as_config(h_c), as_config(t_c)
    if h_c.shape != t_c.shape:
        raise ValueError("configurations differ in length")
    idx = np.asarray(list(unknown), dtype=np.int64)
    return int(np.count_nonzero(h_c[..., idx] != t_c[..., idx]))


def estimate_pmac_error(h: ThresholdSystem, target: ThresholdSystem, dist: ConfigSampler,
                        beta: float, unknown, samples: int = DEFAULT_EVAL_SAMPLES, rng=None) -> float:
    """Fraction of sampled configurations on which at least ``beta * sigma`` unknown vertices are wrong."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    idx = np.unique(np.asarray(list(unknown), dtype=np.int64))
    cut = beta * idx.size
    bad = 0
    for _, ph, pt in _sampled_pairs(h, target, dist, samples, rng):
        w = np.count_nonzero(ph[:, idx] != pt[:, idx], axis=1)
        bad += int((w >= cut).sum())
    return bad / samples


@dataclass(frozen=True)
class ErrorSummary:
    """Outcome of evaluating a hypothesis on one sample.

    ``loss`` equals :func:`estimate_true_error` for the same rng.
    ``missed_ones`` counts (configuration, vertex) cells where the hypothesis
    predicts 0 but the target gives 1; ``false_ones`` the reverse.
    """

    samples: int
    loss: float
    missed_ones: int
    false_ones: int
    pmac_loss: float | None = None


def evaluate_hypothesis(h: ThresholdSystem, target: ThresholdSystem, dist: ConfigSampler,
                        samples: int = DEFAULT_EVAL_SAMPLES, rng=None, *,
                        beta: float | None = None, unknown=None) -> ErrorSummary:
    if beta is not None:
        if not 0.0 < beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if unknown is None:
            raise ValueError("the PMAC loss needs the unknown vertex set")
        idx = np.unique(np.asarray(list(unknown), dtype=np.int64))
    wrong = missed = extra = bad = 0
    for _, ph, pt in _sampled_pairs(h, target, dist, samples, rng):
        diff = ph != pt
        wrong += int(diff.any(axis=1).sum())
        missed += int(np.count_nonzero(diff & pt))
        extra += int(np.count_nonzero(diff & ph))
        if beta is not None:
            bad += int((np.count_nonzero(diff[:, idx], axis=1) >= beta * idx.size).sum())
    return ErrorSummary(samples, wrong / samples, missed, extra,
                        bad / samples if beta is not None else None)


# --- sample-size bounds (natural logarithms) -------------------------------

def _check_unit(name, x):
    if not 0.0 < x < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {x}")


def _check_count(name, x):
    if int(x) != x or x < 1:
        raise ValueError(f"{name} must be a positive integer, got {x}")


def sample_size_pac(eps: float, delta: float, sigma: int, k: int) -> int:
    """Training-set size ``ceil(sigma*k * ln(sigma*k/delta) / eps)`` for the (eps, delta) guarantee."""
    _check_unit("eps", eps)
    _check_unit("delta", delta)
    _check_count("sigma", sigma)
    _check_count("k", k)
    sk = sigma * k
    return max(1, math.ceil(sk * math.log(sk / delta) / eps))


def sample_size_pmac(eps: float, delta: float, beta: float, sigma: int, k: int) -> int:
    """PMAC training-set size ``ceil(k * ln(sigma*k/delta) / (eps*beta))``."""
    _check_unit("eps", eps)
    _check_unit("delta", delta)
    _check_unit("beta", beta)
    _check_count("sigma", sigma)
    _check_count("k", k)
    return max(1, math.ceil(k * math.log(sigma * k / delta) / (eps * beta)))


def sample_size_generic(eps: float, delta: float, sigma: int, k: int, davg: float) -> float:
    """Cardinality-based bound ``(sigma*k*ln(davg) + ln(1/delta)) / eps``; needs ``davg > 1``."""
    _check_unit("eps", eps)
    _check_unit("delta", delta)
    _check_count("sigma", sigma)
    _check_count("k", k)
    if not davg > 1.0:
        raise ValueError(f"davg must exceed 1, got {davg}")
    return (sigma * k * math.log(davg) + math.log(1.0 / delta)) / eps
