"""Exact shattering decisions for small instances.

A hypothesis fixes the thresholds of each unknown vertex independently, and
a vertex's next state depends only on its own thresholds and scores. So a
set R is shattered iff every vertex ``v`` can be given a set ``S_v`` of
entries it is contested for, plus fixed states on the remaining entries,
such that all ``2^|S_v|`` labelings of ``S_v`` are realizable by some
thresholds of ``v``, and every entry of R is contested by some vertex.

Realizability under OR for a demanded 0/1 labeling: set each layer's
threshold to one more than the largest score among the 0-entries; every
1-entry must then beat that maximum on some layer. AND is handled through
the complement transform ``score -> deg + 1 - score`` with flipped labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dynamics import MasterKind, apply_thresholds, layer_scores
from ..learner import LearningProblem
from .canonical import as_config_set

__all__ = [
    "GuardExceeded",
    "ShatterCandidate",
    "find_shattering",
    "natarajan_dimension",
    "shatter_oracle",
    "verify_shattering",
]

MAX_CONFIGS = 12
MAX_VERTICES = 16


class GuardExceeded(RuntimeError):
    """The instance is larger than the exhaustive procedure is allowed to handle."""


@dataclass(eq=False)
class ShatterCandidate:
    """Configurations ``R`` with optional associated pairs and contested-vertex witnesses."""

    R: np.ndarray
    assoc: list[tuple[np.ndarray, np.ndarray]] | None = None
    contested: list[list[int]] | None = field(default=None)

    def __post_init__(self):
        self.R = np.array(self.R, dtype=bool)
        if self.R.ndim != 2:
            raise ValueError("R must be an (m, n) array")
        if self.assoc is not None:
            if len(self.assoc) != len(self.R):
                raise ValueError("need one associated pair per entry")
            pairs = []
            for a, b in self.assoc:
                a, b = np.asarray(a, dtype=bool), np.asarray(b, dtype=bool)
                if np.array_equal(a, b):
                    raise ValueError("associated configurations of an entry must differ")
                pairs.append((a, b))
            self.assoc = pairs
        if self.contested is not None and len(self.contested) != len(self.R):
            raise ValueError("need one contested-vertex list per entry")

    def __len__(self) -> int:
        return len(self.R)


def _guard(problem: LearningProblem, m: int, max_configs: int, max_vertices: int) -> None:
    if m > max_configs:
        raise GuardExceeded(f"|R| = {m} exceeds the limit of {max_configs}")
    if problem.net.n > max_vertices:
        raise GuardExceeded(f"n = {problem.net.n} exceeds the limit of {max_vertices}")


class _VertexFamily:
    """Admissible contested sets of one unknown vertex, as bitmasks over R.

    ``g`` holds the vertex's score vectors in OR orientation, shape ``(m, k)``.
    """

    def __init__(self, g: np.ndarray):
        self.g = g
        self.m = g.shape[0]
        self.zeros: dict[int, int] = {}  # admissible mask -> forced-zero mask
        self._build()

    def _top(self, mask: int) -> np.ndarray:
        idx = [j for j in range(self.m) if mask >> j & 1]
        if not idx:
            return np.full(self.g.shape[1], -1)
        return self.g[idx].max(axis=0)

    def _beats(self, j: int, top: np.ndarray) -> bool:
        return bool(np.any(self.g[j] > top))

    def _check(self, s: int) -> int | None:
        # Entries outside S that cannot be fixed at 1 are forced to 0; the
        # least fixed point is contained in every valid choice of fixed zeros.
        zeros = 0
        while True:
            top = self._top(zeros | s)
            grow = 0
            for j in range(self.m):
                bit = 1 << j
                if not (s | zeros) & bit and not self._beats(j, top):
                    grow |= bit
            if not grow:
                break
            zeros |= grow
        for j in range(self.m):
            bit = 1 << j
            if s & bit and not self._beats(j, self._top(zeros | (s & ~bit))):
                return None
        return zeros

    def _build(self) -> None:
        level = [0]
        self.zeros[0] = self._check(0)
        while level:
            nxt = []
            for s in level:
                hi = s.bit_length()
                for j in range(hi, self.m):
                    t = s | (1 << j)
                    # downward closed: every one-smaller subset must already be admissible
                    if any((t & ~(1 << b)) not in self.zeros for b in range(self.m) if t >> b & 1):
                        continue
                    z = self._check(t)
                    if z is not None:
                        self.zeros[t] = z
                        nxt.append(t)
            level = nxt

    def admits(self, mask: int) -> bool:
        return mask in self.zeros


def _or_oriented_scores(problem: LearningProblem, r: np.ndarray) -> np.ndarray:
    """Scores ``(k, m, n)`` flipped to OR orientation when the master is AND."""
    s = layer_scores(problem.net, r).astype(np.int64)
    if problem.master is MasterKind.AND:
        s = problem.net.degrees[:, None, :] + 1 - s
    return s


def _known_outputs(problem: LearningProblem, r: np.ndarray) -> np.ndarray:
    """Next states of the known vertices on every entry (unknown columns are meaningless)."""
    tau = np.where(problem.known_tau < 0, 0, problem.known_tau)
    return apply_thresholds(layer_scores(problem.net, r), tau, problem.master)


def find_shattering(problem: LearningProblem, configs, *, max_configs: int = MAX_CONFIGS,
                    max_vertices: int = MAX_VERTICES) -> ShatterCandidate | None:
    """Associated pairs that shatter ``configs``, or None when no choice works.

    Raises GuardExceeded above the size limits instead of truncating.
    """
    net = problem.net
    r = as_config_set(configs, net.n)
    m = len(r)
    _guard(problem, m, max_configs, max_vertices)
    if m == 0:
        return ShatterCandidate(r, [], [])
    scores = _or_oriented_scores(problem, r)
    families = {int(v): _VertexFamily(scores[:, :, v].T) for v in problem.unknown}

    options = [[v for v, f in families.items() if f.admits(1 << j)] for j in range(m)]
    if any(not opt for opt in options):
        return None
    order = sorted(range(m), key=lambda j: (len(options[j]), j))
    assigned = {v: 0 for v in families}
    failed: set[tuple] = set()

    def place(pos: int) -> bool:
        if pos == m:
            return True
        key = (pos, tuple(assigned.values()))
        if key in failed:
            return False
        j = order[pos]
        for v in options[j]:
            t = assigned[v] | (1 << j)
            if families[v].admits(t):
                assigned[v] = t
                if place(pos + 1):
                    return True
                assigned[v] = t & ~(1 << j)
        failed.add(key)
        return False

    if not place(0):
        return None
    return _witness(problem, r, families, assigned)


def _witness(problem, r, families, assigned) -> ShatterCandidate:
    m, n = r.shape
    a = np.zeros((m, n), dtype=bool)
    b = np.zeros((m, n), dtype=bool)
    known = ~problem.unknown_mask
    if known.any():
        out = _known_outputs(problem, r)
        a[:, known] = out[:, known]
        b[:, known] = out[:, known]
    flip = problem.master is MasterKind.AND
    contested: list[list[int]] = [[] for _ in range(m)]
    for v, s in assigned.items():
        zeros = families[v].zeros[s]
        for j in range(m):
            bit = 1 << j
            if s & bit:
                a[j, v], b[j, v] = True, False
                contested[j].append(v)
            else:
                state = not (zeros & bit)
                a[j, v] = b[j, v] = state != flip
    return ShatterCandidate(r, [(a[j], b[j]) for j in range(m)], contested)


def shatter_oracle(problem: LearningProblem, configs, **limits) -> bool:
    """True iff the hypothesis class of ``problem`` shatters ``configs``."""
    return find_shattering(problem, configs, **limits) is not None


def verify_shattering(problem: LearningProblem, candidate: ShatterCandidate, *,
                      max_configs: int = MAX_CONFIGS) -> bool:
    """Check a witness directly: every one of the ``2^|R|`` selections must be produced by some hypothesis.

    For each selection the thresholds of every unknown vertex are built
    directly (OR: one above the largest score among entries demanding 0;
    AND: the smallest score among entries demanding 1) and the resulting
    system is run on R.
    """
    if candidate.assoc is None:
        raise ValueError("candidate has no associated configurations")
    r = candidate.R
    m = len(r)
    if m > max_configs:
        raise GuardExceeded(f"|R| = {m} exceeds the limit of {max_configs}")
    if m == 0:
        return True
    net = problem.net
    ca = np.array([p[0] for p in candidate.assoc])
    cb = np.array([p[1] for p in candidate.assoc])
    if np.any(np.all(ca == cb, axis=1)):
        return False
    s = layer_scores(net, r).astype(np.int64)  # (k, m, n)
    ceiling = net.degrees + 2
    unknown = problem.unknown
    for phi in range(1 << m):
        pick = np.array([(phi >> j) & 1 for j in range(m)], dtype=bool)
        want = np.where(pick[:, None], ca, cb)  # (m, n)
        tau = np.zeros((net.k, net.n), dtype=np.int64)
        for v in unknown:
            col = s[:, :, v]
            if problem.master is MasterKind.OR:
                z = ~want[:, v]
                tau[:, v] = col[:, z].max(axis=1) + 1 if z.any() else 0
            else:
                o = want[:, v]
                tau[:, v] = col[:, o].min(axis=1) if o.any() else ceiling[:, v]
        h = problem.system(tau)
        if not np.array_equal(h(r), want):
            return False
    return True


def natarajan_dimension(problem: LearningProblem, *, max_vertices: int = 5,
                        max_configs: int = MAX_CONFIGS) -> tuple[int, np.ndarray]:
    """Exact Natarajan dimension by exhaustive search over configuration sets.

    Shatterability is inherited by subsets, so sets are grown one
    configuration at a time and only shattered sets are extended.
    Configurations with identical score profiles on the unknown vertices
    always receive identical unknown-vertex predictions, so at most one of
    each profile class can appear in a shattered set; one representative per
    class is searched. Returns the dimension and a largest shattered set.
    """
    net = problem.net
    if net.n > max_vertices:
        raise GuardExceeded(f"n = {net.n} exceeds the exhaustive-search limit of {max_vertices}")
    cap = net.k * problem.sigma
    if cap > max_configs:
        raise GuardExceeded(f"k*sigma = {cap} exceeds the limit of {max_configs}")
    allx = ((np.arange(1 << net.n)[:, None] >> np.arange(net.n)) & 1).astype(bool)
    prof = layer_scores(net, allx)[:, :, problem.unknown]  # (k, 2^n, sigma)
    _, reps = np.unique(prof.transpose(1, 0, 2).reshape(len(allx), -1), axis=0, return_index=True)
    pool = allx[np.sort(reps)]
    best: list[int] = []
    limits = dict(max_configs=max_configs, max_vertices=max_vertices)

    def grow(current: list[int], start: int) -> bool:
        nonlocal best
        if len(current) > len(best):
            best = list(current)
            if len(best) == cap:
                return True
        for j in range(start, len(pool)):
            if len(current) + (len(pool) - j) <= len(best):
                break
            trial = current + [j]
            if shatter_oracle(problem, pool[trial], **limits):
                if grow(trial, j + 1):
                    return True
        return False

    grow([], 0)
    return len(best), pool[best] if best else np.zeros((0, net.n), bool)

