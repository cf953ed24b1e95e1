"""Vertex-layer pairs with pairwise non-nested closed neighborhoods.

A set of such pairs gives a shatterable configuration set of the same size,
so the largest one found is a lower bound on the Natarajan dimension.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp

from ..dynamics import MasterKind, apply_thresholds, layer_scores
from ..graph import MultilayerNetwork, closed_neighborhood_array, generate_multi_gnp
from ..learner import LearningProblem
from .shatter import ShatterCandidate

__all__ = [
    "QSet",
    "VertexLayerPair",
    "all_pairs",
    "estimate_full_qset_probability",
    "is_nested",
    "nesting_matrix",
    "pnn_coloring",
    "pnn_lower_bound",
    "pnn_set",
    "q_set_check",
    "qset_proportion_bound",
    "shatterable_from_qset",
]

# dense Gram products above this many float32 cells switch to sparse
_DENSE_LIMIT = 40_000_000


class VertexLayerPair(NamedTuple):
    v: int
    i: int


@dataclass(frozen=True)
class QSet:
    """Distinct vertex-layer pairs. Non-nesting is checked by :meth:`validate`."""

    pairs: tuple[VertexLayerPair, ...]

    def __init__(self, pairs: Iterable):
        ps = tuple(VertexLayerPair(int(v), int(i)) for v, i in pairs)
        if len(set(ps)) != len(ps):
            raise ValueError("Q-set pairs must be distinct")
        object.__setattr__(self, "pairs", ps)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def validate(self, net: MultilayerNetwork, unknown=None) -> "QSet":
        if unknown is None:
            unknown = range(net.n)
        if not q_set_check(net, unknown, self.pairs):
            raise ValueError("closed neighborhoods of the Q-set pairs are nested")
        return self


def _check_pairs(net: MultilayerNetwork, unknown, pairs) -> list[VertexLayerPair]:
    allowed = set(int(u) for u in unknown)
    ps = [VertexLayerPair(int(v), int(i)) for v, i in pairs]
    if len(set(ps)) != len(ps):
        raise ValueError("pairs must be distinct")
    for v, i in ps:
        net.check_vertex(v)
        net.check_layer(i)
        if v not in allowed:
            raise ValueError(f"vertex {v} is not an unknown vertex")
    return ps


def is_nested(a: np.ndarray, b: np.ndarray) -> bool:
    """True iff sorted array ``a`` is a subset of sorted array ``b``."""
    if a.size > b.size:
        return False
    pos = np.searchsorted(b, a)
    return bool(np.all(pos < b.size) and np.array_equal(b[np.minimum(pos, b.size - 1)], a))


def q_set_check(net: MultilayerNetwork, unknown, pairs) -> bool:
    """True iff no closed neighborhood among ``pairs`` is contained in another."""
    ps = _check_pairs(net, unknown, pairs)
    hoods = [closed_neighborhood_array(net, v, i) for v, i in ps]
    for a in range(len(hoods)):
        for b in range(len(hoods)):
            if a != b and is_nested(hoods[a], hoods[b]):
                return False
    return True


def all_pairs(net: MultilayerNetwork, unknown) -> list[VertexLayerPair]:
    """Every (v, i) with v unknown, ordered by vertex then layer."""
    u = np.unique(np.asarray(list(unknown), dtype=np.int64))
    return [VertexLayerPair(int(v), i) for v in u for i in range(net.k)]


def _membership(net: MultilayerNetwork, pairs: list[VertexLayerPair]) -> sp.csr_array:
    rows = [net.closed_adjacency[i][[v]] for v, i in pairs]
    if not rows:
        return sp.csr_array((0, net.n), dtype=np.float32)
    return sp.csr_array(sp.vstack(rows, format="csr"))


def nesting_matrix(net: MultilayerNetwork, pairs: list[VertexLayerPair]):
    """``nested[a, b]`` is True iff the neighborhood of pair ``a`` is a subset of pair ``b``'s.

    Computed from intersection sizes (one Gram product) rather than pairwise
    merges. Returns a dense bool array for small inputs and a sparse one
    otherwise; the diagonal is always False.
    """
    m = _membership(net, pairs)
    p = m.shape[0]
    size = np.asarray(m.sum(axis=1)).ravel()
    if p * max(p, net.n) <= _DENSE_LIMIT:
        d = m.toarray()
        inter = d @ d.T
        nested = inter == size[:, None]
        np.fill_diagonal(nested, False)
        return nested
    inter = sp.csr_array(m @ m.T).tocoo()
    keep = (inter.data == size[inter.row]) & (inter.row != inter.col)
    return sp.csr_array((np.ones(keep.sum(), bool), (inter.row[keep], inter.col[keep])), shape=(p, p))


def pnn_coloring(net: MultilayerNetwork, unknown) -> tuple[list[VertexLayerPair], np.ndarray]:
    """Greedy coloring of the nesting conflict graph on all unknown vertex-layer pairs.

    Pairs are colored in order of decreasing conflict degree, ties broken by
    (v, i); each takes the smallest color absent from its colored neighbors.
    """
    pairs = all_pairs(net, unknown)
    nested = nesting_matrix(net, pairs)
    if sp.issparse(nested):
        conflict = sp.csr_array(nested + nested.T)
        conflict.sum_duplicates()
        adj = [conflict.indices[conflict.indptr[a]:conflict.indptr[a + 1]] for a in range(len(pairs))]
    else:
        conflict = nested | nested.T
        adj = [np.flatnonzero(row) for row in conflict]
    deg = np.array([a.size for a in adj], dtype=np.int64)
    order = np.argsort(-deg, kind="stable")
    color = np.full(len(pairs), -1, dtype=np.int64)
    for a in order:
        used = set(color[adj[a]].tolist())
        c = 0
        while c in used:
            c += 1
        color[a] = c
    return pairs, color


def pnn_set(net: MultilayerNetwork, unknown) -> QSet:
    """The largest color class of :func:`pnn_coloring` (lowest color on ties)."""
    pairs, color = pnn_coloring(net, unknown)
    if not pairs:
        return QSet([])
    best = int(np.argmax(np.bincount(color)))
    return QSet(p for p, c in zip(pairs, color) if c == best)


def pnn_lower_bound(net: MultilayerNetwork, unknown) -> int:
    return len(pnn_set(net, unknown))


def shatterable_from_qset(net: MultilayerNetwork, q: QSet, problem: LearningProblem | None = None) -> ShatterCandidate:
    """Shatterable configuration set built from a Q-set, one entry per pair.

    Entry ``(v, i)`` is the indicator of the closed neighborhood of ``v`` on
    layer ``i``; ``v`` is its contested vertex, with associated states 1 and 0.
    Without ``problem`` every vertex is unknown and the master is OR. With an
    AND master all configurations are complemented, and known vertices take
    their forced outputs in both associated configurations.
    """
    if problem is None:
        problem = LearningProblem.all_unknown(net, MasterKind.OR)
    elif problem.net is not net and problem.net != net:
        raise ValueError("problem is defined on a different network")
    q = QSet(q.pairs if isinstance(q, QSet) else q)
    q.validate(net, problem.unknown)
    m = len(q)
    r = np.zeros((m, net.n), dtype=bool)
    ca = np.zeros((m, net.n), dtype=bool)
    for j, (v, i) in enumerate(q):
        r[j, closed_neighborhood_array(net, v, i)] = True
        ca[j, v] = True
    cb = np.zeros((m, net.n), dtype=bool)
    if problem.master is MasterKind.AND:
        r, ca, cb = ~r, ~ca, ~cb
    known = ~problem.unknown_mask
    if known.any() and m:
        tau = np.where(problem.known_tau < 0, 0, problem.known_tau)
        forced = apply_thresholds(layer_scores(net, r), tau, problem.master)
        ca[:, known] = forced[:, known]
        cb[:, known] = forced[:, known]
    return ShatterCandidate(r, [(ca[j], cb[j]) for j in range(m)], [[v] for v, _ in q])


def qset_proportion_bound(n: int, k: int, sigma: int) -> float:
    """Lower bound on the fraction of k-layer graphs whose full pair set is non-nested."""
    if n < 1 or k < 2 or sigma < 1:
        raise ValueError("need n >= 1, k >= 2 and sigma >= 1")
    if sigma > n:
        raise ValueError("sigma cannot exceed n")
    return max(0.0, 1.0 - 4.0 * (sigma * k) ** 2 * 0.75 ** n)


def estimate_full_qset_probability(n: int, k: int, sigma: int, trials: int, rng) -> float:
    """Fraction of random k-layer graphs (edge probability 1/2) where all sigma*k pairs are non-nested.

    The unknown vertices are ``0 .. sigma-1``; by symmetry the choice does not
    matter.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 1 <= sigma <= n or k < 1:
        raise ValueError("need 1 <= sigma <= n and k >= 1")
    rng = np.random.default_rng(rng)
    unknown = range(sigma)
    hits = 0
    for _ in range(trials):
        net = generate_multi_gnp(n, k, 0.5, rng)
        hits += q_set_check(net, unknown, all_pairs(net, unknown))
    return hits / trials
