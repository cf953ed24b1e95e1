"""Landmark vertices and canonical configuration sets on single-layer networks."""

from __future__ import annotations

import numpy as np

from ..dynamics import layer_scores
from ..graph import MultilayerNetwork

__all__ = [
    "as_config_set",
    "dfs_canonical_set",
    "dfs_discovery",
    "is_canonical",
    "is_landmark",
    "landmark_sets",
]


def _require_single_layer(net: MultilayerNetwork) -> None:
    if net.k != 1:
        raise ValueError(f"landmark/canonical checks need a single-layer network, got k={net.k}")


def as_config_set(configs, n: int) -> np.ndarray:
    """``(m, n)`` bool array of pairwise distinct configurations."""
    r = np.array(configs, dtype=bool).reshape(-1, n) if len(configs) else np.zeros((0, n), bool)
    if r.shape[1] != n:
        raise ValueError(f"configurations must have length n={n}")
    if len(np.unique(r, axis=0)) != len(r):
        raise ValueError("configuration set contains duplicates")
    return r


def _single_layer_scores(net, r) -> np.ndarray:
    if len(r) == 0:
        return np.zeros((0, net.n), dtype=np.int32)
    return layer_scores(net, r)[0]


def is_landmark(net: MultilayerNetwork, configs, idx: int, v: int) -> bool:
    """True iff the score of ``v`` under entry ``idx`` differs from its score under every other entry."""
    _require_single_layer(net)
    r = as_config_set(configs, net.n)
    if not 0 <= idx < len(r):
        raise IndexError(f"entry {idx} out of range")
    net.check_vertex(v)
    col = _single_layer_scores(net, r)[:, v]
    return int(np.count_nonzero(col == col[idx])) == 1


def landmark_sets(net: MultilayerNetwork, configs, unknown) -> list[list[int]]:
    """For every entry, the sorted unknown vertices that are landmarks for it."""
    _require_single_layer(net)
    r = as_config_set(configs, net.n)
    u = np.unique(np.asarray(list(unknown), dtype=np.int64))
    s = _single_layer_scores(net, r)[:, u]
    out = []
    for j in range(len(r)):
        unique_here = (s == s[j]).sum(axis=0) == 1
        out.append(u[unique_here].tolist())
    return out


def is_canonical(net: MultilayerNetwork, configs, unknown) -> dict[int, int] | None:
    """An injective map entry -> landmark vertex of that entry, or None if none exists.

    Found as a maximum bipartite matching with augmenting paths. Entries and
    candidate vertices are tried in ascending order, free vertices before
    reassigning taken ones, so the result is deterministic.
    """
    candidates = landmark_sets(net, configs, unknown)
    owner: dict[int, int] = {}

    def augment(e: int, seen: set[int]) -> bool:
        for v in candidates[e]:
            if v not in owner:
                owner[v] = e
                return True
        for v in candidates[e]:
            if v in seen:
                continue
            seen.add(v)
            if v not in owner or augment(owner[v], seen):
                owner[v] = e
                return True
        return False

    for e in range(len(candidates)):
        if not augment(e, set()):
            return None
    return {e: v for v, e in sorted(owner.items(), key=lambda kv: kv[1])}


def dfs_discovery(net: MultilayerNetwork, unknown) -> tuple[list[int], np.ndarray]:
    """Depth-first traversal of the subgraph induced on ``unknown``.

    Roots and neighbors are taken lowest index first; the traversal restarts
    at the next unvisited vertex whenever a component is exhausted. Returns
    the discovery order and, per discovery, the configuration whose 1-entries
    are exactly the vertices on the stack at that moment.
    """
    _require_single_layer(net)
    u = np.unique(np.asarray(list(unknown), dtype=np.int64))
    if u.size == 0:
        raise ValueError("need at least one unknown vertex")
    inside = np.zeros(net.n, dtype=bool)
    inside[u] = True
    visited = np.zeros(net.n, dtype=bool)
    order: list[int] = []
    configs = np.zeros((u.size, net.n), dtype=bool)
    on_stack = np.zeros(net.n, dtype=bool)

    def discover(v, stack):
        visited[v] = True
        stack.append(v)
        on_stack[v] = True
        configs[len(order)] = on_stack
        order.append(v)

    for root in u.tolist():
        if visited[root]:
            continue
        stack: list[int] = []
        cursor = {root: 0}
        discover(root, stack)
        while stack:
            top = stack[-1]
            nb = net.neighbors(top, 0)
            j = cursor[top]
            while j < nb.size and (not inside[nb[j]] or visited[nb[j]]):
                j += 1
            cursor[top] = j
            if j < nb.size:
                nxt = int(nb[j])
                cursor[nxt] = 0
                discover(nxt, stack)
            else:
                stack.pop()
                on_stack[top] = False
    return order, configs


def dfs_canonical_set(net: MultilayerNetwork, unknown) -> np.ndarray:
    """A canonical set of size sigma, one configuration per unknown vertex.

    The i-th configuration has the i-th discovered vertex as a landmark.
    """
    return dfs_discovery(net, unknown)[1]
