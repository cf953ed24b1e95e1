"""Multilayer networks: storage, edge-list I/O and random generation.

A network is ``k`` undirected simple graphs over the shared vertex set
``0..n-1``. Each layer is kept as a symmetric CSR adjacency matrix whose
rows are the sorted neighbor lists of the vertices.
"""

from __future__ import annotations

import io
import os
from functools import cached_property
from typing import IO, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "EdgeListError",
    "MultilayerNetwork",
    "closed_neighborhood",
    "degree",
    "dump_edge_list",
    "generate_multi_gnp",
    "load_edge_list",
    "merged_average_degree",
    "read_edge_list",
    "serialize_edge_list",
    "write_edge_list",
]


class EdgeListError(ValueError):
    """Malformed edge-list input. ``lineno`` is 1-based, or None for header-less input."""

    def __init__(self, lineno: int | None, message: str):
        self.lineno = lineno
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + message)


def _freeze(a: sp.csr_array) -> sp.csr_array:
    for arr in (a.data, a.indices, a.indptr):
        arr.setflags(write=False)
    return a


class MultilayerNetwork:
    """k undirected layers on the vertex set ``0..n-1``.

    Instances are immutable once built. Use :meth:`from_edges` to construct
    one from per-layer edge lists.

    Attributes
    ----------
    n : int
        Number of vertices.
    k : int
        Number of layers.
    labels : tuple of str or None
        Original vertex names when the network was loaded from a file with
        non-integer vertex tokens; ``labels[v]`` is the name of vertex ``v``.
    """

    def __init__(self, n: int, layers: Sequence[sp.csr_array], labels: Sequence[str] | None = None):
        if n < 0:
            raise ValueError("n must be non-negative")
        if len(layers) < 1:
            raise ValueError("a multilayer network needs at least one layer")
        checked = []
        for i, a in enumerate(layers):
            a = sp.csr_array(a, dtype=np.int8, copy=True)
            if a.shape != (n, n):
                raise ValueError(f"layer {i} has shape {a.shape}, expected {(n, n)}")
            a.sum_duplicates()
            a.eliminate_zeros()
            a.sort_indices()
            if np.any(a.data != 1):
                raise ValueError(f"layer {i} has duplicate edges")
            if a.diagonal().any():
                raise ValueError(f"layer {i} has a self-loop")
            if (a != a.T).nnz:
                raise ValueError(f"layer {i} is not symmetric")
            checked.append(_freeze(a))
        self.n = int(n)
        self.k = len(checked)
        self.layers: tuple[sp.csr_array, ...] = tuple(checked)
        self.labels = tuple(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != self.n:
            raise ValueError("labels must name every vertex")

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[Iterable[tuple[int, int]]], labels=None) -> "MultilayerNetwork":
        """Build a network from one iterable of ``(u, v)`` pairs per layer.

        Raises ValueError on self-loops, out-of-range ids or duplicate edges.
        """
        layers = []
        for i, layer_edges in enumerate(edges):
            e = np.asarray(list(layer_edges), dtype=np.int64).reshape(-1, 2)
            if e.size and (e.min() < 0 or e.max() >= n):
                raise ValueError(f"layer {i}: vertex id out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError(f"layer {i}: self-loop")
            lo, hi = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
            if len(np.unique(lo * n + hi)) != len(lo):
                raise ValueError(f"layer {i}: duplicate edge")
            layers.append(_symmetric(n, lo, hi))
        return cls(n, layers, labels=labels)

    def __repr__(self) -> str:
        return f"MultilayerNetwork(n={self.n}, k={self.k}, m={self.num_edges})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultilayerNetwork):
            return NotImplemented
        return (
            self.n == other.n
            and self.k == other.k
            and all((a != b).nnz == 0 for a, b in zip(self.layers, other.layers))
        )

    __hash__ = None

    def neighbors(self, v: int, i: int) -> np.ndarray:
        """Sorted neighbor ids of ``v`` in layer ``i`` (read-only view)."""
        a = self.layers[i]
        return a.indices[a.indptr[v]:a.indptr[v + 1]]

    def edges(self, i: int) -> np.ndarray:
        """Edges of layer ``i`` as an ``(m, 2)`` array with ``u < v``, sorted."""
        coo = sp.triu(self.layers[i], k=1, format="coo")
        e = np.column_stack([coo.row, coo.col]).astype(np.int64)
        return e[np.lexsort((e[:, 1], e[:, 0]))]

    @property
    def num_edges(self) -> int:
        return sum(a.nnz // 2 for a in self.layers)

    @cached_property
    def degrees(self) -> np.ndarray:
        """``(k, n)`` array; ``degrees[i, v]`` is the degree of ``v`` in layer ``i``."""
        d = np.stack([np.diff(a.indptr) for a in self.layers]).astype(np.int64)
        d.setflags(write=False)
        return d

    @cached_property
    def closed_adjacency(self) -> tuple[sp.csr_array, ...]:
        """Per-layer ``A + I`` in float32, the kernel used for score computation."""
        eye = sp.eye_array(self.n, dtype=np.float32, format="csr")
        return tuple(_freeze(sp.csr_array(a.astype(np.float32) + eye)) for a in self.layers)

    def check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise ValueError(f"vertex {v} out of range for n={self.n}")

    def check_layer(self, i: int) -> None:
        if not 0 <= i < self.k:
            raise ValueError(f"layer {i} out of range for k={self.k}")


def _symmetric(n: int, lo: np.ndarray, hi: np.ndarray) -> sp.csr_array:
    rows = np.concatenate([lo, hi])
    cols = np.concatenate([hi, lo])
    data = np.ones(len(rows), dtype=np.int8)
    return sp.csr_array((data, (rows, cols)), shape=(n, n))


def closed_neighborhood(net: MultilayerNetwork, v: int, i: int) -> frozenset[int]:
    net.check_vertex(v)
    net.check_layer(i)
    return frozenset(net.neighbors(v, i).tolist()) | {v}


def closed_neighborhood_array(net: MultilayerNetwork, v: int, i: int) -> np.ndarray:
    """Sorted array form of :func:`closed_neighborhood`."""
    nb = net.neighbors(v, i)
    pos = np.searchsorted(nb, v)
    return np.insert(nb, pos, v)


def degree(net: MultilayerNetwork, v: int, i: int) -> int:
    net.check_vertex(v)
    net.check_layer(i)
    return int(net.degrees[i, v])


def merged_average_degree(net: MultilayerNetwork, vset: Iterable[int]) -> float:
    """Mean degree of ``vset`` in the union of all layers, parallel edges merged."""
    vs = np.asarray(sorted(set(int(v) for v in vset)), dtype=np.int64)
    if vs.size == 0:
        raise ValueError("vertex subset must be non-empty")
    if vs[0] < 0 or vs[-1] >= net.n:
        raise ValueError("vertex id out of range")
    union = net.layers[0].astype(bool)
    for a in net.layers[1:]:
        union = union + a.astype(bool)
    deg = np.diff(sp.csr_array(union).indptr)
    return float(deg[vs].mean())


def generate_multi_gnp(n: int, k: int, edge_prob: float, rng) -> MultilayerNetwork:
    """k independent G(n, p) layers.

    Each of the ``k * n(n-1)/2`` vertex pairs is an edge independently with
    probability ``edge_prob``. Layers are drawn in order from ``rng``, so a
    fixed seed always gives the same network.
    """
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("edge_prob must lie in [0, 1]")
    if n < 0 or k < 1:
        raise ValueError("need n >= 0 and k >= 1")
    rng = np.random.default_rng(rng)
    iu, ju = np.triu_indices(n, 1)
    layers = []
    for _ in range(k):
        keep = rng.random(iu.size) < edge_prob
        layers.append(_symmetric(n, iu[keep], ju[keep]))
    return MultilayerNetwork(n, layers)


# --- edge-list format ------------------------------------------------------

def _lines(source) -> Iterable[str]:
    for raw in source:
        yield raw.decode("utf-8") if isinstance(raw, bytes) else raw


def load_edge_list(source: IO) -> MultilayerNetwork:
    """Parse an edge list from a binary or text stream.

    The first non-comment line is ``n k``; each further line is ``i u v``.
    Vertex tokens that are not all integers are treated as names and mapped to
    ids in order of first appearance (kept in ``net.labels``).
    """
    header = None
    records: list[tuple[int, int, str, str]] = []
    for lineno, line in enumerate(_lines(source), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if header is None:
            if len(parts) != 2:
                raise EdgeListError(lineno, f"expected header 'n k', got {text!r}")
            try:
                n, k = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListError(lineno, f"non-integer header {text!r}") from None
            if n < 0 or k < 1:
                raise EdgeListError(lineno, "header needs n >= 0 and k >= 1")
            header = (n, k)
            continue
        if len(parts) != 3:
            raise EdgeListError(lineno, f"expected 'i u v', got {text!r}")
        try:
            i = int(parts[0])
        except ValueError:
            raise EdgeListError(lineno, f"non-integer layer index {parts[0]!r}") from None
        records.append((lineno, i, parts[1], parts[2]))
    if header is None:
        raise EdgeListError(None, "missing 'n k' header")
    n, k = header

    def _int(tok):
        try:
            return int(tok)
        except ValueError:
            return None

    integer_ids = all(_int(u) is not None and _int(v) is not None for _, _, u, v in records)
    label_ids: dict[str, int] = {}

    def vid(lineno, tok):
        if integer_ids:
            x = int(tok)
            if not 0 <= x < n:
                raise EdgeListError(lineno, f"vertex id {x} out of range for n={n}")
            return x
        if tok not in label_ids:
            if len(label_ids) == n:
                raise EdgeListError(lineno, f"more than n={n} distinct vertex labels")
            label_ids[tok] = len(label_ids)
        return label_ids[tok]

    seen: set[tuple[int, int, int]] = set()
    per_layer: list[list[tuple[int, int]]] = [[] for _ in range(k)]
    for lineno, i, ut, vt in records:
        if not 0 <= i < k:
            raise EdgeListError(lineno, f"layer index {i} out of range for k={k}")
        u, v = vid(lineno, ut), vid(lineno, vt)
        if u == v:
            raise EdgeListError(lineno, f"self-loop on vertex {ut}")
        key = (i, min(u, v), max(u, v))
        if key in seen:
            raise EdgeListError(lineno, f"duplicate edge {ut}-{vt} in layer {i}")
        seen.add(key)
        per_layer[i].append((u, v))

    labels = None
    if not integer_ids:
        names = list(label_ids)
        names += [f"_{j}" for j in range(len(names), n)]
        labels = names
    return MultilayerNetwork.from_edges(n, per_layer, labels=labels)


def read_edge_list(path: str | os.PathLike) -> MultilayerNetwork:
    with open(path, "rb") as fh:
        return load_edge_list(fh)


def dump_edge_list(net: MultilayerNetwork, fh: IO[str]) -> None:
    """Write ``net`` in canonical order: edges sorted by (layer, min, max)."""
    fh.write(f"{net.n} {net.k}\n")
    for i in range(net.k):
        for u, v in net.edges(i):
            fh.write(f"{i} {u} {v}\n")


def serialize_edge_list(net: MultilayerNetwork) -> str:
    buf = io.StringIO()
    dump_edge_list(net, buf)
    return buf.getvalue()


def write_edge_list(net: MultilayerNetwork, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        dump_edge_list(net, fh)
