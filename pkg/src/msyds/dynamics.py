"""Threshold dynamics on multilayer networks.

Configurations are numpy boolean arrays: a single configuration has shape
``(n,)`` and a batch has shape ``(S, n)``. Every evaluation routine accepts
either form and returns the same form.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .graph import MultilayerNetwork

__all__ = [
    "MasterKind",
    "ThresholdSystem",
    "ThresholdFileError",
    "apply_thresholds",
    "as_config",
    "dump_thresholds",
    "format_bits",
    "layer_scores",
    "load_thresholds",
    "parse_bits",
    "random_thresholds",
    "score",
    "successor",
    "trajectory",
]


class MasterKind(enum.Enum):
    """How the per-layer threshold outputs of a vertex are combined."""

    OR = "or"
    AND = "and"

    @classmethod
    def parse(cls, value) -> "MasterKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown master function {value!r}; use 'or' or 'and'") from None


def parse_bits(s: str) -> np.ndarray:
    s = s.strip()
    if not s or set(s) - {"0", "1"}:
        raise ValueError(f"not a bit string: {s!r}")
    return np.frombuffer(s.encode("ascii"), dtype=np.uint8) == ord("1")


def format_bits(c) -> str:
    return "".join("1" if b else "0" for b in np.asarray(c, dtype=bool))


def as_config(c, n: int | None = None) -> np.ndarray:
    """Coerce a bit string, sequence or array into a boolean configuration array."""
    if isinstance(c, str):
        arr = parse_bits(c)
    else:
        raw = np.asarray(c)
        if raw.dtype != bool and raw.size and not np.isin(raw, (0, 1)).all():
            raise ValueError("configuration entries must be 0 or 1")
        arr = raw.astype(bool)
    if arr.ndim not in (1, 2):
        raise ValueError("configuration must be 1-D (single) or 2-D (batch)")
    if n is not None and arr.shape[-1] != n:
        raise ValueError(f"configuration length {arr.shape[-1]} does not match n={n}")
    return arr


def layer_scores(net: MultilayerNetwork, configs) -> np.ndarray:
    """Scores of every vertex on every layer.

    Returns an int32 array of shape ``(k, n)`` for a single configuration or
    ``(k, S, n)`` for a batch; entry ``[i, ..., v]`` counts the state-1
    vertices in the closed neighborhood of ``v`` on layer ``i``.
    """
    x = as_config(configs, net.n)
    single = x.ndim == 1
    xf = np.atleast_2d(x).astype(np.float32)
    out = np.empty((net.k, xf.shape[0], net.n), dtype=np.int32)
    for i, b in enumerate(net.closed_adjacency):
        # B is symmetric, so X @ B sums each closed neighborhood
        out[i] = xf @ b
    return out[:, 0, :] if single else out


def score(net: MultilayerNetwork, c, v: int, i: int) -> int:
    net.check_vertex(v)
    net.check_layer(i)
    c = as_config(c, net.n)
    nb = net.neighbors(v, i)
    return int(c[v]) + int(np.count_nonzero(c[nb]))


def apply_thresholds(scores: np.ndarray, tau: np.ndarray, master: MasterKind) -> np.ndarray:
    """Combine per-layer threshold tests into next states.

    ``scores`` has the layer axis first, as returned by :func:`layer_scores`.
    """
    tau = np.asarray(tau)
    shape = (tau.shape[0],) + (1,) * (scores.ndim - 2) + (tau.shape[1],)
    fired = scores >= tau.reshape(shape)
    if master is MasterKind.OR:
        return fired.any(axis=0)
    return fired.all(axis=0)


@dataclass(frozen=True, eq=False)
class ThresholdSystem:
    """A multilayer synchronous threshold system.

    ``tau[i, v]`` is the threshold of vertex ``v`` on layer ``i``; valid values
    are ``0 .. deg_i(v) + 2`` (0 always fires, ``deg + 2`` never does).
    Calling the system on a configuration returns its successor.
    """

    net: MultilayerNetwork
    master: MasterKind
    tau: np.ndarray

    def __post_init__(self):
        master = MasterKind.parse(self.master)
        tau = np.array(self.tau, dtype=np.int64, copy=True)
        if tau.shape != (self.net.k, self.net.n):
            raise ValueError(f"threshold table shape {tau.shape} != {(self.net.k, self.net.n)}")
        hi = self.net.degrees + 2
        bad = (tau < 0) | (tau > hi)
        if bad.any():
            i, v = map(int, np.argwhere(bad)[0])
            raise ValueError(f"threshold {tau[i, v]} of vertex {v} on layer {i} outside [0, {hi[i, v]}]")
        tau.setflags(write=False)
        object.__setattr__(self, "master", master)
        object.__setattr__(self, "tau", tau)

    def __call__(self, c) -> np.ndarray:
        return successor(self, c)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ThresholdSystem):
            return NotImplemented
        return self.net is other.net and self.master is other.master and np.array_equal(self.tau, other.tau)

    __hash__ = None

    def with_tau(self, tau) -> "ThresholdSystem":
        return ThresholdSystem(self.net, self.master, tau)


def successor(system: ThresholdSystem, c) -> np.ndarray:
    """One synchronous update. Input is not modified; batches map row-wise."""
    return apply_thresholds(layer_scores(system.net, c), system.tau, system.master)


def trajectory(system: ThresholdSystem, c0, steps: int) -> list[np.ndarray]:
    if steps < 0:
        raise ValueError("steps must be non-negative")
    c = as_config(c0, system.net.n)
    if c.ndim != 1:
        raise ValueError("trajectory expects a single configuration")
    out = [c.copy()]
    for _ in range(steps):
        out.append(successor(system, out[-1]))
    return out


def random_thresholds(net: MultilayerNetwork, rng) -> np.ndarray:
    """Thresholds drawn uniformly from ``0 .. deg_i(v) + 2`` for every (layer, vertex)."""
    rng = np.random.default_rng(rng)
    return rng.integers(0, net.degrees + 3)


# --- threshold file --------------------------------------------------------

class ThresholdFileError(ValueError):
    pass


def load_thresholds(source: IO, net: MultilayerNetwork) -> np.ndarray:
    """Read ``i v tau`` lines; every (layer, vertex) must appear exactly once."""
    tau = np.full((net.k, net.n), -1, dtype=np.int64)
    for lineno, raw in enumerate(source, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if len(parts) != 3:
            raise ThresholdFileError(f"line {lineno}: expected 'i v tau', got {text!r}")
        try:
            i, v, t = (int(p) for p in parts)
        except ValueError:
            raise ThresholdFileError(f"line {lineno}: non-integer field in {text!r}") from None
        if not (0 <= i < net.k and 0 <= v < net.n):
            raise ThresholdFileError(f"line {lineno}: (layer {i}, vertex {v}) out of range")
        if tau[i, v] != -1:
            raise ThresholdFileError(f"line {lineno}: duplicate entry for layer {i}, vertex {v}")
        if not 0 <= t <= net.degrees[i, v] + 2:
            raise ThresholdFileError(
                f"line {lineno}: threshold {t} outside [0, {net.degrees[i, v] + 2}]")
        tau[i, v] = t
    missing = np.argwhere(tau < 0)
    if missing.size:
        i, v = map(int, missing[0])
        raise ThresholdFileError(f"missing threshold for layer {i}, vertex {v} ({len(missing)} missing)")
    return tau


def dump_thresholds(tau: np.ndarray, fh: IO[str]) -> None:
    tau = np.asarray(tau)
    for i in range(tau.shape[0]):
        for v in range(tau.shape[1]):
            fh.write(f"{i} {v} {int(tau[i, v])}\n")


def thresholds_text(tau: np.ndarray) -> str:
    buf = io.StringIO()
    dump_thresholds(tau, buf)
    return buf.getvalue()


def configs_from_lines(lines: Iterable[str], n: int) -> np.ndarray:
    rows = [as_config(t.strip(), n) for t in lines if t.strip() and not t.lstrip().startswith("#")]
    return np.array(rows, dtype=bool).reshape(-1, n)
