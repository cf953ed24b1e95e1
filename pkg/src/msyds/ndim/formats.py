"""Text formats for Q-sets and shatter candidates.

Q-set files hold one ``v i`` pair per line. Candidate files hold one block
per entry, blocks separated by blank lines: the entry's bit string, then
optionally its two associated configurations.
"""

from __future__ import annotations

import io
from typing import IO

import numpy as np

from ..dynamics import format_bits, parse_bits
from .qset import QSet
from .shatter import ShatterCandidate

__all__ = ["dump_candidate", "dump_qset", "load_candidate", "load_qset"]


def _text_lines(source):
    for lineno, raw in enumerate(source, start=1):
        yield lineno, (raw.decode("utf-8") if isinstance(raw, bytes) else raw).strip()


def load_qset(source: IO) -> QSet:
    pairs = []
    for lineno, text in _text_lines(source):
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'v i', got {text!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer field in {text!r}") from None
    return QSet(pairs)


def dump_qset(q: QSet, fh: IO[str]) -> None:
    for v, i in q:
        fh.write(f"{v} {i}\n")


def load_candidate(source: IO, n: int | None = None) -> ShatterCandidate:
    blocks: list[list[np.ndarray]] = [[]]
    for lineno, text in _text_lines(source):
        if text.startswith("#"):
            continue
        if not text:
            if blocks[-1]:
                blocks.append([])
            continue
        try:
            c = parse_bits(text)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if n is None:
            n = c.size
        if c.size != n:
            raise ValueError(f"line {lineno}: expected {n} bits, got {c.size}")
        blocks[-1].append(c)
    blocks = [b for b in blocks if b]
    if n is None:
        return ShatterCandidate(np.zeros((0, 0), bool))
    sizes = {len(b) for b in blocks}
    if not sizes <= {1, 3} or len(sizes) > 1:
        raise ValueError("every block must hold either 1 line (entry) or 3 lines (entry, CA, CB)")
    r = np.array([b[0] for b in blocks], dtype=bool).reshape(-1, n)
    assoc = [(b[1], b[2]) for b in blocks] if sizes == {3} else None
    return ShatterCandidate(r, assoc)


def dump_candidate(candidate: ShatterCandidate, fh: IO[str]) -> None:
    for j, row in enumerate(candidate.R):
        if j:
            fh.write("\n")
        fh.write(format_bits(row) + "\n")
        if candidate.assoc is not None:
            a, b = candidate.assoc[j]
            fh.write(format_bits(a) + "\n" + format_bits(b) + "\n")


def candidate_text(candidate: ShatterCandidate) -> str:
    buf = io.StringIO()
    dump_candidate(candidate, buf)
    return buf.getvalue()
