"""Temporal multigraph container with rank-ordered edges.

Timestamps are only used through their ranks: edges are sorted by
(timestamp, source, target, input position) and every downstream
computation works on the resulting rank sequence. Runs of identical
timestamps ("ties") are atomic: a time segment boundary may never fall
inside one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import math

import numpy as np


class IngestionError(ValueError):
    """Raised when an edge list cannot be turned into a TemporalGraph."""


@dataclass(frozen=True)
class TemporalEdge:
    source: str
    target: str
    timestamp: float


class TemporalGraph:
    """Immutable directed multigraph with timestamped, rank-ordered edges.

    Vertex identifiers are interned to dense integers; all arrays are
    indexed by rank (0-based internally, 1..|E| in exported documents).
    """

    def __init__(self, edges: Sequence[TemporalEdge],
                 source_set: Iterable[str] | None = None,
                 target_set: Iterable[str] | None = None):
        if source_set is None:
            source_names = sorted({e.source for e in edges})
        else:
            source_names = list(dict.fromkeys(source_set))
        if target_set is None:
            target_names = sorted({e.target for e in edges})
        else:
            target_names = list(dict.fromkeys(target_set))

        src_index = {v: i for i, v in enumerate(source_names)}
        tgt_index = {v: i for i, v in enumerate(target_names)}

        for e in edges:
            if not math.isfinite(e.timestamp):
                raise IngestionError(f"non-finite timestamp on edge {e}")
            if e.source not in src_index:
                raise IngestionError(f"source {e.source!r} not in declared "
                                     f"source set (edge {e})")
            if e.target not in tgt_index:
                raise IngestionError(f"target {e.target!r} not in declared "
                                     f"target set (edge {e})")

        self.source_names = source_names
        self.target_names = target_names
        self.source_index = src_index
        self.target_index = tgt_index

        m = len(edges)
        # deterministic tie order: (timestamp, source id, target id, position)
        order = sorted(range(m), key=lambda i: (edges[i].timestamp,
                                                src_index[edges[i].source],
                                                tgt_index[edges[i].target],
                                                i))
        self.timestamps = np.array([edges[i].timestamp for i in order],
                                   dtype=float)
        self.src_by_rank = np.array([src_index[edges[i].source]
                                     for i in order], dtype=np.int64)
        self.tgt_by_rank = np.array([tgt_index[edges[i].target]
                                     for i in order], dtype=np.int64)
        # edge_ranks[i] = 1-based rank of input edge i
        self.edge_ranks = np.empty(m, dtype=np.int64)
        for rank, i in enumerate(order):
            self.edge_ranks[i] = rank + 1

        # atoms: maximal runs of equal timestamps; atom_starts[k] is the
        # 0-based rank where atom k begins
        starts = [0] if m else []
        for r in range(1, m):
            if self.timestamps[r] != self.timestamps[r - 1]:
                starts.append(r)
        self.atom_starts = np.array(starts, dtype=np.int64)

        self.out_degrees = np.bincount(self.src_by_rank,
                                       minlength=len(source_names))
        self.in_degrees = np.bincount(self.tgt_by_rank,
                                      minlength=len(target_names))

    @property
    def num_edges(self) -> int:
        return len(self.timestamps)

    @property
    def num_sources(self) -> int:
        return len(self.source_names)

    @property
    def num_targets(self) -> int:
        return len(self.target_names)

    @property
    def num_atoms(self) -> int:
        return len(self.atom_starts)

    def atom_size(self, k: int) -> int:
        s = self.atom_starts
        end = s[k + 1] if k + 1 < len(s) else self.num_edges
        return int(end - s[k])

    def edges(self) -> list[TemporalEdge]:
        """Edges in rank order."""
        return [TemporalEdge(self.source_names[s], self.target_names[t],
                             float(ts))
                for s, t, ts in zip(self.src_by_rank, self.tgt_by_rank,
                                    self.timestamps)]


def build_graph(edges: Sequence[TemporalEdge],
                source_set: Iterable[str] | None = None,
                target_set: Iterable[str] | None = None) -> TemporalGraph:
    return TemporalGraph(edges, source_set, target_set)


def parse_edge_line(line: str, lineno: int) -> TemporalEdge | None:
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    parts = stripped.split("\t")
    if len(parts) == 1:  # tolerate space-separated input
        parts = stripped.split()
    if len(parts) != 3:
        raise IngestionError(f"line {lineno}: expected "
                             f"'source<TAB>target<TAB>timestamp', got {line!r}")
    try:
        ts = float(parts[2])
    except ValueError:
        raise IngestionError(f"line {lineno}: bad timestamp {parts[2]!r}")
    return TemporalEdge(parts[0], parts[1], ts)


def read_edge_list(path) -> TemporalGraph:
    """Read `source<TAB>target<TAB>timestamp` lines; '#' comments skipped."""
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            edge = parse_edge_line(line, lineno)
            if edge is not None:
                edges.append(edge)
    return build_graph(edges)


def write_edge_list(graph: TemporalGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in graph.edges():
            fh.write(f"{e.source}\t{e.target}\t{e.timestamp!r}\n")
