"""Synthetic temporal-graph generators used by the benchmark and
acceptance suites: patterned evolving graphs, stationary shuffles, and
fully random rewires.

The default PatternSpec is the 40-vertex benchmark: clusters of sizes
(5, 5, 10, 20), study window [0, 100] split into four intervals with a
distinct cluster-to-cluster connectivity map each, and 30% of the edges
rewired as noise.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .graph import TemporalEdge, TemporalGraph, build_graph


class GenerationError(ValueError):
    pass


def _default_intervals():
    return ((0.0, 20.0), (20.0, 30.0), (30.0, 60.0), (60.0, 100.0))


def _default_image_graphs():
    # one connectivity map per interval; adjacent intervals differ and
    # every cluster has a distinct outgoing profile overall
    return (
        {0: (0,), 1: (1,), 2: (2,), 3: (3,)},
        {0: (1,), 1: (0,), 2: (3,), 3: (2,)},
        {0: (0, 1), 1: (2,), 2: (3,)},
        {0: (3,), 1: (3,), 2: (0, 1), 3: (2,)},
    )


@dataclass(frozen=True)
class PatternSpec:
    cluster_sizes: tuple = (5, 5, 10, 20)
    intervals: tuple = field(default_factory=_default_intervals)
    interval_image_graphs: tuple = field(default_factory=_default_image_graphs)
    noise_fraction: float = 0.3
    num_edges: int = 8192
    seed: int = 1

    def validate(self) -> None:
        if self.num_edges < 1:
            raise GenerationError("num_edges must be >= 1")
        if not 0.0 <= self.noise_fraction <= 1.0:
            raise GenerationError("noise_fraction must be in [0, 1]")
        if len(self.intervals) != len(self.interval_image_graphs):
            raise GenerationError("one image graph per interval required")
        prev_end = None
        for lo, hi in self.intervals:
            if hi <= lo or (prev_end is not None and lo != prev_end):
                raise GenerationError("intervals must be ordered, disjoint "
                                      "and contiguous")
            prev_end = hi
        k = len(self.cluster_sizes)
        if not any(ig for ig in self.interval_image_graphs):
            raise GenerationError("no interval has any connected cluster")
        for ig in self.interval_image_graphs:
            for src, tgts in ig.items():
                if not 0 <= src < k or not tgts \
                        or any(not 0 <= t < k for t in tgts):
                    raise GenerationError(f"bad image graph entry {src}: "
                                          f"{tgts}")


@dataclass(frozen=True)
class GroundTruth:
    """Per-vertex true cluster and per-edge true interval, both in the
    graph's rank order."""
    vertex_clusters: tuple
    edge_intervals: tuple


def _vertex_names(n: int) -> list[str]:
    return [f"v{i:03d}" for i in range(n)]


def generate_patterned(spec: PatternSpec) -> tuple[TemporalGraph,
                                                   GroundTruth]:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    sizes = spec.cluster_sizes
    n_vertices = int(sum(sizes))
    names = _vertex_names(n_vertices)
    cluster_of = []
    for c, s in enumerate(sizes):
        cluster_of.extend([c] * s)
    cluster_vertices = {c: [v for v in range(n_vertices)
                            if cluster_of[v] == c]
                        for c in range(len(sizes))}
    window_lo = spec.intervals[0][0]
    window_hi = spec.intervals[-1][1]
    interval_starts = [lo for lo, _ in spec.intervals]
    union_by_iv_src = {}
    for iv, ig in enumerate(spec.interval_image_graphs):
        for src, tgts in ig.items():
            union_by_iv_src[(iv, src)] = sorted(
                v for c in tgts for v in cluster_vertices[c])

    srcs, tgts, tss, ivs = [], [], [], []
    while len(srcs) < spec.num_edges:
        # redraw (rather than skip) when the source cluster has no
        # outgoing image edge in the drawn interval
        v = int(rng.integers(n_vertices))
        ts = float(rng.uniform(window_lo, window_hi))
        iv = bisect.bisect_right(interval_starts, ts) - 1
        pool = union_by_iv_src.get((iv, cluster_of[v]))
        if pool is None:
            continue
        srcs.append(v)
        tgts.append(pool[int(rng.integers(len(pool)))])
        tss.append(ts)
        ivs.append(iv)

    n_noise = int(spec.noise_fraction * spec.num_edges)
    if n_noise:
        idx = rng.choice(spec.num_edges, size=n_noise, replace=False)
        for i in idx:
            tgts[int(i)] = int(rng.integers(n_vertices))

    edges = [TemporalEdge(names[s], names[t], ts)
             for s, t, ts in zip(srcs, tgts, tss)]
    graph = build_graph(edges, names, names)
    edge_iv_by_rank = [0] * spec.num_edges
    for i, rank in enumerate(graph.edge_ranks):
        edge_iv_by_rank[rank - 1] = ivs[i]
    return graph, GroundTruth(tuple(cluster_of), tuple(edge_iv_by_rank))


def shuffle_timestamps(graph: TemporalGraph, seed: int) -> TemporalGraph:
    """Permute the timestamp multiset over the (source, target) pairs."""
    if graph.num_edges < 1:
        raise GenerationError("empty graph")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(graph.num_edges)
    edges = [TemporalEdge(graph.source_names[graph.src_by_rank[i]],
                          graph.target_names[graph.tgt_by_rank[i]],
                          float(graph.timestamps[perm[i]]))
             for i in range(graph.num_edges)]
    return build_graph(edges, graph.source_names, graph.target_names)


def rewire_all(graph: TemporalGraph, seed: int) -> TemporalGraph:
    """Redraw every edge's endpoints uniformly; timestamps preserved."""
    if graph.num_edges < 1:
        raise GenerationError("empty graph")
    rng = np.random.default_rng(seed)
    src = rng.integers(graph.num_sources, size=graph.num_edges)
    tgt = rng.integers(graph.num_targets, size=graph.num_edges)
    edges = [TemporalEdge(graph.source_names[int(s)],
                          graph.target_names[int(t)], float(ts))
             for s, t, ts in zip(src, tgt, graph.timestamps)]
    return build_graph(edges, graph.source_names, graph.target_names)
