"""Shared fixtures: tiny deterministic graphs, a random-model factory,
and a straight-line reference implementation of the criterion used as
an oracle against the production code."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from tricluster.graph import TemporalEdge, build_graph
from tricluster.model import ImageGraphModel, model_from_assignments


# -- reference (oracle) criterion, written independently of the package --

@lru_cache(maxsize=None)
def _stirling2(n: int, k: int) -> int:
    if n == 0 and k == 0:
        return 1
    if n == 0 or k == 0 or k > n:
        return 0
    return k * _stirling2(n - 1, k) + _stirling2(n - 1, k - 1)


def oracle_log_cumulative_stirling(n: int, k: int) -> float:
    total = sum(_stirling2(n, j) for j in range(1, min(k, n) + 1))
    return math.log(total)


def oracle_log_binomial(n: int, k: int) -> float:
    return math.log(math.comb(n, k))


def oracle_cost(model: ImageGraphModel) -> float:
    """Straight-line evaluation of the criterion, exact integer
    combinatorics throughout."""
    g = model.graph
    E, Vs, Vt = g.num_edges, g.num_sources, g.num_targets
    Ks = model.num_source_clusters
    Kt = model.num_target_clusters
    N = model.num_segments
    total = math.log(Vs) + math.log(Vt) + math.log(E)
    total += oracle_log_cumulative_stirling(Vs, Ks)
    total += oracle_log_cumulative_stirling(Vt, Kt)
    cells = Ks * Kt * N
    total += oracle_log_binomial(E + cells - 1, cells - 1)
    for c, vs in model.src_members.items():
        total += oracle_log_binomial(model.src_out[c] + len(vs) - 1,
                                     len(vs) - 1)
    for c, vs in model.tgt_members.items():
        total += oracle_log_binomial(model.tgt_in[c] + len(vs) - 1,
                                     len(vs) - 1)
    # multinomial term over cells via exact factorial ratio
    ratio = Fraction(math.factorial(E))
    for d in model.row.values():
        for c in d.values():
            ratio /= math.factorial(c)
    total += math.log(ratio)
    for c in model.src_members:
        total += math.log(math.factorial(model.src_out[c]))
    for c in model.tgt_members:
        total += math.log(math.factorial(model.tgt_in[c]))
    for v in range(Vs):
        total -= math.log(math.factorial(int(g.out_degrees[v])))
    for v in range(Vt):
        total -= math.log(math.factorial(int(g.in_degrees[v])))
    for s in model.seg_sizes.values():
        total += math.log(math.factorial(s))
    return total


# -- graph/model factories -------------------------------------------------

def toy_edges():
    """8 edges, 3 sources, 3 targets, one timestamp tie."""
    return [
        TemporalEdge("a", "x", 1.0),
        TemporalEdge("a", "y", 2.0),
        TemporalEdge("b", "x", 2.0),   # tie with previous edge
        TemporalEdge("b", "y", 3.5),
        TemporalEdge("c", "z", 4.0),
        TemporalEdge("c", "z", 5.0),
        TemporalEdge("a", "z", 6.25),
        TemporalEdge("b", "x", 7.0),
    ]


@pytest.fixture
def toy_graph():
    return build_graph(toy_edges())


def random_graph(rng: np.random.Generator, num_sources=4, num_targets=4,
                 num_edges=12, tie_prob=0.25):
    names_s = [f"s{i}" for i in range(num_sources)]
    names_t = [f"t{i}" for i in range(num_targets)]
    ts = 0.0
    edges = []
    for _ in range(num_edges):
        if not edges or rng.random() > tie_prob:
            ts += float(rng.integers(1, 4))
        edges.append(TemporalEdge(names_s[int(rng.integers(num_sources))],
                                  names_t[int(rng.integers(num_targets))],
                                  ts))
    order = rng.permutation(num_edges)
    return build_graph([edges[i] for i in order], names_s, names_t)


def set_partitions(items):
    """All partitions of a list, as lists of blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partial in set_partitions(rest):
        for i in range(len(partial)):
            yield partial[:i] + [[first] + partial[i]] + partial[i + 1:]
        yield [[first]] + partial


def exhaustive_minimum(graph):
    """Global criterion minimum by brute force over every (source
    partition, target partition, contiguous segmentation) triple."""
    from itertools import combinations

    from tricluster.criterion import cost

    atoms = [int(a) for a in graph.atom_starts[1:]]
    best = math.inf
    src_parts = list(set_partitions(list(range(graph.num_sources))))
    tgt_parts = list(set_partitions(list(range(graph.num_targets))))
    for sp in src_parts:
        src = [0] * graph.num_sources
        for k, block in enumerate(sp):
            for v in block:
                src[v] = k
        for tp in tgt_parts:
            tgt = [0] * graph.num_targets
            for k, block in enumerate(tp):
                for v in block:
                    tgt[v] = k
            for r in range(len(atoms) + 1):
                for cut in combinations(atoms, r):
                    m = model_from_assignments(graph, src, tgt, list(cut))
                    total = cost(m).total
                    if total < best:
                        best = total
    return best


def random_model(graph, rng: np.random.Generator):
    ks = int(rng.integers(1, graph.num_sources + 1))
    kt = int(rng.integers(1, graph.num_targets + 1))
    src = [int(rng.integers(ks)) for _ in range(graph.num_sources)]
    tgt = [int(rng.integers(kt)) for _ in range(graph.num_targets)]
    atoms = [int(a) for a in graph.atom_starts[1:]]
    boundaries = [a for a in atoms if rng.random() < 0.5]
    return model_from_assignments(graph, src, tgt, boundaries)
