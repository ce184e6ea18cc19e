import numpy as np
import pytest

from tricluster.graph import TemporalEdge, build_graph
from tricluster.model import (ImageGraphModel, MergeProposal, ModelError,
                              apply_merge, finest_model,
                              model_from_assignments, null_model)

from conftest import random_graph, random_model


def test_finest_model_shape(toy_graph):
    m = finest_model(toy_graph)
    assert m.num_source_clusters == toy_graph.num_sources
    assert m.num_target_clusters == toy_graph.num_targets
    assert m.num_segments == toy_graph.num_atoms
    m.check_invariants()


def test_null_model_shape(toy_graph):
    m = null_model(toy_graph)
    assert (m.num_source_clusters, m.num_target_clusters,
            m.num_segments) == (1, 1, 1)
    assert m.cell_count_total() == toy_graph.num_edges
    m.check_invariants()


def test_empty_graph_rejected():
    g = build_graph([], ["u"], ["v"])
    with pytest.raises(ModelError):
        finest_model(g)
    with pytest.raises(ModelError):
        null_model(g)


def test_boundary_inside_tie_rejected(toy_graph):
    # rank 2 (0-based) is inside the t=2.0 tie
    with pytest.raises(ModelError, match="tie"):
        model_from_assignments(toy_graph,
                               [0] * toy_graph.num_sources,
                               [0] * toy_graph.num_targets, [2])


def test_bad_boundaries_rejected(toy_graph):
    Vs, Vt = toy_graph.num_sources, toy_graph.num_targets
    for bad in ([0], [toy_graph.num_edges], [3, 3]):
        with pytest.raises(ModelError):
            model_from_assignments(toy_graph, [0] * Vs, [0] * Vt, bad)


def test_assignment_length_checked(toy_graph):
    with pytest.raises(ModelError):
        model_from_assignments(toy_graph, [0], [0] * toy_graph.num_targets,
                               [])


def test_three_views_consistent_random():
    rng = np.random.default_rng(42)
    for _ in range(25):
        g = random_graph(rng)
        m = random_model(g, rng)
        m.check_invariants()
        # row/col/seg views hold identical counts
        flat_row = {(i, j, n): c for i, d in m.row.items()
                    for (j, n), c in d.items()}
        flat_col = {(i, j, n): c for j, d in m.col.items()
                    for (i, n), c in d.items()}
        flat_seg = {(i, j, n): c for n, d in m.seg_cells.items()
                    for (i, j), c in d.items()}
        assert flat_row == flat_col == flat_seg


def test_cluster_merge_keeps_min_id(toy_graph):
    m = finest_model(toy_graph)
    kept = m._merge_clusters_inplace("source", 2, 0)
    assert kept == 0
    assert 2 not in m.src_members
    assert sorted(m.src_members[0]) == [0, 2]
    m.check_invariants()


def test_segment_merge_keeps_left_id(toy_graph):
    m = finest_model(toy_graph)
    order_before = m.segment_order()
    left = order_before[1]
    kept = m._merge_segments_inplace(left)
    assert kept == left
    assert m.segment_order() == [s for s in order_before
                                 if s != order_before[2]]
    m.check_invariants()


def test_segment_merge_last_rejected(toy_graph):
    m = finest_model(toy_graph)
    last = m.segment_order()[-1]
    with pytest.raises(ModelError):
        m._merge_segments_inplace(last)


def test_merge_self_rejected(toy_graph):
    m = finest_model(toy_graph)
    with pytest.raises(ModelError):
        m._merge_clusters_inplace("source", 1, 1)


def test_apply_merge_copy_semantics(toy_graph):
    m = finest_model(toy_graph)
    before = m.num_source_clusters
    out = apply_merge(m, MergeProposal("source", 0, 1, 0.0, {}))
    assert m.num_source_clusters == before
    assert out.num_source_clusters == before - 1
    out.check_invariants()


def test_random_merge_chains_stay_consistent():
    rng = np.random.default_rng(7)
    for _ in range(15):
        g = random_graph(rng, num_edges=20)
        m = finest_model(g)
        while (m.num_source_clusters + m.num_target_clusters
               + m.num_segments) > 3:
            kind = rng.choice(["source", "target", "segment"])
            if kind == "segment" and m.num_segments > 1:
                order = m.segment_order()
                m._merge_segments_inplace(
                    order[int(rng.integers(len(order) - 1))])
            elif kind == "source" and m.num_source_clusters > 1:
                a, b = rng.choice(list(m.src_members), 2, replace=False)
                m._merge_clusters_inplace("source", int(a), int(b))
            elif kind == "target" and m.num_target_clusters > 1:
                a, b = rng.choice(list(m.tgt_members), 2, replace=False)
                m._merge_clusters_inplace("target", int(a), int(b))
            m.check_invariants()


def test_segment_bounds(toy_graph):
    m = model_from_assignments(toy_graph, [0, 0, 1], [0, 1, 1], [3, 6])
    assert m.segment_rank_bounds() == [(1, 3), (4, 6), (7, 8)]
    tb = m.segment_time_bounds()
    assert tb[0] == (1.0, 2.0)
    assert tb[-1] == (6.25, 7.0)


def test_canonical_labels(toy_graph):
    m = model_from_assignments(toy_graph, [5, 5, 2], [9, 1, 1], [])
    assign, groups = m.canonical_source_labels()
    assert assign == [0, 0, 1]
    assert groups == [[0, 1], [2]]
    assign, groups = m.canonical_target_labels()
    assert assign == [0, 1, 1]
    assert groups == [[0], [1, 2]]
