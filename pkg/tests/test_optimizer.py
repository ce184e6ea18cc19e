import numpy as np
import pytest

from tricluster import criterion
from tricluster.criterion import cost
from tricluster.model import finest_model, null_model
from tricluster.optimizer import (EPS, OptimizerConfig, _apply_move,
                                  _vertex_profiles, descend,
                                  enumerate_proposals, greedy_merge,
                                  move_vertex_delta, perturb, refine_moves,
                                  vns_optimize)

from conftest import exhaustive_minimum, random_graph, random_model


def test_config_validation():
    OptimizerConfig()  # defaults valid
    with pytest.raises(ValueError):
        OptimizerConfig(vns_restarts=0)
    with pytest.raises(ValueError):
        OptimizerConfig(vns_max_neighborhood=-1)


def test_config_defaults():
    cfg = OptimizerConfig()
    assert cfg.vns_restarts == 10
    assert cfg.vns_max_neighborhood == 3
    assert cfg.seed == 1
    assert cfg.pre_aggregation_threshold == 10000


def test_enumerate_proposals_complete(toy_graph):
    m = finest_model(toy_graph)
    props = enumerate_proposals(m)
    Ks, Kt, N = (m.num_source_clusters, m.num_target_clusters,
                 m.num_segments)
    expected = Ks * (Ks - 1) // 2 + Kt * (Kt - 1) // 2 + (N - 1)
    assert len(props) == expected


def test_greedy_merge_never_increases_cost():
    rng = np.random.default_rng(11)
    for _ in range(10):
        g = random_graph(rng, num_edges=25)
        start = finest_model(g)
        out = greedy_merge(start)
        assert cost(out).total <= cost(start).total + 1e-9
        out.check_invariants()
        # merge-local optimality: no remaining improving merge
        assert all(p.delta >= -EPS for p in enumerate_proposals(out))


def test_move_vertex_delta_exact():
    from tricluster.model import model_from_assignments
    rng = np.random.default_rng(23)
    checked = 0
    while checked < 120:
        g = random_graph(rng, num_edges=int(rng.integers(8, 30)))
        m = random_model(g, rng)
        side = str(rng.choice(["source", "target"]))
        members = m.src_members if side == "source" else m.tgt_members
        if len(members) < 2:
            continue
        assign = m.src_assign if side == "source" else m.tgt_assign
        v = int(rng.integers(len(assign)))
        candidates = [c for c in members if c != assign[v]]
        c_new = int(rng.choice(candidates))
        profiles = _vertex_profiles(m, side)
        criterion.cost(m)
        delta, term_deltas = move_vertex_delta(m, side, v, c_new,
                                               profiles[v])
        # full recompute on the moved assignment
        src = list(m.src_assign)
        tgt = list(m.tgt_assign)
        (src if side == "source" else tgt)[v] = c_new
        cuts = [lo - 1 for lo, _ in m.segment_rank_bounds()[1:]]
        moved = model_from_assignments(g, src, tgt, cuts)
        full = cost(moved).total - cost(m).total
        assert delta == pytest.approx(full, rel=1e-9, abs=1e-9)
        checked += 1


def test_apply_move_consistency(toy_graph):
    m = finest_model(toy_graph)
    criterion.cost(m)
    profiles = _vertex_profiles(m, "source")
    delta, term_deltas = move_vertex_delta(m, "source", 0, 1, profiles[0])
    before = cost(m).total
    _apply_move(m, "source", 0, 1, profiles[0], term_deltas)
    m.check_invariants()
    cached = m._breakdown.total
    m._breakdown = None
    assert cost(m).total == pytest.approx(before + delta, rel=1e-9)
    assert cost(m).total == pytest.approx(cached, rel=1e-12)


def test_refine_moves_never_increases_cost():
    rng = np.random.default_rng(31)
    for _ in range(8):
        g = random_graph(rng, num_edges=30)
        m = random_model(g, rng)
        before = cost(m).total
        refine_moves(m)
        m.check_invariants()
        m._breakdown = None
        assert cost(m).total <= before + 1e-9


def test_descend_reaches_joint_local_optimum():
    rng = np.random.default_rng(37)
    g = random_graph(rng, num_edges=40)
    out = descend(finest_model(g))
    assert all(p.delta >= -EPS for p in enumerate_proposals(out))
    assert not refine_moves(out)  # no improving single-vertex move left


def test_perturb_preserves_validity(toy_graph):
    rng = np.random.default_rng(5)
    m = null_model(toy_graph)
    p = perturb(m, 2, rng)
    p.check_invariants()


def test_vns_never_worse_than_perturbation_start():
    # VNS acceptance rule: best-of is kept
    rng = np.random.default_rng(41)
    g = random_graph(rng, num_edges=30)
    base = vns_optimize(g, OptimizerConfig(vns_restarts=1,
                                           vns_max_neighborhood=0))
    more = vns_optimize(g, OptimizerConfig(vns_restarts=1,
                                           vns_max_neighborhood=3))
    assert cost(more).total <= cost(base).total + 1e-9


def test_vns_deterministic():
    rng = np.random.default_rng(43)
    g = random_graph(rng, num_edges=25)
    cfg = OptimizerConfig(vns_restarts=3, vns_max_neighborhood=2, seed=9)
    m1 = vns_optimize(g, cfg)
    m2 = vns_optimize(g, cfg)
    assert m1.canonical_source_labels() == m2.canonical_source_labels()
    assert m1.canonical_target_labels() == m2.canonical_target_labels()
    assert m1.segment_rank_bounds() == m2.segment_rank_bounds()


def test_vns_thread_count_independent():
    rng = np.random.default_rng(47)
    g = random_graph(rng, num_edges=25)
    cfg = OptimizerConfig(vns_restarts=4, vns_max_neighborhood=1, seed=3)
    m1 = vns_optimize(g, cfg, threads=1)
    m4 = vns_optimize(g, cfg, threads=4)
    assert cost(m1).total == cost(m4).total
    assert m1.canonical_source_labels() == m4.canonical_source_labels()


def test_vns_beats_or_matches_null():
    # the null model is always in the candidate set
    rng = np.random.default_rng(53)
    g = random_graph(rng, num_sources=5, num_targets=5, num_edges=15)
    m = vns_optimize(g, OptimizerConfig(vns_restarts=2,
                                        vns_max_neighborhood=1))
    assert cost(m).total <= cost(null_model(g)).total + 1e-9


def test_vns_attains_exhaustive_minimum_small():
    # small preview of acceptance criterion 1
    rng = np.random.default_rng(59)
    hits = 0
    for _ in range(5):
        g = random_graph(rng, num_sources=3, num_targets=3, num_edges=7)
        best = exhaustive_minimum(g)
        m = vns_optimize(g, OptimizerConfig(vns_restarts=4,
                                            vns_max_neighborhood=3))
        found = cost(m).total
        assert found >= best - 1e-9
        if found <= best + 1e-9:
            hits += 1
    assert hits >= 4
