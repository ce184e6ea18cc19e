"""Exact cost of an image-graph model, itemized per prior/likelihood
term, plus exact incremental deltas for cluster and segment merges.

All values are in nats. Deltas touch only the nonzero cells of the two
operands plus the scalar terms that depend on the cluster/segment
counts, which is what makes the bottom-up optimizer affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .combinatorics import (log_binomial, log_cumulative_stirling,
                            log_factorial, log_factorial_list,
                            log_factorial_table,
                            uses_stirling_approximation)
from .model import ImageGraphModel, MergeProposal, ModelError

_TERMS = ("prior_counts", "prior_partitions", "prior_cells",
          "prior_degrees", "lik_cells", "lik_degrees", "lik_time")


@dataclass(frozen=True)
class CriterionBreakdown:
    prior_counts: float
    prior_partitions: float
    prior_cells: float
    prior_degrees: float
    lik_cells: float
    lik_degrees: float
    lik_time: float
    stirling_approximated: bool = False

    @property
    def total(self) -> float:
        return math.fsum(getattr(self, t) for t in _TERMS)

    def shifted(self, deltas: dict) -> "CriterionBreakdown":
        return replace(self, **{t: getattr(self, t) + deltas[t]
                                for t in _TERMS if t in deltas})

    def as_dict(self) -> dict:
        d = {t: getattr(self, t) for t in _TERMS}
        d["total"] = self.total
        d["stirling_approximated"] = self.stirling_approximated
        return d


def _log_binom_big(n: int, k: int) -> float:
    # binomials whose arguments exceed any sensible table (the
    # edge-distribution prior has k = K_S*K_T*N - 1)
    if k < 0 or k > n:
        raise ValueError(f"binomial out of range: n={n}, k={k}")
    return (math.lgamma(n + 1.0) - math.lgamma(k + 1.0)
            - math.lgamma(n - k + 1.0))


def cost(model: ImageGraphModel) -> CriterionBreakdown:
    """Itemized exact cost; cached on the model and maintained
    incrementally by merges."""
    if model._breakdown is not None:
        return model._breakdown
    g = model.graph
    E = g.num_edges
    Vs, Vt = g.num_sources, g.num_targets
    Ks, Kt, N = (model.num_source_clusters, model.num_target_clusters,
                 model.num_segments)
    lf = log_factorial_table(E + max(Vs, Vt))

    prior_counts = math.log(Vs) + math.log(Vt) + math.log(E)
    prior_partitions = (log_cumulative_stirling(Vs, Ks)
                        + log_cumulative_stirling(Vt, Kt))
    cells = Ks * Kt * N
    prior_cells = _log_binom_big(E + cells - 1, cells - 1)

    prior_degrees = math.fsum(
        [log_binomial(model.src_out[c] + len(vs) - 1, len(vs) - 1)
         for c, vs in model.src_members.items()]
        + [log_binomial(model.tgt_in[c] + len(vs) - 1, len(vs) - 1)
           for c, vs in model.tgt_members.items()])

    lik_cells = float(lf[E]) - math.fsum(
        lf[c] for d in model.row.values() for c in d.values())

    lik_degrees = math.fsum(lf[d] for d in model.src_out.values())
    lik_degrees -= math.fsum(lf[int(d)] for d in g.out_degrees)
    lik_degrees += math.fsum(lf[d] for d in model.tgt_in.values())
    lik_degrees -= math.fsum(lf[int(d)] for d in g.in_degrees)

    lik_time = math.fsum(lf[s] for s in model.seg_sizes.values())

    bd = CriterionBreakdown(
        prior_counts, prior_partitions, prior_cells, prior_degrees,
        lik_cells, lik_degrees, lik_time,
        stirling_approximated=(uses_stirling_approximation(Vs)
                               or uses_stirling_approximation(Vt)))
    model._breakdown = bd
    return bd


def _prior_cells_delta(E: int, cells_old: int, cells_new: int) -> float:
    return (_log_binom_big(E + cells_new - 1, cells_new - 1)
            - _log_binom_big(E + cells_old - 1, cells_old - 1))


def cluster_merge_scalars(model: ImageGraphModel,
                          side: str) -> tuple[float, float]:
    """(partition-prior delta, cell-prior delta) shared by every
    cluster-pair merge on one side of the current model."""
    if side == "source":
        V, K = model.graph.num_sources, model.num_source_clusters
        cells_other = model.num_target_clusters * model.num_segments
    else:
        V, K = model.graph.num_targets, model.num_target_clusters
        cells_other = model.num_source_clusters * model.num_segments
    d_part = (log_cumulative_stirling(V, K - 1)
              - log_cumulative_stirling(V, K))
    d_cells_prior = _prior_cells_delta(model.graph.num_edges,
                                       K * cells_other,
                                       (K - 1) * cells_other)
    return d_part, d_cells_prior


def delta_cost_merge_clusters(model: ImageGraphModel, side: str,
                              a: int, b: int,
                              _scalars: tuple | None = None,
                              _lf: list | None = None) -> MergeProposal:
    """Exact delta-cost of merging clusters a and b on the given side."""
    if a == b:
        raise ModelError("cannot merge a cluster with itself")
    if side == "source":
        members, deg, profiles = model.src_members, model.src_out, model.row
    elif side == "target":
        members, deg, profiles = model.tgt_members, model.tgt_in, model.col
    else:
        raise ModelError(f"unknown side {side!r}")
    if a not in members or b not in members:
        raise ModelError(f"dead cluster in merge ({side}, {a}, {b})")

    E = model.graph.num_edges
    lf = _lf if _lf is not None else log_factorial_list(
        E + max(model.graph.num_sources, model.graph.num_targets))
    d_part, d_cells_prior = (_scalars if _scalars is not None
                             else cluster_merge_scalars(model, side))

    da, db = deg[a], deg[b]
    sa, sb = len(members[a]), len(members[b])
    n1, k1 = da + db + sa + sb - 1, sa + sb - 1
    n2, k2 = da + sa - 1, sa - 1
    n3, k3 = db + sb - 1, sb - 1
    d_deg_prior = (lf[n1] - lf[k1] - lf[n1 - k1]
                   - lf[n2] + lf[k2] + lf[n2 - k2]
                   - lf[n3] + lf[k3] + lf[n3 - k3])

    pa, pb = profiles[a], profiles[b]
    if len(pb) < len(pa):
        pa, pb = pb, pa
    d_lik_cells = 0.0
    pb_get = pb.get
    for key, ca in pa.items():
        cb = pb_get(key)
        if cb is not None:
            d_lik_cells -= lf[ca + cb] - lf[ca] - lf[cb]
    d_lik_deg = lf[da + db] - lf[da] - lf[db]

    term_deltas = {"prior_partitions": d_part,
                   "prior_cells": d_cells_prior,
                   "prior_degrees": d_deg_prior,
                   "lik_cells": d_lik_cells,
                   "lik_degrees": d_lik_deg}
    delta = d_part + d_cells_prior + d_deg_prior + d_lik_cells + d_lik_deg
    return MergeProposal(side, min(a, b), max(a, b), delta, term_deltas)


def segment_merge_scalar(model: ImageGraphModel) -> float:
    """Cell-prior delta shared by every adjacent-segment merge on the
    current model."""
    Ks, Kt, N = (model.num_source_clusters, model.num_target_clusters,
                 model.num_segments)
    return _prior_cells_delta(model.graph.num_edges,
                              Ks * Kt * N, Ks * Kt * (N - 1))


def delta_segments_by_id(model: ImageGraphModel, left: int,
                         _scalar: float | None = None,
                         _lf: list | None = None) -> MergeProposal:
    """Exact delta-cost of merging segment `left` with its right
    neighbour; operands are segment ids."""
    right = model.seg_next.get(left)
    if left not in model.seg_sizes or right is None:
        raise ModelError(f"segment {left} has no live right neighbour")
    E = model.graph.num_edges
    lf = _lf if _lf is not None else log_factorial_list(E)

    d_cells_prior = (_scalar if _scalar is not None
                     else segment_merge_scalar(model))
    ls, lt = model.seg_sizes[left], model.seg_sizes[right]
    d_lik_time = lf[ls + lt] - lf[ls] - lf[lt]

    pa, pb = model.seg_cells[left], model.seg_cells[right]
    if len(pb) < len(pa):
        pa, pb = pb, pa
    d_lik_cells = 0.0
    pb_get = pb.get
    for key, ca in pa.items():
        cb = pb_get(key)
        if cb is not None:
            d_lik_cells -= lf[ca + cb] - lf[ca] - lf[cb]

    term_deltas = {"prior_cells": d_cells_prior,
                   "lik_cells": d_lik_cells,
                   "lik_time": d_lik_time}
    delta = d_cells_prior + d_lik_cells + d_lik_time
    return MergeProposal("segment", left, right, delta, term_deltas)


def delta_cost_merge_segments(model: ImageGraphModel,
                              n: int) -> MergeProposal:
    """Exact delta for merging the n-th and (n+1)-th segments in time
    order, 1-based (1 <= n < N)."""
    if n < 1 or n >= model.num_segments:
        raise ModelError(f"segment position {n} out of range "
                         f"(N={model.num_segments})")
    order = model.segment_order()
    return delta_segments_by_id(model, order[n - 1])
