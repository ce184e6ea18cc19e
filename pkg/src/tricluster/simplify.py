"""Agglomerative post-processing of a fitted model: least-cost
coarsening with an informativity gauge, plus the Jensen-Shannon reading
of merge costs as a diagnostic.

Informativity of a model is its cost position between the null model
(0) and the fitted optimum (1); coarsening trades informativity for
legibility. Exact deltas drive the merge order; the JS divergence is
only the asymptotic equivalent of a merge delta and is exposed for
inspection, in both the edge-mass and the vertex-count normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import criterion
from .model import ImageGraphModel, MergeProposal
from .optimizer import enumerate_proposals, proposal_sort_key


class NoStructureError(ValueError):
    """The fitted model costs the same as the null model: tau is
    undefined and coarsening is vacuous."""


@dataclass(frozen=True)
class CoarseningStep:
    proposal: MergeProposal
    total_cost: float
    tau: float


@dataclass(frozen=True)
class CoarseningTrace:
    origin_cost: float
    null_cost: float
    steps: tuple


def _tau(model_cost: float, origin_cost: float, null_cost: float) -> float:
    denom = origin_cost - null_cost
    if denom == 0.0:
        raise NoStructureError(
            "fitted cost equals null cost; the model carries no "
            "structure and informativity is undefined")
    return (model_cost - null_cost) / denom


def informativity(model: ImageGraphModel, origin_cost: float,
                  null_cost: float) -> float:
    """tau = (c(IG) - c(null)) / (c(optimum) - c(null)); 1 at the
    optimum, 0 at the null model, possibly negative for irrelevant
    models."""
    return _tau(criterion.cost(model).total, origin_cost, null_cost)


def coarsen_to_informativity(model: ImageGraphModel, target_tau: float,
                             null_cost: float | None = None
                             ) -> tuple[ImageGraphModel, CoarseningTrace]:
    """Repeatedly apply the least-delta merge while informativity stays
    at or above target_tau; returns the last conforming model with the
    trace of applied steps."""
    if not 0.0 < target_tau <= 1.0:
        raise ValueError(f"target_tau must be in (0, 1], got {target_tau}")
    origin_cost = criterion.cost(model).total
    if null_cost is None:
        from .model import null_model
        null_cost = criterion.cost(null_model(model.graph)).total
    if origin_cost == null_cost:
        raise NoStructureError(
            "fitted cost equals null cost; nothing to coarsen")
    if target_tau == 1.0:
        return model, CoarseningTrace(origin_cost, null_cost, ())

    current = model.copy()
    cost_now = origin_cost
    steps = []
    while True:
        proposals = enumerate_proposals(current)
        if not proposals:
            break
        best = min(proposals, key=proposal_sort_key)
        cost_next = cost_now + best.delta
        tau_next = _tau(cost_next, origin_cost, null_cost)
        if tau_next < target_tau:
            break
        current.apply_inplace(best)
        cost_now = cost_next
        steps.append(CoarseningStep(best, cost_now, tau_next))
    return current, CoarseningTrace(origin_cost, null_cost, tuple(steps))


def js_divergence(p1, p2, alpha1: float, alpha2: float) -> float:
    """Weighted Jensen-Shannon divergence
    alpha1*KL(p1||m) + alpha2*KL(p2||m), m = alpha1*p1 + alpha2*p2."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape:
        raise ValueError("mismatched support lengths")
    if abs(p1.sum() - 1.0) > 1e-9 or abs(p2.sum() - 1.0) > 1e-9:
        raise ValueError("distributions must sum to 1")
    if alpha1 < 0 or alpha2 < 0 or abs(alpha1 + alpha2 - 1.0) > 1e-9:
        raise ValueError("weights must be nonnegative and sum to 1")
    m = alpha1 * p1 + alpha2 * p2
    out = 0.0
    for p, a in ((p1, alpha1), (p2, alpha2)):
        mask = p > 0
        out += a * float(np.sum(p[mask] * np.log(p[mask] / m[mask])))
    return max(out, 0.0)


@dataclass(frozen=True)
class MergeDivergence:
    """Diagnostic comparison of a cluster merge's exact delta with its
    asymptotic JS reading, under both prefactor normalizations."""
    exact_delta: float
    js: float
    edge_mass: int
    vertex_count: int

    @property
    def js_delta_edge_mass(self) -> float:
        return self.edge_mass * self.js

    @property
    def js_delta_vertex_count(self) -> float:
        return self.vertex_count * self.js


def _cluster_distribution(model: ImageGraphModel, side: str, c: int):
    profiles = model.row if side == "source" else model.col
    return profiles[c]


def merge_divergence(model: ImageGraphModel, side: str,
                     a: int, b: int) -> MergeDivergence:
    """JS reading of merging clusters a and b: distributions are the
    clusters' edge proportions over (other-side cluster, segment) cells;
    weights are their relative edge masses."""
    pa = _cluster_distribution(model, side, a)
    pb = _cluster_distribution(model, side, b)
    if side == "source":
        da, db = model.src_out[a], model.src_out[b]
        sa = len(model.src_members[a]) + len(model.src_members[b])
    else:
        da, db = model.tgt_in[a], model.tgt_in[b]
        sa = len(model.tgt_members[a]) + len(model.tgt_members[b])
    keys = sorted(set(pa) | set(pb))
    v1 = np.array([pa.get(k, 0) for k in keys], dtype=float)
    v2 = np.array([pb.get(k, 0) for k in keys], dtype=float)
    js = js_divergence(v1 / da, v2 / db, da / (da + db), db / (da + db))
    exact = criterion.delta_cost_merge_clusters(model, side, a, b).delta
    return MergeDivergence(exact_delta=exact, js=js,
                           edge_mass=da + db, vertex_count=sa)
