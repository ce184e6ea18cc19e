"""Mutual-information diagnostics over a fitted (possibly coarsened)
model, with signed per-cell contributions.

Two analyses: MI between the source and target cluster variables
(time marginalized out), and MI between the cluster pair and the time
segment. Probabilities are raw empirical cell frequencies; zero-count
cells are reported with contribution 0 so downstream tooling sees the
full grid. Nats internally; callers may rescale to bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ImageGraphModel


@dataclass(frozen=True)
class MIReport:
    total_mi: float
    contributions: dict          # cell key -> signed contribution (nats)
    joint: dict                  # cell key -> empirical probability
    expected: dict               # cell key -> product-of-marginals prob
    kind: str                    # 'pairs' or 'time'


def _pair_table(model: ImageGraphModel):
    E = model.graph.num_edges
    pair = {}
    for i, d in model.row.items():
        for (j, _n), c in d.items():
            pair[(i, j)] = pair.get((i, j), 0) + c
    p_src = {i: sum(d.values()) / E for i, d in model.row.items()}
    p_tgt = {j: sum(d.values()) / E for j, d in model.col.items()}
    return pair, p_src, p_tgt


def mutual_info_clusters(model: ImageGraphModel) -> MIReport:
    """MI between source and target cluster memberships, aggregated
    over time segments."""
    E = model.graph.num_edges
    pair, p_src, p_tgt = _pair_table(model)
    contributions, joint, expected = {}, {}, {}
    total = 0.0
    for i in model.row:
        for j in model.col:
            q = pair.get((i, j), 0) / E
            ex = p_src[i] * p_tgt[j]
            joint[(i, j)] = q
            expected[(i, j)] = ex
            contrib = q * math.log(q / ex) if q > 0 else 0.0
            contributions[(i, j)] = contrib
            total += contrib
    if -1e-12 < total < 0.0:
        total = 0.0
    return MIReport(total, contributions, joint, expected, "pairs")


def mutual_info_time(model: ImageGraphModel) -> MIReport:
    """MI between the (source cluster, target cluster) pair and the
    time segment; negative contributions mark cells with fewer edges
    than the pair and segment marginals would predict."""
    E = model.graph.num_edges
    pair, _p_src, _p_tgt = _pair_table(model)
    p_seg = {n: model.seg_sizes[n] / E for n in model.seg_sizes}
    contributions, joint, expected = {}, {}, {}
    total = 0.0
    for n, cells in model.seg_cells.items():
        for (i, j) in pair:
            q = cells.get((i, j), 0) / E
            ex = (pair[(i, j)] / E) * p_seg[n]
            joint[(i, j, n)] = q
            expected[(i, j, n)] = ex
            contrib = q * math.log(q / ex) if q > 0 else 0.0
            contributions[(i, j, n)] = contrib
            total += contrib
    if -1e-12 < total < 0.0:
        total = 0.0
    return MIReport(total, contributions, joint, expected, "time")
