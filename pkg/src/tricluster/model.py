"""Image-graph models: two vertex partitions, a contiguous time
segmentation, and the sparse (source cluster, target cluster, segment)
count tensor with cached marginals.

Cluster ids and segment ids are stable integers (a merge keeps the
smaller cluster id, the left segment id); they are relabelled to dense
0..K-1 indices only at export time. The count tensor is kept in three
mutually consistent sparse views (by source cluster, by target cluster,
by segment) so that merge deltas on any axis touch only nonzero cells.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .graph import TemporalGraph


class ModelError(ValueError):
    pass


@dataclass
class MergeProposal:
    """A candidate merge with its exact criterion delta (nats).

    kind: 'source', 'target' or 'segment'. For cluster merges the
    operands are the two cluster ids; for segment merges operand_a is
    the left segment id (operand_b the one following it).
    """
    kind: str
    operand_a: int
    operand_b: int
    delta: float
    term_deltas: dict = field(default_factory=dict, repr=False)


class ImageGraphModel:
    def __init__(self, graph: TemporalGraph,
                 src_assign: list[int], tgt_assign: list[int],
                 boundaries: list[int]):
        """Build from explicit assignments and segment cut-points.

        boundaries: sorted 0-based ranks where segments 2..N start; each
        must coincide with an atom start (ties are atomic).
        """
        if graph.num_edges < 1:
            raise ModelError("cannot build a model on an empty graph")
        if len(src_assign) != graph.num_sources:
            raise ModelError("source assignment length mismatch")
        if len(tgt_assign) != graph.num_targets:
            raise ModelError("target assignment length mismatch")
        atom_starts = set(int(a) for a in graph.atom_starts)
        prev = 0
        for b in boundaries:
            if b <= prev or b >= graph.num_edges:
                raise ModelError(f"bad segment boundary {b}")
            if b not in atom_starts:
                raise ModelError(f"boundary {b} splits a timestamp tie")
            prev = b

        self.graph = graph
        self.src_assign = [int(c) for c in src_assign]
        self.tgt_assign = [int(c) for c in tgt_assign]

        self.src_members: dict[int, list[int]] = {}
        for v, c in enumerate(self.src_assign):
            self.src_members.setdefault(c, []).append(v)
        self.tgt_members: dict[int, list[int]] = {}
        for v, c in enumerate(self.tgt_assign):
            self.tgt_members.setdefault(c, []).append(v)

        self.src_out = {c: int(sum(graph.out_degrees[v] for v in vs))
                        for c, vs in self.src_members.items()}
        self.tgt_in = {c: int(sum(graph.in_degrees[v] for v in vs))
                       for c, vs in self.tgt_members.items()}

        # segments in time order, identified by their position at build time
        cuts = [0] + list(boundaries) + [graph.num_edges]
        seg_ids = list(range(len(cuts) - 1))
        self.seg_sizes = {k: cuts[k + 1] - cuts[k] for k in seg_ids}
        self.seg_head = 0
        self.seg_next = {k: (k + 1 if k + 1 < len(seg_ids) else None)
                         for k in seg_ids}
        self.seg_prev = {k: (k - 1 if k > 0 else None) for k in seg_ids}

        # sparse count tensor, three views
        self.row: dict[int, dict] = {c: {} for c in self.src_members}
        self.col: dict[int, dict] = {c: {} for c in self.tgt_members}
        self.seg_cells: dict[int, dict] = {k: {} for k in seg_ids}
        seg_of_rank = []
        for k in seg_ids:
            seg_of_rank.extend([k] * self.seg_sizes[k])
        sa, ta = self.src_assign, self.tgt_assign
        for r in range(graph.num_edges):
            i = sa[graph.src_by_rank[r]]
            j = ta[graph.tgt_by_rank[r]]
            n = seg_of_rank[r]
            d = self.row[i]
            d[(j, n)] = d.get((j, n), 0) + 1
            d = self.col[j]
            d[(i, n)] = d.get((i, n), 0) + 1
            d = self.seg_cells[n]
            d[(i, j)] = d.get((i, j), 0) + 1

        self._breakdown = None  # cached CriterionBreakdown, owned by criterion

    # -- basic accessors ------------------------------------------------

    @property
    def num_source_clusters(self) -> int:
        return len(self.src_members)

    @property
    def num_target_clusters(self) -> int:
        return len(self.tgt_members)

    @property
    def num_segments(self) -> int:
        return len(self.seg_sizes)

    def segment_order(self) -> list[int]:
        order = []
        k = self.seg_head
        while k is not None:
            order.append(k)
            k = self.seg_next[k]
        return order

    def segment_rank_bounds(self) -> list[tuple[int, int]]:
        """(first_rank, last_rank) per segment, 1-based inclusive."""
        bounds = []
        start = 1
        for k in self.segment_order():
            bounds.append((start, start + self.seg_sizes[k] - 1))
            start += self.seg_sizes[k]
        return bounds

    def segment_time_bounds(self) -> list[tuple[float, float]]:
        ts = self.graph.timestamps
        return [(float(ts[lo - 1]), float(ts[hi - 1]))
                for lo, hi in self.segment_rank_bounds()]

    def cell_count_total(self) -> int:
        return sum(c for d in self.row.values() for c in d.values())

    # -- copy / mutation ------------------------------------------------

    def copy(self) -> "ImageGraphModel":
        m = object.__new__(ImageGraphModel)
        m.graph = self.graph
        m.src_assign = list(self.src_assign)
        m.tgt_assign = list(self.tgt_assign)
        m.src_members = {c: list(v) for c, v in self.src_members.items()}
        m.tgt_members = {c: list(v) for c, v in self.tgt_members.items()}
        m.src_out = dict(self.src_out)
        m.tgt_in = dict(self.tgt_in)
        m.seg_sizes = dict(self.seg_sizes)
        m.seg_head = self.seg_head
        m.seg_next = dict(self.seg_next)
        m.seg_prev = dict(self.seg_prev)
        m.row = {c: dict(d) for c, d in self.row.items()}
        m.col = {c: dict(d) for c, d in self.col.items()}
        m.seg_cells = {k: dict(d) for k, d in self.seg_cells.items()}
        m._breakdown = self._breakdown
        return m

    def _merge_clusters_inplace(self, side: str, a: int, b: int) -> int:
        if a == b:
            raise ModelError("cannot merge a cluster with itself")
        members = self.src_members if side == "source" else self.tgt_members
        if a not in members or b not in members:
            raise ModelError(f"dead cluster in merge ({side}, {a}, {b})")
        keep, gone = (a, b) if a < b else (b, a)
        if side == "source":
            for v in members[gone]:
                self.src_assign[v] = keep
            members[keep].extend(members.pop(gone))
            self.src_out[keep] += self.src_out.pop(gone)
            ra = self.row[keep]
            for (j, n), c in self.row.pop(gone).items():
                ra[(j, n)] = ra.get((j, n), 0) + c
                cj = self.col[j]
                cj[(keep, n)] = cj.get((keep, n), 0) + cj.pop((gone, n))
                sc = self.seg_cells[n]
                sc[(keep, j)] = sc.get((keep, j), 0) + sc.pop((gone, j))
        else:
            for v in members[gone]:
                self.tgt_assign[v] = keep
            members[keep].extend(members.pop(gone))
            self.tgt_in[keep] += self.tgt_in.pop(gone)
            ca = self.col[keep]
            for (i, n), c in self.col.pop(gone).items():
                ca[(i, n)] = ca.get((i, n), 0) + c
                ri = self.row[i]
                ri[(keep, n)] = ri.get((keep, n), 0) + ri.pop((gone, n))
                sc = self.seg_cells[n]
                sc[(i, keep)] = sc.get((i, keep), 0) + sc.pop((i, gone))
        return keep

    def _merge_segments_inplace(self, left: int) -> int:
        right = self.seg_next.get(left)
        if left not in self.seg_sizes or right is None:
            raise ModelError(f"segment {left} has no live right neighbour")
        self.seg_sizes[left] += self.seg_sizes.pop(right)
        nxt = self.seg_next.pop(right)
        self.seg_prev.pop(right)
        self.seg_next[left] = nxt
        if nxt is not None:
            self.seg_prev[nxt] = left
        cl = self.seg_cells[left]
        for (i, j), c in self.seg_cells.pop(right).items():
            cl[(i, j)] = cl.get((i, j), 0) + c
            ri = self.row[i]
            ri[(j, left)] = ri.get((j, left), 0) + ri.pop((j, right))
            cj = self.col[j]
            cj[(i, left)] = cj.get((i, left), 0) + cj.pop((i, right))
        return left

    def apply_inplace(self, proposal: MergeProposal) -> None:
        if proposal.kind == "segment":
            self._merge_segments_inplace(proposal.operand_a)
        elif proposal.kind in ("source", "target"):
            self._merge_clusters_inplace(proposal.kind,
                                         proposal.operand_a,
                                         proposal.operand_b)
        else:
            raise ModelError(f"unknown merge kind {proposal.kind!r}")
        if self._breakdown is not None:
            if proposal.term_deltas:
                self._breakdown = self._breakdown.shifted(proposal.term_deltas)
            else:
                self._breakdown = None

    # -- consistency check (test support) --------------------------------

    def check_invariants(self) -> None:
        g = self.graph
        total = self.cell_count_total()
        assert total == g.num_edges, "cell counts do not sum to |E|"
        for c, d in self.row.items():
            assert sum(d.values()) == self.src_out[c]
            assert self.src_out[c] == sum(int(g.out_degrees[v])
                                          for v in self.src_members[c])
        for c, d in self.col.items():
            assert sum(d.values()) == self.tgt_in[c]
            assert self.tgt_in[c] == sum(int(g.in_degrees[v])
                                         for v in self.tgt_members[c])
        for k, d in self.seg_cells.items():
            assert sum(d.values()) == self.seg_sizes[k]
        assert sum(self.seg_sizes.values()) == g.num_edges
        atom_starts = set(int(a) for a in g.atom_starts)
        for lo, _hi in self.segment_rank_bounds()[1:]:
            assert (lo - 1) in atom_starts, "segment boundary splits a tie"

    # -- canonical labelling for export ----------------------------------

    def canonical_source_labels(self) -> tuple[list[int], list[list[int]]]:
        return _canonical(self.src_members, self.src_assign)

    def canonical_target_labels(self) -> tuple[list[int], list[list[int]]]:
        return _canonical(self.tgt_members, self.tgt_assign)


def _canonical(members: dict[int, list[int]], assign: list[int]):
    ids = sorted(members, key=lambda c: min(members[c]))
    relabel = {c: k for k, c in enumerate(ids)}
    return ([relabel[c] for c in assign],
            [sorted(members[c]) for c in ids])


def finest_model(graph: TemporalGraph) -> ImageGraphModel:
    """One cluster per vertex, one segment per distinct timestamp."""
    if graph.num_edges < 1:
        raise ModelError("finest model undefined on an empty graph")
    boundaries = [int(a) for a in graph.atom_starts[1:]]
    return ImageGraphModel(graph,
                           list(range(graph.num_sources)),
                           list(range(graph.num_targets)),
                           boundaries)


def null_model(graph: TemporalGraph) -> ImageGraphModel:
    """Single source cluster, single target cluster, single segment."""
    if graph.num_edges < 1:
        raise ModelError("null model undefined on an empty graph")
    return ImageGraphModel(graph,
                           [0] * graph.num_sources,
                           [0] * graph.num_targets,
                           [])


def model_from_assignments(graph: TemporalGraph, src_assign, tgt_assign,
                           boundaries) -> ImageGraphModel:
    return ImageGraphModel(graph, list(src_assign), list(tgt_assign),
                           list(boundaries))


def apply_merge(model: ImageGraphModel,
                proposal: MergeProposal) -> ImageGraphModel:
    """Copy-on-merge application; the input model is left untouched."""
    out = model.copy()
    out.apply_inplace(proposal)
    return out
