"""Serialization: model export documents (JSON), coarsening traces and
MI reports (TSV), and run manifests.

Model documents carry a format_version and enough information (cluster
membership lists, segment rank bounds, the source edge file) to rebuild
the model exactly; floats are written with 17 significant digits so a
rebuilt model reproduces the stored criterion bit for bit.
"""

from __future__ import annotations

import json
import math
import os

from . import criterion
from .analytics import MIReport
from .graph import TemporalGraph, read_edge_list
from .model import ImageGraphModel, model_from_assignments
from .simplify import CoarseningTrace

FORMAT_VERSION = 1


class ExportError(ValueError):
    pass


def _emit(obj, out, depth):
    # explicit emitter so floats carry 17 significant digits (enough to
    # round-trip IEEE doubles exactly); the stdlib encoder hardwires repr
    pad, inner = " " * depth, " " * (depth + 1)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise ExportError(f"non-string key {key!r}")
            out.append(inner + json.dumps(key) + ": ")
            _emit(obj[key], out, depth + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(obj):
            out.append(inner)
            _emit(item, out, depth + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ExportError(f"non-finite float {obj!r}")
        out.append(format(obj, ".17g"))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise ExportError(f"unserializable value {obj!r}")


def dump_json(obj, path) -> None:
    out = []
    _emit(obj, out, 0)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("".join(out))
        fh.write("\n")


def _fresh_cost(model: ImageGraphModel):
    model._breakdown = None
    return criterion.cost(model)


def model_document(model: ImageGraphModel,
                   edge_file: str | None = None) -> dict:
    g = model.graph
    src_assign, src_groups = model.canonical_source_labels()
    tgt_assign, tgt_groups = model.canonical_target_labels()
    src_relabel = {}
    for k, group in enumerate(src_groups):
        src_relabel[model.src_assign[group[0]]] = k
    tgt_relabel = {}
    for k, group in enumerate(tgt_groups):
        tgt_relabel[model.tgt_assign[group[0]]] = k
    seg_relabel = {s: n for n, s in enumerate(model.segment_order())}

    cells = []
    for i, d in model.row.items():
        for (j, s), c in d.items():
            cells.append([src_relabel[i], tgt_relabel[j], seg_relabel[s], c])
    cells.sort()
    segments = [{"rank_start": lo, "rank_end": hi,
                 "t_min": tmin, "t_max": tmax, "size": hi - lo + 1}
                for (lo, hi), (tmin, tmax)
                in zip(model.segment_rank_bounds(),
                       model.segment_time_bounds())]
    doc = {
        "format_version": FORMAT_VERSION,
        "num_edges": g.num_edges,
        "source_clusters": [[g.source_names[v] for v in grp]
                            for grp in src_groups],
        "target_clusters": [[g.target_names[v] for v in grp]
                            for grp in tgt_groups],
        "segments": segments,
        "cells": cells,
        # recompute from scratch: the incrementally maintained cache can
        # drift by ~1e-10, and the round-trip contract is bit-exact
        "criterion": _fresh_cost(model).as_dict(),
    }
    if edge_file is not None:
        doc["edge_file"] = str(edge_file)
    return doc


def write_model(model: ImageGraphModel, path,
                edge_file: str | None = None) -> None:
    dump_json(model_document(model, edge_file), path)


def read_model_document(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ExportError(f"unsupported format_version "
                          f"{doc.get('format_version')!r} in {path}")
    return doc


def model_from_document(doc: dict, graph: TemporalGraph) -> ImageGraphModel:
    """Rebuild a model from an export document against its graph."""
    if graph.num_edges != doc["num_edges"]:
        raise ExportError(f"edge count mismatch: document has "
                          f"{doc['num_edges']}, graph has {graph.num_edges}")
    src_assign = [0] * graph.num_sources
    for k, group in enumerate(doc["source_clusters"]):
        for name in group:
            if name not in graph.source_index:
                raise ExportError(f"unknown source vertex {name!r}")
            src_assign[graph.source_index[name]] = k
    tgt_assign = [0] * graph.num_targets
    for k, group in enumerate(doc["target_clusters"]):
        for name in group:
            if name not in graph.target_index:
                raise ExportError(f"unknown target vertex {name!r}")
            tgt_assign[graph.target_index[name]] = k
    boundaries = [seg["rank_start"] - 1 for seg in doc["segments"][1:]]
    return model_from_assignments(graph, src_assign, tgt_assign, boundaries)


def load_model(path, edge_file=None) -> tuple[ImageGraphModel, dict]:
    """Load a model document plus its graph (from the document's
    edge_file unless overridden)."""
    doc = read_model_document(path)
    source = edge_file if edge_file is not None else doc.get("edge_file")
    if source is None:
        raise ExportError(f"{path} names no edge_file; pass one explicitly")
    if not os.path.exists(source):
        raise ExportError(f"edge file {source!r} not found")
    graph = read_edge_list(source)
    return model_from_document(doc, graph), doc


def write_trace(trace: CoarseningTrace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step\tmerge_kind\toperand_a\toperand_b\t"
                 "delta_nats\ttotal_cost_nats\ttau\n")
        for k, step in enumerate(trace.steps, start=1):
            p = step.proposal
            fh.write(f"{k}\t{p.kind}\t{p.operand_a}\t{p.operand_b}\t"
                     f"{p.delta:.17g}\t{step.total_cost:.17g}\t"
                     f"{step.tau:.17g}\n")


def write_mi_report(report: MIReport, path, bits: bool = False) -> None:
    scale = 1.0 / math.log(2.0) if bits else 1.0
    unit = "bits" if bits else "nats"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# total_mi_{unit}={report.total_mi * scale:.17g}\n")
        if report.kind == "pairs":
            fh.write(f"source_cluster\ttarget_cluster\tjoint_p\t"
                     f"expected_p\tcontribution_{unit}\n")
        else:
            fh.write(f"source_cluster\ttarget_cluster\tsegment\tjoint_p\t"
                     f"expected_p\tcontribution_{unit}\n")
        for key in sorted(report.contributions):
            cols = list(key) + [f"{report.joint[key]:.17g}",
                                f"{report.expected[key]:.17g}",
                                f"{report.contributions[key] * scale:.17g}"]
            fh.write("\t".join(str(c) for c in cols) + "\n")


def write_manifest(path, *, command: str, inputs: list, outputs: list,
                   config: dict, seed: int, wall_time_s: float,
                   peak_memory_kb: int) -> None:
    from . import __version__
    dump_json({
        "format_version": FORMAT_VERSION,
        "tool_version": __version__,
        "command": command,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "config": config,
        "seed": seed,
        "wall_time_s": wall_time_s,
        "peak_memory_kb": peak_memory_kb,
    }, path)
