"""Command-line surface: gen / fit / simplify / analyze / export.

Every subcommand is non-interactive, deterministic per seed, and exits
nonzero on any failure; `fit` also writes a run manifest next to the
model file. All computation happens before any output file is opened,
so failures leave no partial outputs.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
import tracemalloc

from . import __version__, criterion, io
from .analytics import mutual_info_clusters, mutual_info_time
from .graph import IngestionError, read_edge_list, write_edge_list
from .model import null_model
from .optimizer import OptimizerConfig, vns_optimize
from .simplify import coarsen_to_informativity
from .synthgen import (PatternSpec, generate_patterned, rewire_all,
                       shuffle_timestamps)


class CliError(RuntimeError):
    pass


def _threads_default() -> int:
    raw = os.environ.get("TRICLUSTER_THREADS", "").strip()
    if not raw:
        return 0
    try:
        value = int(raw)
    except ValueError:
        raise CliError(f"TRICLUSTER_THREADS must be an integer, "
                       f"got {raw!r}")
    if value < 0:
        raise CliError("TRICLUSTER_THREADS must be >= 0")
    return value


def _read_config_file(path) -> dict:
    """key=value lines (#-comments allowed) overriding OptimizerConfig
    fields."""
    valid = {"vns_restarts", "vns_max_neighborhood", "seed",
             "pre_aggregation_threshold"}
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in valid:
                raise CliError(f"{path}:{lineno}: unknown option {key!r}")
            try:
                out[key] = int(value)
            except ValueError:
                raise CliError(f"{path}:{lineno}: {key} must be an "
                               f"integer, got {value!r}")
    return out


def _optimizer_config(args) -> OptimizerConfig:
    options = {}
    if getattr(args, "config", None):
        options.update(_read_config_file(args.config))
    for key in ("vns_restarts", "vns_max_neighborhood", "seed",
                "pre_aggregation_threshold"):
        value = getattr(args, key, None)
        if value is not None:
            options[key] = value
    try:
        return OptimizerConfig(**options)
    except ValueError as exc:
        raise CliError(str(exc))


def cmd_gen(args) -> int:
    spec = PatternSpec(num_edges=args.edges, seed=args.seed,
                       noise_fraction=args.noise)
    graph, truth = generate_patterned(spec)
    clusters_by_name = {graph.source_names[v]: c
                        for v, c in enumerate(truth.vertex_clusters)}
    truth_doc = None
    if args.protocol == "patterned":
        truth_doc = {
            "format_version": io.FORMAT_VERSION,
            "protocol": "patterned",
            "vertex_clusters": clusters_by_name,
            "edge_intervals": list(truth.edge_intervals),
        }
    elif args.protocol == "stationary":
        graph = shuffle_timestamps(graph, args.seed + 1)
        truth_doc = {
            "format_version": io.FORMAT_VERSION,
            "protocol": "stationary",
            "vertex_clusters": clusters_by_name,
        }
    else:
        graph = rewire_all(shuffle_timestamps(graph, args.seed + 1),
                           args.seed + 2)
    write_edge_list(graph, args.out)
    if truth_doc is not None:
        io.dump_json(truth_doc, args.out + ".truth.json")
    return 0


def cmd_fit(args) -> int:
    config = _optimizer_config(args)
    tracemalloc.start()
    t0 = time.perf_counter()
    graph = read_edge_list(args.edge_file)
    model = vns_optimize(graph, config, threads=args.threads)
    wall = time.perf_counter() - t0
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    io.write_model(model, args.out, edge_file=args.edge_file)
    manifest_path = args.out + ".manifest.json"
    io.write_manifest(
        manifest_path, command="fit", inputs=[args.edge_file],
        outputs=[args.out],
        config={"vns_restarts": config.vns_restarts,
                "vns_max_neighborhood": config.vns_max_neighborhood,
                "seed": config.seed,
                "pre_aggregation_threshold":
                    config.pre_aggregation_threshold,
                "threads": args.threads},
        seed=config.seed, wall_time_s=wall,
        peak_memory_kb=(peak + 1023) // 1024)
    return 0


def cmd_simplify(args) -> int:
    model, doc = io.load_model(args.model_file, edge_file=args.edges)
    null_cost = criterion.cost(null_model(model.graph)).total
    simplified, trace = coarsen_to_informativity(
        model, args.informativity, null_cost=null_cost)
    edge_file = args.edges if args.edges is not None else doc.get("edge_file")
    io.write_model(simplified, args.out, edge_file=edge_file)
    if args.trace:
        io.write_trace(trace, args.trace)
    return 0


def cmd_analyze(args) -> int:
    model, _doc = io.load_model(args.model_file, edge_file=args.edges)
    if args.mode == "pairs":
        report = mutual_info_clusters(model)
    else:
        report = mutual_info_time(model)
    io.write_mi_report(report, args.out, bits=args.bits)
    return 0


def cmd_export(args) -> int:
    # round-trip check: rebuild the model from its document and
    # re-serialize; the criterion must survive to the last digit
    model, doc = io.load_model(args.model_file, edge_file=args.edges)
    rebuilt = criterion.cost(model).total
    stored = doc["criterion"]["total"]
    if rebuilt != stored:
        raise CliError(f"round-trip mismatch: stored total {stored!r}, "
                       f"rebuilt total {rebuilt!r}")
    io.write_model(model, args.out, edge_file=args.edges
                   if args.edges is not None else doc.get("edge_file"))
    return 0


def _informativity_arg(raw: str) -> float:
    value = float(raw)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(
            f"informativity must be in (0, 1], got {raw}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tricluster",
        description="MDL triclustering of time-evolving directed graphs")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--protocol", required=True,
                   choices=("patterned", "stationary", "random"))
    p.add_argument("--edges", type=int, default=8192)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--out", required=True, help="edge-list output path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fit", help="fit a tricluster model")
    p.add_argument("edge_file")
    p.add_argument("--out", required=True, help="model document path")
    p.add_argument("--config", help="key=value optimizer config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--vns-restarts", dest="vns_restarts", type=int)
    p.add_argument("--vns-max-neighborhood", dest="vns_max_neighborhood",
                   type=int)
    p.add_argument("--pre-aggregation-threshold",
                   dest="pre_aggregation_threshold", type=int)
    p.add_argument("--threads", type=int, default=None,
                   help="0 = auto (default; TRICLUSTER_THREADS honored)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simplify", help="coarsen a fitted model")
    p.add_argument("model_file")
    p.add_argument("--informativity", type=_informativity_arg,
                   required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="coarsening trace TSV path")
    p.add_argument("--edges", help="override the document's edge file")
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("analyze", help="mutual-information report")
    p.add_argument("model_file")
    p.add_argument("--mode", required=True, choices=("pairs", "time"))
    p.add_argument("--bits", action="store_true",
                   help="report in bits instead of nats")
    p.add_argument("--out", required=True)
    p.add_argument("--edges", help="override the document's edge file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("export",
                       help="round-trip a model document (verify + rewrite)")
    p.add_argument("model_file")
    p.add_argument("--out", required=True)
    p.add_argument("--edges", help="override the document's edge file")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "threads", None) is None and hasattr(args, "func"):
            if args.command == "fit":
                args.threads = _threads_default()
        return args.func(args)
    except (CliError, IngestionError, io.ExportError, ValueError,
            OSError) as exc:
        print(f"tricluster {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
