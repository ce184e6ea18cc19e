"""Parameter-free triclustering of time-evolving directed multigraphs.

Fits an image-graph model — a joint partition of source vertices,
target vertices, and the (rank-discretized) time axis — by minimizing
an exact MDL criterion, then offers informativity-guided coarsening and
mutual-information diagnostics over the fitted tri-cluster tensor.
"""

__version__ = "0.1.0"

from .analytics import MIReport, mutual_info_clusters, mutual_info_time
from .criterion import (CriterionBreakdown, cost,
                        delta_cost_merge_clusters,
                        delta_cost_merge_segments)
from .graph import (IngestionError, TemporalEdge, TemporalGraph,
                    build_graph, read_edge_list, write_edge_list)
from .model import (ImageGraphModel, MergeProposal, ModelError,
                    apply_merge, finest_model, model_from_assignments,
                    null_model)
from .optimizer import (OptimizerConfig, descend, enumerate_proposals,
                        greedy_merge, move_vertex_delta, perturb,
                        refine_moves, vns_optimize)
from .simplify import (CoarseningStep, CoarseningTrace, MergeDivergence,
                       NoStructureError, coarsen_to_informativity,
                       informativity, js_divergence, merge_divergence)
from .synthgen import (GenerationError, GroundTruth, PatternSpec,
                       generate_patterned, rewire_all, shuffle_timestamps)

__all__ = [
    "__version__",
    "MIReport", "mutual_info_clusters", "mutual_info_time",
    "CriterionBreakdown", "cost", "delta_cost_merge_clusters",
    "delta_cost_merge_segments",
    "IngestionError", "TemporalEdge", "TemporalGraph", "build_graph",
    "read_edge_list", "write_edge_list",
    "ImageGraphModel", "MergeProposal", "ModelError", "apply_merge",
    "finest_model", "model_from_assignments", "null_model",
    "OptimizerConfig", "descend", "enumerate_proposals", "greedy_merge",
    "move_vertex_delta", "perturb", "refine_moves", "vns_optimize",
    "CoarseningStep", "CoarseningTrace", "MergeDivergence",
    "NoStructureError", "coarsen_to_informativity", "informativity",
    "js_divergence", "merge_divergence",
    "GenerationError", "GroundTruth", "PatternSpec",
    "generate_patterned", "rewire_all", "shuffle_timestamps",
]
