"""Document graphs, entropy-minimized coding trees, and hierarchical
tree classification."""

from .graphio import (DocumentGraph, Token, DependencyRecord,
                      build_dependency_graph, build_cooccurrence_graph,
                      serialize_graph, parse_graph)
from .entropy import (CodingTree, structural_entropy, sema, oracle_min_entropy,
                      random_tree, level_align, flat_tree)
from .features import EmbeddingTable, load_embeddings, featurize
from .learner import (TreeModel, TrainConfig, forward, backward, loss, train,
                      evaluate, count_params, count_params_formula, forward_flops)

__version__ = "0.1.0"

__all__ = [
    "DocumentGraph", "Token", "DependencyRecord",
    "build_dependency_graph", "build_cooccurrence_graph",
    "serialize_graph", "parse_graph",
    "CodingTree", "structural_entropy", "sema", "oracle_min_entropy",
    "random_tree", "level_align", "flat_tree",
    "EmbeddingTable", "load_embeddings", "featurize",
    "TreeModel", "TrainConfig", "forward", "backward", "loss", "train",
    "evaluate", "count_params", "count_params_formula", "forward_flops",
]
