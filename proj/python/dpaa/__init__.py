"""Popularity-debiased message passing for graph-based collaborative filtering.

The heavy lifting lives in the compiled extension; this package re-exports
the main operations: graph construction, the Zipfian click generator, the
DPAA weighting formulas, propagation, BPR training and top-k evaluation.
"""

from ._core import (
    InteractionGraph,
    PopularitySplit,
    blend_iiw,
    build_graph,
    embedding_delta,
    evaluate,
    fit,
    generate_biased_training,
    init_embeddings,
    inverse_interaction_weight,
    layer_weights,
    lemma1_reduction,
    popularity_split,
    pretrain_base,
    propagate_dpaa,
    propagate_lightgcn,
    rank_topk,
    readout,
    score,
    split_pool,
    stability_beta,
    zipf_probabilities,
)

__all__ = [
    "InteractionGraph",
    "PopularitySplit",
    "blend_iiw",
    "build_graph",
    "embedding_delta",
    "evaluate",
    "fit",
    "generate_biased_training",
    "init_embeddings",
    "inverse_interaction_weight",
    "layer_weights",
    "lemma1_reduction",
    "popularity_split",
    "pretrain_base",
    "propagate_dpaa",
    "propagate_lightgcn",
    "rank_topk",
    "readout",
    "score",
    "split_pool",
    "stability_beta",
    "zipf_probabilities",
]
