#pragma once

#include <string>
#include <vector>

#include "dpaa/graph.hpp"
#include "dpaa/types.hpp"
#include "dpaa/weights.hpp"

namespace dpaa {

// Trainable layer-0 embeddings: users in rows [0, M), items in rows [M, M+N).
struct EmbeddingTable {
  Matrix values;
  Index num_users = 0;
  Index num_items = 0;

  Index dim() const { return values.cols(); }
  Index item_row(Index item) const { return num_users + item; }
};

// Entries i.i.d. Gaussian(0, 0.1), deterministic per seed.
EmbeddingTable init_embeddings(Index num_users, Index num_items, Index dim,
                               std::uint64_t seed);

// Per-layer embeddings e^(0)..e^(L) for one forward pass.
struct LayerStack {
  std::vector<Matrix> layers;
  Index num_users = 0;
  Index num_items = 0;

  Index depth() const { return static_cast<Index>(layers.size()) - 1; }
};

enum class PropagationMode { lightgcn, dpaa };

struct ModelConfig {
  Index dim = 64;
  Index num_layers = 2;
  PropagationMode mode = PropagationMode::dpaa;
  WeightPlan plan;
};

// Vanilla propagation: e_u^(l+1) = sum_{i in N(u)} e_i^(l) / sqrt(d_u d_i).
LayerStack propagate_lightgcn(const InteractionGraph& graph, const EmbeddingTable& table,
                              Index num_layers);

// Per-edge multipliers for each propagation step, with the symmetric degree
// factor folded in. Once frozen, propagation is a fixed linear map of the
// layer-0 table, which is what the backward pass differentiates through.
struct FrozenWeights {
  Index num_layers = 0;
  double residual_strength = 0.0;
  std::vector<std::vector<double>> edge_weights;  // [layer][edge]
};

FrozenWeights lightgcn_frozen_weights(const InteractionGraph& graph, Index num_layers);

// Computes DPAA weights from the given table (current-model IIW from the
// residual-augmented inputs, blended with the cache via beta_t).
FrozenWeights freeze_dpaa_weights(const InteractionGraph& graph, const EmbeddingTable& table,
                                  const WeightPlan& plan, const PretrainedIIWCache& cache,
                                  double beta_t);

// Linear propagation under fixed weights.
LayerStack propagate_frozen(const InteractionGraph& graph, const EmbeddingTable& table,
                            const FrozenWeights& frozen);

// Self-consistent DPAA forward: weights derived from the same table.
LayerStack propagate_dpaa(const InteractionGraph& graph, const EmbeddingTable& table,
                          const WeightPlan& plan, const PretrainedIIWCache& cache,
                          double beta_t);

// Final representations after mean-pooling across layers.
struct FinalEmbeddings {
  Matrix values;
  Index num_users = 0;
  Index num_items = 0;

  double score(Index user, Index item) const {
    return values.row(user).dot(values.row(num_users + item));
  }
};

FinalEmbeddings readout(const LayerStack& stack);

inline double score(const FinalEmbeddings& final_embeddings, Index user, Index item) {
  return final_embeddings.score(user, item);
}

// Model checkpoint: layer-0 table plus everything needed to rebuild the
// forward pass, including the beta_t snapshot of the checkpointed epoch.
struct Checkpoint {
  EmbeddingTable table;
  ModelConfig config;
  double beta_t = 1.0;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace dpaa
