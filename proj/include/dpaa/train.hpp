#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpaa/dataset.hpp"
#include "dpaa/graph.hpp"
#include "dpaa/model.hpp"
#include "dpaa/rng.hpp"

namespace dpaa {

// BPR training triple: i is a training edge of u, j is not.
struct Triplet {
  Index user = 0;
  Index pos_item = 0;
  Index neg_item = 0;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  Index batch_size = 2048;
  Index max_epochs = 1000;
  Index patience = 50;
  double reg_coefficient = 1e-4;  // rho
  Index eval_k = 20;
  std::uint64_t seed = 1;

  void validate() const;
};

// Edge-wise BPR sampling: a uniform training edge (u, i), then a uniform
// rejection-sampled j not interacted with by u. Edges of users who interact
// with every item are skipped with a warning.
std::vector<Triplet> sample_triplets(const InteractionGraph& graph, Index batch_size, Rng& rng);

// Sum over triplets of -ln sigma(y_pos - y_neg), plus rho * ||Theta||^2 over
// the given batch-distinct layer-0 rows.
double bpr_loss(const Vector& scores_pos, const Vector& scores_neg,
                const Matrix& batch_layer0_rows, double rho);

// d(bpr sum)/d(final embeddings); rows of S aligned with the node table.
Matrix loss_grad_wrt_final(const FinalEmbeddings& final_embeddings,
                           std::span<const Triplet> triplets);

// Adjoint of the frozen linear propagation plus readout: grad wrt layer-0.
Matrix backprop_frozen(const InteractionGraph& graph, const FrozenWeights& frozen,
                       const Matrix& grad_final);

// Same, decomposed by readout branch: entry l is the contribution flowing
// through the layer-l term of the mean-pooling readout. Entries sum to the
// full gradient.
std::vector<Matrix> backprop_frozen_by_layer(const InteractionGraph& graph,
                                             const FrozenWeights& frozen,
                                             const Matrix& grad_final);

// Full gradient of bpr_loss wrt the layer-0 table with all DPAA weights
// (IIW, beta, lambda) treated as constants derived from `table` itself.
Matrix backward(const InteractionGraph& graph, const TrainConfig& config,
                const WeightPlan& plan, const PretrainedIIWCache* cache, double beta_t,
                std::span<const Triplet> triplets, const EmbeddingTable& table,
                PropagationMode mode);

struct AdamState {
  Matrix first_moment;
  Matrix second_moment;
  Index step = 0;

  static AdamState zeros_like(const Matrix& params);
};

// Standard Adam with decay rates 0.9 / 0.999 and epsilon 1e-8.
void adam_step(AdamState& state, Matrix& params, const Matrix& gradient, double learning_rate);

struct TrainState {
  Index epoch = 0;
  EmbeddingTable table;
  AdamState adam;
  Matrix prev_layer0;
  double beta_t = 1.0;
  double best_metric = 0.0;
  Checkpoint best;
  Index epochs_since_improvement = 0;
};

struct EpochLogRow {
  Index epoch = 0;
  double loss = 0.0;
  double delta_t = 0.0;
  double beta_t = 1.0;
  double val_recall = 0.0;
};

struct FitResult {
  Checkpoint best;
  std::vector<EpochLogRow> log;
  double best_val_recall = 0.0;
  Index best_epoch = 0;
};

// Epoch loop: refresh delta_t / beta_t / frozen DPAA weights once per epoch,
// run ceil(E / batch) BPR batches with Adam, validate Recall@eval_k, keep the
// best checkpoint, stop after `patience` epochs without improvement.
FitResult fit(const InteractionGraph& graph, const Dataset& dataset, const ModelConfig& config,
              const TrainConfig& train_config, const PretrainedIIWCache* cache);

// Trains the vanilla baseline to early stopping and derives the fixed
// per-edge IIW cache from its embeddings (layer 0 under gamma=1, all
// propagation layers under gamma=0).
std::pair<Checkpoint, PretrainedIIWCache> pretrain_base(const InteractionGraph& graph,
                                                        const Dataset& dataset,
                                                        const ModelConfig& config,
                                                        const TrainConfig& train_config);

// Cache extraction on its own, for an already trained baseline.
PretrainedIIWCache compute_iiw_cache(const InteractionGraph& graph,
                                     const EmbeddingTable& table, Index num_layers, int gamma);

void write_training_log(const std::vector<EpochLogRow>& log, const std::string& path);

}  // namespace dpaa
