#include "dpaa/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "dpaa/eval.hpp"

namespace dpaa {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
  if (patience > max_epochs) throw std::invalid_argument("TrainConfig: patience > max_epochs");
  if (reg_coefficient < 0.0) throw std::invalid_argument("TrainConfig: rho must be >= 0");
  if (eval_k < 1) throw std::invalid_argument("TrainConfig: eval_k must be >= 1");
}

std::vector<Triplet> sample_triplets(const InteractionGraph& graph, Index batch_size, Rng& rng) {
  if (graph.edge_count() == 0) throw std::invalid_argument("sample_triplets: empty graph");
  std::vector<Triplet> batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  bool warned = false;
  for (Index b = 0; b < batch_size; ++b) {
    const Index e = rng.bounded(graph.edge_count());
    const Index u = graph.edge_user(e);
    if (graph.degree_user(u) >= graph.num_items()) {
      if (!warned) {
        std::cerr << "sample_triplets: user " << u
                  << " interacts with every item, skipping its edges\n";
        warned = true;
      }
      continue;
    }
    Index j;
    do {
      j = rng.bounded(graph.num_items());
    } while (graph.has_edge(u, j));
    batch.push_back({u, graph.edge_item(e), j});
  }
  return batch;
}

double bpr_loss(const Vector& scores_pos, const Vector& scores_neg,
                const Matrix& batch_layer0_rows, double rho) {
  if (scores_pos.size() != scores_neg.size()) {
    throw std::invalid_argument("bpr_loss: score vectors must have equal length");
  }
  double loss = 0.0;
  for (Index t = 0; t < scores_pos.size(); ++t) {
    const double s = scores_pos[t] - scores_neg[t];
    // -ln sigma(s) = log(1 + exp(-s)), stable on both tails
    loss += s >= 0.0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
  }
  loss += rho * batch_layer0_rows.squaredNorm();
  return loss;
}

Matrix loss_grad_wrt_final(const FinalEmbeddings& final_embeddings,
                           std::span<const Triplet> triplets) {
  const Matrix& F = final_embeddings.values;
  const Index num_users = final_embeddings.num_users;
  Matrix grad = Matrix::Zero(F.rows(), F.cols());
  for (const auto& t : triplets) {
    const Index ru = t.user;
    const Index ri = num_users + t.pos_item;
    const Index rj = num_users + t.neg_item;
    const double s = F.row(ru).dot(F.row(ri)) - F.row(ru).dot(F.row(rj));
    // d(-ln sigma(s))/ds = -(1 - sigma(s)) = -eps
    const double eps = s >= 0.0 ? std::exp(-s) / (1.0 + std::exp(-s))
                                : 1.0 / (1.0 + std::exp(s));
    grad.row(ru) -= eps * (F.row(ri) - F.row(rj));
    grad.row(ri) -= eps * F.row(ru);
    grad.row(rj) += eps * F.row(ru);
  }
  return grad;
}

namespace {

// Applies the (symmetric) weighted adjacency of one propagation step.
Matrix apply_step_transpose(const InteractionGraph& graph, const std::vector<double>& weights,
                            const Matrix& grad) {
  const Index num_users = graph.num_users();
  Matrix out = Matrix::Zero(grad.rows(), grad.cols());
  for (Index u = 0; u < num_users; ++u) {
    const auto items = graph.items_of(u);
    for (std::size_t pos = 0; pos < items.size(); ++pos) {
      const Index e = graph.user_edge_id(u, static_cast<Index>(pos));
      const double w = weights[static_cast<std::size_t>(e)];
      // forward sent w * ehat_i into e_u and w * ehat_u into e_i
      out.row(num_users + items[pos]) += w * grad.row(u);
      out.row(u) += w * grad.row(num_users + items[pos]);
    }
  }
  return out;
}

}  // namespace

Matrix backprop_frozen(const InteractionGraph& graph, const FrozenWeights& frozen,
                       const Matrix& grad_final) {
  const double readout_scale = 1.0 / static_cast<double>(frozen.num_layers + 1);
  const Matrix per_layer = readout_scale * grad_final;

  Matrix grad_table = Matrix::Zero(grad_final.rows(), grad_final.cols());
  Matrix g = per_layer;  // gradient wrt e^(l+1), starting at l+1 = L
  for (Index l = frozen.num_layers - 1; l >= 0; --l) {
    const Matrix t =
        apply_step_transpose(graph, frozen.edge_weights[static_cast<std::size_t>(l)], g);
    grad_table += frozen.residual_strength * t;  // through the residual term of ehat^(l)
    g = per_layer + t;                           // gradient wrt e^(l)
  }
  grad_table += g;  // e^(0) is the table itself
  return grad_table;
}

std::vector<Matrix> backprop_frozen_by_layer(const InteractionGraph& graph,
                                             const FrozenWeights& frozen,
                                             const Matrix& grad_final) {
  const double readout_scale = 1.0 / static_cast<double>(frozen.num_layers + 1);
  std::vector<Matrix> contributions;
  contributions.reserve(static_cast<std::size_t>(frozen.num_layers) + 1);
  for (Index branch = 0; branch <= frozen.num_layers; ++branch) {
    Matrix grad_table = Matrix::Zero(grad_final.rows(), grad_final.cols());
    Matrix g = readout_scale * grad_final;  // injected at e^(branch)
    for (Index l = branch - 1; l >= 0; --l) {
      const Matrix t =
          apply_step_transpose(graph, frozen.edge_weights[static_cast<std::size_t>(l)], g);
      grad_table += frozen.residual_strength * t;
      g = std::move(t);
    }
    grad_table += g;
    contributions.push_back(std::move(grad_table));
  }
  return contributions;
}

namespace {

std::vector<Index> distinct_rows(std::span<const Triplet> triplets, Index num_users) {
  std::vector<Index> rows;
  rows.reserve(triplets.size() * 3);
  for (const auto& t : triplets) {
    rows.push_back(t.user);
    rows.push_back(num_users + t.pos_item);
    rows.push_back(num_users + t.neg_item);
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

}  // namespace

Matrix backward(const InteractionGraph& graph, const TrainConfig& config,
                const WeightPlan& plan, const PretrainedIIWCache* cache, double beta_t,
                std::span<const Triplet> triplets, const EmbeddingTable& table,
                PropagationMode mode) {
  FrozenWeights frozen;
  if (mode == PropagationMode::dpaa) {
    if (cache == nullptr) throw std::invalid_argument("backward: dpaa mode requires a cache");
    frozen = freeze_dpaa_weights(graph, table, plan, *cache, beta_t);
  } else {
    frozen = lightgcn_frozen_weights(graph, plan.num_layers);
  }
  const FinalEmbeddings final_embeddings = readout(propagate_frozen(graph, table, frozen));
  const Matrix grad_final = loss_grad_wrt_final(final_embeddings, triplets);
  Matrix grad = backprop_frozen(graph, frozen, grad_final);
  for (const Index row : distinct_rows(triplets, table.num_users)) {
    grad.row(row) += 2.0 * config.reg_coefficient * table.values.row(row);
  }
  return grad;
}

AdamState AdamState::zeros_like(const Matrix& params) {
  AdamState state;
  state.first_moment = Matrix::Zero(params.rows(), params.cols());
  state.second_moment = Matrix::Zero(params.rows(), params.cols());
  state.step = 0;
  return state;
}

void adam_step(AdamState& state, Matrix& params, const Matrix& gradient, double learning_rate) {
  if (params.rows() != gradient.rows() || params.cols() != gradient.cols() ||
      params.rows() != state.first_moment.rows() || params.cols() != state.first_moment.cols()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  ++state.step;
  state.first_moment = beta1 * state.first_moment + (1.0 - beta1) * gradient;
  state.second_moment =
      beta2 * state.second_moment + (1.0 - beta2) * gradient.cwiseProduct(gradient);
  const double correction1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  params.array() -= learning_rate * (state.first_moment.array() / correction1) /
                    ((state.second_moment.array() / correction2).sqrt() + eps);
}

namespace {

FinalEmbeddings forward_for_eval(const InteractionGraph& graph, const EmbeddingTable& table,
                                 const ModelConfig& config, const PretrainedIIWCache* cache,
                                 double beta_t) {
  if (config.mode == PropagationMode::dpaa) {
    return readout(propagate_dpaa(graph, table, config.plan, *cache, beta_t));
  }
  return readout(propagate_lightgcn(graph, table, config.num_layers));
}

}  // namespace

FitResult fit(const InteractionGraph& graph, const Dataset& dataset, const ModelConfig& config,
              const TrainConfig& train_config, const PretrainedIIWCache* cache) {
  train_config.validate();
  if (config.mode == PropagationMode::dpaa && cache == nullptr) {
    throw std::invalid_argument("fit: dpaa mode requires a pretrained IIW cache");
  }
  if (dataset.validation.empty()) throw std::invalid_argument("fit: empty validation split");

  const RankingTask val_task = make_ranking_task(graph, dataset.validation, dataset.restriction);

  EmbeddingTable table =
      init_embeddings(graph.num_users(), graph.num_items(), config.dim, train_config.seed);
  AdamState adam = AdamState::zeros_like(table.values);
  Rng sampler(derive_seed(train_config.seed, 0xB9A));

  const Index batches_per_epoch =
      (graph.edge_count() + train_config.batch_size - 1) / train_config.batch_size;
  const FrozenWeights lightgcn_frozen =
      config.mode == PropagationMode::lightgcn
          ? lightgcn_frozen_weights(graph, config.num_layers)
          : FrozenWeights{};

  FitResult result;
  result.best_val_recall = -std::numeric_limits<double>::infinity();
  Matrix prev_epoch_table;
  FrozenWeights dpaa_frozen;
  Index since_improvement = 0;

  for (Index epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    double delta_t = 0.0;
    double beta_t = 1.0;  // no delta exists before the second epoch
    if (epoch > 1) {
      delta_t = embedding_delta(prev_epoch_table, table.values);
      beta_t = stability_beta(delta_t, config.plan.stability_sensitivity);
    }
    prev_epoch_table = table.values;

    if (config.mode == PropagationMode::dpaa) {
      dpaa_frozen = freeze_dpaa_weights(graph, table, config.plan, *cache, beta_t);
    }
    const FrozenWeights& epoch_frozen =
        config.mode == PropagationMode::dpaa ? dpaa_frozen : lightgcn_frozen;

    double epoch_loss = 0.0;
    Index num_triplets = 0;
    for (Index b = 0; b < batches_per_epoch; ++b) {
      const std::vector<Triplet> triplets =
          sample_triplets(graph, train_config.batch_size, sampler);
      if (triplets.empty()) continue;

      const FinalEmbeddings final_embeddings =
          readout(propagate_frozen(graph, table, epoch_frozen));
      Vector pos(static_cast<Index>(triplets.size()));
      Vector neg(static_cast<Index>(triplets.size()));
      const std::vector<Index> rows = distinct_rows(triplets, table.num_users);
      Matrix batch_rows(static_cast<Index>(rows.size()), table.dim());
      for (std::size_t k = 0; k < rows.size(); ++k) {
        batch_rows.row(static_cast<Index>(k)) = table.values.row(rows[k]);
      }
      for (std::size_t k = 0; k < triplets.size(); ++k) {
        pos[static_cast<Index>(k)] = final_embeddings.score(triplets[k].user, triplets[k].pos_item);
        neg[static_cast<Index>(k)] = final_embeddings.score(triplets[k].user, triplets[k].neg_item);
      }
      epoch_loss += bpr_loss(pos, neg, batch_rows, train_config.reg_coefficient);
      num_triplets += static_cast<Index>(triplets.size());

      const Matrix grad_final = loss_grad_wrt_final(final_embeddings, triplets);
      Matrix grad = backprop_frozen(graph, epoch_frozen, grad_final);
      for (const Index row : rows) {
        grad.row(row) += 2.0 * train_config.reg_coefficient * table.values.row(row);
      }
      adam_step(adam, table.values, grad, train_config.learning_rate);
    }

    const FinalEmbeddings val_embeddings =
        forward_for_eval(graph, table, config, cache, beta_t);
    const double val_recall = mean_recall_at_k(val_embeddings, val_task, train_config.eval_k);

    result.log.push_back({epoch,
                          num_triplets > 0 ? epoch_loss / static_cast<double>(num_triplets) : 0.0,
                          delta_t, beta_t, val_recall});

    if (val_recall > result.best_val_recall) {
      result.best_val_recall = val_recall;
      result.best_epoch = epoch;
      result.best = Checkpoint{table, config, beta_t};
      since_improvement = 0;
    } else {
      ++since_improvement;
      if (since_improvement >= train_config.patience) break;
    }
  }
  if (result.best_epoch == 0) throw std::runtime_error("fit: no epoch completed");
  return result;
}

PretrainedIIWCache compute_iiw_cache(const InteractionGraph& graph,
                                     const EmbeddingTable& table, Index num_layers, int gamma) {
  std::vector<Index> cache_layers;
  const Index top = gamma == 1 ? 1 : num_layers;
  for (Index l = 0; l < top; ++l) cache_layers.push_back(l);
  PretrainedIIWCache cache(graph.edge_count(), cache_layers);

  const LayerStack stack = propagate_lightgcn(graph, table, num_layers);
  for (const Index l : cache_layers) {
    const Matrix& layer = stack.layers[static_cast<std::size_t>(l)];
    for (Index e = 0; e < graph.edge_count(); ++e) {
      const Index u = graph.edge_user(e);
      const Index i = graph.edge_item(e);
      const double r =
          inverse_interaction_weight(layer.row(u), layer.row(graph.num_users() + i));
      cache.set(l, e, static_cast<float>(r));
    }
  }
  return cache;
}

std::pair<Checkpoint, PretrainedIIWCache> pretrain_base(const InteractionGraph& graph,
                                                        const Dataset& dataset,
                                                        const ModelConfig& config,
                                                        const TrainConfig& train_config) {
  if (dataset.validation.empty()) {
    throw std::invalid_argument("pretrain_base: empty validation split");
  }
  ModelConfig base = config;
  base.mode = PropagationMode::lightgcn;
  FitResult result = fit(graph, dataset, base, train_config, nullptr);
  PretrainedIIWCache cache = compute_iiw_cache(graph, result.best.table, config.num_layers,
                                               config.plan.gamma);
  return {std::move(result.best), std::move(cache)};
}

void write_training_log(const std::vector<EpochLogRow>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write training log: " + path);
  out << "epoch,loss,delta_t,beta_t,val_recall\n";
  char buf[160];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof(buf), "%lld,%.8g,%.8g,%.8g,%.6f\n",
                  static_cast<long long>(row.epoch), row.loss, row.delta_t, row.beta_t,
                  row.val_recall);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace dpaa
