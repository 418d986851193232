#include "dpaa/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "dpaa/rng.hpp"
#include "dpaa/serialize.hpp"

namespace dpaa {

EmbeddingTable init_embeddings(Index num_users, Index num_items, Index dim,
                               std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("init_embeddings: dim must be >= 1");
  if (num_users < 0 || num_items < 0) {
    throw std::invalid_argument("init_embeddings: negative node count");
  }
  EmbeddingTable table;
  table.num_users = num_users;
  table.num_items = num_items;
  table.values.resize(num_users + num_items, dim);
  Rng rng(derive_seed(seed, 0x1417));
  for (Index v = 0; v < table.values.rows(); ++v) {
    for (Index k = 0; k < dim; ++k) {
      table.values(v, k) = rng.normal(0.0, 0.1);
    }
  }
  return table;
}

namespace {

// One aggregation step: out_u += w_e * src_i and out_i += w_e * src_u for
// every edge e = (u, i). Neighbor-sorted accumulation order, so results are
// independent of any outer parallel schedule.
Matrix aggregate(const InteractionGraph& graph, const std::vector<double>& edge_weights,
                 const Matrix& src) {
  const Index num_users = graph.num_users();
  Matrix out = Matrix::Zero(src.rows(), src.cols());
  for (Index u = 0; u < num_users; ++u) {
    const auto items = graph.items_of(u);
    auto row = out.row(u);
    for (std::size_t pos = 0; pos < items.size(); ++pos) {
      const Index e = graph.user_edge_id(u, static_cast<Index>(pos));
      row += edge_weights[static_cast<std::size_t>(e)] * src.row(num_users + items[pos]);
    }
  }
  for (Index i = 0; i < graph.num_items(); ++i) {
    const auto users = graph.users_of(i);
    const auto edges = graph.item_edge_ids(i);
    auto row = out.row(num_users + i);
    for (std::size_t pos = 0; pos < users.size(); ++pos) {
      row += edge_weights[static_cast<std::size_t>(edges[pos])] * src.row(users[pos]);
    }
  }
  return out;
}

std::vector<double> degree_norms(const InteractionGraph& graph) {
  std::vector<double> norms(static_cast<std::size_t>(graph.edge_count()));
  for (Index e = 0; e < graph.edge_count(); ++e) {
    const double du = static_cast<double>(graph.degree_user(graph.edge_user(e)));
    const double di = static_cast<double>(graph.degree_item(graph.edge_item(e)));
    norms[static_cast<std::size_t>(e)] = 1.0 / std::sqrt(du * di);
  }
  return norms;
}

void check_table(const InteractionGraph& graph, const EmbeddingTable& table) {
  if (table.num_users != graph.num_users() || table.num_items != graph.num_items() ||
      table.values.rows() != graph.num_users() + graph.num_items()) {
    throw std::invalid_argument("embedding table does not match graph dimensions");
  }
}

}  // namespace

LayerStack propagate_lightgcn(const InteractionGraph& graph, const EmbeddingTable& table,
                              Index num_layers) {
  check_table(graph, table);
  if (num_layers < 1) throw std::invalid_argument("propagate_lightgcn: need at least one layer");
  const Index num_users = graph.num_users();
  const std::vector<double> norms = degree_norms(graph);

  LayerStack stack;
  stack.num_users = num_users;
  stack.num_items = graph.num_items();
  stack.layers.reserve(static_cast<std::size_t>(num_layers) + 1);
  stack.layers.push_back(table.values);
  for (Index l = 0; l < num_layers; ++l) {
    stack.layers.push_back(aggregate(graph, norms, stack.layers.back()));
  }
  return stack;
}

FrozenWeights lightgcn_frozen_weights(const InteractionGraph& graph, Index num_layers) {
  if (num_layers < 1) throw std::invalid_argument("lightgcn_frozen_weights: need >= 1 layer");
  FrozenWeights frozen;
  frozen.num_layers = num_layers;
  frozen.residual_strength = 0.0;
  frozen.edge_weights.assign(static_cast<std::size_t>(num_layers), degree_norms(graph));
  return frozen;
}

namespace {

void check_cache(const InteractionGraph& graph, const WeightPlan& plan,
                 const PretrainedIIWCache& cache) {
  if (cache.edge_count() != graph.edge_count()) {
    throw std::runtime_error("IIW cache edge count " + std::to_string(cache.edge_count()) +
                             " does not match graph edge count " +
                             std::to_string(graph.edge_count()));
  }
  const Index needed = plan.gamma == 1 ? 1 : plan.num_layers;
  for (Index l = 0; l < needed; ++l) {
    if (!cache.has_layer(l)) {
      throw std::runtime_error("IIW cache is missing layer " + std::to_string(l) +
                               " required by gamma=" + std::to_string(plan.gamma) +
                               ", L=" + std::to_string(plan.num_layers));
    }
  }
}

// Shared forward pass: produces the layer stack and the frozen per-edge
// multipliers it used. Current-model IIW at step l is read from the
// residual-augmented inputs that step aggregates.
std::pair<LayerStack, FrozenWeights> dpaa_forward(const InteractionGraph& graph,
                                                  const EmbeddingTable& table,
                                                  const WeightPlan& plan,
                                                  const PretrainedIIWCache& cache,
                                                  double beta_t) {
  check_table(graph, table);
  check_cache(graph, plan, cache);
  if (beta_t < 0.0 || beta_t > 1.0) {
    throw std::invalid_argument("propagate_dpaa: beta_t must be in [0, 1]");
  }
  const Index num_users = graph.num_users();
  const Index num_layers = plan.num_layers;
  const std::vector<double> norms = degree_norms(graph);

  LayerStack stack;
  stack.num_users = num_users;
  stack.num_items = graph.num_items();
  stack.layers.reserve(static_cast<std::size_t>(num_layers) + 1);
  stack.layers.push_back(table.values);

  FrozenWeights frozen;
  frozen.num_layers = num_layers;
  frozen.residual_strength = plan.residual_strength;
  frozen.edge_weights.resize(static_cast<std::size_t>(num_layers));

  for (Index l = 0; l < num_layers; ++l) {
    const Matrix input = stack.layers.back() + plan.residual_strength * stack.layers.front();
    auto& weights = frozen.edge_weights[static_cast<std::size_t>(l)];
    weights.resize(static_cast<std::size_t>(graph.edge_count()));
    const bool needs_iiw = plan.gamma == 0 || l == 0;
    for (Index e = 0; e < graph.edge_count(); ++e) {
      double w;
      if (needs_iiw) {
        const Index u = graph.edge_user(e);
        const Index i = graph.edge_item(e);
        const double r_current =
            inverse_interaction_weight(input.row(u), input.row(num_users + i));
        const double r = blend_iiw(static_cast<double>(cache.value(l, e)), r_current, beta_t);
        w = combined_weight(plan, l, r);
      } else {
        w = plan.normalized_layer_weights[static_cast<std::size_t>(l)];
      }
      weights[static_cast<std::size_t>(e)] = w * norms[static_cast<std::size_t>(e)];
    }
    stack.layers.push_back(aggregate(graph, weights, input));
  }
  return {std::move(stack), std::move(frozen)};
}

}  // namespace

FrozenWeights freeze_dpaa_weights(const InteractionGraph& graph, const EmbeddingTable& table,
                                  const WeightPlan& plan, const PretrainedIIWCache& cache,
                                  double beta_t) {
  return dpaa_forward(graph, table, plan, cache, beta_t).second;
}

LayerStack propagate_dpaa(const InteractionGraph& graph, const EmbeddingTable& table,
                          const WeightPlan& plan, const PretrainedIIWCache& cache,
                          double beta_t) {
  return dpaa_forward(graph, table, plan, cache, beta_t).first;
}

LayerStack propagate_frozen(const InteractionGraph& graph, const EmbeddingTable& table,
                            const FrozenWeights& frozen) {
  check_table(graph, table);
  LayerStack stack;
  stack.num_users = graph.num_users();
  stack.num_items = graph.num_items();
  stack.layers.reserve(static_cast<std::size_t>(frozen.num_layers) + 1);
  stack.layers.push_back(table.values);
  for (Index l = 0; l < frozen.num_layers; ++l) {
    const Matrix input = stack.layers.back() + frozen.residual_strength * stack.layers.front();
    stack.layers.push_back(
        aggregate(graph, frozen.edge_weights[static_cast<std::size_t>(l)], input));
  }
  return stack;
}

FinalEmbeddings readout(const LayerStack& stack) {
  if (stack.layers.empty()) throw std::invalid_argument("readout: empty stack");
  FinalEmbeddings out;
  out.num_users = stack.num_users;
  out.num_items = stack.num_items;
  out.values = Matrix::Zero(stack.layers.front().rows(), stack.layers.front().cols());
  for (const auto& layer : stack.layers) {
    if (layer.rows() != out.values.rows() || layer.cols() != out.values.cols()) {
      throw std::invalid_argument("readout: inconsistent layer shapes");
    }
    out.values += layer;
  }
  out.values /= static_cast<double>(stack.layers.size());
  return out;
}

namespace {
constexpr char kCheckpointMagic[8] = {'D', 'P', 'A', 'A', 'C', 'K', 'P', '1'};
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_u32le(out, 1);  // version
  write_u64le(out, static_cast<std::uint64_t>(table.num_users));
  write_u64le(out, static_cast<std::uint64_t>(table.num_items));
  write_u32le(out, static_cast<std::uint32_t>(table.dim()));
  write_u32le(out, static_cast<std::uint32_t>(config.num_layers));
  write_u32le(out, config.mode == PropagationMode::dpaa ? 1 : 0);
  write_f64le(out, config.plan.stability_sensitivity);
  write_f64le(out, config.plan.layer_emphasis);
  write_u32le(out, static_cast<std::uint32_t>(config.plan.gamma));
  write_f64le(out, config.plan.residual_strength);
  write_f64le(out, beta_t);
  for (Index v = 0; v < table.values.rows(); ++v) {
    for (Index k = 0; k < table.values.cols(); ++k) {
      write_f32le(out, static_cast<float>(table.values(v, k)));
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  const std::uint32_t version = read_u32le(in);
  if (version != 1) throw std::runtime_error("unsupported checkpoint version in " + path);
  Checkpoint ckpt;
  ckpt.table.num_users = static_cast<Index>(read_u64le(in));
  ckpt.table.num_items = static_cast<Index>(read_u64le(in));
  const auto dim = static_cast<Index>(read_u32le(in));
  ckpt.config.dim = dim;
  ckpt.config.num_layers = static_cast<Index>(read_u32le(in));
  ckpt.config.mode = read_u32le(in) == 1 ? PropagationMode::dpaa : PropagationMode::lightgcn;
  const double C = read_f64le(in);
  const double eta = read_f64le(in);
  const int gamma = static_cast<int>(read_u32le(in));
  const double delta = read_f64le(in);
  ckpt.config.plan = WeightPlan::make(C, eta, gamma, delta, ckpt.config.num_layers);
  ckpt.beta_t = read_f64le(in);
  ckpt.table.values.resize(ckpt.table.num_users + ckpt.table.num_items, dim);
  for (Index v = 0; v < ckpt.table.values.rows(); ++v) {
    for (Index k = 0; k < dim; ++k) {
      ckpt.table.values(v, k) = static_cast<double>(read_f32le(in));
    }
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return ckpt;
}

}  // namespace dpaa
