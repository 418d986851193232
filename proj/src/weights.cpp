#include "dpaa/weights.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "dpaa/serialize.hpp"

namespace dpaa {

WeightPlan WeightPlan::make(double C, double eta, int gamma, double delta, Index num_layers) {
  if (C < 0.0) throw std::invalid_argument("WeightPlan: C must be >= 0");
  if (eta < 0.0) throw std::invalid_argument("WeightPlan: eta must be >= 0");
  if (gamma != 0 && gamma != 1) throw std::invalid_argument("WeightPlan: gamma must be 0 or 1");
  if (delta < 0.0 || delta > 1.0) throw std::invalid_argument("WeightPlan: delta must be in [0, 1]");
  WeightPlan plan;
  plan.stability_sensitivity = C;
  plan.layer_emphasis = eta;
  plan.gamma = gamma;
  plan.residual_strength = delta;
  plan.num_layers = num_layers;
  plan.normalized_layer_weights = layer_weights(num_layers, eta);
  return plan;
}

double inverse_interaction_weight(const Eigen::Ref<const Eigen::RowVectorXd>& e_u,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& e_i) {
  if (e_u.size() != e_i.size()) {
    throw std::invalid_argument("inverse_interaction_weight: dimension mismatch");
  }
  const double nu = e_u.norm();
  const double ni = e_i.norm();
  if (nu == 0.0 || ni == 0.0) return 1.0;
  return 1.0 - e_u.dot(e_i) / (nu * ni);
}

double stability_beta(double delta_t, double C) {
  if (delta_t < 0.0) throw std::invalid_argument("stability_beta: delta_t must be >= 0");
  if (C < 0.0) throw std::invalid_argument("stability_beta: C must be >= 0");
  if (C == 0.0) return 1.0;
  return delta_t / (delta_t + C);
}

double blend_iiw(double r_pretrained, double r_current, double beta_t) {
  if (beta_t < 0.0 || beta_t > 1.0) {
    throw std::invalid_argument("blend_iiw: beta_t must be in [0, 1]");
  }
  return beta_t * r_pretrained + (1.0 - beta_t) * r_current;
}

std::vector<double> layer_weights(Index num_layers, double eta) {
  if (num_layers < 1) throw std::invalid_argument("layer_weights: need at least one layer");
  if (eta < 0.0) throw std::invalid_argument("layer_weights: eta must be >= 0");
  std::vector<double> w(static_cast<std::size_t>(num_layers));
  double sum = 0.0;
  for (Index l = 0; l < num_layers; ++l) {
    w[static_cast<std::size_t>(l)] = std::pow(static_cast<double>(l + 1), eta);
    sum += w[static_cast<std::size_t>(l)];
  }
  const double mean = sum / static_cast<double>(num_layers);
  for (auto& x : w) x /= mean;
  return w;
}

double combined_weight(const WeightPlan& plan, Index layer, double iiw) {
  if (layer < 0 || layer >= plan.num_layers) {
    throw std::invalid_argument("combined_weight: layer out of range");
  }
  const double lambda = plan.normalized_layer_weights[static_cast<std::size_t>(layer)];
  if (plan.gamma == 0) return lambda * iiw;
  return layer == 0 ? lambda * iiw : lambda;
}

double embedding_delta(const Matrix& prev_layer0, const Matrix& curr_layer0) {
  if (prev_layer0.rows() != curr_layer0.rows() || prev_layer0.cols() != curr_layer0.cols()) {
    throw std::invalid_argument("embedding_delta: shape mismatch");
  }
  if (prev_layer0.rows() == 0) return 0.0;
  double sum = 0.0;
  for (Index v = 0; v < prev_layer0.rows(); ++v) {
    sum += (curr_layer0.row(v) - prev_layer0.row(v)).norm();
  }
  return sum / static_cast<double>(prev_layer0.rows());
}

double lemma1_reduction(double d_p, double d_q, double norm_p, double norm_q,
                        double rbar_p, double rbar_q) {
  if (d_p <= 0.0 || d_q <= 0.0 || norm_p <= 0.0 || norm_q <= 0.0 ||
      rbar_p <= 0.0 || rbar_q <= 0.0) {
    throw std::invalid_argument("lemma1_reduction: all inputs must be positive");
  }
  if (rbar_p >= rbar_q) {
    throw std::invalid_argument(
        "lemma1_reduction: requires rbar_p < rbar_q (popular items average a lower IIW)");
  }
  return (1.0 - rbar_p / rbar_q) * (d_p * norm_p) / (d_q * norm_q);
}

PretrainedIIWCache::PretrainedIIWCache(Index edge_count, std::vector<Index> layers)
    : edge_count_(edge_count), layers_(std::move(layers)) {
  if (edge_count_ < 0) throw std::invalid_argument("PretrainedIIWCache: negative edge count");
  std::sort(layers_.begin(), layers_.end());
  if (std::adjacent_find(layers_.begin(), layers_.end()) != layers_.end()) {
    throw std::invalid_argument("PretrainedIIWCache: duplicate layer");
  }
  values_.assign(layers_.size(),
                 std::vector<float>(static_cast<std::size_t>(edge_count_), 0.0f));
}

std::size_t PretrainedIIWCache::layer_slot(Index layer) const {
  const auto it = std::lower_bound(layers_.begin(), layers_.end(), layer);
  if (it == layers_.end() || *it != layer) {
    throw std::out_of_range("PretrainedIIWCache: layer " + std::to_string(layer) +
                            " not cached");
  }
  return static_cast<std::size_t>(it - layers_.begin());
}

bool PretrainedIIWCache::has_layer(Index layer) const {
  return std::binary_search(layers_.begin(), layers_.end(), layer);
}

float PretrainedIIWCache::value(Index layer, Index edge) const {
  return values_[layer_slot(layer)][static_cast<std::size_t>(edge)];
}

void PretrainedIIWCache::set(Index layer, Index edge, float v) {
  values_[layer_slot(layer)][static_cast<std::size_t>(edge)] = v;
}

namespace {
constexpr char kCacheMagic[8] = {'D', 'P', 'A', 'A', 'I', 'I', 'W', '1'};
}

void PretrainedIIWCache::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write IIW cache: " + path);
  out.write(kCacheMagic, sizeof(kCacheMagic));
  write_u32le(out, 1);  // version
  write_u64le(out, static_cast<std::uint64_t>(edge_count_));
  write_u32le(out, static_cast<std::uint32_t>(layers_.size()));
  for (const Index l : layers_) write_u32le(out, static_cast<std::uint32_t>(l));
  for (const auto& layer_values : values_) {
    for (const float v : layer_values) write_f32le(out, v);
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

PretrainedIIWCache PretrainedIIWCache::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open IIW cache: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not an IIW cache file: " + path);
  }
  const std::uint32_t version = read_u32le(in);
  if (version != 1) throw std::runtime_error("unsupported IIW cache version in " + path);
  const auto edge_count = static_cast<Index>(read_u64le(in));
  const std::uint32_t num_layers = read_u32le(in);
  std::vector<Index> layers(num_layers);
  for (auto& l : layers) l = static_cast<Index>(read_u32le(in));
  PretrainedIIWCache cache(edge_count, std::move(layers));
  for (std::size_t slot = 0; slot < cache.layers_.size(); ++slot) {
    for (Index e = 0; e < edge_count; ++e) {
      const float v = read_f32le(in);
      if (!(v >= -1e-6f && v <= 2.0f + 1e-6f)) {
        throw std::runtime_error("IIW cache value out of [0, 2] in " + path);
      }
      cache.values_[slot][static_cast<std::size_t>(e)] = v;
    }
  }
  if (!in) throw std::runtime_error("truncated IIW cache: " + path);
  return cache;
}

void PretrainedIIWCache::export_text(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write IIW cache export: " + path);
  char buf[64];
  for (Index e = 0; e < edge_count_; ++e) {
    for (std::size_t slot = 0; slot < layers_.size(); ++slot) {
      std::snprintf(buf, sizeof(buf), "%lld\t%lld\t%.9g\n", static_cast<long long>(e),
                    static_cast<long long>(layers_[slot]),
                    static_cast<double>(values_[slot][static_cast<std::size_t>(e)]));
      out << buf;
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace dpaa
