#pragma once

#include <string>
#include <vector>

#include "dpaa/types.hpp"

namespace dpaa {

// All DPAA weighting hyperparameters plus the normalized layer weights.
struct WeightPlan {
  double stability_sensitivity = 0.0;  // C, >= 0
  double layer_emphasis = 0.0;         // eta, >= 0
  int gamma = 1;                       // 1: IIW only at layer 0; 0: all layers
  double residual_strength = 0.0;      // delta in [0, 1]
  Index num_layers = 1;                // L
  std::vector<double> normalized_layer_weights;  // lambda_0..lambda_{L-1}, mean 1

  static WeightPlan make(double C, double eta, int gamma, double delta, Index num_layers);
};

// 1 - cos(e_u, e_i), in [0, 2]; a zero-norm vector yields the neutral 1.0.
double inverse_interaction_weight(const Eigen::Ref<const Eigen::RowVectorXd>& e_u,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& e_i);

// beta_t = delta_t / (delta_t + C); C == 0 is the pretrained-only regime.
double stability_beta(double delta_t, double C);

// beta * r_pretrained + (1 - beta) * r_current.
double blend_iiw(double r_pretrained, double r_current, double beta_t);

// Raw weights (l+1)^eta for l = 0..L-1, rescaled to arithmetic mean 1.
std::vector<double> layer_weights(Index num_layers, double eta);

// Per-edge, per-layer weight: gamma gates whether IIW applies above layer 0.
double combined_weight(const WeightPlan& plan, Index layer, double iiw);

// Mean over rows of the L2 norm of (curr - prev).
double embedding_delta(const Matrix& prev_layer0, const Matrix& curr_layer0);

// Closed-form drop in the popular/long-tail message-contribution ratio when
// IIW replaces unit edge weights. Diagnostic; always positive on valid input.
double lemma1_reduction(double d_p, double d_q, double norm_p, double norm_q,
                        double rbar_p, double rbar_q);

struct EpochStability {
  double delta_t = 0.0;
  double beta_t = 1.0;
};

// Fixed per-edge IIW values computed from a pretrained model, stored per
// layer. Layer 0 only under gamma=1; layers 0..L-1 under gamma=0. Values are
// held as f32 so in-memory use matches the on-disk format bit for bit.
class PretrainedIIWCache {
 public:
  PretrainedIIWCache() = default;
  PretrainedIIWCache(Index edge_count, std::vector<Index> layers);

  Index edge_count() const { return edge_count_; }
  const std::vector<Index>& layers() const { return layers_; }
  bool has_layer(Index layer) const;

  float value(Index layer, Index edge) const;
  void set(Index layer, Index edge, float v);

  void save(const std::string& path) const;
  static PretrainedIIWCache load(const std::string& path);
  // One "edge_index<TAB>layer<TAB>value" row per stored value.
  void export_text(const std::string& path) const;

 private:
  std::size_t layer_slot(Index layer) const;

  Index edge_count_ = 0;
  std::vector<Index> layers_;
  std::vector<std::vector<float>> values_;  // aligned with layers_
};

}  // namespace dpaa
