#pragma once

#include <map>
#include <string>
#include <vector>

#include "dpaa/train.hpp"

namespace dpaa {

// Line-oriented "key = value" file with [section] headers and '#' comments.
// Keys are addressed as "section.key".
class ConfigFile {
 public:
  ConfigFile() = default;
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  Index get_index(const std::string& key, Index fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// Fully resolved experiment configuration shared by all CLI subcommands.
struct ExperimentConfig {
  // data
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string restrict_path;
  std::string pool_path;
  std::string checkpoint_path;  // pretrained baseline (input to train/evaluate)
  std::string cache_path;       // pretrained IIW cache

  // model
  Index dim = 256;
  Index num_layers = 2;
  std::string mode = "dpaa";

  // plan
  double C = 1e-4;
  double eta = 2.0;
  double delta = 0.2;
  int gamma = 1;

  TrainConfig train;
  Index num_seeds = 1;

  // generate / sweep
  double severity = 0.0;
  Index budget = 0;  // interactions per user; 0 matches each user's pool count
  std::vector<double> severities = {0.0, 3.0, 6.0, 9.0};

  // grid (defaults follow the standard tuning grids)
  std::vector<double> grid_C = {0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  std::vector<double> grid_eta = {0.0, 1.0, 2.0, 3.0};
  std::vector<double> grid_delta = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};

  double popular_threshold = 0.8;
  std::string out_dir = "out";

  static ExperimentConfig from_config(const ConfigFile& file);

  ModelConfig model_config() const;
  WeightPlan weight_plan() const;
  // The resolved key/value view written into run manifests.
  std::map<std::string, std::string> to_map() const;
};

}  // namespace dpaa
