#include "dpaa/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dpaa {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                 ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    cfg.entries_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': not a number: " + it->second);
  }
}

Index ConfigFile::get_index(const std::string& key, Index fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return static_cast<Index>(v);
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': not an integer: " + it->second);
  }
}

std::vector<double> ConfigFile::get_double_list(const std::string& key,
                                                const std::vector<double>& fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<double> values;
  std::stringstream ss(it->second);
  std::string token;
  while (std::getline(ss, token, ',')) {
    token = trim(token);
    if (token.empty()) continue;
    try {
      values.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw std::runtime_error("config key '" + key + "': not a number: " + token);
    }
  }
  if (values.empty()) throw std::runtime_error("config key '" + key + "': empty list");
  return values;
}

ExperimentConfig ExperimentConfig::from_config(const ConfigFile& file) {
  ExperimentConfig cfg;
  cfg.train_path = file.get_string("data.train", cfg.train_path);
  cfg.valid_path = file.get_string("data.valid", cfg.valid_path);
  cfg.test_path = file.get_string("data.test", cfg.test_path);
  cfg.restrict_path = file.get_string("data.restrict", cfg.restrict_path);
  cfg.pool_path = file.get_string("data.pool", cfg.pool_path);
  cfg.checkpoint_path = file.get_string("data.checkpoint", cfg.checkpoint_path);
  cfg.cache_path = file.get_string("data.cache", cfg.cache_path);

  cfg.dim = file.get_index("model.dim", cfg.dim);
  cfg.num_layers = file.get_index("model.layers", cfg.num_layers);
  cfg.mode = file.get_string("model.mode", cfg.mode);

  cfg.C = file.get_double("plan.C", cfg.C);
  cfg.eta = file.get_double("plan.eta", cfg.eta);
  cfg.delta = file.get_double("plan.delta", cfg.delta);
  cfg.gamma = static_cast<int>(file.get_index("plan.gamma", cfg.gamma));

  cfg.train.learning_rate = file.get_double("train.lr", cfg.train.learning_rate);
  cfg.train.batch_size = file.get_index("train.batch", cfg.train.batch_size);
  cfg.train.max_epochs = file.get_index("train.epochs", cfg.train.max_epochs);
  cfg.train.patience = file.get_index("train.patience", cfg.train.patience);
  cfg.train.reg_coefficient = file.get_double("train.rho", cfg.train.reg_coefficient);
  cfg.train.eval_k = file.get_index("train.k", cfg.train.eval_k);
  cfg.train.seed = static_cast<std::uint64_t>(file.get_index("train.seed",
                                                             static_cast<Index>(cfg.train.seed)));
  cfg.num_seeds = file.get_index("train.seeds", cfg.num_seeds);

  cfg.severity = file.get_double("generate.severity", cfg.severity);
  cfg.budget = file.get_index("generate.budget", cfg.budget);
  cfg.severities = file.get_double_list("sweep.severities", cfg.severities);

  cfg.grid_C = file.get_double_list("grid.C", cfg.grid_C);
  cfg.grid_eta = file.get_double_list("grid.eta", cfg.grid_eta);
  cfg.grid_delta = file.get_double_list("grid.delta", cfg.grid_delta);

  cfg.popular_threshold = file.get_double("eval.popular_threshold", cfg.popular_threshold);
  cfg.out_dir = file.get_string("output.dir", cfg.out_dir);
  return cfg;
}

WeightPlan ExperimentConfig::weight_plan() const {
  return WeightPlan::make(C, eta, gamma, delta, num_layers);
}

ModelConfig ExperimentConfig::model_config() const {
  if (mode != "dpaa" && mode != "lightgcn") {
    throw std::runtime_error("config: mode must be 'dpaa' or 'lightgcn', got '" + mode + "'");
  }
  ModelConfig mc;
  mc.dim = dim;
  mc.num_layers = num_layers;
  mc.mode = mode == "dpaa" ? PropagationMode::dpaa : PropagationMode::lightgcn;
  mc.plan = weight_plan();
  return mc;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (k) out += ",";
    out += fmt_double(xs[k]);
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["data.train"] = train_path;
  m["data.valid"] = valid_path;
  m["data.test"] = test_path;
  m["data.restrict"] = restrict_path;
  m["data.pool"] = pool_path;
  m["data.checkpoint"] = checkpoint_path;
  m["data.cache"] = cache_path;
  m["model.dim"] = std::to_string(dim);
  m["model.layers"] = std::to_string(num_layers);
  m["model.mode"] = mode;
  m["plan.C"] = fmt_double(C);
  m["plan.eta"] = fmt_double(eta);
  m["plan.delta"] = fmt_double(delta);
  m["plan.gamma"] = std::to_string(gamma);
  m["train.lr"] = fmt_double(train.learning_rate);
  m["train.batch"] = std::to_string(train.batch_size);
  m["train.epochs"] = std::to_string(train.max_epochs);
  m["train.patience"] = std::to_string(train.patience);
  m["train.rho"] = fmt_double(train.reg_coefficient);
  m["train.k"] = std::to_string(train.eval_k);
  m["train.seed"] = std::to_string(train.seed);
  m["train.seeds"] = std::to_string(num_seeds);
  m["generate.severity"] = fmt_double(severity);
  m["generate.budget"] = std::to_string(budget);
  m["sweep.severities"] = fmt_list(severities);
  m["grid.C"] = fmt_list(grid_C);
  m["grid.eta"] = fmt_list(grid_eta);
  m["grid.delta"] = fmt_list(grid_delta);
  m["eval.popular_threshold"] = fmt_double(popular_threshold);
  m["output.dir"] = out_dir;
  return m;
}

}  // namespace dpaa
