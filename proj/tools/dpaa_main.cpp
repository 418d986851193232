// Experiment driver for popularity-debiased graph collaborative filtering.
//
// Subcommands: pretrain, train, generate, sweep-severity, grid, evaluate,
// report. Every subcommand reads an optional "key = value" config file and
// applies command-line flag overrides on top.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpaa/experiment.hpp"

namespace {

struct Overrides {
  std::vector<std::pair<std::string, std::string>> values;

  void set(const std::string& key, const std::string& value) {
    values.emplace_back(key, value);
  }
};

// Shared flags: every subcommand accepts --config plus per-key overrides.
void add_common_options(CLI::App* cmd, std::string& config_path, Overrides& ov) {
  cmd->add_option("--config", config_path, "Config file (key = value with [sections])");

  const auto bind = [cmd, &ov](const std::string& flag, const std::string& key,
                               const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&ov, key](const std::string& v) { ov.set(key, v); }, help);
  };

  bind("--train", "data.train", "Training interactions (user<TAB>item per line)");
  bind("--valid", "data.valid", "Validation interactions");
  bind("--test", "data.test", "Test interactions");
  bind("--restrict", "data.restrict", "Candidate-restriction file (one item id per line)");
  bind("--pool", "data.pool", "Unbiased interaction pool");
  bind("--checkpoint", "data.checkpoint", "Model checkpoint file");
  bind("--cache", "data.cache", "Pretrained IIW cache file");
  bind("--dim", "model.dim", "Embedding dimension");
  bind("--layers", "model.layers", "Propagation layers L");
  bind("--mode", "model.mode", "Propagation mode: dpaa or lightgcn");
  bind("--C", "plan.C", "Stability sensitivity C");
  bind("--eta", "plan.eta", "Layer-emphasis exponent eta");
  bind("--delta", "plan.delta", "Initial residual strength delta");
  bind("--gamma", "plan.gamma", "IIW gating: 1 = layer 0 only, 0 = all layers");
  bind("--lr", "train.lr", "Learning rate");
  bind("--batch", "train.batch", "Batch size");
  bind("--epochs", "train.epochs", "Maximum epochs");
  bind("--patience", "train.patience", "Early-stopping patience (epochs)");
  bind("--rho", "train.rho", "L2 regularization coefficient");
  bind("--k", "train.k", "Evaluation cutoff k");
  bind("--seed", "train.seed", "Base random seed");
  bind("--seeds", "train.seeds", "Number of seeds (mean reporting)");
  bind("--severity", "generate.severity", "Zipf severity s");
  bind("--budget", "generate.budget", "Sampled interactions per user (0 = match pool)");
  bind("--severities", "sweep.severities", "Comma-separated severity values");
  bind("--grid-C", "grid.C", "Comma-separated C grid");
  bind("--grid-eta", "grid.eta", "Comma-separated eta grid");
  bind("--grid-delta", "grid.delta", "Comma-separated delta grid");
  bind("--threshold", "eval.popular_threshold", "Popular-item coverage threshold");
  bind("--out", "output.dir", "Output directory");
}

dpaa::ExperimentConfig resolve(const std::string& config_path, const Overrides& ov) {
  dpaa::ConfigFile file;
  if (!config_path.empty()) file = dpaa::ConfigFile::parse_file(config_path);
  for (const auto& [key, value] : ov.values) file.set(key, value);
  return dpaa::ExperimentConfig::from_config(file);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DPAA: popularity-debiased message passing for graph collaborative filtering"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;

  auto* cmd_pretrain = app.add_subcommand(
      "pretrain", "Train the vanilla baseline and emit checkpoint + IIW cache");
  std::string cache_text;
  cmd_pretrain->add_option("--cache-text", cache_text,
                           "Also export the IIW cache as edge<TAB>layer<TAB>value text");
  auto* cmd_train = app.add_subcommand("train", "Train a model and evaluate it on the test set");
  auto* cmd_generate = app.add_subcommand(
      "generate", "Split an unbiased pool and emit popularity-skewed training data");
  auto* cmd_sweep = app.add_subcommand(
      "sweep-severity", "Generate + pretrain + train per severity; emit a Recall@k CSV");
  auto* cmd_grid =
      app.add_subcommand("grid", "Exhaustive (C, eta, delta) search by validation Recall@k");
  auto* cmd_evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test set");
  auto* cmd_report = app.add_subcommand("report", "Merge run reports into a markdown table");
  std::vector<std::string> report_runs;
  std::string report_out = "report.md";
  cmd_report->add_option("--runs", report_runs, "Run directories containing report.csv")
      ->required()
      ->delimiter(',');
  cmd_report->add_option("--out-file", report_out, "Output markdown file");

  for (auto* cmd : {cmd_pretrain, cmd_train, cmd_generate, cmd_sweep, cmd_grid, cmd_evaluate}) {
    add_common_options(cmd, config_path, ov);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_report->parsed()) {
      dpaa::run_report(report_runs, report_out);
      std::cout << "wrote " << report_out << "\n";
      return 0;
    }
    const dpaa::ExperimentConfig cfg = resolve(config_path, ov);
    if (cmd_pretrain->parsed()) {
      const auto out = dpaa::run_pretrain(cfg);
      if (!cache_text.empty()) {
        dpaa::PretrainedIIWCache::load(out.cache_path).export_text(cache_text);
      }
      std::printf("validation recall@%lld: %.6f\n",
                  static_cast<long long>(cfg.train.eval_k), out.val_recall);
      std::printf("checkpoint: %s\ncache: %s\n", out.checkpoint_path.c_str(),
                  out.cache_path.c_str());
    } else if (cmd_train->parsed()) {
      const auto out = dpaa::run_train(cfg);
      std::printf("mean validation recall@%lld: %.6f\n",
                  static_cast<long long>(cfg.train.eval_k), out.mean_val_recall);
      std::printf("test recall@%lld: %.6f (popular %.6f, niche %.6f)\n",
                  static_cast<long long>(cfg.train.eval_k), out.mean_test_report.all.recall,
                  out.mean_test_report.popular.recall, out.mean_test_report.niche.recall);
      std::printf("report: %s\n", out.report_csv_path.c_str());
    } else if (cmd_generate->parsed()) {
      const auto out = dpaa::run_generate(cfg);
      std::printf("train: %lld  valid: %lld  test: %lld\n",
                  static_cast<long long>(out.train_count),
                  static_cast<long long>(out.valid_count),
                  static_cast<long long>(out.test_count));
    } else if (cmd_sweep->parsed()) {
      const auto out = dpaa::run_sweep_severity(cfg);
      std::printf("sweep CSV: %s\n", out.csv_path.c_str());
    } else if (cmd_grid->parsed()) {
      const auto out = dpaa::run_grid(cfg);
      std::printf("best: C=%g eta=%g delta=%g (validation recall %.6f)\n", out.best.C,
                  out.best.eta, out.best.delta, out.best.val_recall);
      std::printf("grid CSV: %s\n", out.csv_path.c_str());
    } else if (cmd_evaluate->parsed()) {
      const auto report = dpaa::run_evaluate(cfg);
      std::printf("test recall@%lld: %.6f (popular %.6f, niche %.6f)\n",
                  static_cast<long long>(report.k), report.all.recall, report.popular.recall,
                  report.niche.recall);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
