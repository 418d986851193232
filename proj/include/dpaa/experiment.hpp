#pragma once

#include <string>
#include <vector>

#include "dpaa/config.hpp"
#include "dpaa/dataset.hpp"
#include "dpaa/eval.hpp"
#include "dpaa/train.hpp"

namespace dpaa {

// Implementations behind the CLI subcommands. Every run writes a
// manifest.json echoing the resolved configuration, and all outputs are
// byte-identical across re-runs with the same config and seed.

struct GenerateOutcome {
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string manifest_path;
  Index train_count = 0;
  Index valid_count = 0;
  Index test_count = 0;
};

GenerateOutcome run_generate(const ExperimentConfig& cfg);

struct PretrainOutcome {
  std::string checkpoint_path;
  std::string cache_path;
  double val_recall = 0.0;
};

PretrainOutcome run_pretrain(const ExperimentConfig& cfg);

struct TrainOutcome {
  EvalReport mean_test_report;
  std::vector<EvalReport> seed_reports;
  double mean_val_recall = 0.0;
  std::string report_csv_path;
};

TrainOutcome run_train(const ExperimentConfig& cfg);

struct SweepRow {
  double severity = 0.0;
  std::string method;
  double recall = 0.0;
  double ndcg = 0.0;
  double hr = 0.0;
};

struct SweepOutcome {
  std::vector<SweepRow> rows;
  std::string csv_path;
};

SweepOutcome run_sweep_severity(const ExperimentConfig& cfg);

struct GridCell {
  double C = 0.0;
  double eta = 0.0;
  double delta = 0.0;
  double val_recall = 0.0;
};

struct GridOutcome {
  GridCell best;
  std::vector<GridCell> cells;
  std::string csv_path;
};

GridOutcome run_grid(const ExperimentConfig& cfg);

EvalReport run_evaluate(const ExperimentConfig& cfg);

// Merges report.csv files from the given run directories into one markdown
// table at out_path.
std::string run_report(const std::vector<std::string>& run_dirs, const std::string& out_path);

}  // namespace dpaa
