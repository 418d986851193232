#include "dpaa/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dpaa/datagen.hpp"

namespace dpaa {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir + ": " + ec.message());
}

void write_manifest(const std::string& dir, const std::string& command,
                    const ExperimentConfig& cfg,
                    const std::map<std::string, std::string>& extra = {}) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = cfg.to_map();
  for (const auto& [k, v] : extra) j[k] = v;
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir);
  out << j.dump(2) << "\n";
}

Dataset load_configured_dataset(const ExperimentConfig& cfg) {
  if (cfg.train_path.empty() || cfg.valid_path.empty() || cfg.test_path.empty()) {
    throw std::runtime_error("config: data.train, data.valid and data.test are required");
  }
  return load_dataset(cfg.train_path, cfg.valid_path, cfg.test_path, cfg.restrict_path);
}

EvalReport evaluate_on_test(const InteractionGraph& graph, const Dataset& dataset,
                            const FinalEmbeddings& final_embeddings,
                            const ExperimentConfig& cfg) {
  const RankingTask task = make_ranking_task(graph, dataset.test, dataset.restriction);
  const PopularitySplit split = popularity_split(graph, dataset.train, cfg.popular_threshold);
  return evaluate(final_embeddings, task, split, cfg.train.eval_k);
}

FinalEmbeddings checkpoint_forward(const InteractionGraph& graph, const Checkpoint& ckpt,
                                   const PretrainedIIWCache* cache) {
  if (ckpt.config.mode == PropagationMode::dpaa) {
    if (cache == nullptr) {
      throw std::runtime_error("a dpaa checkpoint needs its IIW cache for the forward pass");
    }
    return readout(propagate_dpaa(graph, ckpt.table, ckpt.config.plan, *cache, ckpt.beta_t));
  }
  return readout(propagate_lightgcn(graph, ckpt.table, ckpt.config.num_layers));
}

EvalReport mean_report(const std::vector<EvalReport>& reports) {
  EvalReport mean = reports.front();
  auto accumulate = [&](GroupMetrics EvalReport::*group) {
    GroupMetrics m = reports.front().*group;
    m.recall = m.ndcg = m.hr = 0.0;
    for (const auto& r : reports) {
      m.recall += (r.*group).recall;
      m.ndcg += (r.*group).ndcg;
      m.hr += (r.*group).hr;
    }
    const auto n = static_cast<double>(reports.size());
    m.recall /= n;
    m.ndcg /= n;
    m.hr /= n;
    return m;
  };
  mean.all = accumulate(&EvalReport::all);
  mean.popular = accumulate(&EvalReport::popular);
  mean.niche = accumulate(&EvalReport::niche);
  return mean;
}

}  // namespace

GenerateOutcome run_generate(const ExperimentConfig& cfg) {
  if (cfg.pool_path.empty()) throw std::runtime_error("generate: data.pool is required");
  const std::vector<Interaction> pool_file = load_interactions(cfg.pool_path);
  ensure_dir(cfg.out_dir);

  SplitSpec spec;
  spec.seed = cfg.train.seed;
  const PoolSplit splits = split_pool(pool_file, spec);
  const std::vector<Interaction> biased =
      generate_biased_training(splits.pool, cfg.severity, cfg.train.seed, cfg.budget);

  GenerateOutcome out;
  out.train_path = (fs::path(cfg.out_dir) / "train.tsv").string();
  out.valid_path = (fs::path(cfg.out_dir) / "valid.tsv").string();
  out.test_path = (fs::path(cfg.out_dir) / "test.tsv").string();
  save_interactions(biased, out.train_path);
  save_interactions(splits.validation, out.valid_path);
  save_interactions(splits.test, out.test_path);
  out.train_count = static_cast<Index>(biased.size());
  out.valid_count = static_cast<Index>(splits.validation.size());
  out.test_count = static_cast<Index>(splits.test.size());

  write_manifest(cfg.out_dir, "generate", cfg,
                 {{"counts.pool", std::to_string(splits.pool.size())},
                  {"counts.train", std::to_string(out.train_count)},
                  {"counts.valid", std::to_string(out.valid_count)},
                  {"counts.test", std::to_string(out.test_count)}});
  out.manifest_path = (fs::path(cfg.out_dir) / "manifest.json").string();
  return out;
}

PretrainOutcome run_pretrain(const ExperimentConfig& cfg) {
  const Dataset dataset = load_configured_dataset(cfg);
  const InteractionGraph graph =
      build_graph(dataset.train, dataset.num_users(), dataset.num_items());
  ensure_dir(cfg.out_dir);

  ModelConfig model = cfg.model_config();
  TrainConfig train_config = cfg.train;
  auto [checkpoint, cache] = pretrain_base(graph, dataset, model, train_config);

  PretrainOutcome out;
  out.checkpoint_path = (fs::path(cfg.out_dir) / "baseline.ckpt").string();
  out.cache_path = (fs::path(cfg.out_dir) / "iiw_cache.bin").string();
  checkpoint.save(out.checkpoint_path);
  cache.save(out.cache_path);

  const FinalEmbeddings final_embeddings = checkpoint_forward(graph, checkpoint, nullptr);
  const RankingTask val_task = make_ranking_task(graph, dataset.validation, dataset.restriction);
  out.val_recall = mean_recall_at_k(final_embeddings, val_task, cfg.train.eval_k);

  write_manifest(cfg.out_dir, "pretrain", cfg,
                 {{"checkpoint", out.checkpoint_path},
                  {"cache", out.cache_path},
                  {"cache_layers", std::to_string(cache.layers().size())}});
  return out;
}

TrainOutcome run_train(const ExperimentConfig& cfg) {
  const Dataset dataset = load_configured_dataset(cfg);
  const InteractionGraph graph =
      build_graph(dataset.train, dataset.num_users(), dataset.num_items());
  ensure_dir(cfg.out_dir);

  const ModelConfig model = cfg.model_config();
  PretrainedIIWCache cache;
  if (model.mode == PropagationMode::dpaa) {
    if (cfg.cache_path.empty()) {
      throw std::runtime_error("train: data.cache (pretrained IIW cache) is required for dpaa");
    }
    cache = PretrainedIIWCache::load(cfg.cache_path);
  }

  TrainOutcome out;
  double val_sum = 0.0;
  for (Index s = 0; s < cfg.num_seeds; ++s) {
    TrainConfig train_config = cfg.train;
    train_config.seed = cfg.train.seed + static_cast<std::uint64_t>(s);
    const std::string seed_dir =
        (fs::path(cfg.out_dir) / ("seed_" + std::to_string(train_config.seed))).string();
    ensure_dir(seed_dir);

    const FitResult result =
        fit(graph, dataset, model, train_config,
            model.mode == PropagationMode::dpaa ? &cache : nullptr);
    result.best.save((fs::path(seed_dir) / "checkpoint.bin").string());
    write_training_log(result.log, (fs::path(seed_dir) / "training_log.csv").string());

    const FinalEmbeddings final_embeddings = checkpoint_forward(
        graph, result.best, model.mode == PropagationMode::dpaa ? &cache : nullptr);
    const EvalReport report = evaluate_on_test(graph, dataset, final_embeddings, cfg);
    write_report_csv(report, (fs::path(seed_dir) / "report.csv").string());
    write_report_markdown(report, (fs::path(seed_dir) / "report.md").string());
    out.seed_reports.push_back(report);
    val_sum += result.best_val_recall;
  }

  out.mean_val_recall = val_sum / static_cast<double>(cfg.num_seeds);
  out.mean_test_report = mean_report(out.seed_reports);
  out.report_csv_path = (fs::path(cfg.out_dir) / "report.csv").string();
  write_report_csv(out.mean_test_report, out.report_csv_path);
  write_report_markdown(out.mean_test_report, (fs::path(cfg.out_dir) / "report.md").string());
  write_manifest(cfg.out_dir, "train", cfg,
                 {{"seeds", std::to_string(cfg.num_seeds)},
                  {"mean_val_recall", std::to_string(out.mean_val_recall)}});
  return out;
}

SweepOutcome run_sweep_severity(const ExperimentConfig& cfg) {
  if (cfg.pool_path.empty()) throw std::runtime_error("sweep-severity: data.pool is required");
  ensure_dir(cfg.out_dir);

  SweepOutcome out;
  for (const double severity : cfg.severities) {
    char tag[32];
    std::snprintf(tag, sizeof(tag), "s_%g", severity);
    const std::string sdir = (fs::path(cfg.out_dir) / tag).string();

    ExperimentConfig gen_cfg = cfg;
    gen_cfg.severity = severity;
    gen_cfg.out_dir = sdir;
    const GenerateOutcome gen = run_generate(gen_cfg);

    ExperimentConfig pre_cfg = cfg;
    pre_cfg.train_path = gen.train_path;
    pre_cfg.valid_path = gen.valid_path;
    pre_cfg.test_path = gen.test_path;
    pre_cfg.out_dir = (fs::path(sdir) / "pretrain").string();
    const PretrainOutcome pre = run_pretrain(pre_cfg);

    // the pretrained baseline IS the lightgcn run for this severity
    ExperimentConfig eval_cfg = pre_cfg;
    eval_cfg.checkpoint_path = pre.checkpoint_path;
    eval_cfg.out_dir = (fs::path(sdir) / "lightgcn").string();
    const EvalReport base_report = run_evaluate(eval_cfg);

    ExperimentConfig dpaa_cfg = pre_cfg;
    dpaa_cfg.mode = "dpaa";
    dpaa_cfg.cache_path = pre.cache_path;
    dpaa_cfg.out_dir = (fs::path(sdir) / "dpaa").string();
    const TrainOutcome dpaa = run_train(dpaa_cfg);

    out.rows.push_back({severity, "dpaa", dpaa.mean_test_report.all.recall,
                        dpaa.mean_test_report.all.ndcg, dpaa.mean_test_report.all.hr});
    out.rows.push_back({severity, "lightgcn", base_report.all.recall, base_report.all.ndcg,
                        base_report.all.hr});
  }

  out.csv_path = (fs::path(cfg.out_dir) / "severity_sweep.csv").string();
  std::ofstream csv(out.csv_path);
  if (!csv) throw std::runtime_error("cannot write " + out.csv_path);
  csv << "severity,method,recall,ndcg,hr\n";
  char buf[160];
  for (const auto& row : out.rows) {
    std::snprintf(buf, sizeof(buf), "%g,%s,%.6f,%.6f,%.6f\n", row.severity,
                  row.method.c_str(), row.recall, row.ndcg, row.hr);
    csv << buf;
  }
  csv.close();
  write_manifest(cfg.out_dir, "sweep-severity", cfg);
  return out;
}

GridOutcome run_grid(const ExperimentConfig& cfg) {
  if (cfg.grid_C.empty() || cfg.grid_eta.empty() || cfg.grid_delta.empty()) {
    throw std::runtime_error("grid: all three grids must be non-empty");
  }
  const Dataset dataset = load_configured_dataset(cfg);
  const InteractionGraph graph =
      build_graph(dataset.train, dataset.num_users(), dataset.num_items());
  ensure_dir(cfg.out_dir);

  PretrainedIIWCache cache;
  if (!cfg.cache_path.empty()) {
    cache = PretrainedIIWCache::load(cfg.cache_path);
  } else {
    ExperimentConfig pre_cfg = cfg;
    pre_cfg.out_dir = (fs::path(cfg.out_dir) / "pretrain").string();
    const PretrainOutcome pre = run_pretrain(pre_cfg);
    cache = PretrainedIIWCache::load(pre.cache_path);
  }

  GridOutcome out;
  out.best.val_recall = -1.0;
  for (const double C : cfg.grid_C) {
    for (const double eta : cfg.grid_eta) {
      for (const double delta : cfg.grid_delta) {
        ExperimentConfig cell_cfg = cfg;
        cell_cfg.mode = "dpaa";
        cell_cfg.C = C;
        cell_cfg.eta = eta;
        cell_cfg.delta = delta;
        const ModelConfig model = cell_cfg.model_config();
        const FitResult result = fit(graph, dataset, model, cfg.train, &cache);
        out.cells.push_back({C, eta, delta, result.best_val_recall});
        if (result.best_val_recall > out.best.val_recall) {
          out.best = out.cells.back();
        }
      }
    }
  }

  out.csv_path = (fs::path(cfg.out_dir) / "grid.csv").string();
  std::ofstream csv(out.csv_path);
  if (!csv) throw std::runtime_error("cannot write " + out.csv_path);
  csv << "C,eta,delta,val_recall\n";
  char buf[160];
  for (const auto& cell : out.cells) {
    std::snprintf(buf, sizeof(buf), "%g,%g,%g,%.6f\n", cell.C, cell.eta, cell.delta,
                  cell.val_recall);
    csv << buf;
  }
  csv.close();
  write_manifest(cfg.out_dir, "grid", cfg,
                 {{"cells", std::to_string(out.cells.size())}});
  return out;
}

EvalReport run_evaluate(const ExperimentConfig& cfg) {
  if (cfg.checkpoint_path.empty()) {
    throw std::runtime_error("evaluate: data.checkpoint is required");
  }
  const Dataset dataset = load_configured_dataset(cfg);
  const InteractionGraph graph =
      build_graph(dataset.train, dataset.num_users(), dataset.num_items());
  ensure_dir(cfg.out_dir);

  const Checkpoint ckpt = Checkpoint::load(cfg.checkpoint_path);
  PretrainedIIWCache cache;
  const PretrainedIIWCache* cache_ptr = nullptr;
  if (ckpt.config.mode == PropagationMode::dpaa) {
    if (cfg.cache_path.empty()) {
      throw std::runtime_error("evaluate: data.cache is required for a dpaa checkpoint");
    }
    cache = PretrainedIIWCache::load(cfg.cache_path);
    cache_ptr = &cache;
  }

  const FinalEmbeddings final_embeddings = checkpoint_forward(graph, ckpt, cache_ptr);
  const EvalReport report = evaluate_on_test(graph, dataset, final_embeddings, cfg);
  write_report_csv(report, (fs::path(cfg.out_dir) / "report.csv").string());
  write_report_markdown(report, (fs::path(cfg.out_dir) / "report.md").string());
  write_manifest(cfg.out_dir, "evaluate", cfg);
  return report;
}

std::string run_report(const std::vector<std::string>& run_dirs, const std::string& out_path) {
  std::string md = "| run | group | k | recall | ndcg | hr | users |\n";
  md += "|---|---|---|---|---|---|---|\n";
  for (const auto& dir : run_dirs) {
    const fs::path csv_path = fs::path(dir) / "report.csv";
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("report: cannot open " + csv_path.string());
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream row(line);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(row, field, ',')) fields.push_back(field);
      if (fields.size() != 6) {
        throw std::runtime_error("report: malformed row in " + csv_path.string());
      }
      md += "| " + dir + " | " + fields[0] + " | " + fields[1] + " | " + fields[2] + " | " +
            fields[3] + " | " + fields[4] + " | " + fields[5] + " |\n";
    }
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("report: cannot write " + out_path);
  out << md;
  return md;
}

}  // namespace dpaa
