#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpaa/graph.hpp"
#include "dpaa/model.hpp"

namespace dpaa {

// All-ranking evaluation task: per-user relevant (test) items, per-user
// masked items (train positives), optional global candidate restriction.
struct RankingTask {
  Index num_users = 0;
  Index num_items = 0;
  std::vector<std::vector<Index>> relevant;       // sorted per user
  std::vector<std::vector<Index>> masked;         // sorted per user
  std::optional<std::vector<Index>> restriction;  // sorted item ids
};

RankingTask make_ranking_task(const InteractionGraph& train_graph,
                              const std::vector<Interaction>& relevant,
                              std::optional<std::vector<Index>> restriction = std::nullopt);

// Top-k candidate items for one user by descending score, ties broken by
// ascending item id. Masked items are removed from the pool before ranking.
std::vector<Index> rank_topk(const FinalEmbeddings& final_embeddings, const RankingTask& task,
                             Index user, Index k);

// relevant must be sorted ascending and non-empty.
double recall_at_k(const std::vector<Index>& ranked, const std::vector<Index>& relevant, Index k);
double hr_at_k(const std::vector<Index>& ranked, const std::vector<Index>& relevant, Index k);
// Binary gains: DCG over hit positions p of 1/log2(p+1), normalized by the
// ideal DCG for min(k, |relevant|) hits.
double ndcg_at_k(const std::vector<Index>& ranked, const std::vector<Index>& relevant, Index k);

struct GroupMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
  double hr = 0.0;
  Index num_users = 0;
};

struct EvalReport {
  Index k = 0;
  GroupMetrics all;
  GroupMetrics popular;
  GroupMetrics niche;
};

// Macro-averaged metrics over users with a non-empty (group-restricted)
// relevant set. Group metrics rank over the full candidate pool and restrict
// only the relevant sets.
EvalReport evaluate(const FinalEmbeddings& final_embeddings, const RankingTask& task,
                    const PopularitySplit& split, Index k);

// Fast path used for per-epoch validation: all-group Recall@k only.
double mean_recall_at_k(const FinalEmbeddings& final_embeddings, const RankingTask& task,
                        Index k);

void write_report_csv(const EvalReport& report, const std::string& path);
void write_report_markdown(const EvalReport& report, const std::string& path);

// Candidate-restriction file: one item id per line, '#' comments.
std::vector<Index> load_restriction(const std::string& path);

}  // namespace dpaa
