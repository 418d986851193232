#include "dpaa/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace dpaa {

RankingTask make_ranking_task(const InteractionGraph& train_graph,
                              const std::vector<Interaction>& relevant,
                              std::optional<std::vector<Index>> restriction) {
  RankingTask task;
  task.num_users = train_graph.num_users();
  task.num_items = train_graph.num_items();
  task.relevant.resize(static_cast<std::size_t>(task.num_users));
  task.masked.resize(static_cast<std::size_t>(task.num_users));
  for (const auto& x : relevant) {
    if (x.user < 0 || x.user >= task.num_users || x.item < 0 || x.item >= task.num_items) {
      throw std::out_of_range("make_ranking_task: interaction out of range");
    }
    task.relevant[static_cast<std::size_t>(x.user)].push_back(x.item);
  }
  for (auto& items : task.relevant) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
  for (Index u = 0; u < task.num_users; ++u) {
    const auto items = train_graph.items_of(u);
    task.masked[static_cast<std::size_t>(u)].assign(items.begin(), items.end());
  }
  if (restriction) {
    std::sort(restriction->begin(), restriction->end());
    restriction->erase(std::unique(restriction->begin(), restriction->end()),
                       restriction->end());
    task.restriction = std::move(restriction);
  }
  return task;
}

std::vector<Index> rank_topk(const FinalEmbeddings& final_embeddings, const RankingTask& task,
                             Index user, Index k) {
  if (k < 1) throw std::invalid_argument("rank_topk: k must be >= 1");
  const auto& masked = task.masked[static_cast<std::size_t>(user)];
  const auto is_masked = [&](Index item) {
    return std::binary_search(masked.begin(), masked.end(), item);
  };

  // (score desc, id asc) order; candidates carries ids, scores them lazily.
  struct Scored {
    double score;
    Index item;
  };
  const auto better = [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item < b.item;
  };

  std::vector<Scored> heap;  // min-heap of the best k so far
  heap.reserve(static_cast<std::size_t>(k) + 1);
  const auto heap_cmp = [&](const Scored& a, const Scored& b) { return better(a, b); };

  const auto consider = [&](Index item) {
    if (is_masked(item)) return;
    const Scored s{final_embeddings.score(user, item), item};
    if (static_cast<Index>(heap.size()) < k) {
      heap.push_back(s);
      std::push_heap(heap.begin(), heap.end(), heap_cmp);
    } else if (better(s, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), heap_cmp);
      heap.back() = s;
      std::push_heap(heap.begin(), heap.end(), heap_cmp);
    }
  };

  if (task.restriction) {
    for (const Index item : *task.restriction) consider(item);
  } else {
    for (Index item = 0; item < task.num_items; ++item) consider(item);
  }

  std::sort(heap.begin(), heap.end(), better);
  std::vector<Index> out;
  out.reserve(heap.size());
  for (const auto& s : heap) out.push_back(s.item);
  return out;
}

namespace {

Index hits_at_k(const std::vector<Index>& ranked, const std::vector<Index>& relevant, Index k) {
  Index hits = 0;
  const Index limit = std::min<Index>(k, static_cast<Index>(ranked.size()));
  for (Index p = 0; p < limit; ++p) {
    if (std::binary_search(relevant.begin(), relevant.end(),
                           ranked[static_cast<std::size_t>(p)])) {
      ++hits;
    }
  }
  return hits;
}

}  // namespace

double recall_at_k(const std::vector<Index>& ranked, const std::vector<Index>& relevant,
                   Index k) {
  if (relevant.empty()) throw std::invalid_argument("recall_at_k: empty relevant set");
  return static_cast<double>(hits_at_k(ranked, relevant, k)) /
         static_cast<double>(relevant.size());
}

double hr_at_k(const std::vector<Index>& ranked, const std::vector<Index>& relevant, Index k) {
  if (relevant.empty()) throw std::invalid_argument("hr_at_k: empty relevant set");
  return hits_at_k(ranked, relevant, k) >= 1 ? 1.0 : 0.0;
}

double ndcg_at_k(const std::vector<Index>& ranked, const std::vector<Index>& relevant, Index k) {
  if (relevant.empty()) throw std::invalid_argument("ndcg_at_k: empty relevant set");
  double dcg = 0.0;
  const Index limit = std::min<Index>(k, static_cast<Index>(ranked.size()));
  for (Index p = 0; p < limit; ++p) {
    if (std::binary_search(relevant.begin(), relevant.end(),
                           ranked[static_cast<std::size_t>(p)])) {
      dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    }
  }
  double idcg = 0.0;
  const Index ideal = std::min<Index>(k, static_cast<Index>(relevant.size()));
  for (Index j = 1; j <= ideal; ++j) {
    idcg += 1.0 / std::log2(static_cast<double>(j) + 1.0);
  }
  return dcg / idcg;
}

EvalReport evaluate(const FinalEmbeddings& final_embeddings, const RankingTask& task,
                    const PopularitySplit& split, Index k) {
  EvalReport report;
  report.k = k;
  double sum_recall[3] = {0, 0, 0};
  double sum_ndcg[3] = {0, 0, 0};
  double sum_hr[3] = {0, 0, 0};
  Index counts[3] = {0, 0, 0};  // all, popular, niche

  std::vector<Index> group_relevant;
  for (Index u = 0; u < task.num_users; ++u) {
    const auto& relevant = task.relevant[static_cast<std::size_t>(u)];
    if (relevant.empty()) continue;
    const std::vector<Index> ranked = rank_topk(final_embeddings, task, u, k);
    if (ranked.empty()) {
      std::cerr << "evaluate: user " << u << " has an empty candidate pool, skipped\n";
      continue;
    }
    for (int g = 0; g < 3; ++g) {
      const std::vector<Index>* rel = &relevant;
      if (g != 0) {
        group_relevant.clear();
        for (const Index item : relevant) {
          const bool pop = split.is_popular(item);
          if ((g == 1 && pop) || (g == 2 && !pop)) group_relevant.push_back(item);
        }
        if (group_relevant.empty()) continue;
        rel = &group_relevant;
      }
      sum_recall[g] += recall_at_k(ranked, *rel, k);
      sum_ndcg[g] += ndcg_at_k(ranked, *rel, k);
      sum_hr[g] += hr_at_k(ranked, *rel, k);
      ++counts[g];
    }
  }

  GroupMetrics* groups[3] = {&report.all, &report.popular, &report.niche};
  for (int g = 0; g < 3; ++g) {
    groups[g]->num_users = counts[g];
    if (counts[g] > 0) {
      groups[g]->recall = sum_recall[g] / static_cast<double>(counts[g]);
      groups[g]->ndcg = sum_ndcg[g] / static_cast<double>(counts[g]);
      groups[g]->hr = sum_hr[g] / static_cast<double>(counts[g]);
    }
  }
  return report;
}

double mean_recall_at_k(const FinalEmbeddings& final_embeddings, const RankingTask& task,
                        Index k) {
  double sum = 0.0;
  Index count = 0;
  for (Index u = 0; u < task.num_users; ++u) {
    const auto& relevant = task.relevant[static_cast<std::size_t>(u)];
    if (relevant.empty()) continue;
    const std::vector<Index> ranked = rank_topk(final_embeddings, task, u, k);
    if (ranked.empty()) continue;
    sum += recall_at_k(ranked, relevant, k);
    ++count;
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

namespace {

void append_row(std::string& out, const std::string& group, const GroupMetrics& m, Index k,
                const char* format) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), format, group.c_str(), static_cast<long long>(k), m.recall,
                m.ndcg, m.hr, static_cast<long long>(m.num_users));
  out += buf;
}

}  // namespace

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::string out = "group,k,recall,ndcg,hr,num_users\n";
  const char* fmt = "%s,%lld,%.6f,%.6f,%.6f,%lld\n";
  append_row(out, "all", report.all, report.k, fmt);
  append_row(out, "popular", report.popular, report.k, fmt);
  append_row(out, "niche", report.niche, report.k, fmt);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write report: " + path);
  f << out;
  if (!f) throw std::runtime_error("write failed: " + path);
}

void write_report_markdown(const EvalReport& report, const std::string& path) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "| group | Recall@%lld | NDCG@%lld | HR@%lld | users |\n",
                static_cast<long long>(report.k), static_cast<long long>(report.k),
                static_cast<long long>(report.k));
  out += buf;
  out += "|---|---|---|---|---|\n";
  const char* fmt = "| %s | %.4f | %.4f | %.4f | %lld |\n";
  const GroupMetrics* groups[3] = {&report.all, &report.popular, &report.niche};
  const char* names[3] = {"all", "popular", "niche"};
  for (int g = 0; g < 3; ++g) {
    std::snprintf(buf, sizeof(buf), fmt, names[g], groups[g]->recall, groups[g]->ndcg,
                  groups[g]->hr, static_cast<long long>(groups[g]->num_users));
    out += buf;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write report: " + path);
  f << out;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<Index> load_restriction(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open restriction file: " + path);
  std::vector<Index> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    Index item = 0;
    const auto r = std::from_chars(line.data(), line.data() + line.size(), item);
    if (r.ec != std::errc{}) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected an item id");
    }
    items.push_back(item);
  }
  return items;
}

}  // namespace dpaa
