#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "dpaa/eval.hpp"
#include "support/oracles.hpp"

using namespace dpaa;

TEST_SUITE_BEGIN("eval");

namespace {

// d=1 embeddings with user row 1.0 turn per-item values into scores, which
// lets tests choose score vectors directly.
FinalEmbeddings embeddings_from_scores(const std::vector<std::vector<double>>& scores) {
  const Index users = static_cast<Index>(scores.size());
  const Index items = static_cast<Index>(scores.front().size());
  FinalEmbeddings fe;
  fe.num_users = users;
  fe.num_items = items;
  fe.values = Matrix::Zero(users + items, static_cast<Index>(users));
  for (Index u = 0; u < users; ++u) fe.values(u, u) = 1.0;
  for (Index i = 0; i < items; ++i) {
    for (Index u = 0; u < users; ++u) {
      fe.values(users + i, u) = scores[static_cast<std::size_t>(u)][static_cast<std::size_t>(i)];
    }
  }
  return fe;
}

RankingTask simple_task(Index users, Index items,
                        const std::vector<Interaction>& masked,
                        const std::vector<Interaction>& relevant,
                        std::optional<std::vector<Index>> restriction = std::nullopt) {
  const auto graph = build_graph(masked, users, items);
  return make_ranking_task(graph, relevant, std::move(restriction));
}

}  // namespace

TEST_CASE("rank_topk masks train positives") {
  const auto fe = embeddings_from_scores({{0.9, 0.5}});
  const auto task = simple_task(1, 2, {{0, 0}}, {{0, 1}});
  CHECK(rank_topk(fe, task, 0, 1) == std::vector<Index>{1});
}

TEST_CASE("rank_topk honors the global restriction") {
  const auto fe = embeddings_from_scores({{5.0, 1.0, 0.5}});
  const auto task = simple_task(1, 3, {}, {{0, 1}}, std::vector<Index>{1, 2});
  const auto ranked = rank_topk(fe, task, 0, 3);
  CHECK(ranked == std::vector<Index>{1, 2});
}

TEST_CASE("rank_topk matches a full-sort oracle with id tie-breaks") {
  Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const Index items = 3 + rng.bounded(10);
    std::vector<double> scores(static_cast<std::size_t>(items));
    for (auto& s : scores) s = rng.bounded(4) * 0.25;  // force ties
    const auto fe = embeddings_from_scores({scores});
    const auto task = simple_task(1, items, {}, {{0, 0}});
    const Index k = 1 + rng.bounded(items);

    std::vector<Index> expected(static_cast<std::size_t>(items));
    std::iota(expected.begin(), expected.end(), Index{0});
    std::sort(expected.begin(), expected.end(), [&](Index a, Index b) {
      if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)]) {
        return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
      }
      return a < b;
    });
    expected.resize(static_cast<std::size_t>(std::min(k, items)));
    CHECK(rank_topk(fe, task, 0, k) == expected);
  }
}

TEST_CASE("metric formulas on worked examples") {
  // relevant {a=0, b=1}, ranked [a, x, b]
  const std::vector<Index> ranked = {0, 7, 1};
  const std::vector<Index> relevant = {0, 1};
  CHECK(recall_at_k(ranked, relevant, 3) == doctest::Approx(1.0));
  CHECK(hr_at_k(ranked, relevant, 3) == doctest::Approx(1.0));
  // DCG = 1 + 1/2; IDCG = 1 + 1/log2(3), with 1/log2(3) ~ 0.6309
  const double expected = 1.5 / (1.0 + 1.0 / std::log2(3.0));
  CHECK(ndcg_at_k(ranked, relevant, 3) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(ndcg_at_k(ranked, relevant, 3) == doctest::Approx(0.9197).epsilon(1e-4));

  SUBCASE("no hits") {
    const std::vector<Index> misses = {5, 6, 7};
    CHECK(recall_at_k(misses, relevant, 3) == 0.0);
    CHECK(hr_at_k(misses, relevant, 3) == 0.0);
    CHECK(ndcg_at_k(misses, relevant, 3) == 0.0);
  }
  SUBCASE("perfect ranking") {
    CHECK(recall_at_k(relevant, relevant, 2) == 1.0);
    CHECK(hr_at_k(relevant, relevant, 2) == 1.0);
    CHECK(ndcg_at_k(relevant, relevant, 2) == doctest::Approx(1.0));
  }
}

TEST_CASE("metric relations hold on random instances") {
  Rng rng(73);
  for (int trial = 0; trial < 200; ++trial) {
    const Index items = 4 + rng.bounded(8);
    const Index k = 1 + rng.bounded(items);
    std::vector<Index> ranked;
    for (Index i = 0; i < items; ++i) ranked.push_back(i);
    for (std::size_t s = ranked.size(); s > 1; --s) {
      std::swap(ranked[s - 1], ranked[static_cast<std::size_t>(rng.bounded(static_cast<Index>(s)))]);
    }
    std::vector<Index> relevant;
    for (Index i = 0; i < items; ++i) {
      if (rng.uniform() < 0.4) relevant.push_back(i);
    }
    if (relevant.empty()) relevant.push_back(ranked[0]);

    const double recall = recall_at_k(ranked, relevant, k);
    const double hr = hr_at_k(ranked, relevant, k);
    const double ndcg = ndcg_at_k(ranked, relevant, k);
    CHECK(hr >= recall - 1e-12);
    CHECK(ndcg >= 0.0);
    CHECK(ndcg <= 1.0 + 1e-12);

    // NDCG = 1 iff the first min(k, |relevant|) positions are all hits
    const Index ideal = std::min<Index>(k, static_cast<Index>(relevant.size()));
    bool prefix_hits = true;
    for (Index p = 0; p < ideal; ++p) {
      prefix_hits = prefix_hits && std::binary_search(relevant.begin(), relevant.end(),
                                                      ranked[static_cast<std::size_t>(p)]);
    }
    CHECK((ndcg >= 1.0 - 1e-12) == prefix_hits);
  }
}

TEST_CASE("argsort invariance under monotone score transforms") {
  Rng rng(79);
  std::vector<std::vector<double>> scores(3);
  for (auto& row : scores) {
    row.resize(6);
    for (auto& s : row) s = rng.normal();
  }
  const std::vector<Interaction> relevant = {{0, 1}, {0, 4}, {1, 2}, {2, 0}, {2, 5}};
  const auto task = simple_task(3, 6, {{0, 0}, {1, 1}}, relevant);
  PopularitySplit split;
  split.popular = {0, 1, 2};
  split.niche = {3, 4, 5};
  split.popular_mask_ = {1, 1, 1, 0, 0, 0};

  const auto base = evaluate(embeddings_from_scores(scores), task, split, 3);
  for (const auto transform : {+[](double s) { return 3.0 * s + 7.0; },
                               +[](double s) { return std::exp(s); },
                               +[](double s) { return std::atan(s) * 2.0; }}) {
    auto mapped = scores;
    for (auto& row : mapped) {
      for (auto& s : row) s = transform(s);
    }
    const auto report = evaluate(embeddings_from_scores(mapped), task, split, 3);
    CHECK(report.all.recall == doctest::Approx(base.all.recall).epsilon(1e-12));
    CHECK(report.all.ndcg == doctest::Approx(base.all.ndcg).epsilon(1e-12));
    CHECK(report.all.hr == doctest::Approx(base.all.hr).epsilon(1e-12));
    CHECK(report.popular.recall == doctest::Approx(base.popular.recall).epsilon(1e-12));
    CHECK(report.niche.recall == doctest::Approx(base.niche.recall).epsilon(1e-12));
  }
}

TEST_CASE("evaluate macro-averages and group exclusion") {
  // user 0 recalls 1.0, user 1 recalls 0.0 at k=1
  const auto fe = embeddings_from_scores({{0.1, 0.9}, {0.9, 0.1}});
  const auto task = simple_task(2, 2, {}, {{0, 1}, {1, 1}});
  PopularitySplit split;
  split.popular = {0};
  split.niche = {1};
  split.popular_mask_ = {1, 0};
  const auto report = evaluate(fe, task, split, 1);
  CHECK(report.all.recall == doctest::Approx(0.5));
  CHECK(report.all.num_users == 2);
  // both users' relevant items are niche only: popular group has no users
  CHECK(report.popular.num_users == 0);
  CHECK(report.niche.num_users == 2);
}

TEST_CASE("evaluate matches a brute-force oracle on exhaustive instances") {
  Rng rng(83);
  for (int trial = 0; trial < 40; ++trial) {
    const Index users = 1 + rng.bounded(4);
    const Index items = 2 + rng.bounded(5);
    const Index k = 1 + rng.bounded(items);

    std::vector<std::vector<double>> scores(static_cast<std::size_t>(users));
    for (auto& row : scores) {
      row.resize(static_cast<std::size_t>(items));
      for (auto& s : row) s = rng.bounded(5) * 0.2;
    }
    std::vector<Interaction> masked;
    std::vector<Interaction> relevant;
    for (Index u = 0; u < users; ++u) {
      for (Index i = 0; i < items; ++i) {
        const double roll = rng.uniform();
        if (roll < 0.25) {
          masked.push_back({u, i});
        } else if (roll < 0.55) {
          relevant.push_back({u, i});
        }
      }
    }
    PopularitySplit split;
    split.popular_mask_.assign(static_cast<std::size_t>(items), 0);
    for (Index i = 0; i < items; ++i) {
      if (rng.uniform() < 0.5) {
        split.popular.push_back(i);
        split.popular_mask_[static_cast<std::size_t>(i)] = 1;
      } else {
        split.niche.push_back(i);
      }
    }

    const auto fe = embeddings_from_scores(scores);
    const auto task = simple_task(users, items, masked, relevant);
    const auto report = evaluate(fe, task, split, k);

    // independent per-user loop over all items
    double sums[3][3] = {};
    Index counts[3] = {};
    Index all_hits = 0, popular_hits = 0, niche_hits = 0;
    for (Index u = 0; u < users; ++u) {
      std::vector<Index> order;
      for (Index i = 0; i < items; ++i) {
        const bool is_masked = std::any_of(masked.begin(), masked.end(), [&](const auto& x) {
          return x.user == u && x.item == i;
        });
        if (!is_masked) order.push_back(i);
      }
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return scores[static_cast<std::size_t>(u)][static_cast<std::size_t>(a)] >
               scores[static_cast<std::size_t>(u)][static_cast<std::size_t>(b)];
      });
      if (static_cast<Index>(order.size()) > k) order.resize(static_cast<std::size_t>(k));

      for (int g = 0; g < 3; ++g) {
        std::set<Index> rel;
        for (const auto& x : relevant) {
          if (x.user != u) continue;
          const bool pop = split.popular_mask_[static_cast<std::size_t>(x.item)] != 0;
          if (g == 0 || (g == 1 && pop) || (g == 2 && !pop)) rel.insert(x.item);
        }
        if (rel.empty()) continue;
        Index hits = 0;
        double dcg = 0.0;
        for (std::size_t p = 0; p < order.size(); ++p) {
          if (rel.count(order[p])) {
            ++hits;
            dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
          }
        }
        if (g == 0) all_hits += hits;
        if (g == 1) popular_hits += hits;
        if (g == 2) niche_hits += hits;
        double idcg = 0.0;
        for (Index j = 1; j <= std::min<Index>(k, static_cast<Index>(rel.size())); ++j) {
          idcg += 1.0 / std::log2(static_cast<double>(j) + 1.0);
        }
        sums[g][0] += static_cast<double>(hits) / static_cast<double>(rel.size());
        sums[g][1] += dcg / idcg;
        sums[g][2] += hits >= 1 ? 1.0 : 0.0;
        ++counts[g];
      }
    }
    const GroupMetrics* groups[3] = {&report.all, &report.popular, &report.niche};
    for (int g = 0; g < 3; ++g) {
      CHECK(groups[g]->num_users == counts[g]);
      if (counts[g] == 0) continue;
      CHECK(groups[g]->recall ==
            doctest::Approx(sums[g][0] / counts[g]).epsilon(1e-12));
      CHECK(groups[g]->ndcg == doctest::Approx(sums[g][1] / counts[g]).epsilon(1e-12));
      CHECK(groups[g]->hr == doctest::Approx(sums[g][2] / counts[g]).epsilon(1e-12));
    }
    // group decomposition: hits split exactly between popular and niche
    CHECK(all_hits == popular_hits + niche_hits);
  }
}

TEST_CASE("masked items never appear in rankings") {
  Rng rng(89);
  for (int trial = 0; trial < 30; ++trial) {
    const Index users = 2 + rng.bounded(3);
    const Index items = 3 + rng.bounded(6);
    std::vector<std::vector<double>> scores(static_cast<std::size_t>(users));
    for (auto& row : scores) {
      row.resize(static_cast<std::size_t>(items));
      for (auto& s : row) s = rng.normal();
    }
    std::vector<Interaction> masked;
    for (Index u = 0; u < users; ++u) {
      for (Index i = 0; i < items; ++i) {
        if (rng.uniform() < 0.3) masked.push_back({u, i});
      }
    }
    const auto fe = embeddings_from_scores(scores);
    const auto task = simple_task(users, items, masked, {{0, 0}});
    for (Index u = 0; u < users; ++u) {
      const auto ranked = rank_topk(fe, task, u, items);
      for (const auto& x : masked) {
        if (x.user == u) {
          CHECK(std::find(ranked.begin(), ranked.end(), x.item) == ranked.end());
        }
      }
    }
  }
}

TEST_CASE("report files") {
  namespace fs = std::filesystem;
  EvalReport report;
  report.k = 20;
  report.all = {0.25, 0.125, 0.5, 10};
  report.popular = {0.3, 0.2, 0.6, 8};
  report.niche = {0.1, 0.05, 0.2, 5};
  const auto csv = (fs::temp_directory_path() / "dpaa_report_test.csv").string();
  const auto md = (fs::temp_directory_path() / "dpaa_report_test.md").string();
  write_report_csv(report, csv);
  write_report_markdown(report, md);
  std::ifstream in(csv);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "group,k,recall,ndcg,hr,num_users");
  CHECK(first == "all,20,0.250000,0.125000,0.500000,10");
  fs::remove(csv);
  fs::remove(md);
}

TEST_CASE("restriction file loader") {
  namespace fs = std::filesystem;
  const auto path = (fs::temp_directory_path() / "dpaa_restrict_test.txt").string();
  {
    std::ofstream out(path);
    out << "# restricted candidates\n3\n1\n4\n";
  }
  CHECK(load_restriction(path) == std::vector<Index>{3, 1, 4});
  fs::remove(path);
}

TEST_SUITE_END();
