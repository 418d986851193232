#include "dpaa/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace dpaa {

ZipfDistribution zipf_probabilities(Index num_items, double severity) {
  if (num_items < 1) throw std::invalid_argument("zipf_probabilities: need at least one item");
  if (severity < 0.0) throw std::invalid_argument("zipf_probabilities: severity must be >= 0");
  ZipfDistribution dist;
  dist.severity = severity;
  dist.probabilities.resize(static_cast<std::size_t>(num_items));
  double norm = 0.0;
  for (Index r = 1; r <= num_items; ++r) {
    const double w = std::pow(static_cast<double>(r), -severity);
    dist.probabilities[static_cast<std::size_t>(r - 1)] = w;
    norm += w;
  }
  for (auto& p : dist.probabilities) p /= norm;
  return dist;
}

namespace {

// interactions grouped by user, preserving input order within a user
std::map<Index, std::vector<Interaction>> group_by_user(const std::vector<Interaction>& xs) {
  std::map<Index, std::vector<Interaction>> groups;
  for (const auto& x : xs) groups[x.user].push_back(x);
  return groups;
}

}  // namespace

PoolSplit split_pool(const std::vector<Interaction>& unbiased, const SplitSpec& spec) {
  if (unbiased.empty()) throw std::invalid_argument("split_pool: empty interaction set");
  if (spec.validation_fraction <= 0.0 || spec.test_fraction <= 0.0 || spec.pool_fraction <= 0.0) {
    throw std::invalid_argument("split_pool: fractions must be positive");
  }
  const double total = spec.validation_fraction + spec.test_fraction + spec.pool_fraction;
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("split_pool: fractions must sum to 1");
  }

  PoolSplit out;
  for (auto& [user, items] : group_by_user(unbiased)) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(user), 0x51));
    // Fisher-Yates
    for (std::size_t k = items.size(); k > 1; --k) {
      std::swap(items[k - 1], items[static_cast<std::size_t>(rng.bounded(static_cast<Index>(k)))]);
    }
    const auto k = static_cast<Index>(items.size());
    Index n_val = std::llround(spec.validation_fraction * static_cast<double>(k));
    Index n_test = std::llround(spec.test_fraction * static_cast<double>(k));
    if (n_val + n_test > k) n_test = k - n_val;
    for (Index p = 0; p < k; ++p) {
      const auto& x = items[static_cast<std::size_t>(p)];
      if (p < n_val) {
        out.validation.push_back(x);
      } else if (p < n_val + n_test) {
        out.test.push_back(x);
      } else {
        out.pool.push_back(x);
      }
    }
  }
  if (out.validation.empty() || out.test.empty() || out.pool.empty()) {
    throw std::runtime_error("split_pool: a split fraction yielded an empty subset");
  }
  return out;
}

std::vector<Index> sample_without_replacement(std::vector<Index> candidates,
                                              std::vector<double> weights,
                                              Index count, Rng& rng) {
  if (candidates.size() != weights.size()) {
    throw std::invalid_argument("sample_without_replacement: size mismatch");
  }
  if (count > static_cast<Index>(candidates.size())) {
    count = static_cast<Index>(candidates.size());
  }
  std::vector<Index> picked;
  picked.reserve(static_cast<std::size_t>(count));
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (Index draw = 0; draw < count; ++draw) {
    const double x = rng.uniform() * total;
    double cum = 0.0;
    std::size_t chosen = candidates.size() - 1;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      cum += weights[k];
      if (x < cum) {
        chosen = k;
        break;
      }
    }
    picked.push_back(candidates[chosen]);
    total -= weights[chosen];
    candidates[chosen] = candidates.back();
    weights[chosen] = weights.back();
    candidates.pop_back();
    weights.pop_back();
  }
  return picked;
}

std::vector<Index> popularity_ranks(const std::vector<Interaction>& pool, Index num_items) {
  std::vector<Index> counts(static_cast<std::size_t>(num_items), 0);
  for (const auto& x : pool) {
    if (x.item < 0 || x.item >= num_items) {
      throw std::out_of_range("popularity_ranks: item out of range");
    }
    ++counts[static_cast<std::size_t>(x.item)];
  }
  std::vector<Index> order(static_cast<std::size_t>(num_items));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (counts[static_cast<std::size_t>(a)] != counts[static_cast<std::size_t>(b)]) {
      return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
    }
    return a < b;
  });
  std::vector<Index> ranks(static_cast<std::size_t>(num_items));
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    ranks[static_cast<std::size_t>(order[pos])] = static_cast<Index>(pos) + 1;
  }
  return ranks;
}

std::vector<Interaction> generate_biased_training(const std::vector<Interaction>& pool,
                                                  double severity, std::uint64_t seed,
                                                  Index interactions_per_user) {
  if (pool.empty()) throw std::invalid_argument("generate_biased_training: empty pool");
  if (severity < 0.0) throw std::invalid_argument("generate_biased_training: severity must be >= 0");

  const Index num_items = 1 + std::max_element(pool.begin(), pool.end(),
                                               [](const auto& a, const auto& b) {
                                                 return a.item < b.item;
                                               })->item;
  const std::vector<Index> ranks = popularity_ranks(pool, num_items);

  // unique candidate items per user, and unique users per item
  std::map<Index, std::vector<Index>> user_items;
  std::map<Index, std::vector<Index>> item_users;
  for (const auto& x : pool) {
    user_items[x.user].push_back(x.item);
    item_users[x.item].push_back(x.user);
  }
  for (auto& [u, items] : user_items) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
  for (auto& [i, users] : item_users) {
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());
  }

  // minimum exposure: one uniformly random pool user per item
  std::vector<Interaction> result;
  std::map<Index, std::vector<Index>> exposed_items_of_user;
  for (const auto& [item, users] : item_users) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(item), 0xE1));
    const Index u = users[static_cast<std::size_t>(rng.bounded(static_cast<Index>(users.size())))];
    result.push_back({u, item});
    exposed_items_of_user[u].push_back(item);
  }

  for (const auto& [user, items] : user_items) {
    const Index budget = interactions_per_user <= 0
                             ? static_cast<Index>(items.size())
                             : std::min<Index>(interactions_per_user,
                                               static_cast<Index>(items.size()));
    std::vector<Index> exposed;
    if (auto it = exposed_items_of_user.find(user); it != exposed_items_of_user.end()) {
      exposed = it->second;
      std::sort(exposed.begin(), exposed.end());
    }
    const Index want = budget - static_cast<Index>(exposed.size());
    if (want <= 0) continue;

    std::vector<Index> candidates;
    std::vector<double> weights;
    for (const Index item : items) {
      if (std::binary_search(exposed.begin(), exposed.end(), item)) continue;
      candidates.push_back(item);
      weights.push_back(std::pow(static_cast<double>(ranks[static_cast<std::size_t>(item)]),
                                 -severity));
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(user), 0x5A));
    for (const Index item : sample_without_replacement(std::move(candidates),
                                                       std::move(weights), want, rng)) {
      result.push_back({user, item});
    }
  }

  std::sort(result.begin(), result.end());
  result.erase(std::unique(result.begin(), result.end()), result.end());
  return result;
}

}  // namespace dpaa
