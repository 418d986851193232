#pragma once

#include <cstdint>
#include <vector>

#include "dpaa/graph.hpp"
#include "dpaa/rng.hpp"

namespace dpaa {

// Zipfian sampling probabilities over popularity ranks 1..N.
struct ZipfDistribution {
  std::vector<double> probabilities;  // entry r-1 holds P(rank r)
  double severity = 0.0;
};

// P(r) = r^-s / sum_{n=1..N} n^-s.
ZipfDistribution zipf_probabilities(Index num_items, double severity);

struct SplitSpec {
  double validation_fraction = 0.1;
  double test_fraction = 0.2;
  double pool_fraction = 0.7;
  std::uint64_t seed = 0;
};

struct PoolSplit {
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
  std::vector<Interaction> pool;
};

// Per-user stratified split into disjoint validation/test/pool subsets, so
// every user keeps positives in each split (up to rounding).
PoolSplit split_pool(const std::vector<Interaction>& unbiased, const SplitSpec& spec);

// Weighted sampling without replacement: draws `count` distinct positions
// from `candidates`, each draw proportional to its weight renormalized over
// the remaining candidates. Truncates when count exceeds the candidate set.
std::vector<Index> sample_without_replacement(std::vector<Index> candidates,
                                              std::vector<double> weights,
                                              Index count, Rng& rng);

// Semi-synthetic popularity-skewed training data from an unbiased pool.
//
// Every pool item is first guaranteed one interaction (a uniformly random
// user among those who have it), then each user draws the remainder of its
// budget from its own pool items with probability proportional to the global
// Zipfian weight rank(item)^-severity, renormalized over that user's
// candidates. interactions_per_user <= 0 means "match each user's pool
// count". Output is a subset of the pool, duplicate-free, sorted by (u, i).
std::vector<Interaction> generate_biased_training(const std::vector<Interaction>& pool,
                                                  double severity, std::uint64_t seed,
                                                  Index interactions_per_user = 0);

// Popularity rank (1-based) per item id from pool frequencies, descending,
// ties broken by ascending item id. Items absent from the pool rank last.
std::vector<Index> popularity_ranks(const std::vector<Interaction>& pool, Index num_items);

}  // namespace dpaa
