#include "dpaa/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace dpaa {

Index InteractionGraph::edge_index(Index u, Index i) const {
  const auto items = items_of(u);
  const auto it = std::lower_bound(items.begin(), items.end(), i);
  if (it == items.end() || *it != i) return -1;
  return user_offsets_[u] + (it - items.begin());
}

InteractionGraph build_graph(const std::vector<Interaction>& interactions,
                             Index num_users, Index num_items) {
  if (num_users < 0 || num_items < 0) {
    throw std::invalid_argument("build_graph: negative user/item count");
  }
  for (const auto& x : interactions) {
    if (x.user < 0 || x.user >= num_users || x.item < 0 || x.item >= num_items) {
      throw std::out_of_range("build_graph: interaction (" + std::to_string(x.user) +
                              ", " + std::to_string(x.item) + ") out of range for " +
                              std::to_string(num_users) + " users x " +
                              std::to_string(num_items) + " items");
    }
  }

  std::vector<Interaction> edges = interactions;
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  InteractionGraph g;
  g.num_users_ = num_users;
  g.num_items_ = num_items;
  g.edge_count_ = static_cast<Index>(edges.size());

  g.user_offsets_.assign(static_cast<std::size_t>(num_users) + 1, 0);
  g.user_items_.resize(edges.size());
  g.edge_users_.resize(edges.size());
  for (const auto& e : edges) ++g.user_offsets_[static_cast<std::size_t>(e.user) + 1];
  std::partial_sum(g.user_offsets_.begin(), g.user_offsets_.end(), g.user_offsets_.begin());
  // edges are (user, item) sorted, so filling in order preserves CSR layout
  for (std::size_t k = 0; k < edges.size(); ++k) {
    g.user_items_[k] = edges[k].item;
    g.edge_users_[k] = edges[k].user;
  }

  g.item_offsets_.assign(static_cast<std::size_t>(num_items) + 1, 0);
  g.item_users_.resize(edges.size());
  g.item_edge_ids_.resize(edges.size());
  for (const auto& e : edges) ++g.item_offsets_[static_cast<std::size_t>(e.item) + 1];
  std::partial_sum(g.item_offsets_.begin(), g.item_offsets_.end(), g.item_offsets_.begin());
  std::vector<Index> cursor(g.item_offsets_.begin(), g.item_offsets_.end() - 1);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Index i = edges[k].item;
    const Index pos = cursor[static_cast<std::size_t>(i)]++;
    g.item_users_[static_cast<std::size_t>(pos)] = edges[k].user;
    g.item_edge_ids_[static_cast<std::size_t>(pos)] = static_cast<Index>(k);
  }
  // users within an item list are already ascending because edges were sorted
  // by (user, item); no per-item re-sort needed.
  return g;
}

PopularitySplit popularity_split(const InteractionGraph& graph,
                                 const std::vector<Interaction>& train,
                                 double threshold) {
  if (train.empty()) throw std::invalid_argument("popularity_split: empty train set");
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("popularity_split: threshold must be in (0, 1]");
  }
  const Index n = graph.num_items();
  std::vector<Index> counts(static_cast<std::size_t>(n), 0);
  for (const auto& x : train) {
    if (x.item < 0 || x.item >= n) {
      throw std::out_of_range("popularity_split: item " + std::to_string(x.item) +
                              " out of range");
    }
    ++counts[static_cast<std::size_t>(x.item)];
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (counts[static_cast<std::size_t>(a)] != counts[static_cast<std::size_t>(b)]) {
      return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
    }
    return a < b;
  });

  const double total = static_cast<double>(train.size());
  PopularitySplit split;
  split.popular_mask_.assign(static_cast<std::size_t>(n), 0);
  Index cumulative = 0;
  std::size_t head = 0;
  while (head < order.size() &&
         static_cast<double>(cumulative) < threshold * total - 1e-9) {
    cumulative += counts[static_cast<std::size_t>(order[head])];
    split.popular_mask_[static_cast<std::size_t>(order[head])] = 1;
    ++head;
  }
  split.coverage = static_cast<double>(cumulative) / total;
  for (Index i = 0; i < n; ++i) {
    if (split.popular_mask_[static_cast<std::size_t>(i)]) {
      split.popular.push_back(i);
    } else {
      split.niche.push_back(i);
    }
  }
  return split;
}

std::vector<Interaction> load_interactions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interaction file: " + path);
  std::vector<Interaction> out;
  std::string line;
  std::size_t lineno = 0;
  const auto parse_error = [&]() {
    return std::runtime_error(path + ":" + std::to_string(lineno) +
                              ": expected 'user<TAB>item'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const char* p = line.data();
    const char* end = p + line.size();
    Interaction x;
    auto r1 = std::from_chars(p, end, x.user);
    if (r1.ec != std::errc{} || r1.ptr == end ||
        (*r1.ptr != '\t' && *r1.ptr != ' ')) {
      throw parse_error();
    }
    p = r1.ptr + 1;
    auto r2 = std::from_chars(p, end, x.item);
    if (r2.ec != std::errc{}) throw parse_error();
    for (const char* q = r2.ptr; q != end; ++q) {
      if (*q != ' ' && *q != '\t' && *q != '\r') throw parse_error();
    }
    out.push_back(x);
  }
  return out;
}

void save_interactions(const std::vector<Interaction>& interactions, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write interaction file: " + path);
  for (const auto& x : interactions) {
    out << x.user << '\t' << x.item << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace dpaa
