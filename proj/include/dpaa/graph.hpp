#pragma once

#include <span>
#include <string>
#include <vector>

#include "dpaa/types.hpp"

namespace dpaa {

// One implicit-feedback observation: user u clicked/watched/bought item i.
struct Interaction {
  Index user = 0;
  Index item = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

// Immutable bipartite user-item graph in CSR form, both directions.
//
// Edges are deduplicated and indexed in (user, item) lexicographic order, so
// the user-side CSR position of an edge IS its stable edge index. The item
// side carries an explicit edge-index array so both directions agree.
class InteractionGraph {
 public:
  InteractionGraph() = default;

  Index num_users() const { return num_users_; }
  Index num_items() const { return num_items_; }
  Index edge_count() const { return edge_count_; }

  Index degree_user(Index u) const { return user_offsets_[u + 1] - user_offsets_[u]; }
  Index degree_item(Index i) const { return item_offsets_[i + 1] - item_offsets_[i]; }

  // Sorted ascending, duplicate-free.
  std::span<const Index> items_of(Index u) const {
    return {user_items_.data() + user_offsets_[u],
            static_cast<std::size_t>(degree_user(u))};
  }
  std::span<const Index> users_of(Index i) const {
    return {item_users_.data() + item_offsets_[i],
            static_cast<std::size_t>(degree_item(i))};
  }
  // Edge indices aligned with users_of(i).
  std::span<const Index> item_edge_ids(Index i) const {
    return {item_edge_ids_.data() + item_offsets_[i],
            static_cast<std::size_t>(degree_item(i))};
  }
  // Edge index of u's pos-th neighbor (user-side CSR position is the index).
  Index user_edge_id(Index u, Index pos) const { return user_offsets_[u] + pos; }

  // Endpoints by edge index.
  Index edge_user(Index e) const { return edge_users_[e]; }
  Index edge_item(Index e) const { return user_items_[e]; }

  bool has_edge(Index u, Index i) const { return edge_index(u, i) >= 0; }
  // Stable edge index for (u, i), or -1 when the edge does not exist.
  Index edge_index(Index u, Index i) const;

 private:
  friend InteractionGraph build_graph(const std::vector<Interaction>&, Index, Index);

  Index num_users_ = 0;
  Index num_items_ = 0;
  Index edge_count_ = 0;
  std::vector<Index> user_offsets_;   // size M+1
  std::vector<Index> user_items_;    // size E, doubles as edge->item
  std::vector<Index> edge_users_;    // size E, edge->user
  std::vector<Index> item_offsets_;  // size N+1
  std::vector<Index> item_users_;    // size E
  std::vector<Index> item_edge_ids_; // size E
};

// Builds the graph from raw interactions. Duplicates collapse to one edge;
// out-of-range ids throw std::out_of_range naming the offending pair.
InteractionGraph build_graph(const std::vector<Interaction>& interactions,
                             Index num_users, Index num_items);

// Head/tail item partition: the smallest descending-frequency prefix whose
// cumulative training-interaction count reaches the threshold.
struct PopularitySplit {
  std::vector<Index> popular;  // sorted ascending
  std::vector<Index> niche;    // sorted ascending
  double coverage = 0.0;

  bool is_popular(Index item) const { return popular_mask_[static_cast<std::size_t>(item)] != 0; }

  std::vector<std::uint8_t> popular_mask_;  // size num_items
};

PopularitySplit popularity_split(const InteractionGraph& graph,
                                 const std::vector<Interaction>& train,
                                 double threshold);

// Interaction file format: one "user<TAB>item" pair per line, 0-based ids,
// '#' starts a comment line.
std::vector<Interaction> load_interactions(const std::string& path);
void save_interactions(const std::vector<Interaction>& interactions, const std::string& path);

}  // namespace dpaa
