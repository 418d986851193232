#include "dpaa/dataset.hpp"

#include <algorithm>

#include "dpaa/eval.hpp"

namespace dpaa {

namespace {

Index max_field(const Dataset& d, Index Interaction::*field) {
  Index m = -1;
  for (const auto* split : {&d.train, &d.validation, &d.test}) {
    for (const auto& x : *split) m = std::max(m, x.*field);
  }
  return m;
}

}  // namespace

Index Dataset::num_users() const { return max_field(*this, &Interaction::user) + 1; }

Index Dataset::num_items() const {
  Index m = max_field(*this, &Interaction::item);
  if (restriction) {
    for (const Index i : *restriction) m = std::max(m, i);
  }
  return m + 1;
}

Dataset load_dataset(const std::string& train_path, const std::string& valid_path,
                     const std::string& test_path, const std::string& restrict_path) {
  Dataset d;
  d.train = load_interactions(train_path);
  d.validation = load_interactions(valid_path);
  d.test = load_interactions(test_path);
  if (!restrict_path.empty()) d.restriction = load_restriction(restrict_path);
  return d;
}

}  // namespace dpaa
