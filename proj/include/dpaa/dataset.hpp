#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpaa/graph.hpp"

namespace dpaa {

struct Dataset {
  std::vector<Interaction> train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
  std::optional<std::vector<Index>> restriction;

  // M and N inferred from the union of all splits (ids are 0-based).
  Index num_users() const;
  Index num_items() const;
};

Dataset load_dataset(const std::string& train_path, const std::string& valid_path,
                     const std::string& test_path, const std::string& restrict_path = "");

}  // namespace dpaa
