#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace dpaa {

using Index = std::int64_t;

// Row-major so that per-node embedding rows are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace dpaa
