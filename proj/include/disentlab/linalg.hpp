#pragma once

#include <Eigen/Dense>

namespace disentlab {

/// Rows are samples throughout the library.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace disentlab
