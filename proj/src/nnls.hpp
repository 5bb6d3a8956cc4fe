#pragma once

#include <Eigen/Dense>

namespace mfg::detail {

/// Lawson-Hanson active-set solution of min |Ax - b| subject to x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter = 0);

}  // namespace mfg::detail
