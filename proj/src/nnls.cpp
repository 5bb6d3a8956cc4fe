#include "nnls.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace mfg::detail {

namespace {

Eigen::VectorXd solve_passive(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const std::vector<int>& passive) {
  Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(passive.size()));
  for (std::size_t k = 0; k < passive.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = A.col(passive[k]);
  return sub.colPivHouseholderQr().solve(b);
}

}  // namespace

Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter) {
  const Eigen::Index n = A.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (n == 0) return x;
  if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 10);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * A.cwiseAbs().colwise().sum().maxCoeff() *
                     static_cast<double>(std::max(A.rows(), n));
  std::vector<char> in_p(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd w = A.transpose() * (b - A * x);
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::Index j = -1;
    double best = tol;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!in_p[static_cast<std::size_t>(k)] && w(k) > best) best = w(k), j = k;
    }
    if (j < 0) break;
    in_p[static_cast<std::size_t>(j)] = 1;
    for (int inner = 0; inner < max_iter; ++inner) {
      std::vector<int> passive;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (in_p[static_cast<std::size_t>(k)]) passive.push_back(static_cast<int>(k));
      }
      const Eigen::VectorXd zp = solve_passive(A, b, passive);
      if ((zp.array() > 0.0).all()) {
        x.setZero();
        for (std::size_t k = 0; k < passive.size(); ++k) x(passive[k]) = zp(static_cast<Eigen::Index>(k));
        break;
      }
      double alpha = 1.0;
      for (std::size_t k = 0; k < passive.size(); ++k) {
        const double z = zp(static_cast<Eigen::Index>(k));
        const double xk = x(passive[k]);
        if (z <= 0.0 && xk - z > 0.0) alpha = std::min(alpha, xk / (xk - z));
      }
      for (std::size_t k = 0; k < passive.size(); ++k) {
        const int c = passive[k];
        x(c) += alpha * (zp(static_cast<Eigen::Index>(k)) - x(c));
        if (x(c) <= tol) {
          x(c) = 0.0;
          in_p[static_cast<std::size_t>(c)] = 0;
        }
      }
    }
    w = A.transpose() * (b - A * x);
  }
  return x;
}

}  // namespace mfg::detail
