#include <limits>

#include "kkl/kernels.hpp"

namespace kkl::kernels::serial {

void map_indices(std::size_t count, const std::function<void(std::size_t)>& task) {
  for (std::size_t i = 0; i < count; ++i) {
    try {
      task(i);
    } catch (const std::exception& e) {
      throw IndexedFailure(i, e.what());
    }
  }
}

PairDistances all_pairs(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  const std::size_t count = static_cast<std::size_t>(X.cols());
  PairDistances out;
  const std::size_t total = count < 2 ? 0 : count * (count - 1) / 2;
  out.input.resize(total);
  out.image.resize(total);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < X.cols(); ++j, ++k) {
      out.input[k] = (X.col(i) - X.col(j)).norm();
      out.image[k] = (Y.col(i) - Y.col(j)).norm();
    }
  }
  return out;
}

PairDistances listed_pairs(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                           const std::vector<IndexPair>& pairs) {
  PairDistances out;
  out.input.resize(pairs.size());
  out.image.resize(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    out.input[k] = (X.col(i) - X.col(j)).norm();
    out.image[k] = (Y.col(i) - Y.col(j)).norm();
  }
  return out;
}

Eigen::Index nearest_column(const Eigen::MatrixXd& Y, const Eigen::VectorXd& q) {
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < Y.cols(); ++c) {
    const double d = (Y.col(c) - q).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace kkl::kernels::serial
