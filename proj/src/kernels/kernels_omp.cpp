#include <omp.h>

#include <limits>
#include <mutex>

#include "kkl/kernels.hpp"

namespace kkl::kernels::omp {

void map_indices(std::size_t count, const std::function<void(std::size_t)>& task) {
  const auto n = static_cast<std::int64_t>(count);
  std::int64_t failed = n;
  std::string message;
  std::mutex lock;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      task(static_cast<std::size_t>(i));
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> guard(lock);
      if (i < failed) {
        failed = i;
        message = e.what();
      }
    }
  }
  if (failed < n) throw IndexedFailure(static_cast<std::size_t>(failed), message);
}

PairDistances all_pairs(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  const std::size_t count = static_cast<std::size_t>(X.cols());
  PairDistances out;
  const std::size_t total = count < 2 ? 0 : count * (count - 1) / 2;
  out.input.resize(total);
  out.image.resize(total);
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < n; ++i) {
    std::size_t k = i + 1 < n ? pair_index(i, i + 1, count) : total;
    for (std::int64_t j = i + 1; j < n; ++j, ++k) {
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
  const auto n = static_cast<std::int64_t>(pairs.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < n; ++k) {
    const auto [i, j] = pairs[k];
    out.input[k] = (X.col(i) - X.col(j)).norm();
    out.image[k] = (Y.col(i) - Y.col(j)).norm();
  }
  return out;
}

Eigen::Index nearest_column(const Eigen::MatrixXd& Y, const Eigen::VectorXd& q) {
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
#pragma omp parallel
  {
    Eigen::Index local = 0;
    double local_d = std::numeric_limits<double>::infinity();
#pragma omp for schedule(static) nowait
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
      const double d = (Y.col(c) - q).squaredNorm();
      if (d < local_d) {
        local_d = d;
        local = c;
      }
    }
#pragma omp critical
    {
      if (local_d < best_d || (local_d == best_d && local < best)) {
        best_d = local_d;
        best = local;
      }
    }
  }
  return best;
}

}  // namespace kkl::kernels::omp
