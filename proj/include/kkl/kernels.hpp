#ifndef KKL_KERNELS_HPP_
#define KKL_KERNELS_HPP_

// Data-parallel inner loops. Every kernel has an OpenMP implementation and a
// serial reference with identical results; tests compare the two and the
// benchmark target times them.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace kkl::kernels {

enum class Exec { serial, parallel };

/// A per-index task failed; `index` is the lowest failing index.
class IndexedFailure : public std::runtime_error {
 public:
  IndexedFailure(std::size_t index, const std::string& what)
      : std::runtime_error("index " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// |x_i - x_j| and |y_i - y_j| for a list of pairs, in pair order.
struct PairDistances {
  std::vector<double> input;
  std::vector<double> image;
  std::size_t size() const { return input.size(); }
};

using IndexPair = std::pair<std::int32_t, std::int32_t>;

/// Linear index of (i, j), i < j, among all pairs of `count` items.
inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t count) {
  return i * count - i * (i + 1) / 2 + (j - i - 1);
}

namespace serial {
void map_indices(std::size_t count, const std::function<void(std::size_t)>& task);
/// All pairs i < j of the columns of X (inputs) and Y (images).
PairDistances all_pairs(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);
PairDistances listed_pairs(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                           const std::vector<IndexPair>& pairs);
/// Column of Y closest to q; ties go to the lowest index.
Eigen::Index nearest_column(const Eigen::MatrixXd& Y, const Eigen::VectorXd& q);
}  // namespace serial

namespace omp {
void map_indices(std::size_t count, const std::function<void(std::size_t)>& task);
PairDistances all_pairs(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);
PairDistances listed_pairs(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                           const std::vector<IndexPair>& pairs);
Eigen::Index nearest_column(const Eigen::MatrixXd& Y, const Eigen::VectorXd& q);
}  // namespace omp

inline void map_indices(Exec exec, std::size_t count,
                        const std::function<void(std::size_t)>& task) {
  exec == Exec::parallel ? omp::map_indices(count, task) : serial::map_indices(count, task);
}

inline PairDistances all_pairs(Exec exec, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  return exec == Exec::parallel ? omp::all_pairs(X, Y) : serial::all_pairs(X, Y);
}

inline PairDistances listed_pairs(Exec exec, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                  const std::vector<IndexPair>& pairs) {
  return exec == Exec::parallel ? omp::listed_pairs(X, Y, pairs)
                                : serial::listed_pairs(X, Y, pairs);
}

inline Eigen::Index nearest_column(Exec exec, const Eigen::MatrixXd& Y, const Eigen::VectorXd& q) {
  return exec == Exec::parallel ? omp::nearest_column(Y, q) : serial::nearest_column(Y, q);
}

}  // namespace kkl::kernels

#endif  // KKL_KERNELS_HPP_
