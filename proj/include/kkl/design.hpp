#ifndef KKL_DESIGN_HPP_
#define KKL_DESIGN_HPP_

#include <functional>
#include <string>
#include <vector>

#include "kkl/linalg.hpp"
#include "kkl/model.hpp"

namespace kkl {

/// Injective C¹ output map b: R^p -> R^p applied channel-wise.
struct OutputMap {
  std::string label = "identity";
  std::function<Output(const Output&)> map;

  Output operator()(const Output& y) const { return map ? map(y) : y; }
  bool is_identity() const { return !map; }
};

OutputMap identity_map();
/// b(y) = y + y³/3 per channel.
OutputMap odd_cubic_map();
/// Throws std::invalid_argument for an unknown label.
OutputMap output_map(const std::string& label);

/// Filter A = diag(λ), injection B(y) = B_1m b(y)ᵀ, decay bound ℓ and gain k.
struct ObserverDesign {
  ComplexVector eigenvalues;
  OutputMap b;
  double decay_bound = -1.0;  // ℓ
  double gain = 1.0;          // k

  int m() const { return static_cast<int>(eigenvalues.size()); }
  /// B_1m b(y)ᵀ: every row equals b(y).
  ComplexMatrix injection(const Output& y) const;
  /// A z for diagonal A.
  ComplexMatrix apply_A(const ComplexMatrix& z) const { return eigenvalues.asDiagonal() * z; }
  /// Canonical text of λ (hex re/im pairs) for fingerprints.
  std::string canonical_eigenvalues() const;
};

}  // namespace kkl

#endif  // KKL_DESIGN_HPP_
