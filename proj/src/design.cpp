#include "kkl/design.hpp"

#include <stdexcept>

#include "kkl/util.hpp"

namespace kkl {

OutputMap identity_map() { return OutputMap{}; }

OutputMap odd_cubic_map() {
  return OutputMap{"odd_cubic", [](const Output& y) {
                     return Output(y.array() + y.array().cube() / 3.0);
                   }};
}

OutputMap output_map(const std::string& label) {
  if (label == "identity") return identity_map();
  if (label == "odd_cubic") return odd_cubic_map();
  throw std::invalid_argument("unknown output map '" + label + "'");
}

ComplexMatrix ObserverDesign::injection(const Output& y) const {
  const Output by = b(y);
  ComplexMatrix B(m(), by.size());
  for (int i = 0; i < m(); ++i) B.row(i) = by.transpose().cast<Complex>();
  return B;
}

std::string ObserverDesign::canonical_eigenvalues() const {
  std::string s = "[";
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (i) s += ';';
    s += hex_double(eigenvalues[i].real()) + ',' + hex_double(eigenvalues[i].imag());
  }
  return s + "]";
}

}  // namespace kkl
