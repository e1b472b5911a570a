#ifndef KKL_LINALG_HPP_
#define KKL_LINALG_HPP_

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace kkl {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Raised when a matrix that must be Hurwitz has an eigenvalue with
/// non-negative real part.
class NotHurwitzError : public std::invalid_argument {
 public:
  NotHurwitzError(Complex eigenvalue, std::size_t index);
  Complex eigenvalue() const { return eigenvalue_; }
  std::size_t index() const { return index_; }

 private:
  Complex eigenvalue_;
  std::size_t index_;
};

void require_hurwitz(const ComplexVector& eigenvalues);

struct LyapunovSolution {
  ComplexMatrix P;
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  double residual = 0.0;  // ‖conj(A)ᵀP + PA + I‖_∞
};

/// Solves conj(A)ᵀ P + P A = −I for A = diag(eigenvalues).
LyapunovSolution solve_lyapunov(const ComplexVector& eigenvalues);

struct GainMatrices {
  ComplexMatrix S;      // S_ij = λ_i^{-j}
  Eigen::VectorXd K;    // diagonal (k, k², ..., k^m)
  ComplexMatrix S_inv;
  double condition = 0.0;   // 2-norm condition number of S
  double S_inv_norm = 0.0;  // spectral norm of S⁻¹
};

/// Throws std::invalid_argument for zero or repeated eigenvalues, or k <= 0.
GainMatrices gain_matrices(const ComplexVector& eigenvalues, double k);

double spectral_norm(const ComplexMatrix& M);

/// Largest real part.
double max_real(const ComplexVector& eigenvalues);

ComplexVector to_vector(const std::vector<Complex>& values);

/// Interleaved (re, im) row-major flattening of an m×p matrix.
Eigen::VectorXd flatten(const ComplexMatrix& z);
ComplexMatrix unflatten(const Eigen::VectorXd& v, int rows, int cols);
void unflatten_into(const double* data, ComplexMatrix& z);

}  // namespace kkl

#endif  // KKL_LINALG_HPP_
