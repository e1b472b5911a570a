#include "kkl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kkl {

namespace {
std::string hurwitz_message(Complex v, std::size_t index) {
  std::ostringstream os;
  os << "matrix is not Hurwitz: eigenvalue " << index << " = (" << v.real() << ", " << v.imag()
     << ") has non-negative real part";
  return os.str();
}
}  // namespace

NotHurwitzError::NotHurwitzError(Complex eigenvalue, std::size_t index)
    : std::invalid_argument(hurwitz_message(eigenvalue, index)),
      eigenvalue_(eigenvalue),
      index_(index) {}

void require_hurwitz(const ComplexVector& eigenvalues) {
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (!(eigenvalues[i].real() < 0.0)) {
      throw NotHurwitzError(eigenvalues[i], static_cast<std::size_t>(i));
    }
  }
}

LyapunovSolution solve_lyapunov(const ComplexVector& eigenvalues) {
  require_hurwitz(eigenvalues);
  const Eigen::Index m = eigenvalues.size();
  LyapunovSolution out;
  // (conj λ_i + λ_j) P_ij = −δ_ij, so P is diagonal with −1/(2 Re λ_i).
  out.P = ComplexMatrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) out.P(i, i) = -1.0 / (2.0 * eigenvalues[i].real());

  const ComplexMatrix A = eigenvalues.asDiagonal();
  const ComplexMatrix R = A.adjoint() * out.P + out.P * A + ComplexMatrix::Identity(m, m);
  out.residual = R.cwiseAbs().maxCoeff();

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(out.P, Eigen::EigenvaluesOnly);
  out.lambda_min = eig.eigenvalues().minCoeff();
  out.lambda_max = eig.eigenvalues().maxCoeff();
  return out;
}

GainMatrices gain_matrices(const ComplexVector& eigenvalues, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("gain k must be positive");
  const Eigen::Index m = eigenvalues.size();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (eigenvalues[i] == Complex(0.0)) throw std::invalid_argument("eigenvalues must be nonzero");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (eigenvalues[i] == eigenvalues[j]) {
        throw std::invalid_argument("eigenvalues must be pairwise distinct (S is singular)");
      }
    }
  }
  GainMatrices g;
  g.S.resize(m, m);
  g.K.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Complex inv = 1.0 / eigenvalues[i];
    Complex p = inv;
    for (Eigen::Index j = 0; j < m; ++j) {
      g.S(i, j) = p;
      p *= inv;
    }
    g.K[i] = std::pow(k, static_cast<double>(i + 1));
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(g.S, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv[m - 1] == 0.0) throw std::invalid_argument("S is singular");
  g.condition = sv[0] / sv[m - 1];
  g.S_inv = svd.solve(ComplexMatrix::Identity(m, m));
  g.S_inv_norm = 1.0 / sv[m - 1];
  return g;
}

double spectral_norm(const ComplexMatrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(M);
  return svd.singularValues()[0];
}

double max_real(const ComplexVector& eigenvalues) {
  double v = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) v = std::max(v, eigenvalues[i].real());
  return v;
}

ComplexVector to_vector(const std::vector<Complex>& values) {
  ComplexVector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

Eigen::VectorXd flatten(const ComplexMatrix& z) {
  Eigen::VectorXd v(2 * z.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      v[k++] = z(i, j).real();
      v[k++] = z(i, j).imag();
    }
  }
  return v;
}

void unflatten_into(const double* data, ComplexMatrix& z) {
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      z(i, j) = Complex(data[k], data[k + 1]);
      k += 2;
    }
  }
}

ComplexMatrix unflatten(const Eigen::VectorXd& v, int rows, int cols) {
  if (v.size() != 2 * static_cast<Eigen::Index>(rows) * cols) {
    throw std::invalid_argument("unflatten: size mismatch");
  }
  ComplexMatrix z(rows, cols);
  unflatten_into(v.data(), z);
  return z;
}

}  // namespace kkl
