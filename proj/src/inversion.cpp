#include "kkl/inversion.hpp"

#include <cmath>
#include <random>

namespace kkl {

Inverter::Inverter(Eigen::MatrixXd nodes, Eigen::MatrixXd values, TransformFn transform,
                   DomainSpec domain, int rows, int cols, InversionOptions options)
    : transform_(std::move(transform)),
      domain_(std::move(domain)),
      rows_(rows),
      cols_(cols),
      options_(options) {
  if (nodes.cols() != values.cols() || nodes.cols() == 0) {
    throw std::invalid_argument("Inverter: nodes and values must be non-empty and aligned");
  }
  // Seeds must lie in cl(O).
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < nodes.cols(); ++c) {
    if (domain_.distance(nodes.col(c)) <= 1e-12) keep.push_back(c);
  }
  if (keep.empty()) throw std::invalid_argument("Inverter: no seed node lies in cl(O)");
  nodes_.resize(nodes.rows(), static_cast<Eigen::Index>(keep.size()));
  values_.resize(values.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    nodes_.col(static_cast<Eigen::Index>(i)) = nodes.col(keep[i]);
    values_.col(static_cast<Eigen::Index>(i)) = values.col(keep[i]);
  }
}

Inverter Inverter::from_table(const TransformTable& table, const SaturatedSystem& sys,
                              const ObserverDesign& design, InversionOptions options) {
  check_fingerprint(table, sys, design);
  const double horizon = table.horizon, tol = table.tol;
  TransformFn T = [sys, design, horizon, tol](const State& x) {
    return eval_T(sys, design, x, horizon, tol);
  };
  return Inverter(table.grid.nodes(), table.value_matrix(), std::move(T), sys.domain, table.m,
                  table.p, options);
}

InverseQuery Inverter::invert(const ComplexMatrix& z) const {
  if (z.rows() != rows_ || z.cols() != cols_) {
    throw std::invalid_argument("invert: z has the wrong shape");
  }
  InverseQuery q;
  q.z = z;
  const Eigen::VectorXd target = flatten(z);
  q.seed_node = static_cast<std::size_t>(kernels::nearest_column(options_.exec, values_, target));
  q.seed_residual = (values_.col(static_cast<Eigen::Index>(q.seed_node)) - target).norm();

  auto residual = [&](const State& x) { return Eigen::VectorXd(flatten(transform_(x)) - target); };

  State x = nodes_.col(static_cast<Eigen::Index>(q.seed_node));
  Eigen::VectorXd r = residual(x);
  double f = r.squaredNorm();
  // The tabulated value may differ from a fresh evaluation by quadrature
  // noise; never report worse than the seed.
  State best_x = x;
  double best_f = std::min(f, q.seed_residual * q.seed_residual);
  bool seed_is_best = q.seed_residual * q.seed_residual <= f;

  const Eigen::Index n = x.size();
  Eigen::MatrixXd J(r.size(), n);
  for (int it = 0; it < options_.max_iterations; ++it) {
    const double h = options_.fd_rel_step * (1.0 + x.norm());
    for (Eigen::Index a = 0; a < n; ++a) {
      State xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      J.col(a) = (residual(xp) - residual(xm)) / (2.0 * h);
    }
    q.iterations = it + 1;

    auto line_search = [&](const Eigen::VectorXd& dir, State& xn, Eigen::VectorXd& rn,
                           double& fn) {
      double alpha = 1.0;
      for (int k = 0; k < 40; ++k, alpha *= 0.5) {
        xn = domain_.project(x + alpha * dir);
        if ((xn - x).norm() == 0.0) return false;
        rn = residual(xn);
        fn = rn.squaredNorm();
        if (fn < f) return true;
      }
      return false;
    };

    State xn;
    Eigen::VectorXd rn;
    double fn = f;
    const Eigen::VectorXd gn = -J.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(r);
    bool moved = gn.allFinite() && line_search(gn, xn, rn, fn);
    if (!moved) {
      const Eigen::VectorXd g = -J.transpose() * r;
      const double gg = g.squaredNorm();
      const Eigen::VectorXd Jg = J * g;
      if (gg > 0.0 && Jg.squaredNorm() > 0.0) {
        moved = line_search(g * (gg / Jg.squaredNorm()), xn, rn, fn);
      }
    }
    if (!moved) break;
    const double step = (xn - x).norm();
    x = xn;
    r = rn;
    f = fn;
    if (f < best_f) {
      best_f = f;
      best_x = x;
      seed_is_best = false;
    }
    if (step < options_.tol) break;
  }
  if (seed_is_best) {
    q.x_hat = nodes_.col(static_cast<Eigen::Index>(q.seed_node));
    q.residual = q.seed_residual;
  } else {
    q.x_hat = best_x;
    q.residual = std::sqrt(best_f);
  }
  return q;
}

InverseQuery invert(const TransformTable& table, const SaturatedSystem& sys,
                    const ObserverDesign& design, const ComplexMatrix& z, double tol) {
  InversionOptions opt;
  opt.tol = tol;
  return Inverter::from_table(table, sys, design, opt).invert(z);
}

ContinuityStats check_uniform_continuity(const Inverter& inverter, const RhoEnvelope& rho,
                                         double grid_spacing, std::size_t samples,
                                         double perturbation, std::uint64_t seed) {
  const DomainSpec& dom = inverter.domain();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  ContinuityStats st;
  st.samples = samples;
  st.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    State x(dom.dim());
    do {
      for (int a = 0; a < dom.dim(); ++a) {
        x[a] = dom.lower()[a] + (dom.upper()[a] - dom.lower()[a]) * unit(rng);
      }
    } while (dom.distance(x) > 0.0);
    const ComplexMatrix Tx = inverter.transform()(x);
    ComplexMatrix dz(Tx.rows(), Tx.cols());
    for (Eigen::Index i = 0; i < dz.size(); ++i) dz(i) = Complex(normal(rng), normal(rng));
    if (dz.norm() > 0.0) dz *= perturbation / dz.norm();
    const ComplexMatrix z = Tx + dz;
    const InverseQuery q = inverter.invert(z);
    const double err = (q.x_hat - x).norm();
    const double bound = rho(2.0 * (Tx - z).norm()) + grid_spacing;
    st.max_error = std::max(st.max_error, err);
    st.max_excess = std::max(st.max_excess, err - bound);
    if (err > bound) ++st.violations;
    if (dom.distance(q.x_hat) > 1e-12) st.codomain_ok = false;
  }
  st.violation_fraction = samples ? static_cast<double>(st.violations) / samples : 0.0;
  return st;
}

}  // namespace kkl
