#include "kkl/transform.hpp"

#include <algorithm>
#include <cmath>

#include "kkl/ode.hpp"
#include "kkl/util.hpp"

namespace kkl {

GridSpec GridSpec::uniform(const State& lower, const State& upper, int nodes_per_axis) {
  if (nodes_per_axis < 1) throw std::invalid_argument("grid needs at least one node per axis");
  GridSpec g;
  g.counts.assign(static_cast<std::size_t>(lower.size()), nodes_per_axis);
  g.lower = lower;
  g.upper = upper;
  return g;
}

GridSpec GridSpec::uniform(const DomainSpec& domain, int nodes_per_axis) {
  return uniform(domain.lower(), domain.upper(), nodes_per_axis);
}

std::size_t GridSpec::size() const {
  std::size_t s = 1;
  for (int c : counts) s *= static_cast<std::size_t>(c);
  return counts.empty() ? 0 : s;
}

State GridSpec::node(std::size_t index) const {
  State x(dim());
  for (int a = dim() - 1; a >= 0; --a) {
    const auto c = static_cast<std::size_t>(counts[a]);
    const std::size_t i = index % c;
    index /= c;
    x[a] = c == 1 ? 0.5 * (lower[a] + upper[a])
                  : lower[a] + (upper[a] - lower[a]) * static_cast<double>(i) / (c - 1);
  }
  return x;
}

double GridSpec::spacing() const {
  double h = 0.0;
  for (int a = 0; a < dim(); ++a) {
    if (counts[a] > 1) h = std::max(h, (upper[a] - lower[a]) / (counts[a] - 1));
  }
  return h;
}

Eigen::MatrixXd GridSpec::nodes() const {
  Eigen::MatrixXd X(dim(), static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) X.col(static_cast<Eigen::Index>(i)) = node(i);
  return X;
}

Eigen::MatrixXd TransformTable::value_matrix() const {
  Eigen::MatrixXd Y(2 * m * p, static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    Y.col(static_cast<Eigen::Index>(i)) = flatten(values[i]);
  }
  return Y;
}

ComplexMatrix eval_T(const SaturatedSystem& sys, const ObserverDesign& design, const State& x,
                     double horizon, double tol) {
  require_hurwitz(design.eigenvalues);
  if (!(horizon > 0.0)) throw std::invalid_argument("eval_T: horizon must be positive");
  const int n = sys.base.state_dim;
  const int m = design.m();
  const int p = sys.base.output_dim;
  if (x.size() != n) throw std::invalid_argument("eval_T: state dimension mismatch");

  // Backward leg: (x̆, q) with dq/ds = exp(−λ_i s) b_j(h(x̆)), from s = 0 to
  // s = −horizon, so T(x) = −q(−horizon). The weight decays as s → −∞.
  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(n + 2 * m * p);
  w0.head(n) = x;
  const ComplexVector& lambda = design.eigenvalues;
  Field field = [&](double s, const Eigen::VectorXd& w, Eigen::VectorXd& dw) {
    const State xb = w.head(n);
    dw.resize(w.size());
    dw.head(n) = sys.field(xb);
    const Output by = design.b(sys.base.output(xb));
    Eigen::Index k = n;
    for (int i = 0; i < m; ++i) {
      const Complex weight = std::exp(-lambda[i] * s);
      for (int j = 0; j < p; ++j) {
        const Complex v = weight * by[j];
        dw[k++] = v.real();
        dw[k++] = v.imag();
      }
    }
  };
  IntegratorOptions opt;
  opt.tol = tol;
  opt.record_steps = false;
  const Trajectory traj = integrate(field, w0, 0.0, -horizon, opt);
  if (traj.reason != StopReason::completed) {
    throw std::runtime_error(std::string("eval_T: backward integration failed (") +
                             to_string(traj.reason) + ")");
  }
  ComplexMatrix T(m, p);
  unflatten_into(traj.final_state.data() + n, T);
  return -T;
}

double amplitude_bound(const SaturatedSystem& sys, const ObserverDesign& design,
                       int nodes_per_axis) {
  const double du = sys.domain.margins().u;
  const State lo = sys.domain.lower().array() - du;
  const State hi = sys.domain.upper().array() + du;
  const GridSpec grid = GridSpec::uniform(lo, hi, nodes_per_axis);
  double c = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const State x = grid.node(i);
    if (sys.domain.distance(x) > du) continue;
    c = std::max(c, design.b(sys.base.output(x)).norm());
  }
  c *= std::sqrt(static_cast<double>(design.m()));
  return std::max(c, 1e-300);
}

double select_horizon(const ObserverDesign& design, double amplitude, double tol) {
  const double a = -max_real(design.eigenvalues);
  if (!(a > 0.0)) throw NotHurwitzError(design.eigenvalues[0], 0);
  const double h = std::log(amplitude / (tol * a)) / a;
  // A tail already below tol at s = 0 still needs a positive horizon.
  return std::max(h, 1.0 / a);
}

std::uint64_t table_fingerprint(const SaturatedSystem& sys, const ObserverDesign& design,
                                double horizon, double tol) {
  const std::string canon = "model=" + sys.base.label + ";domain=" + sys.domain.canonical() +
                            ";lambda=" + design.canonical_eigenvalues() + ";b=" + design.b.label +
                            ";horizon=" + hex_double(horizon) + ";tol=" + hex_double(tol);
  return fnv1a64(canon);
}

void check_fingerprint(const TransformTable& table, const SaturatedSystem& sys,
                       const ObserverDesign& design) {
  const std::uint64_t expected = table_fingerprint(sys, design, table.horizon, table.tol);
  if (expected != table.fingerprint) {
    throw FingerprintMismatch("transform table fingerprint " + hex_u64(table.fingerprint) +
                              " does not match the system/design (" + hex_u64(expected) + ")");
  }
}

TransformTable tabulate(const SaturatedSystem& sys, const ObserverDesign& design,
                        const GridSpec& grid, double horizon, double tol, kernels::Exec exec) {
  if (grid.dim() != sys.base.state_dim) {
    throw std::invalid_argument("tabulate: grid dimension differs from state dimension");
  }
  TransformTable table;
  table.grid = grid;
  table.n = sys.base.state_dim;
  table.m = design.m();
  table.p = sys.base.output_dim;
  table.horizon = horizon;
  table.tol = tol;
  table.eigenvalues = design.eigenvalues;
  table.fingerprint = table_fingerprint(sys, design, horizon, tol);
  table.values.assign(grid.size(), ComplexMatrix());
  kernels::map_indices(exec, grid.size(), [&](std::size_t i) {
    ComplexMatrix v = eval_T(sys, design, grid.node(i), horizon, tol);
    if (!v.allFinite()) throw std::runtime_error("non-finite transform value");
    table.values[i] = std::move(v);
  });
  return table;
}

ComplexMatrix edf_residual(const SaturatedSystem& sys, const ObserverDesign& design,
                           const TransformFn& transform, const State& x, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("edf_residual: dt must be positive");
  IntegratorOptions opt;
  opt.tol = 1e-13;
  // The identity only holds where χ = 1, i.e. on O + δ_d.
  const double reach = sys.domain.margins().d;
  auto flow_to = [&](double t) {
    const Trajectory flow = integrate(autonomous(sys.base.drift), x, 0.0, t, opt);
    if (flow.reason != StopReason::completed) {
      throw std::domain_error("edf_residual: flow did not complete");
    }
    for (const auto& s : flow.states) {
      if (sys.domain.distance(s) > reach) throw std::domain_error("edf_residual: flow exits O+δ_d");
    }
    return flow.final_state;
  };
  const ComplexMatrix Tp = transform(flow_to(dt));
  const ComplexMatrix Tm = transform(flow_to(-dt));
  const ComplexMatrix T0 = transform(x);
  return (Tp - Tm) / (2.0 * dt) - (design.apply_A(T0) + design.injection(sys.base.output(x)));
}

}  // namespace kkl
