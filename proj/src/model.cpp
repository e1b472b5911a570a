#include "kkl/model.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <random>
#include <stdexcept>

#include "kkl/util.hpp"

namespace kkl {

Margins default_margins(double diameter) {
  return Margins{0.05 * diameter, 0.1 * diameter, 0.2 * diameter};
}

void DomainSpec::set_margins(std::optional<Margins> margins) {
  margins_ = margins ? *margins : default_margins(diameter());
  if (!(margins_.upsilon > 0.0 && margins_.upsilon < margins_.d && margins_.d < margins_.u)) {
    throw std::invalid_argument("domain margins must satisfy 0 < delta_upsilon < delta_d < delta_u");
  }
}

DomainSpec DomainSpec::box(State lower, State upper, std::optional<Margins> margins) {
  if (lower.size() == 0 || lower.size() != upper.size()) {
    throw std::invalid_argument("box bounds must be non-empty and of equal length");
  }
  if ((upper.array() <= lower.array()).any()) {
    throw std::invalid_argument("box upper bound must exceed lower bound on every axis");
  }
  DomainSpec d;
  d.is_box_ = true;
  d.lower_ = std::move(lower);
  d.upper_ = std::move(upper);
  d.center_ = 0.5 * (d.lower_ + d.upper_);
  d.radius_ = 0.5 * (d.upper_ - d.lower_).norm();
  d.set_margins(margins);
  return d;
}

DomainSpec DomainSpec::ball(State center, double radius, std::optional<Margins> margins) {
  if (center.size() == 0 || !(radius > 0.0)) {
    throw std::invalid_argument("ball needs a non-empty center and a positive radius");
  }
  DomainSpec d;
  d.is_box_ = false;
  d.center_ = std::move(center);
  d.radius_ = radius;
  d.lower_ = d.center_.array() - radius;
  d.upper_ = d.center_.array() + radius;
  d.set_margins(margins);
  return d;
}

double DomainSpec::distance(const State& x) const {
  if (is_box_) {
    return (x - x.cwiseMax(lower_).cwiseMin(upper_)).norm();
  }
  return std::max(0.0, (x - center_).norm() - radius_);
}

State DomainSpec::project(const State& x) const {
  if (is_box_) return x.cwiseMax(lower_).cwiseMin(upper_);
  const State offset = x - center_;
  const double r = offset.norm();
  if (r <= radius_) return x;
  return center_ + offset * (radius_ / r);
}

double DomainSpec::diameter() const {
  return is_box_ ? (upper_ - lower_).norm() : 2.0 * radius_;
}

std::string DomainSpec::canonical() const {
  std::string s = is_box_ ? "box(" : "ball(";
  auto vec = [&s](const State& v) {
    s += '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += hex_double(v[i]);
    }
    s += ']';
  };
  if (is_box_) {
    vec(lower_);
    s += ';';
    vec(upper_);
  } else {
    vec(center_);
    s += ';' + hex_double(radius_);
  }
  s += ";margins=" + hex_double(margins_.upsilon) + ',' + hex_double(margins_.d) + ',' +
       hex_double(margins_.u) + ')';
  return s;
}

double cutoff(const State& x, const DomainSpec& domain) {
  const auto& m = domain.margins();
  const double d = domain.distance(x);
  if (d <= m.d) return 1.0;
  if (d >= m.u) return 0.0;
  const double t = (m.u - d) / (m.u - m.d);
  return t * t * (3.0 - 2.0 * t);
}

State SaturatedSystem::field(const State& x) const {
  const double chi = cutoff(x, domain);
  if (chi == 0.0) return State::Zero(x.size());
  return chi * base.drift(x);
}

State saturated_field(const SaturatedSystem& sys, const State& x) { return sys.field(x); }

namespace {

double param(const BenchmarkParams& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const BenchmarkParams& params, std::initializer_list<const char*> allowed,
                    const std::string& name) {
  for (const auto& [key, value] : params) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw std::invalid_argument("benchmark '" + name + "' has no parameter '" + key + "'");
  }
}

Output scalar(double v) { return Output::Constant(1, v); }

// Range of the first coordinate over the bounding box.
std::pair<double, double> first_axis(const DomainSpec& domain) {
  return {domain.lower()[0], domain.upper()[0]};
}

SystemModel harmonic() {
  SystemModel m;
  m.state_dim = 2;
  m.output_dim = 1;
  m.label = "harmonic";
  m.drift = [](const State& x) { return State{{x[1], -x[0]}}; };
  m.output = [](const State& x) { return scalar(x[0]); };
  m.lie = [](int i, const State& x) {
    switch (i % 4) {
      case 0: return scalar(x[0]);
      case 1: return scalar(x[1]);
      case 2: return scalar(-x[0]);
      default: return scalar(-x[1]);
    }
  };
  m.lie_max_order = INT_MAX;
  m.lie_lipschitz = [](int order, const DomainSpec&) -> std::optional<double> {
    // L_f^m h is ± a coordinate already present in H once m >= 2.
    if (order >= 2) return 1.0;
    return std::nullopt;
  };
  return m;
}

SystemModel constant(int n) {
  SystemModel m;
  m.state_dim = n;
  m.output_dim = n;
  m.label = "constant(n=" + std::to_string(n) + ")";
  m.drift = [n](const State&) { return State::Zero(n); };
  m.output = [](const State& x) { return Output(x); };
  m.lie = [n](int i, const State& x) { return i == 0 ? Output(x) : Output::Zero(n); };
  m.lie_max_order = INT_MAX;
  m.lie_lipschitz = [](int order, const DomainSpec&) -> std::optional<double> {
    if (order >= 1) return 0.0;
    return std::nullopt;
  };
  return m;
}

SystemModel integrator_chain(int order) {
  SystemModel m;
  m.state_dim = order;
  m.output_dim = 1;
  m.label = "integrator_chain(order=" + std::to_string(order) + ")";
  m.drift = [order](const State& x) {
    State dx = State::Zero(order);
    for (int i = 0; i + 1 < order; ++i) dx[i] = x[i + 1];
    return dx;
  };
  m.output = [](const State& x) { return scalar(x[0]); };
  m.lie = [order](int i, const State& x) { return scalar(i < order ? x[i] : 0.0); };
  m.lie_max_order = INT_MAX;
  m.lie_lipschitz = [order](int mo, const DomainSpec&) -> std::optional<double> {
    if (mo >= order) return 0.0;
    return std::nullopt;
  };
  return m;
}

SystemModel van_der_pol(double mu) {
  SystemModel m;
  m.state_dim = 2;
  m.output_dim = 1;
  m.label = "van_der_pol(mu=" + short_double(mu) + ")";
  m.drift = [mu](const State& x) {
    return State{{x[1], mu * (1.0 - x[0] * x[0]) * x[1] - x[0]}};
  };
  m.output = [](const State& x) { return scalar(x[0]); };
  m.lie = [mu](int i, const State& x) {
    const double x1 = x[0], x2 = x[1];
    const double acc = mu * (1.0 - x1 * x1) * x2 - x1;
    switch (i) {
      case 0: return scalar(x1);
      case 1: return scalar(x2);
      case 2: return scalar(acc);
      default: return scalar(-2.0 * mu * x1 * x2 * x2 + mu * (1.0 - x1 * x1) * acc - x2);
    }
  };
  m.lie_max_order = 3;
  return m;
}

SystemModel duffing() {
  SystemModel m;
  m.state_dim = 2;
  m.output_dim = 1;
  m.label = "duffing";
  m.drift = [](const State& x) { return State{{x[1], x[0] - x[0] * x[0] * x[0]}}; };
  m.output = [](const State& x) { return scalar(x[0]); };
  m.lie = [](int i, const State& x) {
    const double x1 = x[0], x2 = x[1];
    const double acc = x1 - x1 * x1 * x1;
    switch (i) {
      case 0: return scalar(x1);
      case 1: return scalar(x2);
      case 2: return scalar(acc);
      case 3: return scalar((1.0 - 3.0 * x1 * x1) * x2);
      default: return scalar(-6.0 * x1 * x2 * x2 + (1.0 - 3.0 * x1 * x1) * acc);
    }
  };
  m.lie_max_order = 4;
  m.lie_lipschitz = [](int order, const DomainSpec& domain) -> std::optional<double> {
    if (order != 2) return std::nullopt;
    // |d/dx1 (x1 - x1^3)| = |1 - 3 x1^2|, maximized at an endpoint or at 0.
    auto [lo, hi] = first_axis(domain);
    double bound = std::max(std::abs(1.0 - 3.0 * lo * lo), std::abs(1.0 - 3.0 * hi * hi));
    if (lo <= 0.0 && hi >= 0.0) bound = std::max(bound, 1.0);
    return bound;
  };
  return m;
}

SystemModel escape1d() {
  SystemModel m;
  m.state_dim = 1;
  m.output_dim = 1;
  m.label = "escape1d";
  m.drift = [](const State& x) { return State::Constant(1, 1.0 + x[0] * x[0]); };
  m.output = [](const State& x) { return scalar(x[0]); };
  m.lie = [](int i, const State& x) {
    const double v = x[0], s = 1.0 + v * v;
    switch (i) {
      case 0: return scalar(v);
      case 1: return scalar(s);
      case 2: return scalar(2.0 * v * s);
      default: return scalar((2.0 + 6.0 * v * v) * s);
    }
  };
  m.lie_max_order = 3;
  return m;
}

}  // namespace

std::vector<std::string> benchmark_names() {
  return {"harmonic", "constant", "integrator_chain", "van_der_pol", "duffing", "escape1d"};
}

SystemModel benchmark(const std::string& name, const BenchmarkParams& params) {
  if (name == "harmonic") {
    reject_unknown(params, {}, name);
    return harmonic();
  }
  if (name == "constant") {
    reject_unknown(params, {"n"}, name);
    const int n = static_cast<int>(param(params, "n", 1.0));
    if (n < 1) throw std::invalid_argument("constant: n must be >= 1");
    return constant(n);
  }
  if (name == "integrator_chain") {
    reject_unknown(params, {"order"}, name);
    const int order = static_cast<int>(param(params, "order", 3.0));
    if (order < 1) throw std::invalid_argument("integrator_chain: order must be >= 1");
    return integrator_chain(order);
  }
  if (name == "van_der_pol") {
    reject_unknown(params, {"mu"}, name);
    return van_der_pol(param(params, "mu", 1.0));
  }
  if (name == "duffing") {
    reject_unknown(params, {}, name);
    return duffing();
  }
  if (name == "escape1d") {
    reject_unknown(params, {}, name);
    return escape1d();
  }
  throw std::invalid_argument("unknown benchmark '" + name + "'");
}

Rescaling polynomial_rescaling(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs = {1.0};
  std::string label = "poly(";
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (i) label += ',';
    label += short_double(coeffs[i]);
  }
  label += ')';
  return Rescaling{[coeffs](const Output& y) {
                     const double r = y.norm();
                     double v = 0.0, p = 1.0;
                     for (double c : coeffs) {
                       v += c * p;
                       p *= r;
                     }
                     return v;
                   },
                   label};
}

SystemModel rescale(const SystemModel& model, const Rescaling& gamma) {
  SystemModel m = model;
  m.label = model.label + "/gamma=" + gamma.label;
  m.drift = [f = model.drift, h = model.output, g = gamma.gamma](const State& x) {
    return State(f(x) / g(h(x)));
  };
  m.lie = nullptr;
  m.lie_max_order = -1;
  m.lie_lipschitz = nullptr;
  return m;
}

LipschitzCheck empirical_lipschitz(const SystemModel& model, const DomainSpec& domain, int pairs,
                                   std::uint64_t seed) {
  const double du = domain.margins().u;
  const State lo = domain.lower().array() - du;
  const State hi = domain.upper().array() + du;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&] {
    State x(lo.size());
    do {
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
    } while (domain.distance(x) > du);
    return x;
  };
  LipschitzCheck out;
  for (int k = 0; k < pairs; ++k) {
    const State a = draw(), b = draw();
    const double dx = (a - b).norm();
    if (dx == 0.0) continue;
    const double qf = (model.drift(a) - model.drift(b)).norm() / dx;
    const double qh = (model.output(a) - model.output(b)).norm() / dx;
    if (!std::isfinite(qf) || !std::isfinite(qh)) {
      out.finite = false;
      continue;
    }
    out.drift = std::max(out.drift, qf);
    out.output = std::max(out.output, qh);
  }
  return out;
}

}  // namespace kkl
