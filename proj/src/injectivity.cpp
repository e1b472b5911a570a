#include "kkl/injectivity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "kkl/ode.hpp"

namespace kkl {

double RhoEnvelope::operator()(double s) const {
  if (!valid) return std::numeric_limits<double>::infinity();
  if (s <= 0.0 || knots.size() < 2) return 0.0;
  const std::size_t last = knots.size() - 1;
  if (s >= knots[last]) {
    double slope = (values[last] - values[last - 1]) / (knots[last] - knots[last - 1]);
    if (!(slope > 0.0)) slope = values[last] / knots[last];
    return values[last] + slope * (s - knots[last]);
  }
  const auto it = std::upper_bound(knots.begin(), knots.end(), s);
  const std::size_t j = static_cast<std::size_t>(it - knots.begin());
  const double w = (s - knots[j - 1]) / (knots[j] - knots[j - 1]);
  return values[j - 1] + w * (values[j] - values[j - 1]);
}

std::vector<Complex> sample_eigenvalues(int n, double decay_bound, std::uint64_t seed,
                                        bool conjugate_closed) {
  if (!(decay_bound < 0.0)) throw std::invalid_argument("decay bound must be negative");
  if (n < 1) throw std::invalid_argument("state dimension must be positive");
  const double ell = decay_bound;
  const double scale = -ell;
  const double min_gap = 1e-3 * scale;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> re_dist(4.0 * ell, ell);
  std::uniform_real_distribution<double> im_dist(0.0, 3.0 * scale);

  std::vector<Complex> out;
  auto far_enough = [&](Complex c) {
    for (const auto& v : out) {
      if (std::abs(v - c) < min_gap) return false;
    }
    return true;
  };
  const int count = n + 1;
  if (!conjugate_closed) {
    while (static_cast<int>(out.size()) < count) {
      const Complex c(re_dist(rng), im_dist(rng));
      if (far_enough(c)) out.push_back(c);
    }
    return out;
  }
  for (int pair = 0; pair < count / 2;) {
    const Complex c(re_dist(rng), im_dist(rng));
    if (2.0 * c.imag() < min_gap) continue;
    if (!far_enough(c) || !far_enough(std::conj(c))) continue;
    out.push_back(c);
    out.push_back(std::conj(c));
    ++pair;
  }
  if (count % 2 == 1) {
    for (;;) {
      const Complex c(re_dist(rng), 0.0);
      if (far_enough(c)) {
        out.push_back(c);
        break;
      }
    }
  }
  return out;
}

RhoEnvelope fit_envelope(const std::vector<double>& image_dist,
                         const std::vector<double>& input_dist, int segments, double inflation) {
  RhoEnvelope env;
  double tmax = 0.0;
  for (std::size_t k = 0; k < image_dist.size(); ++k) {
    if (input_dist[k] > 0.0 && !(image_dist[k] > 0.0)) return env;  // collision
    tmax = std::max(tmax, image_dist[k]);
  }
  env.valid = true;
  if (!(tmax > 0.0)) {
    env.knots = {0.0, 1.0};
    env.values = {0.0, 0.0};
    return env;
  }
  env.knots.resize(segments + 1);
  env.values.assign(segments + 1, 0.0);
  for (int j = 0; j <= segments; ++j) env.knots[j] = tmax * j / segments;
  env.knots[segments] = tmax;

  std::vector<std::vector<std::size_t>> bins(segments + 1);
  for (std::size_t k = 0; k < image_dist.size(); ++k) {
    if (!(image_dist[k] > 0.0)) continue;
    auto j = static_cast<std::size_t>(std::ceil(image_dist[k] / tmax * segments));
    j = std::clamp<std::size_t>(j, 1, segments);
    while (j > 1 && image_dist[k] <= env.knots[j - 1]) --j;
    while (j < static_cast<std::size_t>(segments) && image_dist[k] > env.knots[j]) ++j;
    bins[j].push_back(k);
  }
  // Greedy: the smallest ρ(t_j) such that linear interpolation from
  // ρ(t_{j−1}) dominates every inflated pair whose |ΔT| is in (t_{j−1}, t_j].
  for (int j = 1; j <= segments; ++j) {
    const double t0 = env.knots[j - 1], t1 = env.knots[j];
    const double v0 = env.values[j - 1];
    double v = v0;
    for (std::size_t k : bins[j]) {
      const double target = inflation * input_dist[k];
      if (target <= v0) continue;
      v = std::max(v, v0 + (target - v0) * (t1 - t0) / (image_dist[k] - t0));
    }
    env.values[j] = v;
  }
  return env;
}

InjectivityReport injectivity_modulus(const Eigen::MatrixXd& points, const Eigen::MatrixXd& images,
                                      std::uint64_t seed, kernels::Exec exec,
                                      std::size_t max_pairs) {
  const std::size_t count = static_cast<std::size_t>(points.cols());
  if (count < 2) throw std::invalid_argument("injectivity_modulus needs at least two nodes");
  InjectivityReport rep;
  rep.seed = seed;
  const std::size_t total = count * (count - 1) / 2;

  std::vector<kernels::IndexPair> pairs;
  kernels::PairDistances d;
  if (total > max_pairs) {
    rep.subsampled = true;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int32_t> pick(0, static_cast<std::int32_t>(count) - 1);
    pairs.reserve(max_pairs);
    while (pairs.size() < max_pairs) {
      std::int32_t i = pick(rng), j = pick(rng);
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      pairs.emplace_back(i, j);
    }
    d = kernels::listed_pairs(exec, points, images, pairs);
  } else {
    d = kernels::all_pairs(exec, points, images);
  }
  rep.pair_count = d.size();

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (!(d.input[k] > 0.0)) continue;
    const double ratio = d.image[k] / d.input[k];
    if (!(d.image[k] > 0.0)) ++rep.collisions;
    if (ratio < best) {
      best = ratio;
      best_k = k;
    }
  }
  rep.modulus = std::isfinite(best) ? best : 0.0;
  if (rep.subsampled) {
    rep.worst_first = pairs[best_k].first;
    rep.worst_second = pairs[best_k].second;
  } else {
    // Invert the linear pair index.
    std::size_t k = best_k;
    Eigen::Index i = 0;
    while (k >= count - 1 - static_cast<std::size_t>(i)) {
      k -= count - 1 - static_cast<std::size_t>(i);
      ++i;
    }
    rep.worst_first = i;
    rep.worst_second = i + 1 + static_cast<Eigen::Index>(k);
  }
  rep.rho = fit_envelope(d.image, d.input);
  return rep;
}

InjectivityReport injectivity_modulus(const TransformTable& table, std::uint64_t seed,
                                      kernels::Exec exec, std::size_t max_pairs) {
  return injectivity_modulus(table.grid.nodes(), table.value_matrix(), seed, exec, max_pairs);
}

std::vector<SeparationResult> distinguishability_check(
    const SaturatedSystem& sys, const std::vector<std::pair<State, State>>& pairs,
    double horizon, double threshold, int samples) {
  const int n = sys.base.state_dim;
  std::vector<SeparationResult> out;
  out.reserve(pairs.size());
  Field field = [&](double, const Eigen::VectorXd& w, Eigen::VectorXd& dw) {
    dw.resize(2 * n);
    dw.head(n) = sys.field(w.head(n));
    dw.tail(n) = sys.field(w.tail(n));
  };
  IntegratorOptions opt;
  opt.tol = 1e-10;
  for (int s = 0; s < samples; ++s) {
    opt.sample_times.push_back(-horizon * s / std::max(1, samples - 1));
  }
  for (const auto& [a, b] : pairs) {
    Eigen::VectorXd w(2 * n);
    w << a, b;
    const Trajectory traj = integrate(field, w, 0.0, -horizon, opt);
    double sep = 0.0;
    auto visit = [&](const Eigen::VectorXd& v) {
      sep = std::max(sep, (sys.base.output(v.head(n)) - sys.base.output(v.tail(n))).norm());
    };
    for (const auto& v : traj.states) visit(v);
    for (const auto& v : traj.samples) visit(v);
    out.push_back({sep, sep < threshold || sep == 0.0});
  }
  return out;
}

}  // namespace kkl
