#include "pinnstab/noniid.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "pinnstab/errors.hpp"

namespace pinnstab {

void MixingModel::validate() const {
  if (!(rho >= 0.0 && rho < 1.0)) throw ArgumentError("mixing coefficient rho must lie in [0, 1)");
}

double MixingModel::alpha(std::size_t n) const { return std::pow(rho, static_cast<double>(n)); }

StreamPair generate_streams(const MixingModel& model, std::size_t N, std::uint64_t seed, std::size_t j,
                            bool swap) {
  model.validate();
  if (j >= N) throw ArgumentError("swap index " + std::to_string(j) + " out of range for N = " + std::to_string(N));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> eps(N);
  for (double& e : eps) e = normal(rng);
  const double redraw = normal(rng);

  StreamPair pair;
  pair.swap_index = j;
  pair.seed = seed;
  pair.first.resize(N);
  pair.second.resize(N);
  double a = 0.0, b = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    a = model.rho * a + eps[n];
    b = model.rho * b + ((swap && n == j) ? redraw : eps[n]);
    pair.first[n] = a;
    pair.second[n] = b;
  }
  return pair;
}

double stability_bound(const TrainConfig& schedule, const MixingModel& model, std::size_t n) {
  double b = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double eta = lr_at(schedule, i - 1);
    b += eta * eta * model.alpha(i);
  }
  return b;
}

Points probe_grid(Interval range, int count) {
  const Grid g = Grid::line(range, count);
  return g.points;
}

namespace {

void sgd_step(const NetworkConfig& config, std::vector<double>& theta, double z, double eta,
              std::vector<double>& grad, std::size_t step) {
  Points pt(1);
  pt.coords.push_back(z);
  const BatchForward fwd(config, theta, pt, 0);
  Eigen::RowVectorXd adj(1);
  adj[0] = 2.0 * (fwd.component(0, 0) - std::sin(z));
  std::fill(grad.begin(), grad.end(), 0.0);
  fwd.backward(adj, grad);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    theta[i] -= eta * grad[i];
    if (!std::isfinite(theta[i])) throw TrainingDiverged(step, "non-finite parameter in SGD update");
  }
}

double max_gap(const NetworkConfig& config, const std::vector<double>& a, const std::vector<double>& b,
               const Points& probe) {
  if (a == b) return 0.0;
  const BatchForward fa(config, a, probe, 0);
  const BatchForward fb(config, b, probe, 0);
  double g = 0.0;
  for (std::size_t p = 0; p < probe.size(); ++p) g = std::max(g, std::abs(fa.component(0, p) - fb.component(0, p)));
  return g;
}

}  // namespace

GapCurve stability_gap(const NetworkConfig& config, const ParamVector& params0, const StreamPair& streams,
                       const TrainConfig& schedule, const MixingModel& model, const Points& probe) {
  if (config.input_dim() != 1) throw ConfigError("stability_gap needs a scalar-input network");
  check_params(config, params0.size());
  const std::size_t N = streams.first.size();
  std::vector<double> a = params0.values(), b = params0.values(), grad(a.size());

  GapCurve curve;
  curve.gap.reserve(N + 1);
  curve.bound.reserve(N + 1);
  double bound = 0.0;
  curve.gap.push_back(0.0);
  curve.bound.push_back(0.0);
  for (std::size_t n = 0; n < N; ++n) {
    const double eta = lr_at(schedule, n);
    sgd_step(config, a, streams.first[n], eta, grad, n);
    sgd_step(config, b, streams.second[n], eta, grad, n);
    bound += eta * eta * model.alpha(n + 1);
    curve.gap.push_back(max_gap(config, a, b, probe));
    curve.bound.push_back(bound);
  }
  return curve;
}

double fit_gap_scale(const GapCurve& curve, std::size_t from) {
  if (from >= curve.gap.size()) throw ArgumentError("fit_gap_scale: start index beyond the curve");
  const std::span<const double> b(curve.bound.data() + from, curve.bound.size() - from);
  const std::span<const double> g(curve.gap.data() + from, curve.gap.size() - from);
  return origin_fit_scale(b, g);
}

double bound_coverage(const GapCurve& curve, double c, std::size_t from, double factor) {
  if (from >= curve.gap.size()) throw ArgumentError("bound_coverage: start index beyond the curve");
  std::size_t ok = 0;
  for (std::size_t n = from; n < curve.gap.size(); ++n) {
    if (curve.gap[n] <= factor * c * curve.bound[n]) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(curve.gap.size() - from);
}

}  // namespace pinnstab
