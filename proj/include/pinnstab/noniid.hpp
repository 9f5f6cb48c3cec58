#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pinnstab/analysis.hpp"
#include "pinnstab/network.hpp"
#include "pinnstab/points.hpp"
#include "pinnstab/train.hpp"

namespace pinnstab {

/// AR(1) stream z_n = rho z_{n-1} + eps_n with mixing coefficient alpha(n) = rho^n.
struct MixingModel {
  double rho = 0.5;

  /// Throws ArgumentError unless 0 <= rho < 1.
  void validate() const;
  double alpha(std::size_t n) const;
};

/// Two streams that share their noise except at swap_index, where the
/// second stream redraws eps and re-propagates the recursion.
struct StreamPair {
  std::vector<double> first;
  std::vector<double> second;
  std::size_t swap_index = 0;
  std::uint64_t seed = 0;
};

/// Throws ArgumentError when j >= N. With swap == false both streams are equal.
StreamPair generate_streams(const MixingModel& model, std::size_t N, std::uint64_t seed, std::size_t j,
                            bool swap = true);

/// B(n) = sum_{i=1..n} eta_i^2 alpha(i), eta_i = lr_at(schedule, i - 1).
double stability_bound(const TrainConfig& schedule, const MixingModel& model, std::size_t n);

/// Uniform probe points on `range`.
Points probe_grid(Interval range, int count);

/// gap[n] = max over probes of |f_{theta_n} - f_{theta'_n}| and bound[n] = B(n)
/// for n = 0..N, where theta_n follows SGD on (f(z) - sin z)^2 along each stream.
struct GapCurve {
  std::vector<double> gap;
  std::vector<double> bound;
};

/// Throws TrainingDiverged on a non-finite parameter update.
GapCurve stability_gap(const NetworkConfig& config, const ParamVector& params0, const StreamPair& streams,
                       const TrainConfig& schedule, const MixingModel& model, const Points& probe);

/// Least-squares c in gap ~ c B over n in [from, N].
double fit_gap_scale(const GapCurve& curve, std::size_t from);

/// Fraction of n in [from, N] with gap(n) <= factor * c * B(n).
double bound_coverage(const GapCurve& curve, double c, std::size_t from, double factor = 1.5);

}  // namespace pinnstab
