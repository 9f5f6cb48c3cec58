#include "pinnstab/loss.hpp"

#include <cmath>
#include <string>

#include "pinnstab/errors.hpp"

namespace pinnstab {

namespace {

void require_grids(const PdeProblem& problem, const LossGrids& grids) {
  if (grids.interior.empty()) throw ConfigError("loss: interior grid is missing");
  if (grids.boundary.empty()) throw ConfigError("loss: boundary grid is missing");
  if (problem.time_dependent() && grids.initial.empty()) {
    throw ConfigError("loss: initial grid is missing for time-dependent problem " + problem.name());
  }
  if (grids.interior.dim() != problem.dim()) throw ConfigError("loss: grid dimension does not match the problem");
}

int penalty_components(int dim, int k) { return ad::jet_components(dim, k); }

}  // namespace

LossGrids LossGrids::standard(const PdeProblem& problem, const LossGridSpec& spec) {
  LossGrids g;
  const std::vector<Interval>& b = problem.bounds;
  const int counts[2] = {spec.interior, spec.interior};
  g.interior = Grid::tensor(b, std::span<const int>(counts, b.size()));
  if (problem.time_dependent()) {
    g.boundary = Grid::face(b, 1, b[1].lo, spec.boundary);
    g.boundary.append(Grid::face(b, 1, b[1].hi, spec.boundary));
    g.initial = Grid::face(b, 0, b[0].lo, spec.initial);
  } else {
    for (int axis = 0; axis < problem.dim(); ++axis) {
      g.boundary.append(Grid::face(b, axis, b[static_cast<std::size_t>(axis)].lo, spec.boundary));
      g.boundary.append(Grid::face(b, axis, b[static_cast<std::size_t>(axis)].hi, spec.boundary));
    }
  }
  return g;
}

LossReport field_loss(const Field& field, const PdeProblem& problem, const LossGrids& grids,
                      const SobolevPenalty& penalty) {
  require_grids(problem, grids);
  if (penalty.beta < 0.0) throw ArgumentError("Sobolev penalty weight beta must be nonnegative");
  LossReport r;

  const JetBlock in = field.jets(grids.interior.points, 2);
  for (std::size_t p = 0; p < in.size; ++p) {
    const double res = residual(problem, in.at(p), grids.interior.points.at(p));
    r.interior += grids.interior.weights[p] * res * res;
  }
  if (penalty.beta > 0.0) {
    r.sobolev_penalty = penalty.beta * sobolev_sq(in, grids.interior.weights, penalty.k, all_axes(problem.dim()));
  }

  const JetBlock bd = field.jets(grids.boundary.points, 0);
  for (std::size_t p = 0; p < bd.size; ++p) {
    const double m = bd.value(p) - boundary_target(problem, grids.boundary.points.at(p), SampleKind::value);
    r.boundary += grids.boundary.weights[p] * m * m;
  }

  if (!grids.initial.empty()) {
    const bool wave = problem.kind == PdeKind::wave;
    const JetBlock ic = field.jets(grids.initial.points, wave ? 1 : 0);
    for (std::size_t p = 0; p < ic.size; ++p) {
      const auto x = grids.initial.points.at(p);
      const double m = ic.value(p) - problem.initial(x[1]);
      r.initial += grids.initial.weights[p] * m * m;
      if (wave) {
        const double v = ic.grad(p, 0) - problem.velocity(x[1]);
        r.initial += grids.initial.weights[p] * v * v;
      }
    }
  }
  r.total = r.interior + r.boundary + r.initial + r.sobolev_penalty;
  return r;
}

LossReport residual_loss(const ParamVector& params, const NetworkConfig& config,
                         const PdeProblem& problem, const LossGrids& grids) {
  return field_loss(NetworkField(config, params), problem, grids);
}

LossReport sobolev_loss(const ParamVector& params, const NetworkConfig& config,
                        const PdeProblem& problem, const LossGrids& grids, double beta, int k) {
  if (beta < 0.0) throw ArgumentError("Sobolev penalty weight beta must be nonnegative");
  if (k < 1 || k > 2) throw ArgumentError("Sobolev order k must be 1 or 2, got " + std::to_string(k));
  return field_loss(NetworkField(config, params), problem, grids, SobolevPenalty{beta, k});
}

LossObjective::LossObjective(NetworkConfig config, const PdeProblem& problem, LossGrids grids,
                             SobolevPenalty penalty)
    : config_(std::move(config)), problem_(problem), grids_(std::move(grids)), penalty_(penalty) {
  require_grids(problem_, grids_);
  if (penalty_.beta < 0.0) throw ArgumentError("Sobolev penalty weight beta must be nonnegative");
  if (penalty_.k < 1 || penalty_.k > 2) throw ArgumentError("Sobolev order k must be 1 or 2");
  if (config_.input_dim() != problem_.dim()) throw ConfigError("network input dimension does not match the problem");

  const Points& ip = grids_.interior.points;
  forcing_.resize(ip.size());
  for (std::size_t p = 0; p < ip.size(); ++p) forcing_[p] = problem_.forcing(ip.at(p));

  const Points& bp = grids_.boundary.points;
  boundary_target_.resize(bp.size());
  for (std::size_t p = 0; p < bp.size(); ++p) boundary_target_[p] = boundary_target(problem_, bp.at(p), SampleKind::value);

  const Points& cp = grids_.initial.points;
  initial_target_.resize(cp.size());
  for (std::size_t p = 0; p < cp.size(); ++p) initial_target_[p] = problem_.initial(cp(p, 1));
  if (problem_.kind == PdeKind::wave) {
    velocity_target_.resize(cp.size());
    for (std::size_t p = 0; p < cp.size(); ++p) velocity_target_[p] = problem_.velocity(cp(p, 1));
  }
}

double LossObjective::evaluate(std::span<const double> params, std::span<double> grad,
                               LossReport* report) const {
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  LossReport r;

  {
    const Grid& g = grids_.interior;
    const BatchForward fwd(config_, params, g.points, 2);
    const std::size_t n = fwd.size();
    const int comps = fwd.components();
    const int pen_comps = penalty_.beta > 0.0 ? penalty_components(fwd.dim(), penalty_.k) : 0;
    Eigen::RowVectorXd adj;
    if (want_grad) adj = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(comps * n));
    double pen = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const ad::Jet2 j = fwd.jet(p);
      const double w = g.weights[p];
      const double res = problem_.residual(j, forcing_[p]);
      r.interior += w * res * res;
      double sq = 0.0;
      for (int c = 0; c < pen_comps; ++c) sq += j.component(c) * j.component(c);
      pen += w * sq;
      if (want_grad) {
        const ad::Jet2 dr = problem_.residual_gradient(j);
        for (int c = 0; c < comps; ++c) {
          adj[static_cast<Eigen::Index>(c * n + p)] = 2.0 * w * res * dr.component(c);
        }
        for (int c = 0; c < pen_comps; ++c) {
          adj[static_cast<Eigen::Index>(c * n + p)] += 2.0 * penalty_.beta * w * j.component(c);
        }
      }
    }
    if (pen_comps > 0) r.sobolev_penalty = penalty_.beta * pen;
    if (want_grad) fwd.backward(adj, grad);
  }

  {
    const Grid& g = grids_.boundary;
    const BatchForward fwd(config_, params, g.points, 0);
    const std::size_t n = fwd.size();
    Eigen::RowVectorXd adj;
    if (want_grad) adj.resize(static_cast<Eigen::Index>(n));
    for (std::size_t p = 0; p < n; ++p) {
      const double m = fwd.component(0, p) - boundary_target_[p];
      r.boundary += g.weights[p] * m * m;
      if (want_grad) adj[static_cast<Eigen::Index>(p)] = 2.0 * g.weights[p] * m;
    }
    if (want_grad) fwd.backward(adj, grad);
  }

  if (!grids_.initial.empty()) {
    const Grid& g = grids_.initial;
    const bool wave = !velocity_target_.empty();
    const BatchForward fwd(config_, params, g.points, wave ? 1 : 0);
    const std::size_t n = fwd.size();
    Eigen::RowVectorXd adj;
    if (want_grad) adj = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(fwd.components() * n));
    for (std::size_t p = 0; p < n; ++p) {
      const double w = g.weights[p];
      const double m = fwd.component(0, p) - initial_target_[p];
      r.initial += w * m * m;
      if (want_grad) adj[static_cast<Eigen::Index>(p)] = 2.0 * w * m;
      if (wave) {
        const double v = fwd.component(1, p) - velocity_target_[p];
        r.initial += w * v * v;
        if (want_grad) adj[static_cast<Eigen::Index>(n + p)] = 2.0 * w * v;
      }
    }
    if (want_grad) fwd.backward(adj, grad);
  }

  r.total = r.interior + r.boundary + r.initial + r.sobolev_penalty;
  if (report != nullptr) *report = r;
  return r.total;
}

namespace {

JetBlock time_slice(const Field& field, const PdeProblem& problem, const Grid& spatial, double t,
                    int order) {
  if (problem.energy.decay == EnergyDecay::not_applicable || !problem.time_dependent()) {
    throw UnsupportedOperation("energy stability is not applicable to " + problem.name());
  }
  if (spatial.dim() != 1) throw ArgumentError("energy needs a one-dimensional spatial grid");
  Points pts(2);
  for (std::size_t i = 0; i < spatial.size(); ++i) {
    const double p[2] = {t, spatial.points(i, 0)};
    pts.push(p);
  }
  return field.jets(pts, order);
}

}  // namespace

double energy(const Field& field, const PdeProblem& problem, const Grid& spatial, double t) {
  const bool wave = problem.kind == PdeKind::wave;
  const JetBlock j = time_slice(field, problem, spatial, t, wave ? 1 : 0);
  double e = 0.0;
  for (std::size_t i = 0; i < j.size; ++i) {
    double density;
    if (wave) {
      const double ut = j.grad(i, 0), ux = j.grad(i, 1);
      density = 0.5 * (ut * ut + problem.c * problem.c * ux * ux);
    } else {
      density = EnergyModel::psi(j.value(i));
    }
    e += spatial.weights[i] * density;
  }
  return e;
}

EnergyRate energy_rate(const Field& field, const PdeProblem& problem, const Grid& spatial, double t) {
  const JetBlock j = time_slice(field, problem, spatial, t, 2);
  EnergyRate r;
  for (std::size_t i = 0; i < j.size; ++i) {
    const double w = spatial.weights[i];
    const double ut = j.grad(i, 0), ux = j.grad(i, 1);
    if (problem.kind == PdeKind::wave) {
      const double c2 = problem.c * problem.c;
      r.empirical += w * (ut * j.hess(i, 0, 0) + c2 * ux * j.hess(i, 0, 1));
      const double x[2] = {t, spatial.points(i, 0)};
      r.bound += w * ut * residual(problem, j.at(i), x);
    } else {
      r.empirical += w * EnergyModel::psi_prime(j.value(i)) * ut;
      r.bound -= w * problem.nu * ux * ux;
    }
  }
  return r;
}

}  // namespace pinnstab
