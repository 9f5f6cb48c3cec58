#include "pinnstab/refine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "pinnstab/errors.hpp"

namespace pinnstab {

namespace {

constexpr double kPi = std::numbers::pi;

// Cosine ramp across [s - h, s + h], rising from 0 to 1.
WeightJet ramp(double x, double s, double h) {
  const double r = (x - (s - h)) / (2.0 * h);
  if (r <= 0.0) return {0.0, 0.0, 0.0};
  if (r >= 1.0) return {1.0, 0.0, 0.0};
  const double k = 1.0 / (2.0 * h);
  return {0.5 * (1.0 - std::cos(kPi * r)), 0.5 * kPi * std::sin(kPi * r) * k,
          0.5 * kPi * kPi * std::cos(kPi * r) * k * k};
}

}  // namespace

Decomposition Decomposition::uniform(Interval domain, int M, double overlap_fraction) {
  if (M < 1) throw ArgumentError("decompose: M must be at least 1, got " + std::to_string(M));
  if (!(overlap_fraction > 0.0 && overlap_fraction < 0.5)) {
    throw ArgumentError("decompose: overlap fraction must lie in (0, 0.5)");
  }
  if (!(domain.hi > domain.lo)) throw ArgumentError("decompose: empty domain");
  Decomposition d;
  d.domain_ = domain;
  d.overlap_ = overlap_fraction;
  const double w = domain.width() / M;
  for (int i = 0; i < M; ++i) {
    Subdomain s;
    s.id = i;
    s.core.lo = i == 0 ? domain.lo : domain.lo + w * i;
    s.core.hi = i + 1 == M ? domain.hi : domain.lo + w * (i + 1);
    d.parts_.push_back(s);
  }
  d.next_id_ = M;
  d.rebuild();
  return d;
}

Decomposition Decomposition::split(std::size_t index) const {
  if (index >= parts_.size()) throw ArgumentError("split: subdomain index out of range");
  Decomposition d = *this;
  const Subdomain parent = parts_[index];
  const double mid = 0.5 * (parent.core.lo + parent.core.hi);
  Subdomain left = parent, right = parent;
  left.core.hi = mid;
  right.core.lo = mid;
  right.id = d.next_id_++;
  d.parts_[index] = left;
  d.parts_.insert(d.parts_.begin() + static_cast<std::ptrdiff_t>(index) + 1, right);
  d.rebuild();
  return d;
}

double Decomposition::half_width(std::size_t i) const {
  return overlap_ * std::min(parts_[i].core.width(), parts_[i + 1].core.width());
}

double Decomposition::sup_width() const {
  double w = 0.0;
  for (const Subdomain& s : parts_) w = std::max(w, s.bounds.width());
  return w;
}

void Decomposition::rebuild() {
  const std::size_t m = parts_.size();
  for (std::size_t i = 0; i < m; ++i) {
    Subdomain& s = parts_[i];
    s.bounds.lo = i == 0 ? domain_.lo : s.core.lo - half_width(i - 1);
    s.bounds.hi = i + 1 == m ? domain_.hi : s.core.hi + half_width(i);
  }
}

Decomposition decompose(Interval domain, int M, double overlap_fraction) {
  return Decomposition::uniform(domain, M, overlap_fraction);
}

std::vector<WeightJet> partition_jets(const Decomposition& dec, double x) {
  const Interval dom = dec.domain();
  if (!(x >= dom.lo - 1e-12 && x <= dom.hi + 1e-12)) {
    throw ArgumentError("partition weights requested outside the domain");
  }
  const std::size_t m = dec.size();
  std::vector<WeightJet> sigma(m > 0 ? m - 1 : 0);
  for (std::size_t k = 0; k + 1 < m; ++k) sigma[k] = ramp(x, dec[k].core.hi, dec.half_width(k));

  std::vector<WeightJet> chi(m);
  for (std::size_t i = 0; i < m; ++i) {
    const WeightJet l = i == 0 ? WeightJet{1.0, 0.0, 0.0} : sigma[i - 1];
    const WeightJet r = i + 1 == m ? WeightJet{1.0, 0.0, 0.0} : WeightJet{1.0 - sigma[i].value, -sigma[i].d1, -sigma[i].d2};
    chi[i] = {l.value * r.value, l.d1 * r.value + l.value * r.d1,
              l.d2 * r.value + 2.0 * l.d1 * r.d1 + l.value * r.d2};
  }
  return chi;
}

std::vector<double> partition_weights(const Decomposition& dec, double x) {
  const auto jets = partition_jets(dec, x);
  std::vector<double> w(jets.size());
  for (std::size_t i = 0; i < jets.size(); ++i) w[i] = jets[i].value;
  return w;
}

AssembledField::AssembledField(std::vector<std::shared_ptr<const Field>> local, Decomposition dec,
                               int space_axis)
    : local_(std::move(local)), dec_(std::move(dec)), axis_(space_axis) {
  if (local_.size() != dec_.size()) {
    throw ArgumentError("assemble: " + std::to_string(local_.size()) + " fields for " +
                        std::to_string(dec_.size()) + " subdomains");
  }
  if (local_.empty()) throw ArgumentError("assemble: no local fields");
}

JetBlock AssembledField::jets(const Points& points, int order) const {
  std::map<const Field*, JetBlock> cache;
  for (const auto& f : local_) {
    if (!cache.count(f.get())) cache.emplace(f.get(), f->jets(points, order));
  }
  const int d = input_dim();
  JetBlock out(d, order, points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto chi = partition_jets(dec_, points(p, axis_));
    std::size_t a = 0;
    for (std::size_t i = 1; i < chi.size(); ++i) {
      if (chi[i].value > chi[a].value) a = i;
    }
    const Field* fa = local_[a].get();
    const ad::Jet2 ua = cache.at(fa).at(p);
    ad::Jet2 u = ua;
    for (std::size_t i = 0; i < chi.size(); ++i) {
      const Field* fi = local_[i].get();
      if (i == a || fi == fa) continue;
      ad::Jet2 diff = cache.at(fi).at(p);
      for (int c = 0; c < ad::jet_components(d, 2); ++c) diff.component(c) -= ua.component(c);
      const WeightJet& w = chi[i];
      u.value += w.value * diff.value;
      for (int k = 0; k < d; ++k) {
        u.grad[k] += w.value * diff.grad[k] + (k == axis_ ? w.d1 * diff.value : 0.0);
      }
      for (int r = 0; r < d; ++r) {
        for (int s = r; s < d; ++s) {
          double h = w.value * diff.hess(r, s);
          if (r == axis_) h += w.d1 * diff.grad[s];
          if (s == axis_) h += w.d1 * diff.grad[r];
          if (r == axis_ && s == axis_) h += w.d2 * diff.value;
          u.hess(r, s) += h;
        }
      }
    }
    out.set(p, u);
  }
  return out;
}

double assemble(const std::vector<std::shared_ptr<const Field>>& local, const Decomposition& dec,
                std::span<const double> x, int space_axis) {
  return AssembledField(local, dec, space_axis).value(x);
}

Grid subdomain_grid(const PdeProblem& problem, Interval span, const LossGridSpec& spec) {
  const int axis = problem.space_axis();
  const Interval& full = problem.bounds[static_cast<std::size_t>(axis)];
  const double rel = span.width() / full.width();
  const int n_space = 1 + std::max(8, static_cast<int>(std::ceil((spec.interior - 1) * rel - 1e-9)));
  std::vector<Interval> b = problem.bounds;
  b[static_cast<std::size_t>(axis)] = span;
  std::vector<int> counts(b.size(), spec.interior);
  counts[static_cast<std::size_t>(axis)] = n_space;
  return Grid::tensor(b, counts);
}

double local_indicator(const Field& field, const PdeProblem& problem, const Grid& grid) {
  const JetBlock j = field.jets(grid.points, 2);
  double s = 0.0;
  for (std::size_t p = 0; p < j.size; ++p) {
    const double r = residual(problem, j.at(p), grid.points.at(p));
    s += grid.weights[p] * r * r;
  }
  return std::sqrt(s);
}

double local_indicator(const ParamVector& params, const NetworkConfig& config, const PdeProblem& problem,
                       const Subdomain&, const Grid& grid) {
  return local_indicator(NetworkField(config, params), problem, grid);
}

LossGrids multidomain_grids(const PdeProblem& problem, const Decomposition& dec, const LossGridSpec& spec) {
  LossGrids g = LossGrids::standard(problem, spec);
  g.interior = Grid{};
  for (const Subdomain& s : dec.subdomains()) g.interior.append(subdomain_grid(problem, s.bounds, spec));
  return g;
}

StageSolver training_solver(const PdeProblem& problem, NetworkConfig config, ParamVector params0,
                            TrainConfig first, TrainConfig later) {
  auto state = std::make_shared<ParamVector>(std::move(params0));
  return [problem, config, first, later, state](const Decomposition&, const LossGrids& grids, int stage) {
    const TrainConfig& tc = stage == 0 ? first : later;
    Trajectory t = train(*state, config, problem, grids, tc);
    *state = t.final;
    return std::shared_ptr<const Field>(std::make_shared<NetworkField>(config, std::move(t.final)));
  };
}

std::vector<RefineStage> refine_loop(const PdeProblem& problem, int initial_M, int max_M, double overlap,
                                     const StageSolver& solver, const Grid& error_grid,
                                     const LossGridSpec& spec) {
  if (initial_M > max_M) throw ArgumentError("refine_loop: initial_M exceeds max_M");
  const int axis = problem.space_axis();
  const auto exact = exact_field(problem);
  Decomposition dec = decompose(problem.bounds[static_cast<std::size_t>(axis)], initial_M, overlap);
  std::vector<RefineStage> stages;
  for (int stage = 0;; ++stage) {
    const LossGrids grids = multidomain_grids(problem, dec, spec);
    const std::shared_ptr<const Field> field = solver(dec, grids, stage);

    RefineStage rec;
    rec.M = static_cast<int>(dec.size());
    rec.sup_width = dec.sup_width();
    for (const Subdomain& s : dec.subdomains()) {
      rec.etas.push_back(local_indicator(*field, problem, subdomain_grid(problem, s.bounds, spec)));
    }
    rec.sup_eta = *std::max_element(rec.etas.begin(), rec.etas.end());
    auto assembled = std::make_shared<AssembledField>(
        std::vector<std::shared_ptr<const Field>>(dec.size(), field), dec, axis);
    rec.h1_error = sobolev_norm(LinearCombinationField(1.0, assembled, -1.0, exact), error_grid, 1);
    rec.loss = field_loss(*field, problem, grids).total;
    stages.push_back(rec);
    if (static_cast<int>(dec.size()) >= max_M) break;

    std::size_t pick = 0;
    for (std::size_t i = 1; i < dec.size(); ++i) {
      const double e = rec.etas[i], best = rec.etas[pick];
      if (e > best || (e == best && dec[i].id < dec[pick].id)) pick = i;
    }
    dec = dec.split(pick);
  }
  return stages;
}

}  // namespace pinnstab
