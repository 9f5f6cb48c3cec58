#include "pinnstab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "pinnstab/errors.hpp"

namespace pinnstab {

std::string to_string(PerturbMode mode) {
  switch (mode) {
    case PerturbMode::joint: return "joint";
    case PerturbMode::input: return "input";
    case PerturbMode::param: return "param";
  }
  return "unknown";
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  if (n < 2 || !(lo > 0.0) || !(hi > lo)) throw ArgumentError("log_spaced needs 0 < lo < hi and n >= 2");
  std::vector<double> v(static_cast<std::size_t>(n));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

// -----------------------------------------------------------------------------
// Perturbation stability
// -----------------------------------------------------------------------------

namespace {

struct Direction {
  std::vector<double> dx;
  std::vector<double> dtheta;
};

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<Direction> draw_directions(PerturbMode mode, int count, int d, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(mode) + 1);
  std::normal_distribution<double> normal;
  std::vector<Direction> dirs;
  for (int k = 0; k < count; ++k) {
    Direction dir;
    dir.dx.assign(static_cast<std::size_t>(d), 0.0);
    dir.dtheta.assign(p, 0.0);
    if (mode != PerturbMode::param) {
      for (double& v : dir.dx) v = normal(rng);
    }
    if (mode != PerturbMode::input) {
      for (double& v : dir.dtheta) v = normal(rng);
    }
    // Unit joint vector, rescaled so that ||dx|| + ||dtheta|| = 1.
    const double total = norm2(dir.dx) + norm2(dir.dtheta);
    for (double& v : dir.dx) v /= total;
    for (double& v : dir.dtheta) v /= total;
    dirs.push_back(std::move(dir));
  }
  return dirs;
}

}  // namespace

PerturbationResult perturbation_experiment(const NetworkConfig& config, const ParamVector& params,
                                           const Points& probe, const Points& train_grid,
                                           const PerturbationOptions& options) {
  if (options.eps.empty()) throw ArgumentError("perturbation: empty eps grid");
  for (std::size_t i = 0; i < options.eps.size(); ++i) {
    if (!(options.eps[i] > 0.0) || (i > 0 && !(options.eps[i] > options.eps[i - 1]))) {
      throw ArgumentError("perturbation: eps grid must be strictly positive and ascending");
    }
  }
  if (options.directions < 1) throw ArgumentError("perturbation: need at least one direction");
  check_params(config, params.size());

  const int d = config.input_dim();
  const auto dirs = draw_directions(options.mode, options.directions, d, params.size(), options.seed);
  const BatchForward base(config, params.span(), probe, 0);

  PerturbationResult res;
  res.eps.push_back(0.0);
  res.eps.insert(res.eps.end(), options.eps.begin(), options.eps.end());
  std::vector<double> theta(params.size());
  Points shifted(d);
  for (double eps : res.eps) {
    double total = 0.0;
    for (const Direction& dir : dirs) {
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = params[i] + eps * dir.dtheta[i];
      shifted.coords = probe.coords;
      for (std::size_t p = 0; p < probe.size(); ++p) {
        for (int k = 0; k < d; ++k) shifted.coords[p * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)] += eps * dir.dx[static_cast<std::size_t>(k)];
      }
      const BatchForward moved(config, theta, shifted, 0);
      double s = 0.0;
      for (std::size_t p = 0; p < probe.size(); ++p) s += std::abs(moved.component(0, p) - base.component(0, p));
      total += s / static_cast<double>(probe.size());
    }
    res.deviation.push_back(total / static_cast<double>(dirs.size()));
  }

  std::vector<XY> pts;
  for (std::size_t i = 1; i < res.eps.size(); ++i) pts.push_back({res.eps[i], res.deviation[i]});
  res.fit = linear_fit(pts);
  res.sup = empirical_gradient_sup(params, config, train_grid);
  res.c_empirical = res.sup.input + res.sup.param;
  res.weight_bound = weight_norm_bound(params, config);
  return res;
}

// -----------------------------------------------------------------------------
// Residual consistency
// -----------------------------------------------------------------------------

namespace {

std::shared_ptr<const Field> error_field(std::shared_ptr<const Field> f, const PdeProblem& problem) {
  return std::make_shared<LinearCombinationField>(1.0, std::move(f), -1.0, exact_field(problem));
}

double l2_error(const Field& f, const PdeProblem& problem, const Grid& grid) {
  return l2_norm(LinearCombinationField(1.0, std::shared_ptr<const Field>(&f, [](const Field*) {}), -1.0,
                                        exact_field(problem)),
                 grid);
}

}  // namespace

ConsistencyResult consistency_experiment(const PdeProblem& problem, const NetworkConfig& config,
                                         const Trajectory& trajectory, const LossGrids& grids,
                                         const Grid& error_grid, const Field* anchor) {
  ConsistencyResult res;
  if (anchor != nullptr) {
    res.points.push_back({0, field_loss(*anchor, problem, grids).total, l2_error(*anchor, problem, error_grid)});
  }
  for (const TrajectoryPoint& cp : trajectory.checkpoints) {
    const NetworkField f(config, cp.params);
    const ConsistencyPoint pt{cp.step, cp.report.total, l2_error(f, problem, error_grid)};
    if (std::isfinite(pt.loss) && std::isfinite(pt.l2_error)) res.points.push_back(pt);
  }
  if (res.points.size() < 2) return res;
  std::vector<double> loss, err;
  for (const auto& p : res.points) {
    loss.push_back(p.loss);
    err.push_back(p.l2_error);
  }
  res.pearson = pearson(loss, err);
  res.spearman = spearman(loss, err);
  const std::size_t half = loss.size() / 2;
  if (loss.size() - half >= 2) {
    res.pearson_fine = pearson(std::span<const double>(loss).subspan(half), std::span<const double>(err).subspan(half));
  }
  return res;
}

// -----------------------------------------------------------------------------
// Capacity
// -----------------------------------------------------------------------------

namespace {

std::vector<int> spatial_axes(const PdeProblem& problem) {
  if (problem.time_dependent()) return {1};
  return all_axes(problem.dim());
}

}  // namespace

CapacityResult capacity_sweep(const PdeProblem& problem, const std::vector<int>& widths,
                              const WidthTrainer& trainer, const Grid& error_grid, std::ostream* log) {
  if (widths.size() < 3) throw ArgumentError("capacity sweep needs at least three widths");
  for (std::size_t i = 1; i < widths.size(); ++i) {
    if (widths[i] <= widths[i - 1]) throw ArgumentError("capacity widths must be ascending");
  }
  CapacityResult res;
  const auto spatial = spatial_axes(problem);
  for (int w : widths) {
    const NetworkConfig cfg(problem.dim(), {w, w});
    Trajectory t;
    try {
      t = trainer(cfg);
    } catch (const TrainingDiverged& e) {
      if (log != nullptr) *log << "warning: capacity width " << w << " skipped: " << e.what() << "\n";
      res.skipped.push_back(w);
      continue;
    }
    const auto err = error_field(std::make_shared<NetworkField>(cfg, t.final), problem);
    CapacityPoint pt;
    pt.width = w;
    pt.params = cfg.param_count();
    pt.h2_error = sobolev_norm(*err, error_grid, 2);
    pt.h2_error_spatial = sobolev_norm(*err, error_grid, 2, spatial);
    pt.l2_error = l2_norm(*err, error_grid);
    pt.final_loss = t.checkpoints.back().report.total;
    res.points.push_back(pt);
  }
  if (res.points.size() < 3) throw DegenerateFit("capacity sweep: fewer than three widths trained successfully");
  std::vector<double> p, e, es;
  for (const auto& pt : res.points) {
    p.push_back(static_cast<double>(pt.params));
    e.push_back(pt.h2_error);
    es.push_back(pt.h2_error_spatial);
  }
  res.rate = convergence_rate(p, e);
  res.rate_spatial = convergence_rate(p, es);
  return res;
}

// -----------------------------------------------------------------------------
// Energy
// -----------------------------------------------------------------------------

std::vector<double> uniform_times(const Interval& range, int count) {
  return Grid::line(range, count).points.coords;
}

EnergyResult energy_experiment(const PdeProblem& problem, const Field& trained, const std::vector<double>& times,
                               const Grid& spatial) {
  EnergyResult res;
  if (problem.energy.decay == EnergyDecay::not_applicable) return res;
  res.applicable = true;
  const auto exact = exact_field(problem);
  for (double t : times) {
    EnergyPoint pt;
    pt.t = t;
    pt.energy = energy(trained, problem, spatial, t);
    pt.energy_exact = energy(*exact, problem, spatial, t);
    pt.abs_error = std::abs(pt.energy - pt.energy_exact);
    const EnergyRate r = energy_rate(trained, problem, spatial, t);
    pt.rate = r.empirical;
    pt.bound = r.bound;
    res.points.push_back(pt);
  }
  const double e0 = res.points.front().energy;
  for (const auto& pt : res.points) {
    res.mean_error += pt.abs_error;
    res.max_error = std::max(res.max_error, pt.abs_error);
    if (e0 != 0.0) res.drift = std::max(res.drift, std::abs(pt.energy - e0) / std::abs(e0));
    res.rate_gap += std::abs(pt.rate - pt.bound);
    res.mean_bound += std::abs(pt.bound);
  }
  const double n = static_cast<double>(res.points.size());
  res.mean_error /= n;
  res.rate_gap /= n;
  res.mean_bound /= n;
  return res;
}

// -----------------------------------------------------------------------------
// Configuration
// -----------------------------------------------------------------------------

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"perturbation", "consistency", "capacity", "energy",
                                                 "regularization", "refinement", "noniid"};
  return names;
}

void RunConfig::validate() const {
  train.validate();
  for (const auto& e : experiments) {
    if (std::find(experiment_names().begin(), experiment_names().end(), e) == experiment_names().end()) {
      throw ConfigError("unknown experiment '" + e + "'");
    }
  }
  if (widths.empty()) throw ConfigError("network widths must not be empty");
  for (int w : widths) {
    if (w < 1) throw ConfigError("network widths must be >= 1");
  }
  if (grids.interior < 2 || grids.boundary < 2 || grids.initial < 2) throw ConfigError("grid node counts must be >= 2");
  if (probe < 2) throw ConfigError("probe grid needs at least 2 nodes per axis");
  if (!(eps_min > 0.0) || !(eps_max > eps_min) || eps_count < 2) throw ConfigError("invalid eps range");
  if (directions < 1) throw ConfigError("directions must be >= 1");
  if (capacity_widths.size() < 3) throw ConfigError("capacity sweep needs at least three widths");
  for (std::size_t i = 1; i < capacity_widths.size(); ++i) {
    if (capacity_widths[i] <= capacity_widths[i - 1]) throw ConfigError("capacity widths must be ascending");
  }
  if (energy_times < 2) throw ConfigError("energy_times must be >= 2");
  if (energy_widths.empty()) throw ConfigError("energy widths must not be empty");
  for (int w : energy_widths) {
    if (w < 1) throw ConfigError("energy widths must be >= 1");
  }
  if (betas.empty() || betas.front() != 0.0) throw ConfigError("beta sweep must start at 0");
  for (std::size_t i = 1; i < betas.size(); ++i) {
    if (!(betas[i] > betas[i - 1])) throw ConfigError("betas must be ascending");
  }
  if (sobolev_k < 1 || sobolev_k > 2) throw ConfigError("sobolev k must be 1 or 2");
  if (refine_initial < 1 || refine_initial > refine_max) throw ConfigError("refinement needs 1 <= initial_M <= max_M");
  if (!(refine_overlap > 0.0 && refine_overlap < 0.5)) throw ConfigError("refinement overlap must lie in (0, 0.5)");
  if (refine_steps < 1) throw ConfigError("refine steps must be >= 1");
  if (rhos.empty()) throw ConfigError("noniid needs at least one rho");
  for (double r : rhos) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("noniid rho must lie in [0, 1)");
  }
  if (noniid_swap >= noniid_steps) throw ConfigError("noniid swap index must be below the step count");
  if (noniid_width < 1 || !(noniid_eta0 > 0.0) || !(noniid_tau > 0.0)) throw ConfigError("invalid noniid settings");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

namespace {

bool selected(const RunConfig& c, const std::string& e) {
  return c.experiments.empty() || std::find(c.experiments.begin(), c.experiments.end(), e) != c.experiments.end();
}

bool has_pde(const RunConfig& c, PdeKind k) { return std::find(c.pdes.begin(), c.pdes.end(), k) != c.pdes.end(); }

}  // namespace

std::vector<std::pair<std::string, std::string>> planned_outputs(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& e : experiment_names()) {
    if (!selected(config, e)) continue;
    if (e == "noniid") {
      out.emplace_back(e, "sgd");
      continue;
    }
    for (PdeKind k : {PdeKind::burgers, PdeKind::poisson, PdeKind::wave}) {
      if (!has_pde(config, k)) continue;
      if (e == "refinement" && k != PdeKind::burgers) continue;
      out.emplace_back(e, to_string(k));
    }
  }
  return out;
}

std::filesystem::path output_path(const RunConfig& config, const std::string& experiment, const std::string& pde) {
  return config.out / experiment / pde / (std::to_string(config.seed) + ".csv");
}

const std::vector<std::string>& csv_schema(const std::string& experiment) {
  static const std::map<std::string, std::vector<std::string>> schemas = {
      {"perturbation",
       {"experiment", "pde", "seed", "mode", "eps", "deviation", "slope", "intercept", "r2", "c_empirical",
        "c_input", "c_param", "c_weight_bound"}},
      {"consistency", {"experiment", "pde", "seed", "step", "loss", "l2_error", "pearson", "pearson_fine", "spearman"}},
      {"capacity",
       {"experiment", "pde", "seed", "width", "params", "h2_error", "h2_error_spatial", "l2_error", "final_loss",
        "rate", "rate_spatial"}},
      {"energy",
       {"experiment", "pde", "seed", "status", "t", "energy", "energy_exact", "abs_error", "dEdt", "bound",
        "mean_error", "max_error", "drift", "final_loss"}},
      {"regularization",
       {"experiment", "pde", "seed", "beta", "k", "h2_norm", "h2_error", "l2_error", "final_loss",
        "matches_unregularized"}},
      {"refinement", {"experiment", "pde", "seed", "stage", "M", "sup_eta", "sup_width", "h1_error", "loss"}},
      {"noniid",
       {"experiment", "pde", "seed", "schedule", "rho", "eta0", "tau", "n", "gap", "bound", "c_fit", "coverage"}},
  };
  const auto it = schemas.find(experiment);
  if (it == schemas.end()) throw ConfigError("no schema for experiment '" + experiment + "'");
  return it->second;
}

// -----------------------------------------------------------------------------
// Dispatch
// -----------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

class Runner {
 public:
  Runner(const RunConfig& config, std::ostream& log) : cfg_(config), log_(log) {
    for (PdeKind k : {PdeKind::burgers, PdeKind::poisson, PdeKind::wave}) {
      problems_.emplace(k, standard_problem(k));
    }
  }

  ExperimentSummary run(const std::string& experiment, const std::string& pde) {
    ExperimentSummary s;
    s.experiment = experiment;
    s.pde = pde;
    s.file = output_path(cfg_, experiment, pde);
    std::vector<Record> records;
    try {
      if (experiment == "noniid") {
        records = noniid(s);
      } else {
        const PdeKind k = parse_pde(pde);
        if (experiment == "perturbation") records = perturbation(k, s);
        else if (experiment == "consistency") records = consistency(k, s);
        else if (experiment == "capacity") records = capacity(k, s);
        else if (experiment == "energy") records = energy_run(k, s);
        else if (experiment == "regularization") records = regularization(k, s);
        else if (experiment == "refinement") records = refinement(k, s);
      }
    } catch (const TrainingDiverged& e) {
      s.passed = false;
      s.failures.push_back(e.what());
      s.metric = "diverged";
    } catch (const DegenerateFit& e) {
      s.passed = false;
      s.failures.push_back(e.what());
      s.metric = "degenerate fit";
    }
    emit_csv(s.file, csv_schema(experiment), records);
    return s;
  }

 private:
  struct Lazy {
    std::once_flag once;
    Trajectory value;
    std::exception_ptr error;
  };

  void say(const std::string& msg) {
    std::lock_guard<std::mutex> lock(log_mutex_);
    log_ << msg << std::endl;
  }

  const PdeProblem& problem(PdeKind k) const { return problems_.at(k); }
  NetworkConfig base_config(PdeKind k) const { return NetworkConfig(problem(k).dim(), cfg_.widths); }
  LossGrids grids(PdeKind k) const { return LossGrids::standard(problem(k), cfg_.grids); }

  Grid probe_grid2(PdeKind k) const {
    const std::vector<int> counts(problem(k).bounds.size(), cfg_.probe);
    return Grid::tensor(problem(k).bounds, counts);
  }

  Grid spatial_line(PdeKind k) const { return Grid::line(problem(k).bounds[1], cfg_.probe); }

  Trajectory train_net(PdeKind k, const NetworkConfig& net, const SobolevPenalty& penalty) {
    say("training " + to_string(k) + " " + net.describe() + " beta=" + fmt(penalty.beta));
    TrainConfig tc = cfg_.train;
    tc.seed = cfg_.seed;
    return train(init(net, cfg_.seed), net, problem(k), grids(k), tc, penalty);
  }

  const Trajectory& base(PdeKind k) { return trained(k, cfg_.widths); }

  // Unregularized training per (problem, widths), shared across experiments.
  const Trajectory& trained(PdeKind k, const std::vector<int>& widths) {
    Lazy* slot = nullptr;
    {
      std::lock_guard<std::mutex> lock(cache_mutex_);
      auto& p = lazy_[{k, widths}];
      if (!p) p = std::make_unique<Lazy>();
      slot = p.get();
    }
    Lazy& l = *slot;
    std::call_once(l.once, [&] {
      try {
        l.value = train_net(k, NetworkConfig(problem(k).dim(), widths), SobolevPenalty{});
      } catch (...) {
        l.error = std::current_exception();
      }
    });
    if (l.error) std::rethrow_exception(l.error);
    return l.value;
  }

  static Record head(const std::string& experiment, const std::string& pde, std::uint64_t seed) {
    Record r;
    r.add("experiment", experiment).add("pde", pde).add("seed", seed);
    return r;
  }

  void fail(ExperimentSummary& s, const std::string& why) {
    s.passed = false;
    s.failures.push_back(why);
  }

  std::vector<Record> perturbation(PdeKind k, ExperimentSummary& s) {
    const Trajectory& t = base(k);
    const NetworkConfig net = base_config(k);
    const Grid probe = probe_grid2(k);
    const LossGrids g = grids(k);
    std::vector<Record> out;
    for (PerturbMode mode : {PerturbMode::joint, PerturbMode::input, PerturbMode::param}) {
      PerturbationOptions opt;
      opt.eps = log_spaced(cfg_.eps_min, cfg_.eps_max, cfg_.eps_count);
      opt.directions = cfg_.directions;
      opt.mode = mode;
      opt.seed = cfg_.seed;
      const PerturbationResult r = perturbation_experiment(net, t.final, probe.points, g.interior.points, opt);
      for (std::size_t i = 0; i < r.eps.size(); ++i) {
        Record rec = head("perturbation", s.pde, cfg_.seed);
        rec.add("mode", to_string(mode))
            .add("eps", r.eps[i])
            .add("deviation", r.deviation[i])
            .add("slope", r.fit.slope)
            .add("intercept", r.fit.intercept)
            .add("r2", r.fit.r2)
            .add("c_empirical", r.c_empirical)
            .add("c_input", r.sup.input)
            .add("c_param", r.sup.param)
            .add("c_weight_bound", r.weight_bound.c_total);
        out.push_back(std::move(rec));
      }
      if (mode == PerturbMode::joint) {
        s.metric = "r2=" + fmt(r.fit.r2) + " slope=" + fmt(r.fit.slope) + " C=" + fmt(r.c_empirical);
        if (r.fit.r2 < cfg_.thresholds.perturbation_r2) fail(s, "r2 " + fmt(r.fit.r2) + " below " + fmt(cfg_.thresholds.perturbation_r2));
        if (r.fit.slope > r.c_empirical) fail(s, "slope " + fmt(r.fit.slope) + " exceeds C " + fmt(r.c_empirical));
      }
    }
    return out;
  }

  std::vector<Record> consistency(PdeKind k, ExperimentSummary& s) {
    const Trajectory& t = base(k);
    const ConsistencyResult r = consistency_experiment(problem(k), base_config(k), t, grids(k), probe_grid2(k));
    std::vector<Record> out;
    for (const auto& p : r.points) {
      Record rec = head("consistency", s.pde, cfg_.seed);
      rec.add("step", static_cast<std::uint64_t>(p.step))
          .add("loss", p.loss)
          .add("l2_error", p.l2_error)
          .add("pearson", r.pearson)
          .add("pearson_fine", r.pearson_fine)
          .add("spearman", r.spearman);
      out.push_back(std::move(rec));
    }
    s.metric = "spearman=" + fmt(r.spearman) + " pearson=" + fmt(r.pearson) + " pearson_fine=" + fmt(r.pearson_fine);
    if (r.spearman < cfg_.thresholds.consistency_spearman) {
      fail(s, "spearman " + fmt(r.spearman) + " below " + fmt(cfg_.thresholds.consistency_spearman));
    }
    return out;
  }

  std::vector<Record> capacity(PdeKind k, ExperimentSummary& s) {
    std::ostringstream warn;
    const CapacityResult r = capacity_sweep(
        problem(k), cfg_.capacity_widths,
        [&](const NetworkConfig& net) { return trained(k, net.hidden_widths()); },
        probe_grid2(k), &warn);
    if (!warn.str().empty()) say(warn.str());
    std::vector<Record> out;
    for (const auto& p : r.points) {
      Record rec = head("capacity", s.pde, cfg_.seed);
      rec.add("width", p.width)
          .add("params", static_cast<std::uint64_t>(p.params))
          .add("h2_error", p.h2_error)
          .add("h2_error_spatial", p.h2_error_spatial)
          .add("l2_error", p.l2_error)
          .add("final_loss", p.final_loss)
          .add("rate", r.rate)
          .add("rate_spatial", r.rate_spatial);
      out.push_back(std::move(rec));
    }
    s.metric = "rate=" + fmt(r.rate) + " rate_spatial=" + fmt(r.rate_spatial) + " h2[first]=" +
               fmt(r.points.front().h2_error) + " h2[last]=" + fmt(r.points.back().h2_error);
    if (!(r.rate > 0.0)) fail(s, "fitted H2 rate " + fmt(r.rate) + " is not positive");
    if (r.points.back().h2_error > r.points.front().h2_error) fail(s, "H2 error at the largest width exceeds the smallest");
    if (!r.skipped.empty()) fail(s, std::to_string(r.skipped.size()) + " widths diverged");
    return out;
  }

  std::vector<Record> energy_run(PdeKind k, ExperimentSummary& s) {
    const PdeProblem& pr = problem(k);
    std::vector<Record> out;
    if (pr.energy.decay == EnergyDecay::not_applicable) {
      Record rec = head("energy", s.pde, cfg_.seed);
      rec.add("status", "not_applicable").add("t", kNoTime);
      for (const char* c : {"energy", "energy_exact", "abs_error", "dEdt", "bound", "mean_error", "max_error", "drift", "final_loss"}) {
        rec.add(c, 0.0);
      }
      out.push_back(std::move(rec));
      s.metric = "not applicable (static problem)";
      return out;
    }
    const Trajectory& t = trained(k, cfg_.energy_widths);
    const double final_loss = t.checkpoints.back().report.total;
    const NetworkField f(NetworkConfig(pr.dim(), cfg_.energy_widths), t.final);
    const EnergyResult r = energy_experiment(pr, f, uniform_times(pr.bounds[0], cfg_.energy_times), spatial_line(k));
    for (const auto& p : r.points) {
      Record rec = head("energy", s.pde, cfg_.seed);
      rec.add("status", "ok")
          .add("t", p.t)
          .add("energy", p.energy)
          .add("energy_exact", p.energy_exact)
          .add("abs_error", p.abs_error)
          .add("dEdt", p.rate)
          .add("bound", p.bound)
          .add("mean_error", r.mean_error)
          .add("max_error", r.max_error)
          .add("drift", r.drift)
          .add("final_loss", final_loss);
      out.push_back(std::move(rec));
    }
    const Thresholds& th = cfg_.thresholds;
    s.metric = "loss=" + fmt(final_loss) + " mean_err=" + fmt(r.mean_error) + " max_err=" + fmt(r.max_error) +
               " drift=" + fmt(r.drift);
    if (k == PdeKind::burgers) {
      s.metric += " rate_gap=" + fmt(r.rate_gap) + " mean_bound=" + fmt(r.mean_bound);
      if (!(final_loss < th.energy_loss)) {
        fail(s, "total loss " + fmt(final_loss) + " not below " + fmt(th.energy_loss));
      } else {
        for (const auto& p : r.points) {
          if (p.rate > 0.0) {
            fail(s, "dE/dt > 0 at t=" + fmt(p.t));
            break;
          }
        }
        if (r.rate_gap > th.energy_rate_rel * r.mean_bound) {
          fail(s, "mean |dE/dt + nu||u_x||^2| " + fmt(r.rate_gap) + " exceeds " + fmt(th.energy_rate_rel) + " x " + fmt(r.mean_bound));
        }
      }
    } else {
      if (r.drift > th.energy_drift) fail(s, "energy drift " + fmt(r.drift) + " exceeds " + fmt(th.energy_drift));
      if (r.mean_error > th.energy_mean_error) {
        fail(s, "mean energy error " + fmt(r.mean_error) + " exceeds " + fmt(th.energy_mean_error));
      }
    }
    return out;
  }

  std::vector<Record> regularization(PdeKind k, ExperimentSummary& s) {
    const NetworkConfig net = base_config(k);
    const Grid eg = probe_grid2(k);
    const LossGrids g = grids(k);
    std::vector<Record> out;
    std::vector<double> h2;
    bool matches = false;
    for (double beta : cfg_.betas) {
      const Trajectory t = train_net(k, net, SobolevPenalty{beta, cfg_.sobolev_k});
      const auto fld = std::make_shared<NetworkField>(net, t.final);
      const double h2n = sobolev_norm(*fld, eg, 2);
      const auto err = error_field(fld, problem(k));
      std::int64_t same = -1;
      if (beta == 0.0) {
        matches = t.final == base(k).final;
        same = matches ? 1 : 0;
      }
      Record rec = head("regularization", s.pde, cfg_.seed);
      rec.add("beta", beta)
          .add("k", cfg_.sobolev_k)
          .add("h2_norm", h2n)
          .add("h2_error", sobolev_norm(*err, eg, 2))
          .add("l2_error", l2_norm(*err, eg))
          .add("final_loss", residual_loss(t.final, net, problem(k), g).total)
          .add("matches_unregularized", same);
      out.push_back(std::move(rec));
      h2.push_back(h2n);
    }
    const double ratio = h2.back() / h2.front();
    s.metric = "h2[beta=0]=" + fmt(h2.front()) + " h2[beta=max]=" + fmt(h2.back()) + " ratio=" + fmt(ratio);
    if (ratio > cfg_.thresholds.regularization_ratio) {
      fail(s, "H2 ratio " + fmt(ratio) + " exceeds " + fmt(cfg_.thresholds.regularization_ratio));
    }
    if (!matches) fail(s, "beta = 0 run does not bit-match the unregularized run");
    return out;
  }

  std::vector<Record> refinement(PdeKind k, ExperimentSummary& s) {
    const PdeProblem& pr = problem(k);
    const NetworkConfig net = base_config(k);
    TrainConfig first = cfg_.train;
    first.seed = cfg_.seed;
    TrainConfig later = first;
    later.steps = cfg_.refine_steps;
    say("refinement " + pr.name() + " M=" + std::to_string(cfg_.refine_initial) + ".." + std::to_string(cfg_.refine_max));
    const auto stages = refine_loop(pr, cfg_.refine_initial, cfg_.refine_max, cfg_.refine_overlap,
                                    training_solver(pr, net, init(net, cfg_.seed), first, later), probe_grid2(k),
                                    cfg_.grids);
    std::vector<Record> out;
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const RefineStage& st = stages[i];
      Record rec = head("refinement", s.pde, cfg_.seed);
      rec.add("stage", static_cast<std::uint64_t>(i))
          .add("M", st.M)
          .add("sup_eta", st.sup_eta)
          .add("sup_width", st.sup_width)
          .add("h1_error", st.h1_error)
          .add("loss", st.loss);
      out.push_back(std::move(rec));
      if (i > 0 && st.sup_width > stages[i - 1].sup_width) fail(s, "sup width increased at stage " + std::to_string(i));
    }
    s.metric = "h1[first]=" + fmt(stages.front().h1_error) + " h1[last]=" + fmt(stages.back().h1_error) +
               " sup_eta[last]=" + fmt(stages.back().sup_eta);
    if (stages.back().h1_error > stages.front().h1_error) fail(s, "final H1 error exceeds the first stage");

    const Decomposition dec = decompose(pr.bounds[1], cfg_.refine_max, cfg_.refine_overlap);
    std::mt19937_64 rng(cfg_.seed);
    std::uniform_real_distribution<double> u(pr.bounds[1].lo, pr.bounds[1].hi);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      double sum = 0.0;
      for (double w : partition_weights(dec, u(rng))) sum += w;
      worst = std::max(worst, std::abs(sum - 1.0));
    }
    if (worst > 1e-12) fail(s, "partition of unity off by " + fmt(worst));
    return out;
  }

  std::vector<Record> noniid(ExperimentSummary& s) {
    const Thresholds& th = cfg_.thresholds;
    const NetworkConfig net(1, {cfg_.noniid_width});
    const ParamVector theta0 = init(net, cfg_.seed);
    const Points probe = probe_grid(Interval{-2.0, 2.0}, cfg_.probe);
    const std::size_t j = cfg_.noniid_swap;
    std::vector<Record> out;

    TrainConfig harmonic;
    harmonic.optimizer = Optimizer::gd;
    harmonic.eta0 = 1.0;
    harmonic.schedule = Schedule::inverse;
    harmonic.tau = 1.0;
    const double b3 = stability_bound(harmonic, MixingModel{0.5}, 3);
    if (std::abs(b3 - th.noniid_b3) > 5e-7) fail(s, "B(3) = " + format_real(b3));

    std::map<Schedule, std::vector<double>> fitted;
    std::string metric;
    for (Schedule sched : {Schedule::constant, Schedule::inverse}) {
      for (double rho : cfg_.rhos) {
        TrainConfig tc;
        tc.optimizer = Optimizer::gd;
        tc.eta0 = cfg_.noniid_eta0;
        tc.schedule = sched;
        tc.tau = cfg_.noniid_tau;
        const MixingModel model{rho};
        const StreamPair streams = generate_streams(model, cfg_.noniid_steps, cfg_.seed, j);
        const GapCurve curve = stability_gap(net, theta0, streams, tc, model, probe);
        const double c = fit_gap_scale(curve, j);
        const double coverage = bound_coverage(curve, c, j, th.noniid_factor);
        fitted[sched].push_back(c);
        for (std::size_t n = 0; n < j && n < curve.gap.size(); ++n) {
          if (curve.gap[n] != 0.0) {
            fail(s, "gap nonzero before the swap (rho=" + fmt(rho) + ", n=" + std::to_string(n) + ")");
            break;
          }
        }
        if (coverage < th.noniid_coverage) {
          fail(s, to_string(sched) + " rho=" + fmt(rho) + ": coverage " + fmt(coverage) + " below " + fmt(th.noniid_coverage));
        }
        for (std::size_t n = 0; n < curve.gap.size(); ++n) {
          Record rec = head("noniid", "sgd", cfg_.seed);
          rec.add("schedule", to_string(sched))
              .add("rho", rho)
              .add("eta0", tc.eta0)
              .add("tau", tc.tau)
              .add("n", static_cast<std::uint64_t>(n))
              .add("gap", curve.gap[n])
              .add("bound", curve.bound[n])
              .add("c_fit", c)
              .add("coverage", coverage);
          out.push_back(std::move(rec));
        }
        metric += " c[" + to_string(sched) + "," + fmt(rho) + "]=" + fmt(c);
      }
    }
    const auto& cc = fitted[Schedule::constant];
    for (std::size_t i = 1; i < cc.size(); ++i) {
      if (!(cc[i] > cc[i - 1])) {
        fail(s, "fitted c not increasing in rho under the constant schedule");
        break;
      }
    }
    s.metric = "B(3)=" + fmt(b3) + metric;
    return out;
  }

  const RunConfig& cfg_;
  std::ostream& log_;
  std::mutex log_mutex_;
  std::map<PdeKind, PdeProblem> problems_;
  std::mutex cache_mutex_;
  std::map<std::pair<PdeKind, std::vector<int>>, std::unique_ptr<Lazy>> lazy_;
};

}  // namespace

std::vector<ExperimentSummary> run_experiments(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto plan = planned_outputs(config);
  if (!config.overwrite) {
    for (const auto& [e, p] : plan) {
      const auto path = output_path(config, e, p);
      if (std::filesystem::exists(path)) {
        throw IoError("output " + path.string() + " already exists (use --overwrite)");
      }
    }
  }

  Runner runner(config, log);
  std::vector<ExperimentSummary> summaries(plan.size());
  std::vector<std::exception_ptr> errors(plan.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < plan.size(); i = next++) {
      try {
        const auto start = std::chrono::steady_clock::now();
        summaries[i] = runner.run(plan[i].first, plan[i].second);
        summaries[i].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), plan.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return summaries;
}

}  // namespace pinnstab
