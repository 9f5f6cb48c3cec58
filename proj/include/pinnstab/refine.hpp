#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pinnstab/analysis.hpp"
#include "pinnstab/field.hpp"
#include "pinnstab/loss.hpp"
#include "pinnstab/network.hpp"
#include "pinnstab/pde.hpp"
#include "pinnstab/train.hpp"

namespace pinnstab {

/// A spatial interval of the decomposition. `core` cells tile the domain
/// without overlap; `bounds` extends the core across each interface by the
/// interface half-width.
struct Subdomain {
  int id = 0;
  Interval core;
  Interval bounds;
};

/// Overlapping 1D decomposition of the spatial axis, ordered left to right.
/// The interface between cores i and i+1 at s has half-width
/// h = overlap_fraction * min(core widths), so neighbours share [s - h, s + h].
class Decomposition {
 public:
  /// M equal cores. Throws ArgumentError for M < 1 or overlap outside (0, 0.5).
  static Decomposition uniform(Interval domain, int M, double overlap_fraction);

  /// Bisects the core of subdomain `index`; the left child keeps the id,
  /// the right child takes the next unused id.
  Decomposition split(std::size_t index) const;

  const std::vector<Subdomain>& subdomains() const noexcept { return parts_; }
  std::size_t size() const noexcept { return parts_.size(); }
  const Subdomain& operator[](std::size_t i) const { return parts_[i]; }
  Interval domain() const noexcept { return domain_; }
  double overlap_fraction() const noexcept { return overlap_; }

  /// Interface half-width between cores i and i+1.
  double half_width(std::size_t i) const;
  double sup_width() const;

 private:
  void rebuild();

  Interval domain_;
  double overlap_ = 0.2;
  int next_id_ = 0;
  std::vector<Subdomain> parts_;
};

Decomposition decompose(Interval domain, int M, double overlap_fraction);

/// Partition-of-unity weight with its first two derivatives in x.
struct WeightJet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// chi_i(x) built from cosine ramps (1 - cos(pi r)) / 2 across each
/// interface; C^1 at the ramp ends and summing to one by construction.
/// Throws ArgumentError outside the domain.
std::vector<double> partition_weights(const Decomposition& dec, double x);
std::vector<WeightJet> partition_jets(const Decomposition& dec, double x);

/// sum_i chi_i u_i, evaluated as u_a + sum_i chi_i (u_i - u_a) with a the
/// dominant subdomain so identical pieces reassemble exactly.
class AssembledField final : public Field {
 public:
  /// Throws ArgumentError when the field count differs from the subdomain count.
  AssembledField(std::vector<std::shared_ptr<const Field>> local, Decomposition dec, int space_axis);

  int input_dim() const override { return local_.front()->input_dim(); }
  JetBlock jets(const Points& points, int order) const override;

 private:
  std::vector<std::shared_ptr<const Field>> local_;
  Decomposition dec_;
  int axis_;
};

double assemble(const std::vector<std::shared_ptr<const Field>>& local, const Decomposition& dec,
                std::span<const double> x, int space_axis);

/// Tensor grid over `span` on the spatial axis times the full other axis.
/// The spatial axis gets 1 + max(8, ceil((interior - 1) * relative width)) nodes.
Grid subdomain_grid(const PdeProblem& problem, Interval span, const LossGridSpec& spec = {});

/// L2 norm of the residual over the grid.
double local_indicator(const Field& field, const PdeProblem& problem, const Grid& grid);
double local_indicator(const ParamVector& params, const NetworkConfig& config, const PdeProblem& problem,
                       const Subdomain& subdomain, const Grid& grid);

/// Interior grids of every subdomain concatenated (overlaps counted once
/// per subdomain), standard boundary and initial grids.
LossGrids multidomain_grids(const PdeProblem& problem, const Decomposition& dec, const LossGridSpec& spec = {});

struct RefineStage {
  int M = 0;
  double sup_eta = 0.0;
  double sup_width = 0.0;
  double h1_error = 0.0;
  double loss = 0.0;
  std::vector<double> etas;
};

/// Produces the global field for one stage from its decomposition and grids.
using StageSolver = std::function<std::shared_ptr<const Field>(const Decomposition&, const LossGrids&, int stage)>;

/// One shared network trained on the summed multi-domain loss, warm-started
/// from the previous stage. `first` trains stage 0, `later` every other stage.
StageSolver training_solver(const PdeProblem& problem, NetworkConfig config, ParamVector params0,
                            TrainConfig first, TrainConfig later);

/// Greedy refinement: solve, measure, bisect the argmax-eta subdomain (ties
/// to the lowest id) until max_M subdomains. The H1 error of the assembled
/// field is measured on `error_grid` against the exact solution.
std::vector<RefineStage> refine_loop(const PdeProblem& problem, int initial_M, int max_M, double overlap,
                                     const StageSolver& solver, const Grid& error_grid,
                                     const LossGridSpec& spec = {});

}  // namespace pinnstab
