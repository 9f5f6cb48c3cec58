#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pinnstab/autodiff.hpp"
#include "pinnstab/network.hpp"
#include "pinnstab/points.hpp"

namespace pinnstab {

/// Jets of a field over a point set, component-major (c * size + p).
struct JetBlock {
  int dim = 1;
  int order = 2;
  std::size_t size = 0;
  std::vector<double> comps;

  JetBlock() = default;
  JetBlock(int d, int ord, std::size_t n)
      : dim(d), order(ord), size(n), comps(static_cast<std::size_t>(ad::jet_components(d, ord)) * n, 0.0) {}

  int components() const noexcept { return ad::jet_components(dim, order); }
  double operator()(int c, std::size_t p) const { return comps[static_cast<std::size_t>(c) * size + p]; }
  double& operator()(int c, std::size_t p) { return comps[static_cast<std::size_t>(c) * size + p]; }
  double value(std::size_t p) const { return (*this)(0, p); }
  double grad(std::size_t p, int k) const { return (*this)(1 + k, p); }
  double hess(std::size_t p, int i, int j) const { return (*this)(1 + dim + ad::packed_index(dim, i, j), p); }

  ad::Jet2 at(std::size_t p) const;
  void set(std::size_t p, const ad::Jet2& j);
};

/// Anything that can be evaluated with input-derivatives: a network, an
/// analytic reference, or a composition of those.
class Field {
 public:
  virtual ~Field() = default;
  virtual int input_dim() const = 0;
  virtual JetBlock jets(const Points& points, int order) const = 0;

  ad::Jet2 jet(std::span<const double> x, int order = 2) const;
  double value(std::span<const double> x) const { return jet(x, 0).value; }
};

class NetworkField final : public Field {
 public:
  NetworkField(NetworkConfig config, ParamVector params);

  int input_dim() const override { return config_.input_dim(); }
  JetBlock jets(const Points& points, int order) const override;

  const NetworkConfig& config() const noexcept { return config_; }
  const ParamVector& params() const noexcept { return params_; }

 private:
  NetworkConfig config_;
  ParamVector params_;
};

/// A closed-form field given by a function returning its full jet.
class AnalyticField final : public Field {
 public:
  using JetFn = std::function<ad::Jet2(std::span<const double>)>;
  AnalyticField(int dim, JetFn fn) : dim_(dim), fn_(std::move(fn)) {}

  int input_dim() const override { return dim_; }
  JetBlock jets(const Points& points, int order) const override;

 private:
  int dim_;
  JetFn fn_;
};

/// a * f + b * g.
class LinearCombinationField final : public Field {
 public:
  LinearCombinationField(double a, std::shared_ptr<const Field> f, double b,
                         std::shared_ptr<const Field> g);

  int input_dim() const override { return f_->input_dim(); }
  JetBlock jets(const Points& points, int order) const override;

 private:
  double a_, b_;
  std::shared_ptr<const Field> f_, g_;
};

}  // namespace pinnstab
