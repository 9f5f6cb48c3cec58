#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pinnstab/autodiff.hpp"
#include "pinnstab/points.hpp"

namespace pinnstab {

enum class Activation { tanh, identity, softplus };

std::string to_string(Activation a);
Activation parse_activation(std::string_view name);

/// sigma and its first three derivatives at one pre-activation value.
struct ActivationSeries {
  double s0, s1, s2, s3;
};
ActivationSeries activation_series(Activation a, double z);

/// sigma, sigma', sigma'' for any scalar type (double or ad::Var).
template <class T>
void activation_series(Activation a, const T& z, T& s0, T& s1, T& s2) {
  using std::tanh;
  switch (a) {
    case Activation::tanh:
      s0 = tanh(z);
      s1 = T(1.0) - s0 * s0;
      s2 = T(-2.0) * s0 * s1;
      return;
    case Activation::softplus:
      s0 = ad::softplus(z);
      s1 = ad::sigmoid(z);
      s2 = s1 * (T(1.0) - s1);
      return;
    case Activation::identity:
      s0 = z;
      s1 = T(1.0);
      s2 = T(0.0);
      return;
  }
}

/// Fully connected net R^d -> R. Hidden layers share one activation; the
/// output layer is affine.
class NetworkConfig {
 public:
  NetworkConfig(int input_dim, std::vector<int> hidden_widths,
                Activation activation = Activation::tanh);

  int input_dim() const noexcept { return input_dim_; }
  const std::vector<int>& hidden_widths() const noexcept { return hidden_; }
  Activation activation() const noexcept { return activation_; }

  /// Number of affine layers (hidden layers plus the output layer).
  int layers() const noexcept { return static_cast<int>(hidden_.size()) + 1; }
  int fan_in(int layer) const;
  int fan_out(int layer) const;
  std::size_t weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
  std::size_t bias_offset(int layer) const;
  std::size_t param_count() const noexcept { return offsets_.back(); }

  std::string describe() const;
  bool operator==(const NetworkConfig&) const = default;

 private:
  int input_dim_;
  std::vector<int> hidden_;
  Activation activation_;
  std::vector<std::size_t> offsets_;
};

/// Flat parameter vector theta. Per layer: weights row-major (fan_out x
/// fan_in), then biases.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> span() const noexcept { return values_; }
  std::span<double> span() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool operator==(const ParamVector&) const = default;

 private:
  std::vector<double> values_;
};

/// Throws ConfigError when the vector length does not match the config.
void check_params(const NetworkConfig& config, std::size_t length);

/// Xavier-uniform weights, zero biases; deterministic per seed.
ParamVector init(const NetworkConfig& config, std::uint64_t seed);

/// Forward pass carrying second-order input jets, one point, any scalar type.
template <class T>
ad::BasicJet<T> eval_jet(std::span<const T> params, const NetworkConfig& config,
                         std::span<const double> input) {
  check_params(config, params.size());
  const int d = config.input_dim();
  std::vector<ad::BasicJet<T>> act;
  act.reserve(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) act.push_back(ad::coordinate_jet<T>(d, k, T(input[static_cast<std::size_t>(k)])));

  for (int l = 0; l < config.layers(); ++l) {
    const int n_in = config.fan_in(l);
    const int n_out = config.fan_out(l);
    const T* w = params.data() + config.weight_offset(l);
    const T* b = params.data() + config.bias_offset(l);
    const bool hidden = l + 1 < config.layers();
    std::vector<ad::BasicJet<T>> next;
    next.reserve(static_cast<std::size_t>(n_out));
    for (int o = 0; o < n_out; ++o) {
      ad::BasicJet<T> z = ad::constant_jet<T>(d, b[o]);
      for (int i = 0; i < n_in; ++i) ad::axpy(z, w[o * n_in + i], act[static_cast<std::size_t>(i)]);
      if (hidden) {
        T s0{}, s1{}, s2{};
        activation_series(config.activation(), z.value, s0, s1, s2);
        next.push_back(ad::compose(z, s0, s1, s2));
      } else {
        next.push_back(z);
      }
    }
    act = std::move(next);
  }
  return act.front();
}

ad::Jet2 eval_jet(const ParamVector& params, const NetworkConfig& config,
                  std::span<const double> input);

/// Jets of the network over a batch of points with the per-layer state kept
/// for a reverse sweep. Components are stored component-major: entry
/// c * N + p holds component c of point p (see ad::BasicJet for the order).
class BatchForward {
 public:
  BatchForward(const NetworkConfig& config, std::span<const double> params, const Points& points,
               int order);

  std::size_t size() const noexcept { return n_; }
  int dim() const noexcept { return dim_; }
  int order() const noexcept { return order_; }
  int components() const noexcept { return comps_; }

  /// All output components, length components() * size().
  const Eigen::RowVectorXd& output() const noexcept { return out_; }
  double component(int c, std::size_t p) const { return out_[static_cast<Eigen::Index>(c * n_ + p)]; }
  ad::Jet2 jet(std::size_t p) const;

  /// grad += (d output / d theta)^T * output_adjoint.
  void backward(const Eigen::RowVectorXd& output_adjoint, std::span<double> grad) const;

  /// ||d value(p) / d theta||^2 for every point p.
  std::vector<double> param_grad_sq_norms() const;

 private:
  NetworkConfig config_;
  std::vector<double> params_;
  std::size_t n_;
  int dim_;
  int order_;
  int comps_;
  std::vector<Eigen::MatrixXd> acts_;    // acts_[l]: input to layer l
  std::vector<Eigen::MatrixXd> series_;  // per hidden layer: [s1 | s2 | s3], n x 3N
  std::vector<Eigen::MatrixXd> pre_;     // pre-activations of hidden layers
  Eigen::RowVectorXd out_;
};

/// Weight-product Lipschitz constants.
struct LipschitzBound {
  double c_theta = 0.0;
  double c_x = 0.0;
  double c_total = 0.0;
};

/// Operator 2-norm by power iteration on W^T W.
double spectral_norm(std::span<const double> row_major, int rows, int cols, int iterations = 100,
                     double tolerance = 1e-10);

LipschitzBound weight_norm_bound(const ParamVector& params, const NetworkConfig& config);

struct GradientSup {
  double input = 0.0;  ///< sup over the grid of ||grad_x u||
  double param = 0.0;  ///< sup over the grid of ||grad_theta u||
};

/// Exact suprema over the given points. Throws ArgumentError on an empty set.
GradientSup empirical_gradient_sup(const ParamVector& params, const NetworkConfig& config,
                                   const Points& grid);

/// Serialized parameters: text header, blank line, then raw little-endian
/// IEEE-754 doubles.
struct Checkpoint {
  NetworkConfig config;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  ParamVector params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pinnstab
