#include "pinnstab/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "pinnstab/errors.hpp"

namespace pinnstab {

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMapMut = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh:
      return "tanh";
    case Activation::identity:
      return "identity";
    case Activation::softplus:
      return "softplus";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  if (name == "softplus") return Activation::softplus;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

ActivationSeries activation_series(Activation a, double z) {
  switch (a) {
    case Activation::tanh: {
      const double s = std::tanh(z);
      const double s1 = 1.0 - s * s;
      return {s, s1, -2.0 * s * s1, -2.0 * s1 * s1 + 4.0 * s * s * s1};
    }
    case Activation::softplus: {
      const double g = ad::sigmoid(z);
      const double s2 = g * (1.0 - g);
      return {ad::softplus(z), g, s2, s2 * (1.0 - 2.0 * g)};
    }
    case Activation::identity:
      return {z, 1.0, 0.0, 0.0};
  }
  return {0, 0, 0, 0};
}

NetworkConfig::NetworkConfig(int input_dim, std::vector<int> hidden_widths, Activation activation)
    : input_dim_(input_dim), hidden_(std::move(hidden_widths)), activation_(activation) {
  if (input_dim_ < 1 || input_dim_ > ad::kMaxDim) {
    throw ConfigError("input_dim must be 1 or 2, got " + std::to_string(input_dim_));
  }
  if (hidden_.empty()) throw ConfigError("network needs at least one hidden layer");
  for (int w : hidden_) {
    if (w < 1) throw ConfigError("hidden widths must be >= 1");
  }
  offsets_.push_back(0);
  for (int l = 0; l < layers(); ++l) {
    const auto n = static_cast<std::size_t>(fan_in(l)) * static_cast<std::size_t>(fan_out(l)) +
                   static_cast<std::size_t>(fan_out(l));
    offsets_.push_back(offsets_.back() + n);
  }
}

int NetworkConfig::fan_in(int layer) const {
  return layer == 0 ? input_dim_ : hidden_[static_cast<std::size_t>(layer - 1)];
}

int NetworkConfig::fan_out(int layer) const {
  return layer + 1 == layers() ? 1 : hidden_[static_cast<std::size_t>(layer)];
}

std::size_t NetworkConfig::bias_offset(int layer) const {
  return weight_offset(layer) +
         static_cast<std::size_t>(fan_in(layer)) * static_cast<std::size_t>(fan_out(layer));
}

std::string NetworkConfig::describe() const {
  std::ostringstream os;
  os << input_dim_ << "->";
  for (std::size_t i = 0; i < hidden_.size(); ++i) os << (i ? "," : "") << hidden_[i];
  os << "->1 " << to_string(activation_);
  return os.str();
}

void check_params(const NetworkConfig& config, std::size_t length) {
  if (length != config.param_count()) {
    throw ConfigError("parameter vector has " + std::to_string(length) + " entries, config " +
                      config.describe() + " needs " + std::to_string(config.param_count()));
  }
}

ParamVector init(const NetworkConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(config.param_count(), 0.0);
  for (int l = 0; l < config.layers(); ++l) {
    const int n_in = config.fan_in(l);
    const int n_out = config.fan_out(l);
    const double bound = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t off = config.weight_offset(l);
    for (int k = 0; k < n_in * n_out; ++k) v[off + static_cast<std::size_t>(k)] = dist(rng);
  }
  return ParamVector(std::move(v));
}

ad::Jet2 eval_jet(const ParamVector& params, const NetworkConfig& config,
                  std::span<const double> input) {
  return eval_jet<double>(params.span(), config, input);
}

// -----------------------------------------------------------------------------
// Batched jets
// -----------------------------------------------------------------------------

BatchForward::BatchForward(const NetworkConfig& config, std::span<const double> params,
                           const Points& points, int order)
    : config_(config),
      params_(params.begin(), params.end()),
      n_(points.size()),
      dim_(config.input_dim()),
      order_(order),
      comps_(ad::jet_components(config.input_dim(), order)) {
  check_params(config, params.size());
  if (points.dim != dim_) throw ConfigError("point dimension does not match network input");
  if (order < 0 || order > 2) throw ConfigError("jet order must be 0, 1 or 2");

  const auto N = static_cast<Eigen::Index>(n_);
  const auto cols = static_cast<Eigen::Index>(comps_) * N;
  const int d = dim_;

  Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(d, cols);
  for (Eigen::Index p = 0; p < N; ++p) {
    for (int k = 0; k < d; ++k) a0(k, p) = points(static_cast<std::size_t>(p), k);
  }
  if (order >= 1) {
    for (int k = 0; k < d; ++k) a0.row(k).segment((1 + k) * N, N).setOnes();
  }
  acts_.push_back(std::move(a0));

  const int hess_first = 1 + d;
  for (int l = 0; l < config_.layers(); ++l) {
    const int n_in = config_.fan_in(l);
    const int n_out = config_.fan_out(l);
    const RowMajorMatrix w = RowMajorMap(params_.data() + config_.weight_offset(l), n_out, n_in);
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(params_.data() + config_.bias_offset(l), n_out);

    Eigen::MatrixXd z(n_out, cols);
    z.noalias() = w * acts_.back();
    z.leftCols(N).colwise() += b;

    if (l + 1 == config_.layers()) {
      out_ = z.row(0);
      break;
    }

    // Series block layout: [s1 | s2 | s3], each n_out x N.
    Eigen::MatrixXd a(n_out, cols);
    Eigen::MatrixXd ser(n_out, 3 * N);
    {
      const double* zp = z.data();
      double* ap = a.data();
      double* s1p = ser.data();
      double* s2p = s1p + n_out * N;
      double* s3p = s2p + n_out * N;
      const Eigen::Index count = n_out * N;
      for (Eigen::Index i = 0; i < count; ++i) {
        const ActivationSeries s = activation_series(config_.activation(), zp[i]);
        ap[i] = s.s0;
        s1p[i] = s.s1;
        s2p[i] = s.s2;
        s3p[i] = s.s3;
      }
    }
    const auto s1 = ser.leftCols(N).array();
    const auto s2 = ser.middleCols(N, N).array();
    if (order >= 1) {
      for (int k = 0; k < d; ++k) {
        a.middleCols((1 + k) * N, N).array() = s1 * z.middleCols((1 + k) * N, N).array();
      }
    }
    if (order >= 2) {
      for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
          const Eigen::Index c = (hess_first + ad::packed_index(d, i, j)) * N;
          a.middleCols(c, N).array() = s2 * z.middleCols((1 + i) * N, N).array() *
                                           z.middleCols((1 + j) * N, N).array() +
                                       s1 * z.middleCols(c, N).array();
        }
      }
    }
    pre_.push_back(std::move(z));
    series_.push_back(std::move(ser));
    acts_.push_back(std::move(a));
  }
}

ad::Jet2 BatchForward::jet(std::size_t p) const {
  ad::Jet2 j;
  j.dim = dim_;
  for (int c = 0; c < comps_; ++c) j.component(c) = component(c, p);
  return j;
}

void BatchForward::backward(const Eigen::RowVectorXd& output_adjoint, std::span<double> grad) const {
  check_params(config_, grad.size());
  const auto N = static_cast<Eigen::Index>(n_);
  const int d = dim_;
  const int hess_first = 1 + d;
  const int L = config_.layers();

  // Output layer is affine.
  Eigen::MatrixXd zbar = output_adjoint;
  for (int l = L - 1; l >= 0; --l) {
    const int n_in = config_.fan_in(l);
    const int n_out = config_.fan_out(l);
    const Eigen::MatrixXd& a_prev = acts_[static_cast<std::size_t>(l)];
    RowMajorMapMut gw(grad.data() + config_.weight_offset(l), n_out, n_in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + config_.bias_offset(l), n_out);
    const RowMajorMatrix gw_l = zbar * a_prev.transpose();
    const Eigen::VectorXd gb_l = zbar.leftCols(N).rowwise().sum();
    gw += gw_l;
    gb += gb_l;
    if (l == 0) break;

    const RowMajorMatrix w = RowMajorMap(params_.data() + config_.weight_offset(l), n_out, n_in);
    Eigen::MatrixXd abar(n_in, zbar.cols());
    abar.noalias() = w.transpose() * zbar;

    // Reverse through the activation of hidden layer l - 1.
    const Eigen::MatrixXd& z = pre_[static_cast<std::size_t>(l - 1)];
    const Eigen::MatrixXd& ser = series_[static_cast<std::size_t>(l - 1)];
    const auto s1 = ser.leftCols(N).array();
    const auto s2 = ser.middleCols(N, N).array();
    const auto s3 = ser.middleCols(2 * N, N).array();
    auto zb = [&](Eigen::Index c) { return z.middleCols(c * N, N).array(); };
    auto ab = [&](Eigen::Index c) { return abar.middleCols(c * N, N).array(); };

    Eigen::MatrixXd next(n_in, zbar.cols());
    auto nb = [&](Eigen::Index c) { return next.middleCols(c * N, N).array(); };
    nb(0) = ab(0) * s1;
    if (order_ >= 1) {
      for (int k = 0; k < d; ++k) {
        nb(1 + k) = ab(1 + k) * s1;
        nb(0) += ab(1 + k) * zb(1 + k) * s2;
      }
    }
    if (order_ >= 2) {
      for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
          const Eigen::Index c = hess_first + ad::packed_index(d, i, j);
          const auto hb = ab(c);
          nb(c) = hb * s1;
          nb(0) += hb * (s3 * zb(1 + i) * zb(1 + j) + s2 * zb(c));
          if (i == j) {
            nb(1 + i) += 2.0 * hb * s2 * zb(1 + i);
          } else {
            nb(1 + i) += hb * s2 * zb(1 + j);
            nb(1 + j) += hb * s2 * zb(1 + i);
          }
        }
      }
    }
    zbar = std::move(next);
  }
}

std::vector<double> BatchForward::param_grad_sq_norms() const {
  const auto N = static_cast<Eigen::Index>(n_);
  const int L = config_.layers();
  std::vector<double> norms(n_, 0.0);

  // delta: d value / d pre-activation of the current layer, value block only.
  Eigen::MatrixXd delta = Eigen::MatrixXd::Ones(1, N);
  for (int l = L - 1; l >= 0; --l) {
    const Eigen::MatrixXd a_prev = acts_[static_cast<std::size_t>(l)].leftCols(N);
    const Eigen::RowVectorXd dsq = delta.colwise().squaredNorm();
    const Eigen::RowVectorXd asq = a_prev.colwise().squaredNorm();
    for (Eigen::Index p = 0; p < N; ++p) norms[static_cast<std::size_t>(p)] += dsq[p] * (asq[p] + 1.0);
    if (l == 0) break;
    const int n_in = config_.fan_in(l);
    const RowMajorMatrix w = RowMajorMap(params_.data() + config_.weight_offset(l), config_.fan_out(l), n_in);
    Eigen::MatrixXd back = w.transpose() * delta;
    const Eigen::MatrixXd& ser = series_[static_cast<std::size_t>(l - 1)];
    delta = back.cwiseProduct(ser.leftCols(N));
  }
  return norms;
}

// -----------------------------------------------------------------------------
// Lipschitz constants
// -----------------------------------------------------------------------------

double spectral_norm(std::span<const double> row_major, int rows, int cols, int iterations,
                     double tolerance) {
  const RowMajorMatrix w = RowMajorMap(row_major.data(), rows, cols);
  if (w.cwiseAbs().maxCoeff() == 0.0) return 0.0;

  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(cols);
  for (Eigen::Index i = 0; i < cols; ++i) v[i] = normal(rng);
  v.normalize();

  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd u = w * v;
    Eigen::VectorXd next = w.transpose() * u;
    const double nrm = next.norm();
    if (nrm == 0.0) break;
    const double estimate = std::sqrt(nrm);
    next /= nrm;
    const bool done = std::abs(estimate - sigma) <= tolerance * estimate;
    sigma = estimate;
    v = next;
    if (done) break;
  }
  // Rayleigh quotient of the converged vector.
  return (w * v).norm();
}

LipschitzBound weight_norm_bound(const ParamVector& params, const NetworkConfig& config) {
  check_params(config, params.size());
  double prod = 1.0;
  for (int l = 0; l < config.layers(); ++l) {
    const auto n = static_cast<std::size_t>(config.fan_in(l) * config.fan_out(l));
    prod *= spectral_norm(params.span().subspan(config.weight_offset(l), n), config.fan_out(l),
                          config.fan_in(l));
  }
  return {prod, prod, prod + prod};
}

GradientSup empirical_gradient_sup(const ParamVector& params, const NetworkConfig& config,
                                   const Points& grid) {
  if (grid.empty()) throw ArgumentError("empirical_gradient_sup: empty grid");
  const BatchForward fwd(config, params.span(), grid, 1);
  GradientSup sup;
  for (std::size_t p = 0; p < fwd.size(); ++p) {
    double sq = 0.0;
    for (int k = 0; k < fwd.dim(); ++k) sq += fwd.component(1 + k, p) * fwd.component(1 + k, p);
    sup.input = std::max(sup.input, std::sqrt(sq));
  }
  for (double sq : fwd.param_grad_sq_norms()) sup.param = std::max(sup.param, std::sqrt(sq));
  return sup;
}

// -----------------------------------------------------------------------------
// Checkpoints
// -----------------------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  check_params(ck.config, ck.params.size());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
  os << "PINNSTAB-CHECKPOINT 1\n";
  os << "input_dim " << ck.config.input_dim() << "\n";
  os << "hidden";
  for (int w : ck.config.hidden_widths()) os << ' ' << w;
  os << "\n";
  os << "activation " << to_string(ck.config.activation()) << "\n";
  os << "seed " << ck.seed << "\n";
  os << "step " << ck.step << "\n";
  os << "count " << ck.params.size() << "\n\n";
  for (double v : ck.params.values()) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffU);
    os.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!os) throw IoError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());

  auto expect_key = [&](const std::string& key) {
    std::string line;
    if (!std::getline(is, line)) throw IoError("truncated checkpoint header");
    std::istringstream ls(line);
    std::string k;
    ls >> k;
    if (k != key) throw IoError("checkpoint: expected '" + key + "', found '" + k + "'");
    std::string rest;
    std::getline(ls, rest);
    return rest;
  };

  std::string magic;
  std::getline(is, magic);
  if (magic != "PINNSTAB-CHECKPOINT 1") throw IoError("not a checkpoint file: " + path.string());
  const int input_dim = std::stoi(expect_key("input_dim"));
  std::vector<int> hidden;
  {
    std::istringstream hs(expect_key("hidden"));
    int w;
    while (hs >> w) hidden.push_back(w);
  }
  std::string act = expect_key("activation");
  act.erase(0, act.find_first_not_of(' '));
  Checkpoint ck{NetworkConfig(input_dim, hidden, parse_activation(act)), 0, 0, {}};
  ck.seed = std::stoull(expect_key("seed"));
  ck.step = std::stoull(expect_key("step"));
  const std::size_t count = std::stoull(expect_key("count"));
  std::string blank;
  std::getline(is, blank);
  check_params(ck.config, count);

  std::vector<double> values(count);
  for (double& v : values) {
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw IoError("truncated checkpoint payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  ck.params = ParamVector(std::move(values));
  return ck;
}

}  // namespace pinnstab
