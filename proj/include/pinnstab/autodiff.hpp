#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pinnstab::ad {

// -----------------------------------------------------------------------------
// Reverse mode: a flat Wengert list of scalar operations.
// -----------------------------------------------------------------------------

/// Recorded computation. Each node stores at most two parents with the local
/// partial derivative towards each; leaves have no parents.
class Tape {
 public:
  int add_leaf();
  int add_node(int a, double da, int b = -1, double db = 0.0);

  /// Adjoints d(output)/d(node) for every node recorded so far.
  void adjoints(int output, std::vector<double>& out) const;
  std::vector<double> adjoints(int output) const;

  void clear() noexcept { nodes_.clear(); }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    int a;
    int b;
    double da;
    double db;
  };
  std::vector<Node> nodes_;
};

/// Scalar that records onto a Tape. A Var without a tape is a constant.
class Var {
 public:
  Var() = default;
  Var(double value) : value_(value) {}  // NOLINT: constants convert implicitly

  static Var leaf(Tape& tape, double value) { return Var(&tape, tape.add_leaf(), value); }

  double value() const noexcept { return value_; }
  int index() const noexcept { return index_; }
  Tape* tape() const noexcept { return tape_; }
  bool is_constant() const noexcept { return tape_ == nullptr; }

  /// Result of an operation with one input and local derivative `d`.
  static Var unary(const Var& x, double value, double d);
  static Var binary(const Var& x, double dx, const Var& y, double dy, double value);

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);

 private:
  Var(Tape* tape, int index, double value) : tape_(tape), index_(index), value_(value) {}

  Tape* tape_ = nullptr;
  int index_ = -1;
  double value_ = 0.0;
};

Var operator-(const Var& x);
Var operator+(const Var& x, const Var& y);
Var operator-(const Var& x, const Var& y);
Var operator*(const Var& x, const Var& y);
Var operator/(const Var& x, const Var& y);

Var tanh(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var sin(const Var& x);
Var cos(const Var& x);
Var sqrt(const Var& x);
Var sigmoid(const Var& x);
Var softplus(const Var& x);

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

double sigmoid(double x);
double softplus(double x);

/// Scalar loss built on a tape from leaf parameters.
using ParamLoss = std::function<Var(std::span<const Var>)>;

/// dLoss/dtheta by one reverse sweep. `value` receives the loss if non-null.
std::vector<double> grad_params(const ParamLoss& loss, std::span<const double> params,
                                double* value = nullptr);

// -----------------------------------------------------------------------------
// Second-order jets over the input coordinates (d <= 2).
// -----------------------------------------------------------------------------

inline constexpr int kMaxDim = 2;

/// Position of the (i, j) second partial in packed upper-triangular storage.
constexpr int packed_index(int dim, int i, int j) {
  if (i > j) {
    const int t = i;
    i = j;
    j = t;
  }
  return i * dim - i * (i - 1) / 2 + (j - i);
}

/// Number of stored components for a jet truncated at `order` (0, 1 or 2).
constexpr int jet_components(int dim, int order) {
  int n = 1;
  if (order >= 1) n += dim;
  if (order >= 2) n += dim * (dim + 1) / 2;
  return n;
}

/// Value, gradient and symmetric Hessian of a scalar field at one point.
/// Component order when flattened: value, grad[0..d), packed hess.
template <class T>
struct BasicJet {
  int dim = 1;
  T value{};
  std::array<T, kMaxDim> grad{};
  std::array<T, 3> hess_packed{};

  T hess(int i, int j) const { return hess_packed[packed_index(dim, i, j)]; }
  T& hess(int i, int j) { return hess_packed[packed_index(dim, i, j)]; }

  T component(int c) const {
    if (c == 0) return value;
    if (c <= dim) return grad[c - 1];
    return hess_packed[c - 1 - dim];
  }
  T& component(int c) {
    if (c == 0) return value;
    if (c <= dim) return grad[c - 1];
    return hess_packed[c - 1 - dim];
  }
};

using Jet2 = BasicJet<double>;

template <class T>
BasicJet<T> constant_jet(int dim, T value) {
  BasicJet<T> j;
  j.dim = dim;
  j.value = value;
  return j;
}

/// Jet of the coordinate function x -> x[axis].
template <class T>
BasicJet<T> coordinate_jet(int dim, int axis, T value) {
  BasicJet<T> j = constant_jet<T>(dim, value);
  j.grad[axis] = T(1.0);
  return j;
}

/// out += w * in, componentwise.
template <class T, class W>
void axpy(BasicJet<T>& out, const W& w, const BasicJet<T>& in) {
  const int n = jet_components(in.dim, 2);
  for (int c = 0; c < n; ++c) out.component(c) += w * in.component(c);
}

/// Composition s(z) given s(z), s'(z), s''(z) at the value of z.
template <class T>
BasicJet<T> compose(const BasicJet<T>& z, const T& s0, const T& s1, const T& s2) {
  BasicJet<T> out;
  out.dim = z.dim;
  out.value = s0;
  for (int i = 0; i < z.dim; ++i) out.grad[i] = s1 * z.grad[i];
  for (int i = 0; i < z.dim; ++i) {
    for (int j = i; j < z.dim; ++j) {
      out.hess(i, j) = s2 * z.grad[i] * z.grad[j] + s1 * z.hess(i, j);
    }
  }
  return out;
}

}  // namespace pinnstab::ad
