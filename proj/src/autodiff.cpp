#include "pinnstab/autodiff.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace pinnstab::ad {

int Tape::add_leaf() {
  nodes_.push_back({-1, -1, 0.0, 0.0});
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::add_node(int a, double da, int b, double db) {
  nodes_.push_back({a, b, da, db});
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::adjoints(int output, std::vector<double>& out) const {
  out.assign(nodes_.size(), 0.0);
  if (output < 0) return;
  out[static_cast<std::size_t>(output)] = 1.0;
  for (int i = output; i >= 0; --i) {
    const double bar = out[static_cast<std::size_t>(i)];
    if (bar == 0.0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.a >= 0) out[static_cast<std::size_t>(n.a)] += bar * n.da;
    if (n.b >= 0) out[static_cast<std::size_t>(n.b)] += bar * n.db;
  }
}

std::vector<double> Tape::adjoints(int output) const {
  std::vector<double> out;
  adjoints(output, out);
  return out;
}

Var Var::unary(const Var& x, double value, double d) {
  if (x.is_constant()) return Var(value);
  return Var(x.tape_, x.tape_->add_node(x.index_, d), value);
}

Var Var::binary(const Var& x, double dx, const Var& y, double dy, double value) {
  if (x.is_constant() && y.is_constant()) return Var(value);
  if (x.is_constant()) return Var(y.tape_, y.tape_->add_node(y.index_, dy), value);
  if (y.is_constant()) return Var(x.tape_, x.tape_->add_node(x.index_, dx), value);
  assert(x.tape_ == y.tape_);
  return Var(x.tape_, x.tape_->add_node(x.index_, dx, y.index_, dy), value);
}

Var& Var::operator+=(const Var& o) { return *this = *this + o; }
Var& Var::operator-=(const Var& o) { return *this = *this - o; }
Var& Var::operator*=(const Var& o) { return *this = *this * o; }
Var& Var::operator/=(const Var& o) { return *this = *this / o; }

Var operator-(const Var& x) { return Var::unary(x, -x.value(), -1.0); }

Var operator+(const Var& x, const Var& y) {
  return Var::binary(x, 1.0, y, 1.0, x.value() + y.value());
}

Var operator-(const Var& x, const Var& y) {
  return Var::binary(x, 1.0, y, -1.0, x.value() - y.value());
}

Var operator*(const Var& x, const Var& y) {
  return Var::binary(x, y.value(), y, x.value(), x.value() * y.value());
}

Var operator/(const Var& x, const Var& y) {
  const double inv = 1.0 / y.value();
  const double q = x.value() * inv;
  return Var::binary(x, inv, y, -q * inv, q);
}

Var tanh(const Var& x) {
  const double t = std::tanh(x.value());
  return Var::unary(x, t, 1.0 - t * t);
}

Var exp(const Var& x) {
  const double e = std::exp(x.value());
  return Var::unary(x, e, e);
}

Var log(const Var& x) { return Var::unary(x, std::log(x.value()), 1.0 / x.value()); }

Var sin(const Var& x) { return Var::unary(x, std::sin(x.value()), std::cos(x.value())); }

Var cos(const Var& x) { return Var::unary(x, std::cos(x.value()), -std::sin(x.value())); }

Var sqrt(const Var& x) {
  const double s = std::sqrt(x.value());
  return Var::unary(x, s, 0.5 / s);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  // log(1 + e^x) without overflow for large |x|
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

Var sigmoid(const Var& x) {
  const double s = sigmoid(x.value());
  return Var::unary(x, s, s * (1.0 - s));
}

Var softplus(const Var& x) { return Var::unary(x, softplus(x.value()), sigmoid(x.value())); }

std::vector<double> grad_params(const ParamLoss& loss, std::span<const double> params,
                                double* value) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (double p : params) leaves.push_back(Var::leaf(tape, p));

  const Var out = loss(leaves);
  if (value != nullptr) *value = out.value();

  std::vector<double> grad(params.size(), 0.0);
  if (out.is_constant()) return grad;
  const std::vector<double> bar = tape.adjoints(out.index());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    grad[i] = bar[static_cast<std::size_t>(leaves[i].index())];
  }
  return grad;
}

}  // namespace pinnstab::ad
