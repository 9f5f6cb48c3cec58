#include "pinnstab/field.hpp"

#include <algorithm>

#include "pinnstab/errors.hpp"

namespace pinnstab {

namespace {
constexpr std::size_t kChunk = 8192;
}

ad::Jet2 JetBlock::at(std::size_t p) const {
  ad::Jet2 j;
  j.dim = dim;
  for (int c = 0; c < components(); ++c) j.component(c) = (*this)(c, p);
  return j;
}

void JetBlock::set(std::size_t p, const ad::Jet2& j) {
  for (int c = 0; c < components(); ++c) (*this)(c, p) = j.component(c);
}

ad::Jet2 Field::jet(std::span<const double> x, int order) const {
  Points pts(input_dim());
  pts.push(x);
  return jets(pts, order).at(0);
}

NetworkField::NetworkField(NetworkConfig config, ParamVector params)
    : config_(std::move(config)), params_(std::move(params)) {
  check_params(config_, params_.size());
}

JetBlock NetworkField::jets(const Points& points, int order) const {
  JetBlock out(config_.input_dim(), order, points.size());
  const int comps = out.components();
  for (std::size_t start = 0; start < points.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, points.size() - start);
    Points chunk(points.dim);
    chunk.coords.assign(points.coords.begin() + static_cast<std::ptrdiff_t>(start * points.dim),
                        points.coords.begin() + static_cast<std::ptrdiff_t>((start + n) * points.dim));
    const BatchForward fwd(config_, params_.span(), chunk, order);
    for (int c = 0; c < comps; ++c) {
      for (std::size_t p = 0; p < n; ++p) out(c, start + p) = fwd.component(c, p);
    }
  }
  return out;
}

JetBlock AnalyticField::jets(const Points& points, int order) const {
  if (points.dim != dim_) throw ConfigError("analytic field: point dimension mismatch");
  JetBlock out(dim_, order, points.size());
  for (std::size_t p = 0; p < points.size(); ++p) out.set(p, fn_(points.at(p)));
  return out;
}

LinearCombinationField::LinearCombinationField(double a, std::shared_ptr<const Field> f, double b,
                                               std::shared_ptr<const Field> g)
    : a_(a), b_(b), f_(std::move(f)), g_(std::move(g)) {
  if (f_->input_dim() != g_->input_dim()) throw ConfigError("combined fields differ in input dimension");
}

JetBlock LinearCombinationField::jets(const Points& points, int order) const {
  JetBlock jf = f_->jets(points, order);
  const JetBlock jg = g_->jets(points, order);
  for (std::size_t i = 0; i < jf.comps.size(); ++i) jf.comps[i] = a_ * jf.comps[i] + b_ * jg.comps[i];
  return jf;
}

}  // namespace pinnstab
