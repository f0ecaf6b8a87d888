#include "pcbo/types.hpp"

#include <cmath>
#include <string>

#include "pcbo/errors.hpp"

namespace pcbo {

Bounds::Bounds(std::vector<double> lo, std::vector<double> hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) {
    throw InputError("bounds: lower has " + std::to_string(lower.size()) +
                     " entries, upper has " + std::to_string(upper.size()));
  }
  if (lower.empty()) throw InputError("bounds: zero-dimensional box");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i])) {
      throw InputError("bounds: dimension " + std::to_string(i) +
                       " needs finite lower < upper");
    }
  }
}

Bounds Bounds::cube(std::size_t dim, double lo, double hi) {
  return Bounds(std::vector<double>(dim, lo), std::vector<double>(dim, hi));
}

bool Bounds::contains(std::span<const double> x) const noexcept {
  if (x.size() != lower.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

Point Bounds::center() const {
  Point c(lower.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
  return c;
}

Bounds Bounds::subset(std::span<const std::size_t> dims) const {
  std::vector<double> lo, hi;
  lo.reserve(dims.size());
  hi.reserve(dims.size());
  for (std::size_t d : dims) {
    if (d >= lower.size()) throw InputError("bounds: subset index out of range");
    lo.push_back(lower[d]);
    hi.push_back(upper[d]);
  }
  return Bounds(std::move(lo), std::move(hi));
}

Point Bounds::to_unit(std::span<const double> x) const {
  if (x.size() != lower.size()) throw InputError("bounds: point dimension mismatch");
  Point u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) u[i] = (x[i] - lower[i]) / (upper[i] - lower[i]);
  return u;
}

Point Bounds::from_unit(std::span<const double> u) const {
  if (u.size() != lower.size()) throw InputError("bounds: point dimension mismatch");
  Point x(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    x[i] = lower[i] + u[i] * (upper[i] - lower[i]);
    // round-off can push an endpoint just outside the box
    if (x[i] < lower[i]) x[i] = lower[i];
    if (x[i] > upper[i]) x[i] = upper[i];
  }
  return x;
}

Point inject(std::span<const double> base, std::span<const std::size_t> free_dims,
             std::span<const double> free_values) {
  if (free_dims.size() != free_values.size()) {
    throw InputError("inject: index/value count mismatch");
  }
  Point out(base.begin(), base.end());
  for (std::size_t i = 0; i < free_dims.size(); ++i) {
    if (free_dims[i] >= out.size()) throw InputError("inject: index out of range");
    out[free_dims[i]] = free_values[i];
  }
  return out;
}

Point gather(std::span<const double> x, std::span<const std::size_t> dims) {
  Point out;
  out.reserve(dims.size());
  for (std::size_t d : dims) {
    if (d >= x.size()) throw InputError("gather: index out of range");
    out.push_back(x[d]);
  }
  return out;
}

}  // namespace pcbo
