#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pcbo {

using Point = std::vector<double>;

/// Axis-aligned box; lower[i] < upper[i] for every dimension.
struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  Bounds() = default;
  /// Throws InputError on size mismatch, non-finite or empty intervals.
  Bounds(std::vector<double> lo, std::vector<double> hi);

  /// Same interval repeated `dim` times.
  static Bounds cube(std::size_t dim, double lo, double hi);

  std::size_t dimension() const noexcept { return lower.size(); }
  bool contains(std::span<const double> x) const noexcept;
  Point center() const;
  /// Box restricted to the listed dimensions, in the listed order.
  Bounds subset(std::span<const std::size_t> dims) const;

  /// Affine map into [0,1]^d and back.
  Point to_unit(std::span<const double> x) const;
  Point from_unit(std::span<const double> u) const;

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// Writes `free_values` into `base` at positions `free_dims`.
Point inject(std::span<const double> base, std::span<const std::size_t> free_dims,
             std::span<const double> free_values);

/// Gathers `x[dims[i]]`.
Point gather(std::span<const double> x, std::span<const std::size_t> dims);

}  // namespace pcbo
