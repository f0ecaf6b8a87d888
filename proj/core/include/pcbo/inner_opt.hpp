#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pcbo/types.hpp"

namespace pcbo {

using ScalarObjective = std::function<double(std::span<const double>)>;

inline constexpr std::size_t kDefaultDirectEvaluations = 500;
inline constexpr double kDirectEpsilon = 1e-4;
inline constexpr std::size_t kDefaultGridCap = 1'000'000;

struct MaximizeResult {
  Point point;
  double value = 0.0;
  std::size_t evaluations = 0;
};

/// DIRECT (dividing rectangles) maximization over a box.
///
/// The first sample is the box center. Rectangles are trisected along all of
/// their longest sides; potentially optimal rectangles are chosen with slack
/// `kDirectEpsilon`, one per distinct diameter (lowest value, then oldest).
/// Stops before a division that would exceed `max_evals`.
/// Throws NumericalError if the objective returns a non-finite value.
MaximizeResult direct_maximize(const ScalarObjective& objective, const Bounds& bounds,
                               std::size_t max_evals = kDefaultDirectEvaluations);

/// DIRECT over `free_dims` only; the remaining coordinates are taken from `base`.
/// The returned point is full-dimensional.
MaximizeResult direct_maximize_subspace(const ScalarObjective& objective, const Bounds& bounds,
                                        std::span<const double> base,
                                        std::span<const std::size_t> free_dims,
                                        std::size_t max_evals = kDefaultDirectEvaluations);

struct GridArgmax {
  std::size_t index = 0;
  Point point;
  double value = 0.0;
};

/// Largest value; ties go to the lowest index.
GridArgmax grid_argmax(std::span<const double> values, std::span<const Point> points);

/// Regular grid with `per_dim` points per axis, endpoints included, last
/// dimension varying fastest. Throws CapacityError past `cap` points.
std::vector<Point> unit_grid(const Bounds& bounds, std::size_t per_dim,
                             std::size_t cap = kDefaultGridCap);

}  // namespace pcbo
