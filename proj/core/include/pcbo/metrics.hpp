#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pcbo/strategies.hpp"

namespace pcbo {

/// Regrets below this are reported as this in log space.
inline constexpr double kRegretFloor = 1e-12;
inline constexpr double kMinKdeBandwidth = 1e-3;

/// 1 - f_val / f_star clamped into [0, 1]. Throws InputError unless f_star > 0.
double normalized_regret(double f_val, double f_star);

/// log10(max(regret, 1e-12)).
double log_normalized_regret(double regret);

/// Sum of |f_star - f(x_t)| over every proposed point.
double cumulative_regret(std::span<const double> values, double f_star);

/// Per-iteration regret of the best observation so far.
struct RegretSeries {
  std::vector<double> best_value;
  std::vector<double> regret;
  std::vector<double> log_regret;

  std::size_t size() const noexcept { return best_value.size(); }
};

/// Series from running best values (one per iteration).
RegretSeries regret_series(std::span<const double> best_values, double f_star);
/// Iteration t covers every point evaluated in iterations 0..t. Throws InputError
/// for an empty history.
RegretSeries best_so_far_series(const CampaignHistory& history, double f_star);

/// Element-wise median; an even number of runs averages the central pair.
std::vector<double> median_series(const std::vector<std::vector<double>>& runs);

/// Scott's rule n^(-1/5) * stddev, at least kMinKdeBandwidth.
double scott_bandwidth(std::span<const double> samples);

/// Gaussian kernel density estimate of `samples` at `eval_points`.
std::vector<double> kde(std::span<const double> samples, std::span<const double> eval_points);

}  // namespace pcbo
