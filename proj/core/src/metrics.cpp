#include "pcbo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pcbo/errors.hpp"

namespace pcbo {

double normalized_regret(double f_val, double f_star) {
  if (!(f_star > 0.0) || !std::isfinite(f_star)) {
    throw InputError("normalized_regret: f_star must be positive and finite, got " +
                     std::to_string(f_star));
  }
  if (std::isnan(f_val)) throw InputError("normalized_regret: f_val is NaN");
  return std::clamp(1.0 - f_val / f_star, 0.0, 1.0);
}

double log_normalized_regret(double regret) {
  return std::log10(std::max(regret, kRegretFloor));
}

double cumulative_regret(std::span<const double> values, double f_star) {
  double total = 0.0;
  for (double v : values) total += std::abs(f_star - v);
  return total;
}

RegretSeries regret_series(std::span<const double> best_values, double f_star) {
  RegretSeries s;
  double running = -std::numeric_limits<double>::infinity();
  for (double v : best_values) {
    running = std::max(running, v);
    s.best_value.push_back(running);
    s.regret.push_back(normalized_regret(running, f_star));
    s.log_regret.push_back(log_normalized_regret(s.regret.back()));
  }
  return s;
}

RegretSeries best_so_far_series(const CampaignHistory& history, double f_star) {
  if (history.iterations.empty()) throw InputError("best_so_far_series: empty history");
  std::vector<double> best;
  double running = -std::numeric_limits<double>::infinity();
  for (const auto& rec : history.iterations) {
    for (double v : rec.values) running = std::max(running, v);
    best.push_back(running);
  }
  return regret_series(best, f_star);
}

std::vector<double> median_series(const std::vector<std::vector<double>>& runs) {
  if (runs.empty()) throw InputError("median_series: no runs");
  const std::size_t len = runs.front().size();
  for (const auto& r : runs) {
    if (r.size() != len) {
      throw InputError("median_series: series lengths differ (" + std::to_string(len) + " vs " +
                       std::to_string(r.size()) + ")");
    }
  }
  std::vector<double> out(len);
  std::vector<double> column(runs.size());
  const std::size_t mid = runs.size() / 2;
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t i = 0; i < runs.size(); ++i) column[i] = runs[i][t];
    std::sort(column.begin(), column.end());
    out[t] = runs.size() % 2 == 1 ? column[mid] : 0.5 * (column[mid - 1] + column[mid]);
  }
  return out;
}

double scott_bandwidth(std::span<const double> samples) {
  if (samples.empty()) throw InputError("scott_bandwidth: no samples");
  const double n = static_cast<double>(samples.size());
  double stddev = 0.0;
  if (samples.size() > 1) {
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= n;
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    stddev = std::sqrt(ss / (n - 1.0));
  }
  return std::max(std::pow(n, -0.2) * stddev, kMinKdeBandwidth);
}

std::vector<double> kde(std::span<const double> samples, std::span<const double> eval_points) {
  const double h = scott_bandwidth(samples);
  const double norm =
      1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out;
  out.reserve(eval_points.size());
  for (double x : eval_points) {
    double acc = 0.0;
    for (double s : samples) {
      const double u = (x - s) / h;
      acc += std::exp(-0.5 * u * u);
    }
    out.push_back(norm * acc);
  }
  return out;
}

}  // namespace pcbo
