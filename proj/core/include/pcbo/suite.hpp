#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcbo/metrics.hpp"
#include "pcbo/objectives.hpp"
#include "pcbo/strategies.hpp"

namespace pcbo {

inline constexpr std::size_t kDefaultSeedCount = 10;
inline constexpr std::size_t kDefaultGmmIterations = 25;
inline constexpr std::size_t kDefaultIterations = 75;
inline constexpr std::size_t kKdePoints = 201;

/// One benchmark objective of a suite.
struct ObjectiveSpec {
  std::string name;  // label in reports
  std::string kind;  // gmm, levy6, hartmann6, rosenbrock3, rosenbrock4, surrogate
  int gmm_case = 0;
  std::uint64_t instance_seed = 0;  // which random GMM instance
  std::filesystem::path table;      // surrogate yield table
  std::vector<std::size_t> constrained_dims;
  std::optional<HierarchySpec> hierarchy;
};

struct SuiteConfig {
  std::vector<ObjectiveSpec> objectives;
  std::vector<StrategyConfig> strategies;
  std::size_t iterations = kDefaultIterations;  // T, batches after initialization
  std::size_t batch_size = 4;
  std::vector<std::uint64_t> seeds;
  std::size_t ts_grid_per_dim = kDefaultTsGridPerDim;
  std::size_t threads = 1;
  std::filesystem::path output_dir;

  void validate() const;
};

/// Objective names: gmm1..gmm4, levy6, hartmann6, rosenbrock3, rosenbrock4, surrogate.
/// Unless overridden, constrained dims are {0} for gmm, rosenbrock and surrogate and
/// {0,1,2} for levy6 and hartmann6; rosenbrock3 gets the levels {0},{1},{2} with
/// K = (1,2,4).
ObjectiveSpec default_objective_spec(std::string_view name);

/// Parses a suite document. Defaults: B = 4, T = 25 when every objective is a
/// GMM and 75 otherwise, seeds 0..9, delta = 0.1, beta = 2, xi = 0.01,
/// ts_grid_per_dim = 10. Relative table paths resolve against `base_dir`.
/// Throws ConfigError with the offending field path.
SuiteConfig parse_suite_config(std::string_view json_text,
                               const std::filesystem::path& base_dir = {});

Objective build_objective(const ObjectiveSpec& spec);
Problem build_problem(const ObjectiveSpec& spec, const Objective& objective,
                      std::size_t ts_grid_per_dim);

struct RunResult {
  std::string strategy;
  std::string objective;
  std::uint64_t seed = 0;
  RegretSeries series;  // empty when the run failed
  std::optional<std::string> error;

  bool ok() const noexcept { return !error.has_value(); }
};

struct SuiteResults {
  std::vector<RunResult> runs;  // sorted by (strategy, objective, seed)
  /// Acquisition parameters per strategy, e.g. "pc_ts_ei:ei(xi=0.01);random:none".
  std::string acquisition;
  std::size_t failures() const;
};

using ProgressFn = std::function<void(const RunResult&)>;

/// Every strategy x objective x seed campaign. Objectives are built before any
/// run starts, so a bad objective aborts the whole suite. A failing campaign is
/// recorded in its RunResult and does not stop the others.
SuiteResults run_suite(const SuiteConfig& config, const ProgressFn& progress = {});

struct ReportFiles {
  std::filesystem::path runs;
  std::filesystem::path median;
  std::filesystem::path kde;
};

/// Writes runs.csv, median.csv and kde.csv into `out_dir` (created if needed).
/// The first line of each file is a '#' metadata line holding the generation
/// time and the failure count; everything after it is deterministic. The KDE is
/// taken over the final log10 normalized regrets of successful runs.
ReportFiles emit_report(const SuiteResults& results, const std::filesystem::path& out_dir);

/// Reads a runs.csv written by emit_report.
SuiteResults read_runs_csv(const std::filesystem::path& path);

/// printf("%.17g").
std::string format_number(double v);

}  // namespace pcbo
