#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcbo/gp.hpp"
#include "pcbo/random.hpp"
#include "pcbo/types.hpp"

namespace pcbo {

/// Equal-weight 2D Gaussian mixture with diagonal covariances.
struct GmmObjective {
  std::vector<double> weights;
  std::vector<std::array<double, 2>> means;
  std::vector<std::array<double, 2>> variances;  // diagonal of each covariance

  std::size_t components() const noexcept { return weights.size(); }
  void validate() const;
};

inline constexpr double kGmmDomain = 3.0;
inline constexpr double kGmmMinMeanSpacing = 2.0;
inline constexpr int kGmmMaxAttempts = 1000;

/// Case 1..4: `case_number` components, means uniform on [-3,3]^2 (spaced at
/// least 2.0 apart for cases 2-3), variances uniform in [0.7,1.3] (cases 1-3)
/// or [1.5,2.0] (case 4).
GmmObjective gmm_generate(int case_number, RandomStream& rng);
double gmm_eval(const GmmObjective& model, std::span<const double> x);

struct Optimum {
  Point x_star;
  double f_star = 0.0;
  /// Independent numeric check (grid scan + local refinement) when one was run.
  std::optional<double> f_star_numeric;
};

/// A benchmark function to be maximized over `bounds`. Immutable.
class Objective {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  Objective(std::string name, Bounds bounds, Fn fn, Optimum optimum);

  const std::string& name() const noexcept { return name_; }
  std::size_t dimension() const noexcept { return bounds_.dimension(); }
  const Bounds& bounds() const noexcept { return bounds_; }
  const Optimum& optimum() const noexcept { return optimum_; }
  double f_star() const noexcept { return optimum_.f_star; }
  double operator()(std::span<const double> x) const { return (*fn_)(x); }

 private:
  std::string name_;
  Bounds bounds_;
  std::shared_ptr<const Fn> fn_;
  Optimum optimum_;
};

/// Analytic benchmark value: levy6, hartmann6, rosenbrock3, rosenbrock4.
/// Throws InputError for unknown names, wrong dimension or out-of-bounds x.
double eval_synthetic(std::string_view name, std::span<const double> x);
Bounds synthetic_bounds(std::string_view name);
bool is_synthetic(std::string_view name);

Objective make_synthetic(std::string_view name);
Objective make_gmm_objective(const GmmObjective& model, std::string name);

/// Cached optimum of a registered objective.
Optimum true_optimum(const Objective& objective);

/// Largest value on a `per_dim`-per-axis grid, then compass-search refinement.
Optimum numeric_optimum(const Objective::Fn& fn, const Bounds& bounds, std::size_t per_dim);

/// Compass search from `start`, staying inside `bounds`.
Optimum refine_maximum(const Objective::Fn& fn, const Bounds& bounds, Point start,
                       double initial_step);

// --- surrogate objective from tabular yield data ---

struct TableRecord {
  Point inputs;
  double yield = 0.0;
};

inline constexpr double kSurrogateMassMg = 150.0;

/// Realistic design space: flow in [5,50] ml/min, block temperature in [520,590] C.
Bounds realistic_design_space();

/// Parses CSV text with header columns flow_ml_min, temp_c, yield_pct and optional
/// mass_mg. Rows with a mass column other than 150 mg are dropped. Inputs are
/// returned as (flow, temperature). Throws InputError naming the failing row.
std::vector<TableRecord> read_yield_table(std::istream& in);
std::vector<TableRecord> read_yield_table_file(const std::string& path);

/// GP behind a surrogate objective: f(x) = max(0, offset + gp.predict(x).mean).
struct SurrogateModel {
  GpPosterior gp;
  double offset = 0.0;
};

/// Fits the surrogate GP. Yields are centered on their mean before fitting.
SurrogateModel fit_surrogate_model(const std::vector<TableRecord>& records, const Bounds& bounds);

/// RBF-kernel GP fitted to the table by marginal likelihood; the objective is its
/// posterior mean, floored at zero. Needs at least 5 records.
Objective fit_surrogate_from_table(const std::vector<TableRecord>& records,
                                   std::optional<Bounds> bounds = std::nullopt,
                                   std::string name = "surrogate");

}  // namespace pcbo
