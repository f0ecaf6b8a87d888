#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pcbo/random.hpp"
#include "pcbo/types.hpp"

namespace pcbo {

enum class KernelKind { matern25, rbf };

/// Isotropic stationary kernel: output_scale * profile(||x - x'|| / length_scale).
struct KernelSpec {
  KernelKind kind = KernelKind::matern25;
  double output_scale = 1.0;
  double length_scale = 1.0;
  double noise_variance = 0.0;

  void validate() const;
  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// Radial profile m(u); m(0) = 1.
double kernel_profile(KernelKind kind, double u) noexcept;

/// Kernel value between two raw points (no input rescaling).
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> x2);

/// Observations D = {(x_i, y_i)}; `dim` is kept so an empty set still has a dimension.
struct Dataset {
  std::size_t dim = 0;
  std::vector<Point> inputs;
  std::vector<double> outputs;

  Dataset() = default;
  explicit Dataset(std::size_t dimension) : dim(dimension) {}

  std::size_t size() const noexcept { return outputs.size(); }
  bool empty() const noexcept { return outputs.empty(); }
  void add(Point x, double y);
  /// Throws InputError on ragged rows, count mismatch or non-finite entries.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Diagonal jitter tried in order, relative to output_scale.
inline constexpr std::array<double, 5> kJitterLadder = {0.0, 1e-10, 1e-8, 1e-6, 1e-4};

/// Posterior variances at or below this fraction of output_scale are treated as zero
/// when drawing joint samples.
inline constexpr double kDeterministicVarianceFraction = 1e-12;

/// Zero-mean GP conditioned on a dataset.
///
/// When `input_box` is given, inputs are mapped affinely to the unit cube before
/// the kernel sees them, so one length scale serves dimensions with different
/// units. Immutable after construction.
class GpPosterior {
 public:
  GpPosterior(Dataset data, KernelSpec spec, std::optional<Bounds> input_box = std::nullopt);

  const KernelSpec& kernel() const noexcept { return spec_; }
  const Dataset& data() const noexcept { return data_; }
  const std::optional<Bounds>& input_box() const noexcept { return box_; }
  std::size_t dimension() const noexcept { return data_.dim; }
  /// Absolute diagonal jitter that was needed to factorize C.
  double applied_jitter() const noexcept { return jitter_; }
  /// Lower-triangular L with L L^T = K + (noise + jitter) I.
  const Eigen::MatrixXd& factor() const noexcept { return chol_; }
  const Eigen::VectorXd& weights() const noexcept { return alpha_; }

  Prediction predict(std::span<const double> x) const;
  double log_marginal_likelihood() const;

  /// Same kernel, with `points` added as observations at their current posterior
  /// mean. Only the variance changes.
  GpPosterior with_hallucinated(std::span<const Point> points) const;

  /// Posterior mean vector and covariance matrix over a set of points.
  Eigen::VectorXd mean_at(std::span<const Point> points) const;
  Eigen::MatrixXd covariance_at(std::span<const Point> points) const;

 private:
  Eigen::VectorXd scaled(std::span<const double> x) const;
  Eigen::VectorXd cross_kernel(const Eigen::VectorXd& z) const;

  Dataset data_;
  KernelSpec spec_;
  std::optional<Bounds> box_;
  Eigen::MatrixXd inputs_;  // n x d, scaled
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
  double log_det_ = 0.0;
};

GpPosterior fit(Dataset data, KernelSpec spec, std::optional<Bounds> input_box = std::nullopt);
Prediction predict(const GpPosterior& model, std::span<const double> x);
double log_marginal_likelihood(const GpPosterior& model);

/// Search box for hyperparameters. Scale bounds and noise are relative to the
/// output scale of the data (var(y), or mean(y^2) when the variance vanishes).
struct HyperparameterBounds {
  double length_lower = 1e-2;
  double length_upper = 1e1;
  double scale_lower_rel = 1e-3;
  double scale_upper_rel = 1e3;
  double noise_rel = 1e-6;
  bool learn_noise = false;
  double noise_lower_rel = 1e-8;
  double noise_upper_rel = 1e-1;
};

/// var(y), or mean(y^2) when the variance vanishes, or 1 for all-zero or empty y.
double output_reference(std::span<const double> y);

struct HyperparameterFit {
  KernelSpec spec;
  double log_likelihood = 0.0;
  /// Set when every restart failed and `spec` is the incoming default.
  bool warning = false;
};

/// Multistart bounded maximization of the log marginal likelihood over
/// (log length_scale, log output_scale[, log noise]) using coordinate-wise
/// golden-section passes. `warm_start`, when given, is one of the restarts.
HyperparameterFit optimize_hyperparams(const Dataset& data, const KernelSpec& default_spec,
                                       const HyperparameterBounds& bounds, std::size_t restarts,
                                       RandomStream& rng,
                                       const std::optional<Bounds>& input_box = std::nullopt,
                                       const std::optional<KernelSpec>& warm_start = std::nullopt);

/// Joint posterior over a fixed grid, factorized once and sampled many times.
///
/// A draw consumes one standard normal z_i per grid point, in grid order.
/// Points whose posterior variance is at most kDeterministicVarianceFraction *
/// output_scale take their mean; the rest get mean_S + L_S z_S where L_S is the
/// Cholesky factor of their covariance block plus the smallest working jitter.
class GridSampler {
 public:
  GridSampler(const GpPosterior& model, std::vector<Point> grid);

  const std::vector<Point>& grid() const noexcept { return grid_; }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  double applied_jitter() const noexcept { return jitter_; }

  std::vector<double> draw(RandomStream& rng) const;

 private:
  std::vector<Point> grid_;
  Eigen::VectorXd mean_;
  std::vector<std::size_t> random_idx_;
  Eigen::MatrixXd chol_;
  double jitter_ = 0.0;
};

/// One joint posterior draw over `grid`.
std::vector<double> sample_on_grid(const GpPosterior& model, std::vector<Point> grid,
                                   RandomStream& rng);

}  // namespace pcbo
