#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "pcbo/gp.hpp"

namespace pcbo {

/// Fixed exploration weight used by plain UCB.
inline constexpr double kDefaultUcbBeta = 2.0;
inline constexpr double kDefaultGpUcbDelta = 0.1;
inline constexpr double kDefaultEiXi = 0.01;

enum class AcquisitionKind { gp_ucb, ucb, ei };

/// One of: gp_ucb(delta), ucb(beta), ei(xi). Only the field for `kind` is read.
struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::ucb;
  double delta = kDefaultGpUcbDelta;
  double beta = kDefaultUcbBeta;
  double xi = kDefaultEiXi;

  static AcquisitionSpec gp_ucb(double delta);
  static AcquisitionSpec ucb(double beta);
  static AcquisitionSpec ei(double xi);

  void validate() const;
  friend bool operator==(const AcquisitionSpec&, const AcquisitionSpec&) = default;
};

std::string to_string(AcquisitionKind kind);

/// 2 log(pi^2 t^(2 + d/2) / (3 delta)).
double beta_t(std::size_t t, std::size_t d, double delta);

/// Exploration weight actually used for `spec` at iteration t in dimension d.
double exploration_beta(const AcquisitionSpec& spec, std::size_t t, std::size_t d);

double alpha_ucb(double mean, double stddev, double beta);
double alpha_ei(double mean, double stddev, double f_best, double xi);

double normal_cdf(double z) noexcept;
double normal_pdf(double z) noexcept;

/// predict() followed by the alpha function for `spec`.
double score(const GpPosterior& model, const AcquisitionSpec& spec, std::span<const double> x,
             std::size_t t, double f_best);

}  // namespace pcbo
