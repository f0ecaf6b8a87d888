#include "pcbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pcbo/errors.hpp"

namespace pcbo {

AcquisitionSpec AcquisitionSpec::gp_ucb(double delta) {
  AcquisitionSpec s;
  s.kind = AcquisitionKind::gp_ucb;
  s.delta = delta;
  s.validate();
  return s;
}

AcquisitionSpec AcquisitionSpec::ucb(double beta) {
  AcquisitionSpec s;
  s.kind = AcquisitionKind::ucb;
  s.beta = beta;
  s.validate();
  return s;
}

AcquisitionSpec AcquisitionSpec::ei(double xi) {
  AcquisitionSpec s;
  s.kind = AcquisitionKind::ei;
  s.xi = xi;
  s.validate();
  return s;
}

void AcquisitionSpec::validate() const {
  switch (kind) {
    case AcquisitionKind::gp_ucb:
      if (!(delta > 0.0 && delta < 1.0)) throw InputError("gp_ucb: delta must lie in (0,1)");
      break;
    case AcquisitionKind::ucb:
      if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError("ucb: beta must be positive");
      break;
    case AcquisitionKind::ei:
      if (!(xi >= 0.0) || !std::isfinite(xi)) throw InputError("ei: xi must be non-negative");
      break;
  }
}

std::string to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::gp_ucb: return "gp_ucb";
    case AcquisitionKind::ucb: return "ucb";
    case AcquisitionKind::ei: return "ei";
  }
  return "unknown";
}

double beta_t(std::size_t t, std::size_t d, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("beta_t: delta must lie in (0,1)");
  if (t < 1) throw InputError("beta_t: t must be >= 1");
  if (d < 1) throw InputError("beta_t: d must be >= 1");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double exponent = 2.0 + static_cast<double>(d) / 2.0;
  // log form avoids overflow of t^(2+d/2) for large t and d
  return 2.0 * (std::log(pi2 / (3.0 * delta)) + exponent * std::log(static_cast<double>(t)));
}

double exploration_beta(const AcquisitionSpec& spec, std::size_t t, std::size_t d) {
  switch (spec.kind) {
    case AcquisitionKind::gp_ucb: return beta_t(std::max<std::size_t>(t, 1), d, spec.delta);
    case AcquisitionKind::ucb: return spec.beta;
    case AcquisitionKind::ei: return 0.0;
  }
  return 0.0;
}

double alpha_ucb(double mean, double stddev, double beta) {
  return mean + std::sqrt(beta) * stddev;
}

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) noexcept {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double alpha_ei(double mean, double stddev, double f_best, double xi) {
  const double delta = mean - f_best - xi;
  if (!(stddev > 0.0)) return std::max(delta, 0.0);
  const double z = delta / stddev;
  return std::max(delta * normal_cdf(z) + stddev * normal_pdf(z), 0.0);
}

double score(const GpPosterior& model, const AcquisitionSpec& spec, std::span<const double> x,
             std::size_t t, double f_best) {
  const Prediction p = model.predict(x);
  const double sd = std::sqrt(p.variance);
  switch (spec.kind) {
    case AcquisitionKind::gp_ucb:
    case AcquisitionKind::ucb:
      return alpha_ucb(p.mean, sd, exploration_beta(spec, t, model.dimension()));
    case AcquisitionKind::ei:
      return alpha_ei(p.mean, sd, f_best, spec.xi);
  }
  return 0.0;
}

}  // namespace pcbo
