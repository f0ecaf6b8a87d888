#include "pcbo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "pcbo/errors.hpp"

namespace pcbo {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct Factorization {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

// Cholesky of `c` with escalating diagonal jitter; `c` is modified in place.
Factorization factorize_with_jitter(Eigen::MatrixXd c, double scale, const char* what) {
  std::vector<double> attempted;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double previous = 0.0;
  for (double rel : kJitterLadder) {
    const double jitter = rel * scale;
    c.diagonal().array() += jitter - previous;
    previous = jitter;
    attempted.push_back(jitter);
    llt.compute(c);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd lower = llt.matrixL();
    const auto diag = lower.diagonal().array();
    if (!diag.isFinite().all() || (diag <= 0.0).any()) continue;
    return {std::move(lower), jitter};
  }
  std::ostringstream msg;
  msg << what << ": Cholesky factorization failed with jitter levels {";
  for (std::size_t i = 0; i < attempted.size(); ++i) msg << (i ? ", " : "") << attempted[i];
  msg << "}";
  throw FactorizationError(msg.str(), std::move(attempted));
}

Eigen::MatrixXd scale_rows(const Dataset& data, const std::optional<Bounds>& box) {
  Eigen::MatrixXd m(data.size(), data.dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Point u = box ? box->to_unit(data.inputs[i]) : data.inputs[i];
    for (std::size_t j = 0; j < data.dim; ++j) m(i, j) = u[j];
  }
  return m;
}

Eigen::MatrixXd pairwise_sqdist(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double s = (a.row(i) - a.row(j)).squaredNorm();
      d(i, j) = s;
      d(j, i) = s;
    }
  }
  return d;
}

Eigen::MatrixXd gram_from_sqdist(const Eigen::MatrixXd& sqdist, const KernelSpec& spec) {
  const double inv_l = 1.0 / spec.length_scale;
  Eigen::MatrixXd k = sqdist.unaryExpr([&](double s) {
    return spec.output_scale * kernel_profile(spec.kind, std::sqrt(s) * inv_l);
  });
  k.diagonal().array() += spec.noise_variance;
  return k;
}

double lml_from_factor(const Eigen::MatrixXd& lower, const Eigen::VectorXd& y) {
  const auto tri = lower.triangularView<Eigen::Lower>();
  const Eigen::VectorXd v = tri.solve(y);
  const double log_det = 2.0 * lower.diagonal().array().log().sum();
  return -0.5 * v.squaredNorm() - 0.5 * log_det - 0.5 * static_cast<double>(y.size()) * kLog2Pi;
}

}  // namespace

void KernelSpec::validate() const {
  if (!(output_scale > 0.0) || !std::isfinite(output_scale)) {
    throw InputError("kernel: output_scale must be positive and finite");
  }
  if (!(length_scale > 0.0) || !std::isfinite(length_scale)) {
    throw InputError("kernel: length_scale must be positive and finite");
  }
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw InputError("kernel: noise_variance must be non-negative and finite");
  }
}

double kernel_profile(KernelKind kind, double u) noexcept {
  switch (kind) {
    case KernelKind::matern25: {
      const double s = std::sqrt(5.0) * u;
      return (1.0 + s + s * s / 3.0) * std::exp(-s);
    }
    case KernelKind::rbf:
      return std::exp(-0.5 * u * u);
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> x2) {
  if (x.size() != x2.size()) {
    throw InputError("kernel_eval: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                     std::to_string(x2.size()) + ")");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - x2[i]) * (x[i] - x2[i]);
  return spec.output_scale * kernel_profile(spec.kind, std::sqrt(s) / spec.length_scale);
}

void Dataset::add(Point x, double y) {
  if (x.size() != dim) throw InputError("dataset: point dimension mismatch");
  inputs.push_back(std::move(x));
  outputs.push_back(y);
}

void Dataset::validate() const {
  if (inputs.size() != outputs.size()) {
    throw InputError("dataset: " + std::to_string(inputs.size()) + " inputs but " +
                     std::to_string(outputs.size()) + " outputs");
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != dim) {
      throw InputError("dataset: row " + std::to_string(i) + " has wrong dimension");
    }
    for (double v : inputs[i]) {
      if (!std::isfinite(v)) throw InputError("dataset: non-finite input in row " + std::to_string(i));
    }
    if (!std::isfinite(outputs[i])) {
      throw InputError("dataset: non-finite output in row " + std::to_string(i));
    }
  }
}

GpPosterior::GpPosterior(Dataset data, KernelSpec spec, std::optional<Bounds> input_box)
    : data_(std::move(data)), spec_(spec), box_(std::move(input_box)) {
  spec_.validate();
  data_.validate();
  if (box_ && box_->dimension() != data_.dim) {
    throw InputError("fit: input box dimension does not match dataset");
  }
  inputs_ = scale_rows(data_, box_);
  const std::size_t n = data_.size();
  if (n == 0) return;

  const Eigen::MatrixXd c = gram_from_sqdist(pairwise_sqdist(inputs_), spec_);
  Factorization f = factorize_with_jitter(c, spec_.output_scale, "fit");
  chol_ = std::move(f.lower);
  jitter_ = f.jitter;

  const Eigen::Map<const Eigen::VectorXd> y(data_.outputs.data(), static_cast<Eigen::Index>(n));
  alpha_ = chol_.triangularView<Eigen::Lower>().solve(y);
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

Eigen::VectorXd GpPosterior::scaled(std::span<const double> x) const {
  if (x.size() != data_.dim) {
    throw InputError("predict: point has dimension " + std::to_string(x.size()) +
                     ", model expects " + std::to_string(data_.dim));
  }
  Eigen::VectorXd z(static_cast<Eigen::Index>(x.size()));
  if (box_) {
    const Point u = box_->to_unit(x);
    for (std::size_t i = 0; i < u.size(); ++i) z[static_cast<Eigen::Index>(i)] = u[i];
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) z[static_cast<Eigen::Index>(i)] = x[i];
  }
  return z;
}

Eigen::VectorXd GpPosterior::cross_kernel(const Eigen::VectorXd& z) const {
  const Eigen::Index n = inputs_.rows();
  Eigen::VectorXd k(n);
  const double inv_l = 1.0 / spec_.length_scale;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = (inputs_.row(i).transpose() - z).norm();
    k[i] = spec_.output_scale * kernel_profile(spec_.kind, r * inv_l);
  }
  return k;
}

Prediction GpPosterior::predict(std::span<const double> x) const {
  const Eigen::VectorXd z = scaled(x);
  if (data_.empty()) return {0.0, spec_.output_scale};
  const Eigen::VectorXd k = cross_kernel(z);
  const double mean = k.dot(alpha_);
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
  const double var = spec_.output_scale - v.squaredNorm();
  return {mean, std::max(var, 0.0)};
}

double GpPosterior::log_marginal_likelihood() const {
  if (data_.empty()) return 0.0;
  const Eigen::Map<const Eigen::VectorXd> y(data_.outputs.data(),
                                            static_cast<Eigen::Index>(data_.size()));
  return -0.5 * y.dot(alpha_) - 0.5 * log_det_ -
         0.5 * static_cast<double>(data_.size()) * kLog2Pi;
}

GpPosterior GpPosterior::with_hallucinated(std::span<const Point> points) const {
  Dataset augmented = data_;
  for (const Point& p : points) {
    const double mu = predict(p).mean;
    augmented.add(p, mu);
  }
  return GpPosterior(std::move(augmented), spec_, box_);
}

Eigen::VectorXd GpPosterior::mean_at(std::span<const Point> points) const {
  Eigen::VectorXd mu(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Eigen::VectorXd z = scaled(points[i]);
    mu[static_cast<Eigen::Index>(i)] = data_.empty() ? 0.0 : cross_kernel(z).dot(alpha_);
  }
  return mu;
}

Eigen::MatrixXd GpPosterior::covariance_at(std::span<const Point> points) const {
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd z(m, static_cast<Eigen::Index>(data_.dim));
  for (Eigen::Index i = 0; i < m; ++i) z.row(i) = scaled(points[static_cast<std::size_t>(i)]);

  KernelSpec latent = spec_;
  latent.noise_variance = 0.0;
  Eigen::MatrixXd cov = gram_from_sqdist(pairwise_sqdist(z), latent);
  if (!data_.empty()) {
    Eigen::MatrixXd cross(inputs_.rows(), m);
    for (Eigen::Index j = 0; j < m; ++j) cross.col(j) = cross_kernel(z.row(j).transpose());
    chol_.triangularView<Eigen::Lower>().solveInPlace(cross);
    cov.noalias() -= cross.transpose() * cross;
  }
  return cov;
}

GpPosterior fit(Dataset data, KernelSpec spec, std::optional<Bounds> input_box) {
  return GpPosterior(std::move(data), spec, std::move(input_box));
}

Prediction predict(const GpPosterior& model, std::span<const double> x) {
  return model.predict(x);
}

double log_marginal_likelihood(const GpPosterior& model) {
  return model.log_marginal_likelihood();
}

// ---------------------------------------------------------------------------
// Hyperparameter search

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class LikelihoodSurface {
 public:
  LikelihoodSurface(const Dataset& data, const std::optional<Bounds>& box, KernelKind kind)
      : sqdist_(pairwise_sqdist(scale_rows(data, box))),
        y_(Eigen::Map<const Eigen::VectorXd>(data.outputs.data(),
                                             static_cast<Eigen::Index>(data.size()))),
        kind_(kind) {}

  double operator()(const KernelSpec& spec) const {
    try {
      const Eigen::MatrixXd c = gram_from_sqdist(sqdist_, spec);
      const Factorization f = factorize_with_jitter(c, spec.output_scale, "hyperparameters");
      const double v = lml_from_factor(f.lower, y_);
      return std::isfinite(v) ? v : kNegInf;
    } catch (const NumericalError&) {
      return kNegInf;
    }
  }

  KernelKind kind() const noexcept { return kind_; }

 private:
  Eigen::MatrixXd sqdist_;
  Eigen::VectorXd y_;
  KernelKind kind_;
};

struct LogBox {
  std::vector<double> lo, hi;
};

KernelSpec decode(const std::vector<double>& p, KernelKind kind, double fixed_noise) {
  KernelSpec s;
  s.kind = kind;
  s.length_scale = std::exp(p[0]);
  s.output_scale = std::exp(p[1]);
  s.noise_variance = p.size() > 2 ? std::exp(p[2]) : fixed_noise;
  return s;
}

}  // namespace

double output_reference(std::span<const double> y) {
  if (y.empty()) return 1.0;
  const double n = static_cast<double>(y.size());
  double mean = 0.0, sq = 0.0;
  for (double v : y) {
    mean += v;
    sq += v * v;
  }
  mean /= n;
  sq /= n;
  const double var = std::max(sq - mean * mean, 0.0);
  if (var > 1e-12 * std::max(sq, 1e-300)) return var;
  return sq > 0.0 ? sq : 1.0;
}

HyperparameterFit optimize_hyperparams(const Dataset& data, const KernelSpec& default_spec,
                                       const HyperparameterBounds& bounds, std::size_t restarts,
                                       RandomStream& rng, const std::optional<Bounds>& input_box,
                                       const std::optional<KernelSpec>& warm_start) {
  default_spec.validate();
  data.validate();
  if (data.size() < 2) {
    double lml = 0.0;
    try {
      lml = GpPosterior(data, default_spec, input_box).log_marginal_likelihood();
    } catch (const NumericalError&) {
      lml = kNegInf;
    }
    return {default_spec, lml, false};
  }

  const double ref = output_reference(data.outputs);
  const double fixed_noise = bounds.noise_rel * ref;
  LogBox box;
  box.lo = {std::log(bounds.length_lower), std::log(bounds.scale_lower_rel * ref)};
  box.hi = {std::log(bounds.length_upper), std::log(bounds.scale_upper_rel * ref)};
  if (bounds.learn_noise) {
    box.lo.push_back(std::log(bounds.noise_lower_rel * ref));
    box.hi.push_back(std::log(bounds.noise_upper_rel * ref));
  }
  const std::size_t dims = box.lo.size();

  const LikelihoodSurface surface(data, input_box, default_spec.kind);
  auto value_of = [&](const std::vector<double>& p) {
    return surface(decode(p, default_spec.kind, fixed_noise));
  };
  auto encode = [&](const KernelSpec& s) {
    std::vector<double> p = {std::log(s.length_scale), std::log(s.output_scale)};
    if (bounds.learn_noise) p.push_back(std::log(std::max(s.noise_variance, 1e-300)));
    for (std::size_t i = 0; i < dims; ++i) p[i] = std::clamp(p[i], box.lo[i], box.hi[i]);
    return p;
  };

  std::vector<std::vector<double>> starts;
  starts.push_back(encode(default_spec));
  if (warm_start) starts.push_back(encode(*warm_start));
  const std::size_t total = std::max<std::size_t>(restarts, starts.size());
  while (starts.size() < total) {
    std::vector<double> p(dims);
    for (std::size_t i = 0; i < dims; ++i) p[i] = rng.uniform(box.lo[i], box.hi[i]);
    starts.push_back(std::move(p));
  }

  std::vector<double> best_p;
  double best = kNegInf;

  // The incoming default counts as a candidate when it already lies in the box.
  {
    const double l = std::log(default_spec.length_scale);
    const double s = std::log(default_spec.output_scale);
    if (l >= box.lo[0] && l <= box.hi[0] && s >= box.lo[1] && s <= box.hi[1]) {
      const double v = surface(default_spec);
      if (v > best) {
        best = v;
        best_p.clear();
      }
    }
  }

  constexpr double kInvPhi = 0.6180339887498949;
  constexpr int kGoldenSteps = 12;
  constexpr std::array<double, 2> kPassWidth = {0.25, 0.06};

  for (const auto& start : starts) {
    std::vector<double> cur = start;
    double cur_val = value_of(cur);
    for (double width_frac : kPassWidth) {
      for (std::size_t c = 0; c < dims; ++c) {
        const double w = width_frac * (box.hi[c] - box.lo[c]);
        double a = std::max(box.lo[c], cur[c] - w);
        double b = std::min(box.hi[c], cur[c] + w);
        std::vector<double> probe = cur;
        auto eval_at = [&](double v) {
          probe[c] = v;
          return value_of(probe);
        };
        double x1 = b - kInvPhi * (b - a);
        double x2 = a + kInvPhi * (b - a);
        double f1 = eval_at(x1);
        double f2 = eval_at(x2);
        double arg = f1 >= f2 ? x1 : x2;
        double val = std::max(f1, f2);
        for (int it = 0; it < kGoldenSteps; ++it) {
          if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = eval_at(x1);
            if (f1 > val) {
              val = f1;
              arg = x1;
            }
          } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = eval_at(x2);
            if (f2 > val) {
              val = f2;
              arg = x2;
            }
          }
        }
        if (val > cur_val) {
          cur[c] = arg;
          cur_val = val;
        }
      }
    }
    if (cur_val > best) {
      best = cur_val;
      best_p = cur;
    }
  }

  if (!(best > kNegInf)) return {default_spec, kNegInf, true};
  if (best_p.empty()) return {default_spec, best, false};
  return {decode(best_p, default_spec.kind, fixed_noise), best, false};
}

// ---------------------------------------------------------------------------
// Joint sampling on grids

GridSampler::GridSampler(const GpPosterior& model, std::vector<Point> grid)
    : grid_(std::move(grid)) {
  if (grid_.empty()) throw InputError("sample_on_grid: empty grid");
  mean_ = model.mean_at(grid_);
  const Eigen::MatrixXd cov = model.covariance_at(grid_);
  const double threshold = kDeterministicVarianceFraction * model.kernel().output_scale;
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    if (cov(i, i) > threshold) random_idx_.push_back(static_cast<std::size_t>(i));
  }
  if (random_idx_.empty()) return;
  Eigen::MatrixXd block = cov(random_idx_, random_idx_);
  block = 0.5 * (block + block.transpose()).eval();
  Factorization f = factorize_with_jitter(std::move(block), model.kernel().output_scale,
                                          "sample_on_grid");
  chol_ = std::move(f.lower);
  jitter_ = f.jitter;
}

std::vector<double> GridSampler::draw(RandomStream& rng) const {
  const std::size_t m = grid_.size();
  Eigen::VectorXd z(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) z[static_cast<Eigen::Index>(i)] = rng.normal();
  std::vector<double> out(mean_.data(), mean_.data() + m);
  if (random_idx_.empty()) return out;
  const Eigen::VectorXd zs = z(random_idx_);
  const Eigen::VectorXd delta = chol_.triangularView<Eigen::Lower>() * zs;
  for (std::size_t k = 0; k < random_idx_.size(); ++k) {
    out[random_idx_[k]] += delta[static_cast<Eigen::Index>(k)];
  }
  return out;
}

std::vector<double> sample_on_grid(const GpPosterior& model, std::vector<Point> grid,
                                   RandomStream& rng) {
  return GridSampler(model, std::move(grid)).draw(rng);
}

}  // namespace pcbo
