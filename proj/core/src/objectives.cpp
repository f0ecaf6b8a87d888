#include "pcbo/objectives.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>

#include "pcbo/errors.hpp"

namespace pcbo {

// ---------------------------------------------------------------------------
// Gaussian mixtures

void GmmObjective::validate() const {
  const std::size_t k = weights.size();
  if (k == 0 || means.size() != k || variances.size() != k) {
    throw InputError("gmm: component arrays must be non-empty and equally sized");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InputError("gmm: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InputError("gmm: weights must sum to 1");
  for (const auto& v : variances) {
    if (!(v[0] > 0.0 && v[1] > 0.0)) throw InputError("gmm: covariance not positive-definite");
  }
}

GmmObjective gmm_generate(int case_number, RandomStream& rng) {
  if (case_number < 1 || case_number > 4) {
    throw InputError("gmm_generate: case must be 1..4, got " + std::to_string(case_number));
  }
  const auto k = static_cast<std::size_t>(case_number);
  const bool wide = case_number == 4;
  const bool spaced = case_number == 2 || case_number == 3;
  const double var_lo = wide ? 1.5 : 0.7;
  const double var_hi = wide ? 2.0 : 1.3;

  GmmObjective g;
  g.weights.assign(k, 1.0 / static_cast<double>(k));
  for (int attempt = 0;; ++attempt) {
    if (attempt >= kGmmMaxAttempts) {
      throw NumericalError("gmm_generate: could not place " + std::to_string(k) +
                           " means with spacing >= 2.0 in " +
                           std::to_string(kGmmMaxAttempts) + " attempts");
    }
    g.means.clear();
    for (std::size_t i = 0; i < k; ++i) {
      g.means.push_back({rng.uniform(-kGmmDomain, kGmmDomain), rng.uniform(-kGmmDomain, kGmmDomain)});
    }
    if (!spaced) break;
    bool ok = true;
    for (std::size_t i = 0; i < k && ok; ++i) {
      for (std::size_t j = i + 1; j < k && ok; ++j) {
        ok = std::hypot(g.means[i][0] - g.means[j][0], g.means[i][1] - g.means[j][1]) >=
             kGmmMinMeanSpacing;
      }
    }
    if (ok) break;
  }
  for (std::size_t i = 0; i < k; ++i) {
    g.variances.push_back({rng.uniform(var_lo, var_hi), rng.uniform(var_lo, var_hi)});
  }
  return g;
}

double gmm_eval(const GmmObjective& model, std::span<const double> x) {
  if (x.size() != 2) throw InputError("gmm_eval: expects a 2D point");
  double p = 0.0;
  for (std::size_t k = 0; k < model.components(); ++k) {
    const double dx = x[0] - model.means[k][0];
    const double dy = x[1] - model.means[k][1];
    const double vx = model.variances[k][0];
    const double vy = model.variances[k][1];
    const double q = dx * dx / vx + dy * dy / vy;
    p += model.weights[k] * std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(vx * vy));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Analytic functions

namespace {

constexpr double kLevyOffset = 47.341;

constexpr std::array<double, 4> kHartmannAlpha = {1.0, 1.2, 3.0, 3.2};
constexpr double kHartmannA[4][6] = {
    {10, 3, 17, 3.5, 1.7, 8},
    {0.05, 10, 17, 0.1, 8, 14},
    {3, 3.5, 1.7, 10, 17, 8},
    {17, 8, 0.05, 10, 0.1, 14},
};
constexpr double kHartmannP[4][6] = {
    {1312e-4, 1696e-4, 5569e-4, 124e-4, 8283e-4, 5886e-4},
    {2329e-4, 4135e-4, 8307e-4, 3736e-4, 1004e-4, 9991e-4},
    {2348e-4, 1451e-4, 3522e-4, 2883e-4, 3047e-4, 6650e-4},
    {4047e-4, 8828e-4, 8732e-4, 5743e-4, 1091e-4, 381e-4},
};
// Literature location of the Hartmann-6 maximum, refined numerically at startup.
const Point kHartmannArgmax = {0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573};

double levy6(std::span<const double> x) {
  std::array<double, 6> w{};
  for (std::size_t i = 0; i < 6; ++i) w[i] = 1.0 + (x[i] - 1.0) / 4.0;
  const double pi = std::numbers::pi;
  double s = std::pow(std::sin(pi * w[0]), 2);
  for (std::size_t i = 0; i < 5; ++i) {
    s += (w[i] - 1.0) * (w[i] - 1.0) * (1.0 + 10.0 * std::pow(std::sin(pi * w[i] + 1.0), 2));
  }
  s += (w[5] - 1.0) * (w[5] - 1.0) * (1.0 + std::pow(std::sin(2.0 * pi * w[5]), 2));
  return kLevyOffset - s;
}

double hartmann6(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      const double d = x[j] - kHartmannP[i][j];
      inner += kHartmannA[i][j] * d * d;
    }
    s += kHartmannAlpha[i] * std::exp(-inner);
  }
  return s;
}

double rosenbrock3(std::span<const double> x) {
  const double a = (1.0 - x[0]) * (1.0 - x[0]) + 100.0 * std::pow(x[1] - x[0] * x[0], 2);
  const double b = (1.0 - x[1]) * (1.0 - x[1]) + 100.0 * std::pow(x[2] - x[1] * x[1], 2);
  return 7218.0 - (a + b);
}

double rosenbrock4(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + (1.0 - x[i]) * (1.0 - x[i]);
  }
  return 10827.0 - s;
}

struct SyntheticEntry {
  std::string_view name;
  std::size_t dim;
  double lo, hi;
  double (*fn)(std::span<const double>);
};

constexpr std::array<SyntheticEntry, 4> kSynthetic = {{
    {"levy6", 6, -5.0, 5.0, &levy6},
    {"hartmann6", 6, 0.0, 1.0, &hartmann6},
    {"rosenbrock3", 3, -2.0, 2.0, &rosenbrock3},
    {"rosenbrock4", 4, -2.0, 2.0, &rosenbrock4},
}};

const SyntheticEntry& lookup(std::string_view name) {
  for (const auto& e : kSynthetic) {
    if (e.name == name) return e;
  }
  throw InputError("unknown synthetic objective '" + std::string(name) + "'");
}

}  // namespace

bool is_synthetic(std::string_view name) {
  return std::any_of(kSynthetic.begin(), kSynthetic.end(),
                     [&](const SyntheticEntry& e) { return e.name == name; });
}

Bounds synthetic_bounds(std::string_view name) {
  const auto& e = lookup(name);
  return Bounds::cube(e.dim, e.lo, e.hi);
}

double eval_synthetic(std::string_view name, std::span<const double> x) {
  const auto& e = lookup(name);
  if (x.size() != e.dim) {
    throw InputError(std::string(name) + ": expects " + std::to_string(e.dim) +
                     " coordinates, got " + std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= e.lo && x[i] <= e.hi)) {
      throw InputError(std::string(name) + ": coordinate " + std::to_string(i) +
                       " outside [" + std::to_string(e.lo) + ", " + std::to_string(e.hi) + "]");
    }
  }
  return e.fn(x);
}

// ---------------------------------------------------------------------------
// Objective

Objective::Objective(std::string name, Bounds bounds, Fn fn, Optimum optimum)
    : name_(std::move(name)),
      bounds_(std::move(bounds)),
      fn_(std::make_shared<const Fn>(std::move(fn))),
      optimum_(std::move(optimum)) {}

Optimum true_optimum(const Objective& objective) { return objective.optimum(); }

Optimum refine_maximum(const Objective::Fn& fn, const Bounds& bounds, Point start,
                       double initial_step) {
  Point u = bounds.to_unit(start);
  double fu = fn(bounds.from_unit(u));
  double step = initial_step;
  while (step > 1e-13) {
    bool improved = false;
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        Point cand = u;
        cand[i] = std::clamp(u[i] + sign * step, 0.0, 1.0);
        if (cand[i] == u[i]) continue;
        const double fc = fn(bounds.from_unit(cand));
        if (fc > fu) {
          u = std::move(cand);
          fu = fc;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  Point x = bounds.from_unit(u);
  return {x, fu, fu};
}

Optimum numeric_optimum(const Objective::Fn& fn, const Bounds& bounds, std::size_t per_dim) {
  const std::size_t d = bounds.dimension();
  std::vector<std::size_t> counter(d, 0);
  Point best_u(d, 0.0);
  double best = -std::numeric_limits<double>::infinity();
  Point u(d);
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= per_dim;
  for (std::size_t n = 0; n < total; ++n) {
    for (std::size_t i = 0; i < d; ++i) {
      u[i] = static_cast<double>(counter[i]) / static_cast<double>(per_dim - 1);
    }
    const double v = fn(bounds.from_unit(u));
    if (v > best) {
      best = v;
      best_u = u;
    }
    for (std::size_t i = d; i-- > 0;) {
      if (++counter[i] < per_dim) break;
      counter[i] = 0;
    }
  }
  return refine_maximum(fn, bounds, bounds.from_unit(best_u),
                        1.0 / static_cast<double>(per_dim - 1));
}

Objective make_synthetic(std::string_view name) {
  const auto& e = lookup(name);
  const Bounds b = Bounds::cube(e.dim, e.lo, e.hi);
  const std::string key(name);
  Objective::Fn wrapped = [key](std::span<const double> x) { return eval_synthetic(key, x); };

  Optimum opt;
  if (name == "levy6") {
    opt.x_star = Point(6, 1.0);
    opt.f_star = kLevyOffset;
    opt.f_star_numeric = refine_maximum(wrapped, b, opt.x_star, 1e-3).f_star;
  } else if (name == "hartmann6") {
    const Optimum r = refine_maximum(wrapped, b, kHartmannArgmax, 1e-3);
    opt.x_star = r.x_star;
    opt.f_star = r.f_star;
    opt.f_star_numeric = r.f_star;
  } else if (name == "rosenbrock3") {
    opt.x_star = Point(3, 1.0);
    opt.f_star = 7218.0;
  } else {
    opt.x_star = Point(4, 1.0);
    opt.f_star = 10827.0;
  }
  return Objective(key, b, std::move(wrapped), std::move(opt));
}

Objective make_gmm_objective(const GmmObjective& model, std::string name) {
  model.validate();
  const Bounds b = Bounds::cube(2, -kGmmDomain, kGmmDomain);
  Objective::Fn fn = [model](std::span<const double> x) { return gmm_eval(model, x); };
  Optimum opt = numeric_optimum(fn, b, 201);
  return Objective(std::move(name), b, std::move(fn), std::move(opt));
}

// ---------------------------------------------------------------------------
// Surrogate from tabular data

Bounds realistic_design_space() { return Bounds({5.0, 520.0}, {50.0, 590.0}); }

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

std::vector<TableRecord> read_yield_table(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw InputError("yield table: missing header row");

  const auto header = split_csv(line);
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto flow = column("flow_ml_min");
  const auto temp = column("temp_c");
  const auto yield = column("yield_pct");
  const auto mass = column("mass_mg");
  if (!flow || !temp || !yield) {
    throw InputError("yield table: header must contain flow_ml_min, temp_c and yield_pct");
  }

  std::vector<TableRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw InputError("yield table: row " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " fields, expected " +
                       std::to_string(header.size()));
    }
    double f = 0, t = 0, y = 0, m = 0;
    if (!parse_double(cells[*flow], f) || !parse_double(cells[*temp], t) ||
        !parse_double(cells[*yield], y) || (mass && !parse_double(cells[*mass], m))) {
      throw InputError("yield table: cannot parse row " + std::to_string(line_no));
    }
    if (mass && m != kSurrogateMassMg) continue;
    records.push_back({{f, t}, y});
  }
  return records;
}

std::vector<TableRecord> read_yield_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("yield table: cannot open '" + path + "'");
  return read_yield_table(in);
}

SurrogateModel fit_surrogate_model(const std::vector<TableRecord>& records, const Bounds& bounds) {
  if (records.size() < 5) {
    throw InputError("surrogate: need at least 5 records, got " + std::to_string(records.size()));
  }
  const std::size_t d = records.front().inputs.size();
  if (d != bounds.dimension()) throw InputError("surrogate: bounds dimension mismatch");
  double mean = 0.0;
  for (const auto& r : records) {
    if (r.inputs.size() != d) throw InputError("surrogate: inconsistent input dimension");
    mean += r.yield;
  }
  mean /= static_cast<double>(records.size());

  Dataset data(d);
  for (const auto& r : records) data.add(r.inputs, r.yield - mean);

  HyperparameterBounds hb;
  hb.learn_noise = true;
  KernelSpec start;
  start.kind = KernelKind::rbf;
  start.length_scale = 0.3;
  double var = 0.0;
  for (double y : data.outputs) var += y * y;
  var /= static_cast<double>(data.size());
  if (var <= 0.0) {
    // constant table: the centered data are all zero
    start.output_scale = 1.0;
    start.noise_variance = 1e-6;
    return {GpPosterior(std::move(data), start, bounds), mean};
  }
  start.output_scale = var;
  start.noise_variance = hb.noise_rel * var;
  RandomStream rng(0x5eedULL);
  const HyperparameterFit hf = optimize_hyperparams(data, start, hb, 5, rng, bounds);
  return {GpPosterior(std::move(data), hf.spec, bounds), mean};
}

Objective fit_surrogate_from_table(const std::vector<TableRecord>& records,
                                   std::optional<Bounds> bounds, std::string name) {
  if (records.size() < 5) {
    throw InputError("surrogate: need at least 5 records, got " + std::to_string(records.size()));
  }
  Bounds box;
  if (bounds) {
    box = *bounds;
  } else if (records.front().inputs.size() == 2) {
    box = realistic_design_space();
  } else {
    const std::size_t d = records.front().inputs.size();
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& r : records) {
      for (std::size_t i = 0; i < d && i < r.inputs.size(); ++i) {
        lo[i] = std::min(lo[i], r.inputs[i]);
        hi[i] = std::max(hi[i], r.inputs[i]);
      }
    }
    box = Bounds(lo, hi);
  }
  auto model = std::make_shared<const SurrogateModel>(fit_surrogate_model(records, box));
  Objective::Fn fn = [model](std::span<const double> x) {
    return std::max(0.0, model->offset + model->gp.predict(x).mean);
  };
  const std::size_t per_dim = box.dimension() <= 2 ? 201 : 21;
  Optimum opt = numeric_optimum(fn, box, per_dim);
  return Objective(std::move(name), box, std::move(fn), std::move(opt));
}

}  // namespace pcbo
