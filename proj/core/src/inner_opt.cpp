#include "pcbo/inner_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "pcbo/errors.hpp"

namespace pcbo {

namespace {

struct Rect {
  Point center;             // unit-cube coordinates
  std::vector<int> levels;  // side along dim i is 3^-levels[i]
  double value;             // minimized quantity (negated objective)
  std::size_t id;
};

double side(int level) { return std::pow(3.0, -level); }

std::vector<int> size_key(const std::vector<int>& levels) {
  std::vector<int> k = levels;
  std::sort(k.begin(), k.end());
  return k;
}

double diameter(const std::vector<int>& sorted_levels) {
  double s = 0.0;
  for (int l : sorted_levels) s += side(l) * side(l);
  return 0.5 * std::sqrt(s);
}

class DirectSearch {
 public:
  DirectSearch(const ScalarObjective& f, const Bounds& bounds, std::size_t budget)
      : f_(f), bounds_(bounds), budget_(budget) {}

  MaximizeResult run() {
    const std::size_t d = bounds_.dimension();
    Rect root{Point(d, 0.5), std::vector<int>(d, 0), 0.0, 0};
    root.value = evaluate(root.center);
    rects_.push_back(std::move(root));

    while (evals_ < budget_) {
      const std::vector<std::size_t> chosen = potentially_optimal();
      if (chosen.empty()) break;
      bool exhausted = false;
      for (std::size_t idx : chosen) {
        if (!divide(idx)) {
          exhausted = true;
          break;
        }
      }
      if (exhausted) break;
    }
    return {bounds_.from_unit(best_unit_), best_value_, evals_};
  }

 private:
  double evaluate(const Point& unit) {
    const Point x = bounds_.from_unit(unit);
    const double v = f_(x);
    ++evals_;
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "direct_maximize: objective returned " << v << " at (";
      for (std::size_t i = 0; i < x.size(); ++i) msg << (i ? ", " : "") << x[i];
      msg << ")";
      throw NumericalError(msg.str());
    }
    if (evals_ == 1 || v > best_value_) {
      best_value_ = v;
      best_unit_ = unit;
    }
    return -v;
  }

  std::vector<std::size_t> potentially_optimal() const {
    // best rectangle per distinct size class
    std::map<std::vector<int>, std::size_t> best_per_size;
    for (std::size_t i = 0; i < rects_.size(); ++i) {
      auto key = size_key(rects_[i].levels);
      auto it = best_per_size.find(key);
      if (it == best_per_size.end()) {
        best_per_size.emplace(std::move(key), i);
      } else {
        const Rect& cur = rects_[it->second];
        if (rects_[i].value < cur.value ||
            (rects_[i].value == cur.value && rects_[i].id < cur.id)) {
          it->second = i;
        }
      }
    }
    struct Group {
      double diam;
      double value;
      std::size_t rect;
    };
    std::vector<Group> groups;
    double fmin = std::numeric_limits<double>::infinity();
    for (const auto& [key, idx] : best_per_size) {
      groups.push_back({diameter(key), rects_[idx].value, idx});
      fmin = std::min(fmin, rects_[idx].value);
    }
    std::sort(groups.begin(), groups.end(), [&](const Group& a, const Group& b) {
      if (a.diam != b.diam) return a.diam < b.diam;
      if (a.value != b.value) return a.value < b.value;
      return rects_[a.rect].id < rects_[b.rect].id;
    });

    std::vector<std::size_t> out;
    const double target = fmin - kDirectEpsilon * std::abs(fmin);
    for (std::size_t j = 0; j < groups.size(); ++j) {
      const Group& g = groups[j];
      double k_low = 0.0;
      double k_high = std::numeric_limits<double>::infinity();
      bool ok = true;
      for (std::size_t i = 0; i < groups.size() && ok; ++i) {
        if (i == j) continue;
        const Group& h = groups[i];
        if (h.diam < g.diam) {
          k_low = std::max(k_low, (g.value - h.value) / (g.diam - h.diam));
        } else if (h.diam > g.diam) {
          k_high = std::min(k_high, (h.value - g.value) / (h.diam - g.diam));
        } else if (h.value < g.value) {
          ok = false;
        }
      }
      if (!ok || !(k_high > 0.0) || k_low > k_high) continue;
      if (std::isfinite(k_high) && g.value - k_high * g.diam > target) continue;
      out.push_back(g.rect);
    }
    return out;
  }

  // Returns false when the remaining budget cannot cover the division.
  bool divide(std::size_t idx) {
    const std::vector<int> levels = rects_[idx].levels;
    const int min_level = *std::min_element(levels.begin(), levels.end());
    std::vector<std::size_t> longest;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (levels[i] == min_level) longest.push_back(i);
    }
    if (evals_ + 2 * longest.size() > budget_) return false;

    const Point center = rects_[idx].center;
    const double delta = side(min_level) / 3.0;
    struct Probe {
      std::size_t dim;
      Point lo_c, hi_c;
      double lo_v, hi_v;
    };
    std::vector<Probe> probes;
    for (std::size_t dim : longest) {
      Probe p{dim, center, center, 0.0, 0.0};
      p.lo_c[dim] -= delta;
      p.hi_c[dim] += delta;
      p.lo_v = evaluate(p.lo_c);
      p.hi_v = evaluate(p.hi_c);
      probes.push_back(std::move(p));
    }
    std::stable_sort(probes.begin(), probes.end(), [](const Probe& a, const Probe& b) {
      return std::min(a.lo_v, a.hi_v) < std::min(b.lo_v, b.hi_v);
    });

    std::vector<int> current = levels;
    for (Probe& p : probes) {
      current[p.dim] += 1;
      rects_.push_back({std::move(p.lo_c), current, p.lo_v, next_id_++});
      rects_.push_back({std::move(p.hi_c), current, p.hi_v, next_id_++});
    }
    rects_[idx].levels = current;
    return true;
  }

  const ScalarObjective& f_;
  const Bounds& bounds_;
  std::size_t budget_;
  std::size_t evals_ = 0;
  std::size_t next_id_ = 1;
  std::vector<Rect> rects_;
  Point best_unit_;
  double best_value_ = -std::numeric_limits<double>::infinity();
};

}  // namespace

MaximizeResult direct_maximize(const ScalarObjective& objective, const Bounds& bounds,
                               std::size_t max_evals) {
  if (max_evals < 1) throw InputError("direct_maximize: max_evals must be >= 1");
  if (bounds.dimension() == 0) throw InputError("direct_maximize: empty bounds");
  return DirectSearch(objective, bounds, max_evals).run();
}

MaximizeResult direct_maximize_subspace(const ScalarObjective& objective, const Bounds& bounds,
                                        std::span<const double> base,
                                        std::span<const std::size_t> free_dims,
                                        std::size_t max_evals) {
  if (base.size() != bounds.dimension()) {
    throw InputError("direct_maximize_subspace: base point dimension mismatch");
  }
  const Bounds sub = bounds.subset(free_dims);
  const Point anchor(base.begin(), base.end());
  auto wrapped = [&](std::span<const double> free) {
    const Point full = inject(anchor, free_dims, free);
    return objective(full);
  };
  MaximizeResult r = direct_maximize(wrapped, sub, max_evals);
  r.point = inject(anchor, free_dims, r.point);
  return r;
}

GridArgmax grid_argmax(std::span<const double> values, std::span<const Point> points) {
  if (values.empty()) throw InputError("grid_argmax: empty input");
  if (values.size() != points.size()) {
    throw InputError("grid_argmax: " + std::to_string(values.size()) + " values for " +
                     std::to_string(points.size()) + " points");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return {best, points[best], values[best]};
}

std::vector<Point> unit_grid(const Bounds& bounds, std::size_t per_dim, std::size_t cap) {
  if (per_dim < 2) throw InputError("unit_grid: per_dim must be >= 2");
  const std::size_t d = bounds.dimension();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (total > cap / per_dim) {
      throw CapacityError("unit_grid: " + std::to_string(per_dim) + "^" + std::to_string(d) +
                          " points exceeds the cap of " + std::to_string(cap));
    }
    total *= per_dim;
  }
  std::vector<std::vector<double>> axes(d);
  for (std::size_t i = 0; i < d; ++i) {
    axes[i].resize(per_dim);
    const double lo = bounds.lower[i], hi = bounds.upper[i];
    const double step = (hi - lo) / static_cast<double>(per_dim - 1);
    for (std::size_t k = 0; k < per_dim; ++k) axes[i][k] = lo + step * static_cast<double>(k);
    axes[i].back() = hi;
  }
  std::vector<Point> grid;
  grid.reserve(total);
  std::vector<std::size_t> counter(d, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Point p(d);
    for (std::size_t i = 0; i < d; ++i) p[i] = axes[i][counter[i]];
    grid.push_back(std::move(p));
    for (std::size_t i = d; i-- > 0;) {
      if (++counter[i] < per_dim) break;
      counter[i] = 0;
    }
  }
  return grid;
}

}  // namespace pcbo
