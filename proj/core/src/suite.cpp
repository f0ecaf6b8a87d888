#include "pcbo/suite.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "json_fields.hpp"
#include "pcbo/errors.hpp"

namespace pcbo {

using detail::Fields;
using detail::json;

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void SuiteConfig::validate() const {
  if (objectives.empty()) throw ConfigError("objectives: list is empty");
  if (strategies.empty()) throw ConfigError("strategies: list is empty");
  if (iterations < 1) throw ConfigError("T: must be >= 1");
  if (batch_size < 1) throw ConfigError("B: must be >= 1");
  if (seeds.empty()) throw ConfigError("seeds: list is empty");
  std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
  if (distinct.size() != seeds.size()) throw ConfigError("seeds: values must be distinct");
  std::set<std::string> names;
  for (const auto& o : objectives) {
    if (!names.insert(o.name).second) {
      throw ConfigError("objectives: duplicate objective '" + o.name + "'");
    }
  }
  names.clear();
  for (const auto& s : strategies) {
    if (!names.insert(s.name).second) {
      throw ConfigError("strategies: duplicate strategy '" + s.name + "'");
    }
  }
}

ObjectiveSpec default_objective_spec(std::string_view name) {
  ObjectiveSpec spec;
  spec.name = std::string(name);
  if (name.size() == 4 && name.substr(0, 3) == "gmm" && name[3] >= '1' && name[3] <= '4') {
    spec.kind = "gmm";
    spec.gmm_case = name[3] - '0';
    spec.constrained_dims = {0};
  } else if (name == "levy6" || name == "hartmann6") {
    spec.kind = std::string(name);
    spec.constrained_dims = {0, 1, 2};
  } else if (name == "rosenbrock3") {
    spec.kind = "rosenbrock3";
    spec.constrained_dims = {0};
    spec.hierarchy = HierarchySpec{{{{0}, 1}, {{1}, 2}, {{2}, 4}}};
  } else if (name == "rosenbrock4") {
    spec.kind = "rosenbrock4";
    spec.constrained_dims = {0};
  } else if (name == "surrogate") {
    spec.kind = "surrogate";
    spec.constrained_dims = {0};
  } else {
    throw ConfigError("unknown objective '" + std::string(name) + "'");
  }
  return spec;
}

namespace {

ObjectiveSpec parse_objective(const json& v, const std::string& where,
                              const std::filesystem::path& base_dir) {
  if (v.is_string()) {
    try {
      return default_objective_spec(v.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  Fields f(v, where);
  ObjectiveSpec spec;
  try {
    spec = default_objective_spec(f.string("name"));
  } catch (const ConfigError& e) {
    throw ConfigError(f.path("name") + ": " + e.what());
  }
  spec.name = f.string_or("label", spec.name);
  spec.instance_seed = f.unsigned_or("instance_seed", spec.instance_seed);
  f.allow("table");
  if (f.has("table")) {
    std::filesystem::path p = f.string("table");
    spec.table = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  f.allow("constrained_dims");
  if (f.has("constrained_dims")) spec.constrained_dims = f.indices("constrained_dims");
  f.allow("hierarchy");
  if (f.has("hierarchy")) spec.hierarchy = detail::parse_hierarchy(f.at("hierarchy"), f.path("hierarchy"));
  f.finish();
  if (spec.kind == "surrogate" && spec.table.empty()) {
    throw ConfigError(f.path("table") + ": surrogate objective needs a yield table path");
  }
  return spec;
}

StrategyConfig parse_strategy(const json& v, const std::string& where,
                              const StrategyDefaults& top, const json& top_fields) {
  StrategyDefaults defaults = top;
  std::string name;
  std::optional<Fields> f;
  if (v.is_string()) {
    name = v.get<std::string>();
  } else {
    f.emplace(v, where);
    name = f->string("name");
    defaults.batch_size = f->unsigned_or("batch_size", defaults.batch_size);
    defaults.delta = f->number_or("delta", defaults.delta);
    defaults.beta = f->number_or("beta", defaults.beta);
    defaults.xi = f->number_or("xi", defaults.xi);
  }
  if (!is_strategy_name(name)) {
    throw ConfigError((f ? f->path("name") : where) + ": unknown strategy '" + name + "'");
  }
  StrategyConfig s = make_strategy(name, defaults);
  Fields top_reader(top_fields, "");
  s.model.kernel = detail::parse_kernel_kind(top_reader.string_or("kernel", "matern25"), "kernel");
  s.model.restarts = top_reader.unsigned_or("restarts", s.model.restarts);
  s.options.direct_max_evals =
      top_reader.unsigned_or("direct_max_evals", s.options.direct_max_evals);
  s.options.max_grid_points = top_reader.unsigned_or("max_grid_points", s.options.max_grid_points);
  if (s.options.direct_max_evals < 1) throw ConfigError("direct_max_evals: must be >= 1");
  if (f) f->finish();
  return s;
}

}  // namespace

SuiteConfig parse_suite_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  const json doc = detail::parse_json(json_text, "suite config");
  Fields f(doc, "");
  SuiteConfig cfg;

  const json& objectives = f.at("objectives");
  if (!objectives.is_array()) throw ConfigError("objectives: expected an array");
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    cfg.objectives.push_back(
        parse_objective(objectives[i], "objectives[" + std::to_string(i) + "]", base_dir));
  }

  StrategyDefaults defaults;
  defaults.batch_size = f.unsigned_or("B", defaults.batch_size);
  defaults.delta = f.number_or("delta", defaults.delta);
  defaults.beta = f.number_or("beta", defaults.beta);
  defaults.xi = f.number_or("xi", defaults.xi);
  cfg.batch_size = defaults.batch_size;
  for (const char* key : {"kernel", "restarts", "direct_max_evals", "max_grid_points"}) {
    f.allow(key);
  }
  const json& strategies = f.at("strategies");
  if (!strategies.is_array()) throw ConfigError("strategies: expected an array");
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    cfg.strategies.push_back(
        parse_strategy(strategies[i], "strategies[" + std::to_string(i) + "]", defaults, doc));
  }

  const bool all_gmm =
      !cfg.objectives.empty() && std::all_of(cfg.objectives.begin(), cfg.objectives.end(),
                                             [](const ObjectiveSpec& o) { return o.kind == "gmm"; });
  cfg.iterations = f.unsigned_or("T", all_gmm ? kDefaultGmmIterations : kDefaultIterations);
  f.allow("seeds");
  if (f.has("seeds")) {
    const json& seeds = f.at("seeds");
    if (!seeds.is_array()) throw ConfigError("seeds: expected an array of integers");
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      if (!seeds[i].is_number_integer() || seeds[i].get<std::int64_t>() < 0) {
        throw ConfigError("seeds[" + std::to_string(i) + "]: expected a non-negative integer");
      }
      cfg.seeds.push_back(seeds[i].get<std::uint64_t>());
    }
  } else {
    for (std::uint64_t s = 0; s < kDefaultSeedCount; ++s) cfg.seeds.push_back(s);
  }
  cfg.ts_grid_per_dim = f.unsigned_or("ts_grid_per_dim", cfg.ts_grid_per_dim);
  if (cfg.ts_grid_per_dim < 2) throw ConfigError("ts_grid_per_dim: must be >= 2");
  cfg.threads = f.unsigned_or("threads", cfg.threads);
  if (cfg.threads < 1) throw ConfigError("threads: must be >= 1");
  f.allow("out");
  if (f.has("out")) {
    std::filesystem::path out = f.string("out");
    cfg.output_dir = out.is_relative() && !base_dir.empty() ? base_dir / out : out;
  }
  f.finish();
  cfg.validate();

  // every (strategy, objective) pair must form a valid problem
  for (std::size_t i = 0; i < cfg.objectives.size(); ++i) {
    const ObjectiveSpec& o = cfg.objectives[i];
    for (const auto& s : cfg.strategies) {
      const Bounds bounds = o.kind == "gmm"         ? Bounds::cube(2, -kGmmDomain, kGmmDomain)
                            : o.kind == "surrogate" ? Bounds()
                                                    : synthetic_bounds(o.kind);
      if (bounds.dimension() == 0) continue;  // checked once the table is read
      try {
        Problem p{DesignSpace::make(bounds, o.constrained_dims, cfg.ts_grid_per_dim),
                  o.hierarchy};
        p.validate_for(s);
      } catch (const ConfigError& e) {
        throw ConfigError("objectives[" + std::to_string(i) + "] with strategy " + s.name + ": " +
                          e.what());
      }
    }
  }
  return cfg;
}

Objective build_objective(const ObjectiveSpec& spec) {
  if (spec.kind == "gmm") {
    RandomStream rng = SeedSequence(spec.instance_seed)
                           .stream(StreamPurpose::objective,
                                   static_cast<std::uint64_t>(spec.gmm_case), 0);
    return make_gmm_objective(gmm_generate(spec.gmm_case, rng), spec.name);
  }
  if (spec.kind == "surrogate") {
    return fit_surrogate_from_table(read_yield_table_file(spec.table.string()), std::nullopt,
                                    spec.name);
  }
  if (is_synthetic(spec.kind)) {
    const Objective base = make_synthetic(spec.kind);
    if (base.name() == spec.name) return base;
    return Objective(spec.name, base.bounds(),
                     [base](std::span<const double> x) { return base(x); }, base.optimum());
  }
  throw ConfigError("unknown objective kind '" + spec.kind + "'");
}

Problem build_problem(const ObjectiveSpec& spec, const Objective& objective,
                      std::size_t ts_grid_per_dim) {
  return Problem{DesignSpace::make(objective.bounds(), spec.constrained_dims, ts_grid_per_dim),
                 spec.hierarchy};
}

std::size_t SuiteResults::failures() const {
  return static_cast<std::size_t>(
      std::count_if(runs.begin(), runs.end(), [](const RunResult& r) { return !r.ok(); }));
}

namespace {

std::string acquisition_summary(const std::vector<StrategyConfig>& strategies) {
  std::string out;
  for (const auto& s : strategies) {
    if (!out.empty()) out += ';';
    out += s.name + ':';
    if (s.kind == StrategyKind::random) {
      out += "none";
      continue;
    }
    const AcquisitionSpec& a = s.acquisition;
    switch (a.kind) {
      case AcquisitionKind::gp_ucb:
        out += "gp_ucb(delta=" + format_number(a.delta) + ")";
        break;
      case AcquisitionKind::ucb:
        out += "ucb(beta=" + format_number(a.beta) + ")";
        break;
      case AcquisitionKind::ei:
        out += "ei(xi=" + format_number(a.xi) + ")";
        break;
    }
  }
  return out;
}

}  // namespace

SuiteResults run_suite(const SuiteConfig& config, const ProgressFn& progress) {
  config.validate();
  std::vector<Objective> objectives;
  std::vector<Problem> problems;
  for (const auto& spec : config.objectives) {
    objectives.push_back(build_objective(spec));
    problems.push_back(build_problem(spec, objectives.back(), config.ts_grid_per_dim));
    for (const auto& s : config.strategies) problems.back().validate_for(s);
  }

  struct Task {
    std::size_t strategy, objective;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < config.strategies.size(); ++s) {
    for (std::size_t o = 0; o < objectives.size(); ++o) {
      for (std::uint64_t seed : config.seeds) tasks.push_back({s, o, seed});
    }
  }

  SuiteResults results;
  results.acquisition = acquisition_summary(config.strategies);
  results.runs.resize(tasks.size());
  std::mutex progress_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& task = tasks[i];
      const StrategyConfig& strategy = config.strategies[task.strategy];
      const Objective& objective = objectives[task.objective];
      RunResult r;
      r.strategy = strategy.name;
      r.objective = objective.name();
      r.seed = task.seed;
      try {
        const CampaignHistory h = run_campaign(strategy, objective, problems[task.objective],
                                               config.iterations, task.seed);
        if (h.ok()) {
          r.series = best_so_far_series(h, objective.f_star());
        } else {
          r.error = *h.error;
        }
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(r);
      }
      results.runs[i] = std::move(r);
    }
  };

  const std::size_t n_threads = std::min(config.threads, std::max<std::size_t>(tasks.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::stable_sort(results.runs.begin(), results.runs.end(),
                   [](const RunResult& a, const RunResult& b) {
                     return std::tie(a.strategy, a.objective, a.seed) <
                            std::tie(b.strategy, b.objective, b.seed);
                   });
  return results;
}

namespace {

std::string metadata_line(std::size_t failures, const std::string& acquisition) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  std::string line = std::string("# generated=") + stamp + " failures=" + std::to_string(failures);
  if (!acquisition.empty()) line += " acquisition=" + acquisition;
  return line + " (failed runs are excluded from median and kde)";
}

std::ofstream open_report(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_report(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

ReportFiles emit_report(const SuiteResults& results, const std::filesystem::path& out_dir) {
  if (results.runs.empty()) throw InputError("emit_report: no results");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  const ReportFiles files{out_dir / "runs.csv", out_dir / "median.csv", out_dir / "kde.csv"};
  const std::string meta = metadata_line(results.failures(), results.acquisition);

  // group successful runs, keeping (strategy, objective) order
  std::map<std::pair<std::string, std::string>, std::vector<const RunResult*>> groups;
  for (const auto& r : results.runs) {
    if (r.ok() && r.series.size() > 0) groups[{r.strategy, r.objective}].push_back(&r);
  }

  {
    std::ofstream out = open_report(files.runs);
    out << meta << '\n'
        << "strategy,objective,seed,iteration,best_value,norm_regret,log10_norm_regret\n";
    for (const auto& r : results.runs) {
      if (!r.ok()) continue;
      for (std::size_t t = 0; t < r.series.size(); ++t) {
        out << r.strategy << ',' << r.objective << ',' << r.seed << ',' << t << ','
            << format_number(r.series.best_value[t]) << ',' << format_number(r.series.regret[t])
            << ',' << format_number(r.series.log_regret[t]) << '\n';
      }
    }
    close_report(out, files.runs);
  }

  {
    std::ofstream out = open_report(files.median);
    out << meta << '\n' << "strategy,objective,iteration,median_log10_norm_regret\n";
    for (const auto& [key, runs] : groups) {
      std::vector<std::vector<double>> series;
      for (const RunResult* r : runs) series.push_back(r->series.log_regret);
      std::size_t shortest = series.front().size();
      for (const auto& s : series) shortest = std::min(shortest, s.size());
      for (auto& s : series) s.resize(shortest);
      const std::vector<double> med = median_series(series);
      for (std::size_t t = 0; t < med.size(); ++t) {
        out << key.first << ',' << key.second << ',' << t << ',' << format_number(med[t]) << '\n';
      }
    }
    close_report(out, files.median);
  }

  {
    std::ofstream out = open_report(files.kde);
    out << meta << '\n' << "strategy,objective,eval_point,density\n";
    for (const auto& [key, runs] : groups) {
      std::vector<double> finals;
      for (const RunResult* r : runs) finals.push_back(r->series.log_regret.back());
      const double h = scott_bandwidth(finals);
      const auto [lo_it, hi_it] = std::minmax_element(finals.begin(), finals.end());
      const double lo = *lo_it - 5.0 * h;
      const double hi = *hi_it + 5.0 * h;
      std::vector<double> grid(kKdePoints);
      for (std::size_t i = 0; i < kKdePoints; ++i) {
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kKdePoints - 1);
      }
      const std::vector<double> dens = kde(finals, grid);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        out << key.first << ',' << key.second << ',' << format_number(grid[i]) << ','
            << format_number(dens[i]) << '\n';
      }
    }
    close_report(out, files.kde);
  }

  if (results.failures() > 0) {
    const auto path = out_dir / "failures.csv";
    std::ofstream out = open_report(path);
    out << "strategy,objective,seed,reason\n";
    for (const auto& r : results.runs) {
      if (r.ok()) continue;
      std::string reason = *r.error;
      std::replace(reason.begin(), reason.end(), ',', ';');
      std::replace(reason.begin(), reason.end(), '\n', ' ');
      out << r.strategy << ',' << r.objective << ',' << r.seed << ',' << reason << '\n';
    }
    close_report(out, path);
  }
  return files;
}

SuiteResults read_runs_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  SuiteResults results;
  std::string line;
  std::size_t line_no = 0;
  std::size_t recorded_failures = 0;
  bool header_seen = false;
  std::map<std::tuple<std::string, std::string, std::uint64_t>, std::size_t> index;

  auto fail = [&](const std::string& what) {
    throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto pos = line.find("failures=");
      if (pos != std::string::npos) recorded_failures = std::stoul(line.substr(pos + 9));
      const auto acq = line.find(" acquisition=");
      if (acq != std::string::npos) {
        const auto start = acq + 13;
        results.acquisition = line.substr(start, line.find(' ', start) - start);
      }
      continue;
    }
    if (!header_seen) {
      if (line != "strategy,objective,seed,iteration,best_value,norm_regret,log10_norm_regret") {
        fail("unexpected header");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) fail("expected 7 columns, got " + std::to_string(cells.size()));
    std::uint64_t seed = 0;
    std::size_t t = 0;
    double best = 0.0, regret = 0.0, log_regret = 0.0;
    try {
      seed = std::stoull(cells[2]);
      t = std::stoul(cells[3]);
      best = std::stod(cells[4]);
      regret = std::stod(cells[5]);
      log_regret = std::stod(cells[6]);
    } catch (const std::logic_error&) {
      fail("malformed number");
    }
    const auto key = std::make_tuple(cells[0], cells[1], seed);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, results.runs.size()).first;
      RunResult r;
      r.strategy = cells[0];
      r.objective = cells[1];
      r.seed = seed;
      results.runs.push_back(std::move(r));
    }
    RegretSeries& s = results.runs[it->second].series;
    if (t != s.size()) fail("iterations out of order");
    s.best_value.push_back(best);
    s.regret.push_back(regret);
    s.log_regret.push_back(log_regret);
  }
  if (!header_seen) throw InputError(path.string() + ": missing header");
  for (std::size_t i = 0; i < recorded_failures; ++i) {
    RunResult r;
    r.error = "failed run recorded in " + path.filename().string();
    results.runs.push_back(std::move(r));
  }
  return results;
}

}  // namespace pcbo
