// Acceptance gate. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pcbo/campaign.hpp"
#include "pcbo/suite.hpp"

using namespace pcbo;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::uint64_t> seed_range(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::uint64_t i = 0; i < n; ++i) s[i] = i;
  return s;
}

SuiteConfig suite(const std::vector<std::string>& objectives, const std::vector<std::string>& strategies,
                  std::size_t iterations, std::uint64_t seeds) {
  SuiteConfig c;
  for (const auto& o : objectives) c.objectives.push_back(default_objective_spec(o));
  for (const auto& s : strategies) c.strategies.push_back(make_strategy(s));
  c.iterations = iterations;
  c.seeds = seed_range(seeds);
  c.validate();
  return c;
}

// Values of `pick(series)` over successful runs of one strategy; failures count separately.
std::vector<double> collect(const SuiteResults& r, const std::string& strategy,
                            const std::function<double(const RegretSeries&)>& pick,
                            std::size_t* failed = nullptr) {
  std::vector<double> out;
  for (const auto& run : r.runs) {
    if (run.strategy != strategy) continue;
    if (!run.ok()) {
      if (failed) ++*failed;
      continue;
    }
    out.push_back(pick(run.series));
  }
  return out;
}

Objective gmm(int which, std::uint64_t instance) {
  ObjectiveSpec spec = default_objective_spec("gmm" + std::to_string(which));
  spec.instance_seed = instance;
  return build_objective(spec);
}

// --- 1 ---------------------------------------------------------------------

Outcome gp_oracle() {
  std::mt19937_64 gen(777);
  std::uniform_int_distribution<int> nd(1, 20), dd(1, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = nd(gen), d = dd(gen);
    KernelSpec k;
    k.kind = trial % 2 ? KernelKind::rbf : KernelKind::matern25;
    k.output_scale = 0.5 + 2.0 * u(gen);
    k.length_scale = 0.2 + 0.8 * u(gen);
    k.noise_variance = 1e-3 + 0.05 * u(gen);
    Dataset data(d);
    for (std::size_t i = 0; i < n; ++i) {
      Point x(d);
      for (auto& v : x) v = u(gen);
      data.add(x, 4.0 * u(gen) - 2.0);
    }
    oracle::Gp o;
    o.rbf_kernel = k.kind == KernelKind::rbf;
    o.scale = k.output_scale;
    o.length = k.length_scale;
    o.noise = k.noise_variance;
    o.x = data.inputs;
    o.y = data.outputs;
    const GpPosterior gp(data, k);
    for (int q = 0; q < 5; ++q) {
      Point x(d);
      for (auto& v : x) v = 1.2 * u(gen) - 0.1;
      const Prediction p = gp.predict(x);
      const auto [m, var] = o.predict(x);
      worst = std::max({worst, std::abs(p.mean - static_cast<double>(m)),
                        std::abs(p.variance - static_cast<double>(var))});
    }
    worst = std::max(worst, std::abs(gp.log_marginal_likelihood() -
                                     static_cast<double>(o.log_marginal_likelihood())));
  }
  return {worst <= 1e-8, "max abs error " + fmt("%.3g", worst) + " over 50 datasets"};
}

// --- 2 ---------------------------------------------------------------------

Outcome analytic_values() {
  std::vector<std::string> bad;
  if (eval_synthetic("rosenbrock3", Point{1, 1, 1}) != 7218.0) bad.push_back("rosenbrock3(1,1,1)");
  if (eval_synthetic("rosenbrock3", Point{-2, -2, -2}) != 0.0) bad.push_back("rosenbrock3(-2,-2,-2)");
  if (eval_synthetic("rosenbrock4", Point{0, 0, 0, 0}) != 10824.0) bad.push_back("rosenbrock4(0,0,0,0)");
  const double levy = eval_synthetic("levy6", Point(6, 1.0));
  if (std::abs(levy - 47.341) > 1e-9) bad.push_back("levy6(1..1)=" + fmt("%.12g", levy));

  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double brute = 0;
  for (int s = 0; s < 100; ++s) {
    std::vector<double> x(6);
    for (auto& v : x) v = u(gen);
    brute = std::max(brute, oracle::pattern_search(oracle::hartmann6, x, 0.1, 0.0, 1.0).second);
  }
  const double lib = make_synthetic("hartmann6").f_star();
  if (std::abs(lib - brute) > 1e-3) bad.push_back("hartmann6 max");
  std::string detail = "hartmann6 max " + fmt("%.6f", lib) + " vs multistart " + fmt("%.6f", brute);
  for (const auto& b : bad) detail += "; mismatch " + b;
  return {bad.empty(), detail};
}

// --- 3 ---------------------------------------------------------------------

Outcome beta_schedule() {
  // 2 log(t^(d/2+2) pi^2 / (3 delta)) with t=1, d=2, delta=0.1, in long double
  const long double pi = oracle::kPi;
  const long double independent = 2.0L * std::log(pi * pi / 0.3L);
  const double got = beta_t(1, 2, 0.1);
  const double fixed = exploration_beta(AcquisitionSpec::ucb(2.0), 7, 2);
  const bool ok = std::abs(got - static_cast<double>(independent)) <= 1e-4 && fixed == 2.0;
  return {ok, "beta_t(1,2,0.1)=" + fmt("%.6f", got) + " independent " +
                  fmt("%.6f", static_cast<double>(independent)) + " (printed 6.98714 is off by " +
                  fmt("%.1e", std::abs(6.98714 - static_cast<double>(independent))) +
                  "); fixed beta " + fmt("%g", fixed)};
}

// --- 4 ---------------------------------------------------------------------

bool shares(const Point& a, const Point& b, const std::vector<std::size_t>& dims) {
  for (std::size_t d : dims) {
    if (a[d] != b[d]) return false;
  }
  return true;
}

Outcome constraint_invariant() {
  const std::vector<std::string> pc = {"pc_basic_gpucb", "pc_basic_ucb", "pc_nested_gpucb",
                                       "pc_nested_ucb", "pc_ts_ucb", "pc_ts_ei"};
  const ObjectiveSpec spec = default_objective_spec("gmm2");
  const Objective f = build_objective(spec);
  const Problem problem = build_problem(spec, f, kDefaultTsGridPerDim);
  std::size_t violations = 0, failures = 0, proposal_batches = 0;
  for (const auto& name : pc) {
    const StrategyConfig s = make_strategy(name);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const CampaignHistory h = run_campaign(s, f, problem, 5, seed);
      if (!h.ok()) ++failures;
      for (const auto& rec : h.iterations) {
        if (rec.t > 0) ++proposal_batches;
        for (const auto& x : rec.proposal.points) {
          if (!shares(x, rec.proposal.points[0], problem.space.constrained_dims)) ++violations;
        }
      }
    }
  }

  // hpc inside campaigns
  const ObjectiveSpec rspec = default_objective_spec("rosenbrock3");
  const Objective r = build_objective(rspec);
  const Problem rp = build_problem(rspec, r, kDefaultTsGridPerDim);
  std::size_t hpc_bad = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CampaignHistory h = run_campaign(make_strategy("hpc_ts_ucb"), r, rp, 4, seed);
    if (!h.ok()) ++failures;
    for (const auto& rec : h.iterations) {
      const auto& pts = rec.proposal.points;
      if (pts.size() != 8) ++hpc_bad;
      if (rec.t == 0 || pts.empty()) continue;
      if (rec.proposal.provenance[0] != Provenance::ucb) ++hpc_bad;
      std::map<double, int> by_level1;
      for (const auto& x : pts) {
        if (x[0] != pts[0][0]) ++hpc_bad;
        ++by_level1[x[1]];
      }
      for (const auto& [v, count] : by_level1) {
        if (count % 4 != 0) ++hpc_bad;
      }
    }
  }

  // explicit tree: parent chains and the given UCB point as leaf 0
  const HierarchySpec tree{{{{0}, 1}, {{1}, 2}, {{2}, 4}}};
  const Bounds box = Bounds::cube(3, -2, 2);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Dataset d(3);
    for (int i = 0; i < 6; ++i) d.add(Point{u(gen), u(gen), u(gen)}, u(gen));
    KernelSpec k;
    k.length_scale = 0.4;
    k.noise_variance = 1e-6;
    const GpPosterior gp(d, k, box);
    const Point x_ucb = {u(gen), u(gen), u(gen)};
    const HpcProposal p =
        propose_hpc_bo_ts(gp, tree, box, 10, x_ucb, SlotStreams(SeedSequence(trial), 1));
    if (p.batch.size() != 8 || p.batch.points[0] != x_ucb) {
      ++hpc_bad;
      continue;
    }
    // a leaf agrees with its level-(l-1) ancestor on every dim fixed above level l
    const std::vector<std::vector<std::size_t>> fixed_above = {{}, {0}, {0, 1}};
    for (std::size_t i = 0; i < 8; ++i) {
      std::size_t node = i;
      for (std::size_t l = 2; l >= 1; --l) {
        const std::size_t parent = p.parent[l][node];
        if (!shares(p.batch.points[i], p.levels[l - 1][parent], fixed_above[l])) ++hpc_bad;
        node = parent;
      }
    }
  }
  const bool ok = violations == 0 && hpc_bad == 0 && failures == 0 && proposal_batches >= 100;
  return {ok, std::to_string(proposal_batches / pc.size()) + " iterations per pc strategy, " +
                  std::to_string(violations) + " constraint violations, " + std::to_string(hpc_bad) +
                  " hpc tree defects, " + std::to_string(failures) + " failed runs"};
}

// --- 5-8 -------------------------------------------------------------------

Outcome median_at(const std::vector<std::string>& objectives, const std::vector<std::string>& strategies,
                  std::size_t iterations, std::uint64_t seeds, std::size_t at, double threshold) {
  const SuiteResults r = run_suite(suite(objectives, strategies, iterations, seeds));
  bool ok = true;
  std::string detail;
  for (const auto& s : strategies) {
    std::size_t failed = 0;
    const auto v = collect(r, s, [&](const RegretSeries& x) { return x.log_regret.at(at); }, &failed);
    const double m = v.empty() ? 0.0 : median(v);
    ok = ok && failed == 0 && !v.empty() && m <= threshold;
    if (!detail.empty()) detail += ", ";
    detail += s + " median " + fmt("%.3f", m) + " at iteration " + std::to_string(at);
    if (failed) detail += " (" + std::to_string(failed) + " failed)";
  }
  return {ok, detail};
}

Outcome baseline_ordering() {
  const std::vector<std::string> batch = {"gp_ucb_pe",       "pc_basic_gpucb", "pc_basic_ucb",
                                          "pc_nested_gpucb", "pc_nested_ucb",  "pc_ts_ucb",
                                          "pc_ts_ei"};
  std::vector<std::string> all = batch;
  all.push_back("random");
  const SuiteResults r = run_suite(suite({"gmm1"}, all, kDefaultGmmIterations, 10));
  auto final_median = [&](const std::string& s, std::size_t& failed) {
    return median(collect(r, s, [](const RegretSeries& x) { return x.regret.back(); }, &failed));
  };
  std::size_t failed = 0;
  const double random = final_median("random", failed);
  bool ok = true;
  std::string worst_name;
  double worst = -1;
  for (const auto& s : batch) {
    const double m = final_median(s, failed);
    ok = ok && random > m;
    if (m > worst) {
      worst = m;
      worst_name = s;
    }
  }
  ok = ok && failed == 0;
  return {ok, "random median regret " + fmt("%.4g", random) + ", worst batch strategy " + worst_name +
                  " " + fmt("%.4g", worst) + ", " + std::to_string(failed) + " failed runs"};
}

// --- 9 ---------------------------------------------------------------------

Outcome ask_tell() {
  const Objective f = gmm(1, 0);
  std::size_t mismatches = 0;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const std::string text = R"({"strategy": "pc_ts_ucb",
      "bounds": {"lower": [-3, -3], "upper": [3, 3]},
      "constrained_dims": [0], "batch_size": 4, "seed": )" + std::to_string(seed) + "}";
    const CampaignConfig cfg = parse_campaign_config(text);
    CampaignState state = campaign_init(cfg);
    for (int t = 0; t <= 8; ++t) {
      // every step goes through the state file format
      state = deserialize_state(serialize_state(state));
      const BatchProposal b = suggest(state);
      state = deserialize_state(serialize_state(state));
      std::vector<double> y;
      for (const auto& x : b.points) y.push_back(f(x));
      observe(state, y);
    }
    const CampaignHistory h = run_campaign(cfg.strategy, f, cfg.problem, 8, seed);
    if (!h.ok() || !(h.dataset() == state.search.data)) ++mismatches;
  }
  return {mismatches == 0, "3 seeds x 9 batches, " + std::to_string(mismatches) + " mismatching datasets"};
}

// --- 10 --------------------------------------------------------------------

std::string body(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string first;
  std::getline(in, first);
  std::ostringstream rest;
  rest << in.rdbuf();
  return rest.str();
}

Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "pcbo_acceptance_determinism";
  std::filesystem::remove_all(root);
  const std::vector<SuiteConfig> configs = {
      suite({"gmm2", "levy6"}, {"random", "seq_bo", "gp_ucb_pe", "pc_nested_ucb", "pc_ts_ei"}, 3, 3),
      suite({"rosenbrock3"}, {"hpc_ts_ucb", "pc_basic_gpucb"}, 3, 2)};
  std::size_t differing = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    SuiteConfig threaded = configs[i];
    threaded.threads = 2;
    const auto a = emit_report(run_suite(configs[i]), root / ("a" + std::to_string(i)));
    const auto b = emit_report(run_suite(threaded), root / ("b" + std::to_string(i)));
    if (body(a.runs) != body(b.runs) || body(a.runs).empty()) ++differing;
  }
  std::filesystem::remove_all(root);
  return {differing == 0, std::to_string(configs.size()) + " suite configs rerun (serial vs 2 threads), " +
                              std::to_string(differing) + " differing runs.csv"};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0 when the criterion has no runtime bound
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "gp-oracle-equivalence", 10, gp_oracle},
      {2, "analytic-function-values", 0, analytic_values},
      {3, "beta-schedule", 0, beta_schedule},
      {4, "constraint-invariants", 120, constraint_invariant},
      {5, "gmm1-convergence", 300,
       [] { return median_at({"gmm1"}, {"pc_ts_ucb", "pc_basic_ucb"}, 12, 10, 12, -1.5); }},
      {6, "levy6-convergence", 900,
       [] { return median_at({"levy6"}, {"pc_ts_ei"}, 40, 10, 25, -1.5); }},
      {7, "hpc-rosenbrock3", 300,
       [] { return median_at({"rosenbrock3"}, {"hpc_ts_ucb"}, 10, 15, 10, -2.0); }},
      {8, "baseline-ordering", 0, baseline_ordering},
      {9, "ask-tell-equivalence", 60, ask_tell},
      {10, "report-determinism", 0, determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && secs > c.limit_seconds) {
      o.pass = false;
      o.detail += "; over the " + fmt("%g", c.limit_seconds) + " s limit";
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
