// pcbo: run benchmark suites and drive ask-tell campaigns from the shell.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pcbo/campaign.hpp"
#include "pcbo/errors.hpp"
#include "pcbo/suite.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pcbo::ConfigError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::size_t slot = out.size();
    const char* begin = item.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    while (end && *end == ' ') ++end;
    if (end == begin || *end != '\0') {
      throw pcbo::InputError("--values: slot " + std::to_string(slot) + ": cannot parse '" + item +
                             "'");
    }
    out.push_back(v);
  }
  return out;
}

void print_batch(const pcbo::BatchProposal& batch, std::size_t t) {
  std::cout << "# batch t=" << t << '\n' << "slot,provenance";
  const std::size_t d = batch.points.empty() ? 0 : batch.points.front().size();
  for (std::size_t i = 0; i < d; ++i) std::cout << ",x" << i;
  std::cout << '\n';
  for (std::size_t k = 0; k < batch.size(); ++k) {
    std::cout << k << ',' << pcbo::to_string(batch.provenance[k]);
    for (double x : batch.points[k]) std::cout << ',' << pcbo::format_number(x);
    std::cout << '\n';
  }
}

void print_summary(const pcbo::SuiteResults& results) {
  std::cout << results.runs.size() << " runs, " << results.failures() << " failed\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Process-constrained batch Bayesian optimization"};
  app.require_subcommand(1);

  std::string config_path, out_dir, in_dir, state_path, values;
  std::size_t threads = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run a benchmark suite and write report files");
  run->add_option("--config", config_path, "Suite config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Report directory (overrides the config's \"out\")");
  run->add_option("--threads", threads, "Concurrent campaigns (overrides the config)");
  run->add_flag("--quiet", quiet, "No per-run progress lines");

  auto* report = app.add_subcommand("report", "Rebuild median.csv and kde.csv from runs.csv");
  report->add_option("--in", in_dir, "Directory holding runs.csv")->required();

  auto* init = app.add_subcommand("init", "Create an ask-tell campaign state file");
  init->add_option("--config", config_path, "Campaign config (JSON)")->required()->check(CLI::ExistingFile);
  init->add_option("--state", state_path, "State file to create")->required();

  auto* suggest = app.add_subcommand("suggest", "Propose the next batch");
  suggest->add_option("--state", state_path, "Campaign state file")->required();

  auto* observe = app.add_subcommand("observe", "Record measured values for the pending batch");
  observe->add_option("--state", state_path, "Campaign state file")->required();
  observe->add_option("--values", values, "Comma-separated values, one per pending point")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      const std::filesystem::path cfg_file(config_path);
      pcbo::SuiteConfig cfg = pcbo::parse_suite_config(read_file(config_path), cfg_file.parent_path());
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (threads > 0) cfg.threads = threads;
      if (cfg.output_dir.empty()) throw pcbo::ConfigError("out: no output directory (use --out)");
      pcbo::ProgressFn progress;
      if (!quiet) {
        progress = [](const pcbo::RunResult& r) {
          std::cerr << r.strategy << ' ' << r.objective << " seed " << r.seed << ": ";
          if (r.ok()) {
            std::cerr << "final log10 regret " << r.series.log_regret.back() << '\n';
          } else {
            std::cerr << "FAILED " << *r.error << '\n';
          }
        };
      }
      const pcbo::SuiteResults results = pcbo::run_suite(cfg, progress);
      const pcbo::ReportFiles files = pcbo::emit_report(results, cfg.output_dir);
      print_summary(results);
      std::cout << "wrote " << files.runs.string() << ", " << files.median.string() << ", "
                << files.kde.string() << '\n';
    } else if (*report) {
      const std::filesystem::path dir(in_dir);
      const pcbo::SuiteResults results = pcbo::read_runs_csv(dir / "runs.csv");
      std::filesystem::path tmp = dir / ".report";
      const pcbo::ReportFiles files = pcbo::emit_report(results, tmp);
      std::filesystem::rename(files.median, dir / "median.csv");
      std::filesystem::rename(files.kde, dir / "kde.csv");
      std::filesystem::remove_all(tmp);
      print_summary(results);
      std::cout << "wrote " << (dir / "median.csv").string() << ", " << (dir / "kde.csv").string()
                << '\n';
    } else if (*init) {
      const pcbo::CampaignState state =
          pcbo::campaign_init(pcbo::parse_campaign_config(read_file(config_path)));
      pcbo::save_state(state, state_path);
      std::cout << "initialized " << state.config.strategy.name << " campaign in " << state_path
                << '\n';
    } else if (*suggest) {
      pcbo::CampaignState state = pcbo::load_state(state_path);
      const pcbo::BatchProposal batch = pcbo::suggest(state);
      pcbo::save_state(state, state_path);
      print_batch(batch, state.t());
    } else if (*observe) {
      pcbo::CampaignState state = pcbo::load_state(state_path);
      pcbo::observe(state, parse_values(values));
      pcbo::save_state(state, state_path);
      std::cout << "recorded batch; t=" << state.t() << ", best " << pcbo::format_number(state.search.best_value)
                << '\n';
    }
  } catch (const pcbo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const pcbo::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const pcbo::SequencingError& e) {
    std::cerr << "sequencing error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
