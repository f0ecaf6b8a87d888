#include "pcbo/campaign.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json_fields.hpp"
#include "pcbo/errors.hpp"

namespace pcbo {

using detail::Fields;
using detail::json;

namespace {

json points_to_json(const std::vector<Point>& points) {
  json out = json::array();
  for (const Point& p : points) out.push_back(p);
  return out;
}

std::vector<Point> points_from_json(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array of points");
  std::vector<Point> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(Fields::number_list(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json dataset_to_json(const Dataset& d) {
  return {{"dim", d.dim}, {"inputs", points_to_json(d.inputs)}, {"outputs", d.outputs}};
}

Dataset dataset_from_json(const json& v, const std::string& where) {
  Fields f(v, where);
  Dataset d(f.unsigned_int("dim"));
  d.inputs = points_from_json(f.at("inputs"), f.path("inputs"));
  d.outputs = f.numbers("outputs");
  f.finish();
  try {
    d.validate();
  } catch (const InputError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return d;
}

json kernel_to_json(const std::optional<KernelSpec>& k) {
  if (!k) return nullptr;
  return {{"kind", detail::kernel_kind_name(k->kind)},
          {"output_scale", k->output_scale},
          {"length_scale", k->length_scale},
          {"noise_variance", k->noise_variance}};
}

std::optional<KernelSpec> kernel_from_json(const json& v, const std::string& where) {
  if (v.is_null()) return std::nullopt;
  Fields f(v, where);
  KernelSpec k;
  k.kind = detail::parse_kernel_kind(f.string("kind"), f.path("kind"));
  k.output_scale = f.number("output_scale");
  k.length_scale = f.number("length_scale");
  k.noise_variance = f.number("noise_variance");
  f.finish();
  return k;
}

Provenance provenance_from_string(const std::string& s, const std::string& where) {
  for (Provenance p : {Provenance::ucb, Provenance::ts, Provenance::pure_exploration,
                       Provenance::random}) {
    if (to_string(p) == s) return p;
  }
  throw ConfigError(where + ": unknown provenance '" + s + "'");
}

CampaignConfig config_from_json(const json& doc, const std::string& where) {
  Fields f(doc, where);
  StrategyDefaults defaults;
  defaults.batch_size = f.unsigned_or("batch_size", defaults.batch_size);
  defaults.delta = f.number_or("delta", defaults.delta);
  defaults.beta = f.number_or("beta", defaults.beta);
  defaults.xi = f.number_or("xi", defaults.xi);

  const std::string name = f.string("strategy");
  if (!is_strategy_name(name)) {
    throw ConfigError(f.path("strategy") + ": unknown strategy '" + name + "'");
  }
  CampaignConfig cfg;
  cfg.strategy = make_strategy(name, defaults);
  cfg.strategy.model.kernel =
      detail::parse_kernel_kind(f.string_or("kernel", "matern25"), f.path("kernel"));
  cfg.strategy.model.restarts = f.unsigned_or("restarts", cfg.strategy.model.restarts);
  cfg.strategy.options.direct_max_evals =
      f.unsigned_or("direct_max_evals", cfg.strategy.options.direct_max_evals);
  cfg.strategy.options.max_grid_points =
      f.unsigned_or("max_grid_points", cfg.strategy.options.max_grid_points);
  if (cfg.strategy.options.direct_max_evals < 1) {
    throw ConfigError(f.path("direct_max_evals") + ": must be >= 1");
  }
  cfg.seed = f.unsigned_or("seed", 0);

  Bounds bounds;
  {
    Fields b(f.at("bounds"), f.path("bounds"));
    try {
      bounds = Bounds(b.numbers("lower"), b.numbers("upper"));
    } catch (const InputError& e) {
      throw ConfigError(f.path("bounds") + ": " + e.what());
    }
    b.finish();
  }
  f.allow("hierarchy");
  f.allow("constrained_dims");
  if (f.has("hierarchy")) {
    cfg.problem.hierarchy = detail::parse_hierarchy(f.at("hierarchy"), f.path("hierarchy"));
  }
  std::vector<std::size_t> constrained;
  if (f.has("constrained_dims")) {
    constrained = f.indices("constrained_dims");
  } else if (cfg.problem.hierarchy && !cfg.problem.hierarchy->levels.empty()) {
    constrained = cfg.problem.hierarchy->levels.front().dims;
  } else {
    throw ConfigError(f.path("constrained_dims") + ": missing required field");
  }
  for (std::size_t i : constrained) {
    if (i >= bounds.dimension()) {
      throw ConfigError(f.path("constrained_dims") + ": index " + std::to_string(i) +
                        " out of range for d = " + std::to_string(bounds.dimension()));
    }
  }
  const std::size_t per_dim = f.unsigned_or("ts_grid_per_dim", kDefaultTsGridPerDim);
  cfg.problem.space = DesignSpace::make(std::move(bounds), std::move(constrained), per_dim);
  cfg.problem.validate_for(cfg.strategy);
  f.finish();
  return cfg;
}

json config_to_json(const CampaignConfig& c) {
  const StrategyConfig& s = c.strategy;
  json out = {{"strategy", s.name},
              {"batch_size", s.batch_size},
              {"delta", s.acquisition.delta},
              {"beta", s.acquisition.beta},
              {"xi", s.acquisition.xi},
              {"kernel", detail::kernel_kind_name(s.model.kernel)},
              {"restarts", s.model.restarts},
              {"direct_max_evals", s.options.direct_max_evals},
              {"max_grid_points", s.options.max_grid_points},
              {"seed", c.seed},
              {"bounds",
               {{"lower", c.problem.space.bounds.lower}, {"upper", c.problem.space.bounds.upper}}},
              {"constrained_dims", c.problem.space.constrained_dims},
              {"ts_grid_per_dim", c.problem.space.ts_grid_per_dim}};
  out["hierarchy"] =
      c.problem.hierarchy ? detail::hierarchy_to_json(*c.problem.hierarchy) : json(nullptr);
  return out;
}

}  // namespace

CampaignConfig parse_campaign_config(std::string_view json_text) {
  return config_from_json(detail::parse_json(json_text, "campaign config"), "");
}

std::string campaign_config_to_json(const CampaignConfig& config) {
  return config_to_json(config).dump(2);
}

CampaignState campaign_init(const CampaignConfig& config) {
  config.problem.validate_for(config.strategy);
  CampaignState state;
  state.config = config;
  state.search = SearchState(config.problem.space.dimension(),
                             config.problem.space.constrained_dims.size());
  return state;
}

BatchProposal suggest(CampaignState& state) {
  if (state.pending) {
    throw SequencingError("suggest: batch " + std::to_string(state.t()) +
                          " is still waiting for observations");
  }
  BatchProposal batch = plan_batch(state.config.strategy, state.config.problem, state.search,
                                   SeedSequence(state.config.seed));
  ++state.substream_counter;
  state.pending = batch;
  return batch;
}

void observe(CampaignState& state, std::span<const double> values) {
  if (!state.pending) throw SequencingError("observe: no pending batch; call suggest first");
  if (values.size() != state.pending->size()) {
    throw InputError("observe: expected " + std::to_string(state.pending->size()) +
                     " values, got " + std::to_string(values.size()));
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      throw InputError("observe: value for slot " + std::to_string(k) + " is not finite");
    }
  }
  absorb_batch(state.config.strategy, state.config.problem, state.search, *state.pending, values);
  state.pending.reset();
}

std::string serialize_state(const CampaignState& state) {
  json doc;
  doc["schema_version"] = kStateSchemaVersion;
  doc["config"] = config_to_json(state.config);
  doc["t"] = state.search.iteration;
  doc["seed"] = state.config.seed;
  doc["substream_counter"] = state.substream_counter;
  doc["dataset"] = dataset_to_json(state.search.data);
  doc["outer_dataset"] = dataset_to_json(state.search.outer_data);
  doc["kernels"] = {{"inner", kernel_to_json(state.search.inner_kernel)},
                    {"outer", kernel_to_json(state.search.outer_kernel)}};
  if (state.pending) {
    json tags = json::array();
    for (Provenance p : state.pending->provenance) tags.push_back(to_string(p));
    doc["pending"] = {{"points", points_to_json(state.pending->points)}, {"provenance", tags}};
  } else {
    doc["pending"] = nullptr;
  }
  return doc.dump(2);
}

CampaignState deserialize_state(std::string_view json_text) {
  const json doc = detail::parse_json(json_text, "campaign state");
  Fields f(doc, "");
  const std::uint64_t version = f.unsigned_int("schema_version");
  if (version != kStateSchemaVersion) {
    throw ConfigError("schema_version: state file has version " + std::to_string(version) +
                      ", this build reads version " + std::to_string(kStateSchemaVersion));
  }
  CampaignState state = campaign_init(config_from_json(f.at("config"), "config"));
  if (f.unsigned_int("seed") != state.config.seed) {
    throw ConfigError("seed: does not match config.seed");
  }
  SearchState& s = state.search;
  s.iteration = f.unsigned_int("t");
  state.substream_counter = f.unsigned_int("substream_counter");
  s.data = dataset_from_json(f.at("dataset"), "dataset");
  s.outer_data = dataset_from_json(f.at("outer_dataset"), "outer_dataset");
  if (s.data.dim != state.config.problem.space.dimension()) {
    throw ConfigError("dataset.dim: does not match the design space");
  }
  {
    Fields k(f.at("kernels"), "kernels");
    s.inner_kernel = kernel_from_json(k.at("inner"), "kernels.inner");
    s.outer_kernel = kernel_from_json(k.at("outer"), "kernels.outer");
    k.finish();
  }
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    if (s.data.outputs[i] > s.best_value) {
      s.best_value = s.data.outputs[i];
      s.best_point = s.data.inputs[i];
    }
  }
  const json& pending = f.at("pending");
  if (!pending.is_null()) {
    Fields p(pending, "pending");
    BatchProposal batch;
    batch.points = points_from_json(p.at("points"), "pending.points");
    const json& tags = p.at("provenance");
    if (!tags.is_array() || tags.size() != batch.points.size()) {
      throw ConfigError("pending.provenance: expected one tag per point");
    }
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (!tags[i].is_string()) throw ConfigError("pending.provenance: expected strings");
      batch.provenance.push_back(provenance_from_string(
          tags[i].get<std::string>(), "pending.provenance[" + std::to_string(i) + "]"));
    }
    p.finish();
    state.pending = std::move(batch);
  }
  f.finish();
  return state;
}

void save_state(const CampaignState& state, const std::filesystem::path& path) {
  const std::string text = serialize_state(state);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write state file " + tmp.string());
    out << text << '\n';
    if (!out.flush()) throw IoError("failed writing state file " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace state file " + path.string() + ": " + ec.message());
}

CampaignState load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read state file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_state(buf.str());
}

}  // namespace pcbo
