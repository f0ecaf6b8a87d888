#include "pcbo/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pcbo/errors.hpp"

namespace pcbo {

namespace {

constexpr std::uint64_t kProbeSeed = 0x5eedULL;

std::vector<std::size_t> all_dims(std::size_t d) {
  std::vector<std::size_t> dims(d);
  std::iota(dims.begin(), dims.end(), std::size_t{0});
  return dims;
}

Point uniform_point(const Bounds& bounds, RandomStream& rng) {
  Point p(bounds.dimension());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = rng.uniform(bounds.lower[i], bounds.upper[i]);
  return p;
}

std::vector<Point> slice_grid(const Bounds& bounds, std::span<const std::size_t> free,
                              std::span<const double> anchor, std::size_t per_dim,
                              std::size_t cap) {
  std::vector<Point> free_grid;
  try {
    free_grid = unit_grid(bounds.subset(free), per_dim, cap);
  } catch (const CapacityError& e) {
    throw CapacityError(std::string(e.what()) + "; reduce ts_grid_per_dim");
  }
  std::vector<Point> grid;
  grid.reserve(free_grid.size());
  for (const Point& g : free_grid) grid.push_back(inject(anchor, free, g));
  return grid;
}

Point thompson_pick(const GridSampler& sampler, RandomStream rng) {
  const std::vector<double> draw = sampler.draw(rng);
  return grid_argmax(draw, sampler.grid()).point;
}

// Fills points 1..B-1 by maximizing the posterior variance over `free`, adding
// each chosen point to the model at its posterior mean before the next.
void fill_by_variance(const GpPosterior& model, const Bounds& bounds,
                      std::span<const std::size_t> free, std::size_t batch_size,
                      std::size_t max_evals, BatchProposal& batch) {
  if (batch.size() >= batch_size) return;
  GpPosterior current = model;
  const Point anchor = batch.points.front();
  while (batch.size() < batch_size) {
    current = current.with_hallucinated(std::span<const Point>(&batch.points.back(), 1));
    auto variance = [&current](std::span<const double> x) { return current.predict(x).variance; };
    batch.add(maximize_acquisition(variance, bounds, anchor, free, max_evals).point,
              Provenance::pure_exploration);
  }
}

void check_model(const GpPosterior& model, const Bounds& bounds, const char* who) {
  if (model.dimension() != bounds.dimension()) {
    throw InputError(std::string(who) + ": model dimension " + std::to_string(model.dimension()) +
                     " does not match the design space dimension " +
                     std::to_string(bounds.dimension()));
  }
}

void check_batch(std::size_t batch_size, const char* who) {
  if (batch_size < 1) throw InputError(std::string(who) + ": batch size must be >= 1");
}

double best_output(const Dataset& data) {
  if (data.empty()) return 0.0;
  return *std::max_element(data.outputs.begin(), data.outputs.end());
}

}  // namespace

DesignSpace DesignSpace::make(Bounds bounds, std::vector<std::size_t> constrained,
                              std::size_t ts_grid_per_dim) {
  DesignSpace s;
  std::sort(constrained.begin(), constrained.end());
  for (std::size_t i = 0; i < bounds.dimension(); ++i) {
    if (!std::binary_search(constrained.begin(), constrained.end(), i)) {
      s.unconstrained_dims.push_back(i);
    }
  }
  s.bounds = std::move(bounds);
  s.constrained_dims = std::move(constrained);
  s.ts_grid_per_dim = ts_grid_per_dim;
  s.validate();
  return s;
}

void DesignSpace::validate() const {
  const std::size_t d = bounds.dimension();
  if (d == 0) throw ConfigError("design space has no dimensions");
  if (constrained_dims.empty()) throw ConfigError("constrained dimension set is empty");
  std::vector<int> seen(d, 0);
  for (std::size_t i : constrained_dims) {
    if (i >= d) {
      throw ConfigError("constrained dimension " + std::to_string(i) + " out of range for d = " +
                        std::to_string(d));
    }
    ++seen[i];
  }
  for (std::size_t i : unconstrained_dims) {
    if (i >= d) {
      throw ConfigError("unconstrained dimension " + std::to_string(i) +
                        " out of range for d = " + std::to_string(d));
    }
    ++seen[i];
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (seen[i] != 1) {
      throw ConfigError("dimension " + std::to_string(i) +
                        " must be either constrained or unconstrained, exactly once");
    }
  }
  if (ts_grid_per_dim < 2) throw ConfigError("ts_grid_per_dim must be >= 2");
}

void HierarchySpec::validate(std::size_t dimension) const {
  if (levels.empty()) throw ConfigError("hierarchy has no levels");
  if (levels.front().batch_size != 1) throw ConfigError("hierarchy level 0 must have K = 1");
  std::vector<int> seen(dimension, 0);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (levels[l].batch_size < 1) {
      throw ConfigError("hierarchy level " + std::to_string(l) + " has K = 0");
    }
    if (levels[l].dims.empty()) {
      throw ConfigError("hierarchy level " + std::to_string(l) + " has no dimensions");
    }
    for (std::size_t i : levels[l].dims) {
      if (i >= dimension) {
        throw ConfigError("hierarchy dimension " + std::to_string(i) + " out of range for d = " +
                          std::to_string(dimension));
      }
      ++seen[i];
    }
  }
  for (std::size_t i = 0; i < dimension; ++i) {
    if (seen[i] != 1) {
      throw ConfigError("hierarchy must assign dimension " + std::to_string(i) +
                        " to exactly one level");
    }
  }
}

std::size_t HierarchySpec::leaves() const noexcept {
  std::size_t n = 1;
  for (const auto& level : levels) n *= level.batch_size;
  return n;
}

std::vector<std::size_t> HierarchySpec::dims_from(std::size_t level) const {
  std::vector<std::size_t> out;
  for (std::size_t l = level; l < levels.size(); ++l) {
    out.insert(out.end(), levels[l].dims.begin(), levels[l].dims.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::ucb: return "ucb";
    case Provenance::ts: return "ts";
    case Provenance::pure_exploration: return "pure_exploration";
    case Provenance::random: return "random";
  }
  return "unknown";
}

MaximizeResult maximize_acquisition(const ScalarObjective& objective, const Bounds& bounds,
                                    std::span<const double> base,
                                    std::span<const std::size_t> free_dims,
                                    std::size_t max_evals) {
  const Point anchor(base.begin(), base.end());
  if (free_dims.empty()) return {anchor, objective(anchor), 1};

  std::optional<MaximizeResult> found;
  try {
    found = direct_maximize_subspace(objective, bounds, anchor, free_dims, max_evals);
  } catch (const NumericalError&) {
    found.reset();
  }
  const Bounds sub = bounds.subset(free_dims);
  if (found) {
    const double at_center = objective(inject(anchor, free_dims, sub.center()));
    if (found->value > at_center) return *found;
  }

  // flat or failed search: uniform probes from a fixed stream
  RandomStream rng(kProbeSeed);
  std::size_t evals = found ? found->evaluations + 1 : 0;
  for (std::size_t i = 0; i < kFallbackProbes; ++i) {
    Point p = inject(anchor, free_dims, uniform_point(sub, rng));
    const double v = objective(p);
    ++evals;
    if (!std::isfinite(v)) continue;
    if (!found || v > found->value) found = MaximizeResult{std::move(p), v, 0};
  }
  if (!found) throw NumericalError("maximize_acquisition: no finite acquisition value found");
  found->evaluations = evals;
  return *found;
}

BatchProposal propose_random(const DesignSpace& space, std::size_t batch_size, RandomStream& rng) {
  check_batch(batch_size, "propose_random");
  BatchProposal batch;
  for (std::size_t k = 0; k < batch_size; ++k) {
    batch.add(uniform_point(space.bounds, rng), Provenance::random);
  }
  return batch;
}

BatchProposal propose_sequential(const GpPosterior& model, const DesignSpace& space,
                                 const AcquisitionSpec& acq, std::size_t t, double f_best,
                                 const ProposalOptions& opts) {
  check_model(model, space.bounds, "propose_sequential");
  acq.validate();
  auto alpha = [&](std::span<const double> x) { return score(model, acq, x, t, f_best); };
  BatchProposal batch;
  batch.add(maximize_acquisition(alpha, space.bounds, space.bounds.center(),
                                 all_dims(space.dimension()), opts.direct_max_evals)
                .point,
            Provenance::ucb);
  return batch;
}

BatchProposal propose_gp_ucb_pe(const GpPosterior& model, const DesignSpace& space,
                                std::size_t batch_size, std::size_t t, double delta,
                                const ProposalOptions& opts) {
  check_batch(batch_size, "propose_gp_ucb_pe");
  BatchProposal batch =
      propose_sequential(model, space, AcquisitionSpec::gp_ucb(delta), t, 0.0, opts);
  fill_by_variance(model, space.bounds, all_dims(space.dimension()), batch_size,
                   opts.direct_max_evals, batch);
  return batch;
}

BatchProposal propose_pc_basic(const GpPosterior& model, const DesignSpace& space,
                               std::size_t batch_size, std::size_t t, const AcquisitionSpec& acq,
                               const ProposalOptions& opts) {
  check_batch(batch_size, "propose_pc_basic");
  BatchProposal batch =
      propose_sequential(model, space, acq, t, best_output(model.data()), opts);
  fill_by_variance(model, space.bounds, space.unconstrained_dims, batch_size,
                   opts.direct_max_evals, batch);
  return batch;
}

BatchProposal propose_pc_nested(const GpPosterior& outer_model, const GpPosterior& inner_model,
                                const DesignSpace& space, std::size_t batch_size, std::size_t t,
                                const AcquisitionSpec& acq, const ProposalOptions& opts) {
  check_batch(batch_size, "propose_pc_nested");
  check_model(inner_model, space.bounds, "propose_pc_nested");
  const Bounds outer_box = space.bounds.subset(space.constrained_dims);
  check_model(outer_model, outer_box, "propose_pc_nested (outer)");
  acq.validate();

  const double outer_best = best_output(outer_model.data());
  auto outer_alpha = [&](std::span<const double> xc) {
    return score(outer_model, acq, xc, t, outer_best);
  };
  const Point xc = maximize_acquisition(outer_alpha, outer_box, outer_box.center(),
                                        all_dims(outer_box.dimension()), opts.direct_max_evals)
                       .point;

  const Point anchor = inject(space.bounds.center(), space.constrained_dims, xc);
  const double inner_best = best_output(inner_model.data());
  auto inner_alpha = [&](std::span<const double> x) {
    return score(inner_model, acq, x, t, inner_best);
  };
  BatchProposal batch;
  batch.add(maximize_acquisition(inner_alpha, space.bounds, anchor, space.unconstrained_dims,
                                 opts.direct_max_evals)
                .point,
            Provenance::ucb);
  fill_by_variance(inner_model, space.bounds, space.unconstrained_dims, batch_size,
                   opts.direct_max_evals, batch);
  return batch;
}

BatchProposal propose_pc_bo_ts(const GpPosterior& model, const DesignSpace& space,
                               std::size_t batch_size, std::size_t t, double f_best,
                               const AcquisitionSpec& acq, const SlotStreams& streams,
                               const ProposalOptions& opts) {
  check_batch(batch_size, "propose_pc_bo_ts");
  BatchProposal batch = propose_sequential(model, space, acq, t, f_best, opts);
  if (batch_size == 1) return batch;
  const GridSampler sampler(
      model, slice_grid(space.bounds, space.unconstrained_dims, batch.points.front(),
                        space.ts_grid_per_dim, opts.max_grid_points));
  for (std::size_t k = 1; k < batch_size; ++k) {
    batch.add(thompson_pick(sampler, streams.slot(k)), Provenance::ts);
  }
  return batch;
}

HpcProposal propose_hpc_bo_ts(const GpPosterior& model, const HierarchySpec& hierarchy,
                              const Bounds& bounds, std::size_t ts_grid_per_dim,
                              std::span<const double> x_ucb, const SlotStreams& streams,
                              const ProposalOptions& opts) {
  check_model(model, bounds, "propose_hpc_bo_ts");
  hierarchy.validate(bounds.dimension());
  if (x_ucb.size() != bounds.dimension()) {
    throw InputError("propose_hpc_bo_ts: x_ucb dimension mismatch");
  }

  HpcProposal out;
  out.levels.push_back({Point(x_ucb.begin(), x_ucb.end())});
  out.parent.push_back({});
  std::uint64_t slot_offset = 0;
  for (std::size_t l = 1; l < hierarchy.levels.size(); ++l) {
    const std::vector<std::size_t> free = hierarchy.dims_from(l);
    const std::size_t k_l = hierarchy.levels[l].batch_size;
    const std::vector<Point>& prev = out.levels.back();
    std::vector<Point> nodes{prev.front()};
    std::vector<std::size_t> parents{0};

    auto expand = [&](std::size_t parent, std::size_t count) {
      if (count == 0) return;
      const GridSampler sampler(
          model, slice_grid(bounds, free, prev[parent], ts_grid_per_dim, opts.max_grid_points));
      for (std::size_t c = 0; c < count; ++c) {
        nodes.push_back(thompson_pick(sampler, streams.slot(slot_offset + nodes.size())));
        parents.push_back(parent);
      }
    };
    expand(0, k_l - 1);
    for (std::size_t p = 1; p < prev.size(); ++p) expand(p, k_l);

    slot_offset += nodes.size();
    out.levels.push_back(std::move(nodes));
    out.parent.push_back(std::move(parents));
  }

  const std::vector<Point>& leaves = out.levels.back();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    out.batch.add(leaves[i], i == 0 ? Provenance::ucb : Provenance::ts);
  }
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names = {
      "random",          "seq_bo",        "gp_ucb_pe", "pc_basic_gpucb", "pc_basic_ucb",
      "pc_nested_gpucb", "pc_nested_ucb", "pc_ts_ucb", "pc_ts_ei",       "hpc_ts_ucb"};
  return names;
}

bool is_strategy_name(std::string_view name) {
  const auto& names = strategy_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

StrategyConfig make_strategy(std::string_view name, const StrategyDefaults& defaults) {
  StrategyConfig s;
  s.name = std::string(name);
  s.batch_size = defaults.batch_size;
  const AcquisitionSpec gp_ucb = AcquisitionSpec::gp_ucb(defaults.delta);
  const AcquisitionSpec ucb = AcquisitionSpec::ucb(defaults.beta);
  if (name == "random") {
    s.kind = StrategyKind::random;
    s.acquisition = ucb;
  } else if (name == "seq_bo") {
    s.kind = StrategyKind::sequential;
    s.acquisition = ucb;
    s.batch_size = 1;
  } else if (name == "gp_ucb_pe") {
    s.kind = StrategyKind::gp_ucb_pe;
    s.acquisition = gp_ucb;
  } else if (name == "pc_basic_gpucb" || name == "pc_basic_ucb") {
    s.kind = StrategyKind::pc_basic;
    s.acquisition = name == "pc_basic_gpucb" ? gp_ucb : ucb;
  } else if (name == "pc_nested_gpucb" || name == "pc_nested_ucb") {
    s.kind = StrategyKind::pc_nested;
    s.acquisition = name == "pc_nested_gpucb" ? gp_ucb : ucb;
  } else if (name == "pc_ts_ucb") {
    s.kind = StrategyKind::pc_ts;
    s.acquisition = ucb;
  } else if (name == "pc_ts_ei") {
    s.kind = StrategyKind::pc_ts;
    s.acquisition = AcquisitionSpec::ei(defaults.xi);
  } else if (name == "hpc_ts_ucb") {
    s.kind = StrategyKind::hpc_ts;
    s.acquisition = ucb;
  } else {
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
  }
  try {
    s.acquisition.validate();
  } catch (const InputError& e) {
    throw ConfigError(std::string("strategy ") + s.name + ": " + e.what());
  }
  if (s.batch_size < 1) throw ConfigError("batch size must be >= 1");
  return s;
}

void Problem::validate_for(const StrategyConfig& strategy) const {
  space.validate();
  if (strategy.kind == StrategyKind::hpc_ts) {
    if (!hierarchy) throw ConfigError("strategy " + strategy.name + " needs a hierarchy");
    hierarchy->validate(space.dimension());
  }
  if (strategy.batch_size < 1) throw ConfigError("batch size must be >= 1");
}

std::size_t Problem::batch_size_for(const StrategyConfig& strategy) const {
  switch (strategy.kind) {
    case StrategyKind::sequential: return 1;
    case StrategyKind::hpc_ts: return hierarchy ? hierarchy->leaves() : 1;
    default: return strategy.batch_size;
  }
}

namespace {

GpPosterior fit_model(const ModelSettings& settings, const Dataset& data, const Bounds& box,
                      std::optional<KernelSpec>& memo, RandomStream rng) {
  const double ref = output_reference(data.outputs);
  KernelSpec start;
  start.kind = settings.kernel;
  start.output_scale = ref;
  start.length_scale = settings.default_length_scale;
  start.noise_variance = settings.bounds.noise_rel * ref;
  const HyperparameterFit fitted =
      optimize_hyperparams(data, start, settings.bounds, settings.restarts, rng, box, memo);
  memo = fitted.spec;
  return GpPosterior(data, fitted.spec, box);
}

}  // namespace

BatchProposal initial_batch(const StrategyConfig& strategy, const Problem& problem,
                            const SeedSequence& seeds) {
  problem.validate_for(strategy);
  const Bounds& bounds = problem.space.bounds;
  RandomStream rng = seeds.stream(StreamPurpose::initialization, 0, 0);
  const Point first = uniform_point(bounds, rng);

  if (strategy.kind == StrategyKind::hpc_ts) {
    KernelSpec prior;
    prior.kind = strategy.model.kernel;
    prior.length_scale = strategy.model.default_length_scale;
    const GpPosterior model(Dataset(bounds.dimension()), prior, bounds);
    BatchProposal batch = propose_hpc_bo_ts(model, *problem.hierarchy, bounds,
                                            problem.space.ts_grid_per_dim, first,
                                            SlotStreams(seeds, 0), strategy.options)
                              .batch;
    batch.provenance.front() = Provenance::random;
    return batch;
  }

  const std::size_t batch_size = problem.batch_size_for(strategy);
  BatchProposal batch;
  batch.add(first, Provenance::random);
  for (std::size_t k = 1; k < batch_size; ++k) {
    if (strategy.process_constrained()) {
      Point p = first;
      for (std::size_t i : problem.space.unconstrained_dims) {
        p[i] = rng.uniform(bounds.lower[i], bounds.upper[i]);
      }
      batch.add(std::move(p), Provenance::random);
    } else {
      batch.add(uniform_point(bounds, rng), Provenance::random);
    }
  }
  return batch;
}

BatchProposal plan_batch(const StrategyConfig& strategy, const Problem& problem,
                         SearchState& state, const SeedSequence& seeds) {
  problem.validate_for(strategy);
  const std::size_t t = state.iteration;
  if (t == 0) return initial_batch(strategy, problem, seeds);
  if (state.data.empty()) {
    throw SequencingError("plan_batch: iteration " + std::to_string(t) +
                          " requested before any observation");
  }

  const DesignSpace& space = problem.space;
  const std::size_t batch_size = problem.batch_size_for(strategy);
  if (strategy.kind == StrategyKind::random) {
    RandomStream rng = seeds.stream(StreamPurpose::proposal, t, 0);
    return propose_random(space, batch_size, rng);
  }

  const GpPosterior model =
      fit_model(strategy.model, state.data, space.bounds, state.inner_kernel,
                seeds.stream(StreamPurpose::hyperparameters, t, 0));
  const ProposalOptions& opts = strategy.options;

  switch (strategy.kind) {
    case StrategyKind::sequential:
      return propose_sequential(model, space, strategy.acquisition, t, state.best_value, opts);
    case StrategyKind::gp_ucb_pe:
      return propose_gp_ucb_pe(model, space, batch_size, t, strategy.acquisition.delta, opts);
    case StrategyKind::pc_basic:
      return propose_pc_basic(model, space, batch_size, t, strategy.acquisition, opts);
    case StrategyKind::pc_nested: {
      if (state.outer_data.empty()) {
        throw SequencingError("plan_batch: pc_nested has no outer observations");
      }
      const GpPosterior outer =
          fit_model(strategy.model, state.outer_data, space.bounds.subset(space.constrained_dims),
                    state.outer_kernel, seeds.stream(StreamPurpose::outer_hyperparameters, t, 0));
      return propose_pc_nested(outer, model, space, batch_size, t, strategy.acquisition, opts);
    }
    case StrategyKind::pc_ts:
      return propose_pc_bo_ts(model, space, batch_size, t, state.best_value,
                              strategy.acquisition, SlotStreams(seeds, t), opts);
    case StrategyKind::hpc_ts: {
      const Point x_ucb = propose_sequential(model, space, strategy.acquisition, t,
                                             state.best_value, opts)
                              .points.front();
      return propose_hpc_bo_ts(model, *problem.hierarchy, space.bounds, space.ts_grid_per_dim,
                               x_ucb, SlotStreams(seeds, t), opts)
          .batch;
    }
    case StrategyKind::random: break;
  }
  throw ConfigError("plan_batch: unhandled strategy " + strategy.name);
}

void absorb_batch(const StrategyConfig& strategy, const Problem& problem, SearchState& state,
                  const BatchProposal& batch, std::span<const double> values) {
  if (values.size() != batch.size() || batch.size() == 0) {
    throw InputError("absorb_batch: " + std::to_string(values.size()) + " values for a batch of " +
                     std::to_string(batch.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError("absorb_batch: non-finite observation");
  }
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (batch.points[k].size() != problem.space.dimension()) {
      throw InputError("absorb_batch: point dimension mismatch");
    }
  }
  for (std::size_t k = 0; k < batch.size(); ++k) {
    state.data.add(batch.points[k], values[k]);
    if (values[k] > state.best_value) {
      state.best_value = values[k];
      state.best_point = batch.points[k];
    }
  }
  if (strategy.kind == StrategyKind::pc_nested) {
    state.outer_data.add(gather(batch.points.front(), problem.space.constrained_dims),
                         *std::max_element(values.begin(), values.end()));
  }
  ++state.iteration;
}

Dataset CampaignHistory::dataset() const {
  Dataset d;
  for (const auto& rec : iterations) {
    for (std::size_t k = 0; k < rec.values.size(); ++k) {
      if (d.dim == 0) d.dim = rec.proposal.points[k].size();
      d.add(rec.proposal.points[k], rec.values[k]);
    }
  }
  return d;
}

CampaignHistory run_campaign(const StrategyConfig& strategy, const Objective& objective,
                             const Problem& problem, std::size_t iterations, std::uint64_t seed) {
  problem.validate_for(strategy);
  if (problem.space.bounds != objective.bounds()) {
    throw ConfigError("design space bounds differ from the bounds of objective " +
                      objective.name());
  }
  const SeedSequence seeds(seed);
  SearchState state(problem.space.dimension(), problem.space.constrained_dims.size());
  CampaignHistory history;

  for (std::size_t t = 0; t <= iterations; ++t) {
    BatchProposal batch;
    try {
      batch = plan_batch(strategy, problem, state, seeds);
    } catch (const NumericalError& e) {
      history.error = "iteration " + std::to_string(t) + ": " + e.what();
      break;
    }
    std::vector<double> values;
    values.reserve(batch.size());
    for (std::size_t k = 0; k < batch.size() && !history.error; ++k) {
      const double v = objective(batch.points[k]);
      if (!std::isfinite(v)) {
        history.error = "iteration " + std::to_string(t) + ", slot " + std::to_string(k) +
                        ": objective " + objective.name() + " returned a non-finite value";
      }
      values.push_back(v);
    }
    if (history.error) break;
    absorb_batch(strategy, problem, state, batch, values);
    history.iterations.push_back({t, std::move(batch), std::move(values), state.best_value});
  }
  history.best_point = state.best_point;
  history.best_value = state.best_value;
  return history;
}

}  // namespace pcbo
