#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcbo/acquisition.hpp"
#include "pcbo/gp.hpp"
#include "pcbo/inner_opt.hpp"
#include "pcbo/objectives.hpp"
#include "pcbo/random.hpp"
#include "pcbo/types.hpp"

namespace pcbo {

inline constexpr std::size_t kDefaultTsGridPerDim = 10;
inline constexpr std::size_t kDefaultMaxTsGridPoints = 5000;
inline constexpr std::size_t kFallbackProbes = 1000;

/// Box plus the split X = X^c x X^uc. Constrained coordinates are shared by every
/// point of a process-constrained batch.
struct DesignSpace {
  Bounds bounds;
  std::vector<std::size_t> constrained_dims;
  std::vector<std::size_t> unconstrained_dims;
  std::size_t ts_grid_per_dim = kDefaultTsGridPerDim;

  /// Builds the space; unconstrained dims are the sorted complement.
  static DesignSpace make(Bounds bounds, std::vector<std::size_t> constrained,
                          std::size_t ts_grid_per_dim = kDefaultTsGridPerDim);

  std::size_t dimension() const noexcept { return bounds.dimension(); }
  void validate() const;
};

struct HierarchyLevel {
  std::vector<std::size_t> dims;
  std::size_t batch_size = 1;
};

/// Levels l_0..l_{N-1}; each fixes its dims for all descendants and branches
/// into batch_size children. Level dim sets partition the input dims; K_0 = 1.
struct HierarchySpec {
  std::vector<HierarchyLevel> levels;

  void validate(std::size_t dimension) const;
  std::size_t leaves() const noexcept;
  /// Union of dims of levels [from, N), ascending.
  std::vector<std::size_t> dims_from(std::size_t level) const;
};

enum class Provenance { ucb, ts, pure_exploration, random };

std::string to_string(Provenance p);

/// One synchronous batch x_{t,0..B-1}. The first point's tag is `ucb` whenever
/// it came from maximizing the configured acquisition (UCB, GP-UCB or EI).
struct BatchProposal {
  std::vector<Point> points;
  std::vector<Provenance> provenance;

  std::size_t size() const noexcept { return points.size(); }
  void add(Point p, Provenance tag) {
    points.push_back(std::move(p));
    provenance.push_back(tag);
  }
};

struct ProposalOptions {
  std::size_t direct_max_evals = kDefaultDirectEvaluations;
  std::size_t max_grid_points = kDefaultMaxTsGridPoints;
};

/// Substreams for the batch slots of one proposal.
class SlotStreams {
 public:
  SlotStreams(SeedSequence seeds, std::uint64_t iteration) : seeds_(seeds), iteration_(iteration) {}
  RandomStream slot(std::uint64_t k) const {
    return seeds_.stream(StreamPurpose::proposal, iteration_, k);
  }

 private:
  SeedSequence seeds_;
  std::uint64_t iteration_;
};

/// DIRECT over the free coordinates of `base`; if DIRECT errors or never
/// improves on its first sample, the best of kFallbackProbes uniform probes
/// is taken when it is strictly better.
MaximizeResult maximize_acquisition(const ScalarObjective& objective, const Bounds& bounds,
                                    std::span<const double> base,
                                    std::span<const std::size_t> free_dims,
                                    std::size_t max_evals);

BatchProposal propose_random(const DesignSpace& space, std::size_t batch_size, RandomStream& rng);

BatchProposal propose_sequential(const GpPosterior& model, const DesignSpace& space,
                                 const AcquisitionSpec& acq, std::size_t t, double f_best,
                                 const ProposalOptions& opts = {});

/// GP-UCB point, then B-1 points of maximal hallucinated posterior variance.
BatchProposal propose_gp_ucb_pe(const GpPosterior& model, const DesignSpace& space,
                                std::size_t batch_size, std::size_t t, double delta,
                                const ProposalOptions& opts = {});

/// pc-BO(basic): UCB-type point over the full box, then hallucinated-variance
/// points over X^uc with the first point's x^c.
BatchProposal propose_pc_basic(const GpPosterior& model, const DesignSpace& space,
                               std::size_t batch_size, std::size_t t, const AcquisitionSpec& acq,
                               const ProposalOptions& opts = {});

/// pc-BO(nested): x^c from the outer model (fit on constrained coordinates),
/// x^uc of point 0 from the inner acquisition, the rest by inner variance.
BatchProposal propose_pc_nested(const GpPosterior& outer_model, const GpPosterior& inner_model,
                                const DesignSpace& space, std::size_t batch_size, std::size_t t,
                                const AcquisitionSpec& acq, const ProposalOptions& opts = {});

/// pc-BO-TS: acquisition point over the full box, then B-1 Thompson draws on
/// the X^uc grid through x^c; slot k draws from `streams.slot(k)`.
BatchProposal propose_pc_bo_ts(const GpPosterior& model, const DesignSpace& space,
                               std::size_t batch_size, std::size_t t, double f_best,
                               const AcquisitionSpec& acq, const SlotStreams& streams,
                               const ProposalOptions& opts = {});

/// Level sets X^0..X^{N-1} of an hpc tree; parent[l][i] indexes X^{l-1}.
struct HpcProposal {
  BatchProposal batch;  // leaves, x_ucb first
  std::vector<std::vector<Point>> levels;
  std::vector<std::vector<std::size_t>> parent;
};

/// hpc-BO-TS tree expansion around `x_ucb`. Node i of level l (l >= 1) uses
/// substream slot (sum_{1 <= j < l} |X^j|) + i, so a two-level tree with the
/// split (X^c, X^uc) reproduces propose_pc_bo_ts.
HpcProposal propose_hpc_bo_ts(const GpPosterior& model, const HierarchySpec& hierarchy,
                              const Bounds& bounds, std::size_t ts_grid_per_dim,
                              std::span<const double> x_ucb, const SlotStreams& streams,
                              const ProposalOptions& opts = {});

// ---------------------------------------------------------------------------
// Strategy registry and the campaign loop

enum class StrategyKind { random, sequential, gp_ucb_pe, pc_basic, pc_nested, pc_ts, hpc_ts };

/// How the GP is refit before each proposal.
struct ModelSettings {
  KernelKind kernel = KernelKind::matern25;
  HyperparameterBounds bounds;
  std::size_t restarts = 5;
  double default_length_scale = 0.5;  // unit-cube scale
};

struct StrategyConfig {
  std::string name;
  StrategyKind kind = StrategyKind::random;
  AcquisitionSpec acquisition;
  std::size_t batch_size = 4;
  ProposalOptions options;
  ModelSettings model;

  bool process_constrained() const noexcept {
    return kind == StrategyKind::pc_basic || kind == StrategyKind::pc_nested ||
           kind == StrategyKind::pc_ts;
  }
};

/// Exploration parameters shared by registry entries.
struct StrategyDefaults {
  std::size_t batch_size = 4;
  double delta = kDefaultGpUcbDelta;
  double beta = kDefaultUcbBeta;
  double xi = kDefaultEiXi;
};

/// random, seq_bo, gp_ucb_pe, pc_basic_gpucb, pc_basic_ucb, pc_nested_gpucb,
/// pc_nested_ucb, pc_ts_ucb, pc_ts_ei, hpc_ts_ucb.
const std::vector<std::string>& strategy_names();
bool is_strategy_name(std::string_view name);
/// Throws ConfigError for unknown names. seq_bo always has batch size 1.
StrategyConfig make_strategy(std::string_view name, const StrategyDefaults& defaults = {});

/// Design space, plus the level structure for hpc strategies.
struct Problem {
  DesignSpace space;
  std::optional<HierarchySpec> hierarchy;

  void validate_for(const StrategyConfig& strategy) const;
  /// Points per batch for `strategy` (the leaf count for hpc).
  std::size_t batch_size_for(const StrategyConfig& strategy) const;
};

/// Everything the planner needs between batches.
struct SearchState {
  std::size_t iteration = 0;  // index of the next batch; 0 is the initialization batch
  Dataset data;
  Dataset outer_data;  // pc_nested only: (x^c, best value in batch)
  std::optional<KernelSpec> inner_kernel;
  std::optional<KernelSpec> outer_kernel;
  Point best_point;
  double best_value = -std::numeric_limits<double>::infinity();

  SearchState() = default;
  SearchState(std::size_t dim, std::size_t constrained_dim) : data(dim), outer_data(constrained_dim) {}

  friend bool operator==(const SearchState&, const SearchState&) = default;
};

/// Initialization batch shared by every strategy of the same class at a seed:
/// the first point is uniform over X; process-constrained strategies copy its
/// x^c into the remaining points and draw x^uc uniformly, all others draw the
/// remaining points uniformly over X.
BatchProposal initial_batch(const StrategyConfig& strategy, const Problem& problem,
                            const SeedSequence& seeds);

/// Next batch for `state.iteration`; refits hyperparameters when iteration >= 1
/// and records the optimum in `state` for warm starts.
BatchProposal plan_batch(const StrategyConfig& strategy, const Problem& problem,
                         SearchState& state, const SeedSequence& seeds);

/// Appends the observed batch and advances the iteration counter.
void absorb_batch(const StrategyConfig& strategy, const Problem& problem, SearchState& state,
                  const BatchProposal& batch, std::span<const double> values);

struct IterationRecord {
  std::size_t t = 0;
  BatchProposal proposal;
  std::vector<double> values;
  double best_value = 0.0;  // best-so-far after this iteration
};

struct CampaignHistory {
  std::vector<IterationRecord> iterations;
  Point best_point;
  double best_value = -std::numeric_limits<double>::infinity();
  std::optional<std::string> error;

  bool ok() const noexcept { return !error.has_value(); }
  /// Every observation in evaluation order.
  Dataset dataset() const;
};

/// Initialization batch plus `iterations` proposal batches against `objective`.
/// A non-finite objective value (or any planner failure) stops the campaign and
/// is recorded in `error` with the history gathered so far.
CampaignHistory run_campaign(const StrategyConfig& strategy, const Objective& objective,
                             const Problem& problem, std::size_t iterations, std::uint64_t seed);

}  // namespace pcbo
