#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "pcbo/strategies.hpp"

namespace pcbo {

inline constexpr int kStateSchemaVersion = 1;

/// Everything needed to start an ask-tell campaign.
struct CampaignConfig {
  StrategyConfig strategy;
  Problem problem;
  std::uint64_t seed = 0;
};

/// Reads a campaign config document:
///
///   {"strategy": "pc_ts_ucb", "bounds": {"lower": [..], "upper": [..]},
///    "constrained_dims": [0], "batch_size": 4, "seed": 7}
///
/// Optional: hierarchy ([{"dims": [..], "K": k}, ..]), ts_grid_per_dim, delta,
/// beta, xi, kernel ("matern25" | "rbf"), restarts, direct_max_evals,
/// max_grid_points. Throws ConfigError with the offending field path.
CampaignConfig parse_campaign_config(std::string_view json_text);
std::string campaign_config_to_json(const CampaignConfig& config);

/// Ask-tell campaign. At most one batch is pending at a time.
struct CampaignState {
  CampaignConfig config;
  SearchState search;
  std::uint64_t substream_counter = 0;  // proposals issued so far
  std::optional<BatchProposal> pending;

  std::size_t t() const noexcept { return search.iteration; }
};

/// Validates the config; t = 0, no data, nothing pending.
CampaignState campaign_init(const CampaignConfig& config);

/// Next batch (the initialization batch at t = 0), recorded as pending.
/// Throws SequencingError if a batch is already pending.
BatchProposal suggest(CampaignState& state);

/// Absorbs one value per pending point, clears the pending batch and advances t.
/// Throws SequencingError without a pending batch and InputError on a count
/// mismatch or a non-finite value.
void observe(CampaignState& state, std::span<const double> values);

std::string serialize_state(const CampaignState& state);
/// Rejects unknown fields and other schema versions with ConfigError.
CampaignState deserialize_state(std::string_view json_text);

/// Writes via a temporary file and rename. Throws IoError.
void save_state(const CampaignState& state, const std::filesystem::path& path);
CampaignState load_state(const std::filesystem::path& path);

}  // namespace pcbo
