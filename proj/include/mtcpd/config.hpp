#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mtcpd/channel.hpp"
#include "mtcpd/decomposition.hpp"

namespace mtcpd {

enum class RankRule { fixed, avg, pcm };

std::string to_string(RankRule rule);
RankRule rank_rule_from_string(const std::string& s);

/// Full experiment specification. Defaults follow the desk-scale profile;
/// paper_profile() switches to the 8x8x512 / 1200-realization setup.
struct ExperimentConfig {
  ScenarioConfig scenario;
  std::vector<double> snr_grid_db = {-20.0, -10.0, 0.0};
  std::size_t n_realizations = 50;
  std::vector<std::string> methods = {"cpd", "mtcpd"};
  std::string plan_cpd = "trivial";
  std::string plan_mtcpd = "all2";
  std::size_t r_max = 16;
  std::size_t fixed_rank = 16;
  AlsSettings als;
  std::vector<RankRule> rank_rules = {RankRule::avg, RankRule::pcm};
  double pcm_threshold = 0.5;
  std::vector<std::size_t> streams_p = {1, 2};
  double snr_dl_db = 10.0;
  std::uint64_t master_seed = 1;
  std::string output_dir = "runs/out";
  bool dump_components = false;

  void validate() const;

  /// Plan for a method name, resolved against the scenario dimensions.
  TensorizationPlan plan_for(const std::string& method) const;

  /// Key-sorted text rendering; hashing it gives the provenance config hash.
  std::string canonical_text() const;
  std::string config_hash() const;
};

ExperimentConfig desk_profile();
ExperimentConfig paper_profile();

/// Parse the TOML-style config text (sections, key = value, scalar arrays).
/// Unknown keys and malformed values raise std::invalid_argument with the
/// offending key/line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Plan spec: "trivial", "all2", or explicit "x=2,2;y=2,2;k=4,4,4".
TensorizationPlan resolve_plan(const std::string& spec, std::size_t x, std::size_t y,
                               std::size_t k);

std::uint64_t fnv1a64(const std::string& s);

/// Deterministic shortest round-trip formatting for doubles ("%.17g" pruned).
std::string format_double(double v);

}  // namespace mtcpd
