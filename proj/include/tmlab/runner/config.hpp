#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tmlab/cmaddpg/trainer.hpp"
#include "tmlab/incentive/incentive_rl.hpp"

namespace tmlab::runner {

struct ExperimentConfig {
  cmaddpg::TrainConfig train;
  incentive::SacConfig sac;
  std::vector<std::uint64_t> seeds{1};
  int episodes = 0;  // M
  std::string out_dir = "runs";
  int checkpoint_interval = 0;  // episodes; 0 writes only the final checkpoint
  std::string sac_checkpoint;   // pretrained incentive agent for the RL schemes
  int eval_configs = 500;
  int fairness_window = 1000;

  void validate() const;
  // The training part with planned_episodes taken from `episodes`.
  cmaddpg::TrainConfig train_config() const;
};

// Every key with its current value, in sorted key order. Lists are
// comma-separated, numbers in shortest round-trip form.
std::map<std::string, std::string> to_entries(const ExperimentConfig& config);
std::string to_text(const ExperimentConfig& config);

// Applies one `key = value` setting. UsageError names the key on an unknown
// key or a malformed value.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

// Parses `key = value` lines over `base`. '#' starts a comment. Keys may
// appear in any order; a repeated key is an error.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

// FNV-1a over the canonical text, so field order in the source file and
// explicitly written defaults do not change it.
std::uint64_t config_hash(const ExperimentConfig& config);
std::string hash_hex(std::uint64_t h);

// Scheme presets named after the SchemeKind values, plus "plain" (no
// incentive). Sets scheme.kind and the static alphas.
void apply_scheme_preset(ExperimentConfig& config, std::string_view name);
std::vector<std::string> preset_names();

}  // namespace tmlab::runner
