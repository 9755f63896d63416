#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "tmlab/cmaddpg/trainer.hpp"
#include "tmlab/incentive/incentive_rl.hpp"
#include "tmlab/runner/config.hpp"

namespace tmlab::runner {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// File layout: "TMLB", u32 version, "CONF" section (canonical config text
// and seed), then an optional "TRNR" trainer section and an optional "SACA"
// incentive agent section, each preceded by a u8 presence flag.
struct Checkpoint {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::unique_ptr<cmaddpg::Trainer> trainer;
  std::optional<incentive::SacAgent> sac;
};

void save_checkpoint(const std::string& path, const ExperimentConfig& config, std::uint64_t seed,
                     const cmaddpg::Trainer* trainer, const incentive::SacAgent* sac);

// IoError naming the path if it cannot be opened, FormatError on a bad
// magic or version, CorruptionError on truncation.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tmlab::runner
