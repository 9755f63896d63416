#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tmlab/eval/evaluation.hpp"
#include "tmlab/runner/config.hpp"

namespace tmlab::runner {

inline constexpr const char* kArtifactVersion = "1.0.0";

// TMLAB_THREADS if set to a positive integer, else the hardware count.
int thread_cap();

struct SeedOutputs {
  std::uint64_t seed = 0;
  std::string metrics;
  std::string checkpoint;
};

std::string metrics_path(const std::string& out_dir, std::uint64_t seed);
std::string checkpoint_path(const std::string& out_dir, std::uint64_t seed);

// Trains every seed (up to thread_cap() at once), writing per seed a metrics
// CSV and a checkpoint, then a manifest. With `resume`, continues the run
// stored in that checkpoint up to config.episodes instead.
std::vector<SeedOutputs> train_command(const ExperimentConfig& config,
                                       const std::optional<std::string>& resume, std::ostream& log);

// Trains a single seed in-process and returns the trainer's log; used by
// train_command and by tests.
eval::MetricsLog train_seed(const ExperimentConfig& config, std::uint64_t seed,
                            const std::optional<std::string>& resume, std::ostream& log);

void write_manifest(const std::string& path, const ExperimentConfig& config,
                    const std::vector<SeedOutputs>& outputs, const std::string& started,
                    const std::string& finished);

// Side A is `team_a` of the first checkpoint, side B `team_b` of the second.
eval::PairedEvalReport eval_command(const std::string& checkpoint_a, int team_a,
                                    const std::string& checkpoint_b, int team_b, int n_configs,
                                    std::uint64_t seed, const std::string& out_csv, std::ostream& table);

// Each checkpoint contributes its weak team; entries are named by scheme.
eval::TournamentResult tournament_command(const std::vector<std::string>& checkpoints, int n_configs,
                                          std::uint64_t seed, const std::string& out_csv,
                                          std::ostream& table);

eval::FairnessSummary fairness_command(const std::vector<std::string>& metrics_files, int window,
                                       const std::string& out_csv, std::ostream& table);

// Pretrains the incentive agent, writing a checkpoint with both the
// trainer and the agent, the metrics CSV and a per-block CSV.
incentive::PretrainResult pretrain_command(const ExperimentConfig& config, std::uint64_t seed,
                                           std::ostream& log);

std::string utc_timestamp();

}  // namespace tmlab::runner
