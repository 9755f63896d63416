#include "tmlab/runner/commands.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tmlab/errors.hpp"
#include "tmlab/eval/metrics.hpp"
#include "tmlab/runner/checkpoint.hpp"

namespace tmlab::runner {
namespace {

namespace fs = std::filesystem;
using eval::format_double;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

std::optional<incentive::SacAgent> frozen_incentive_agent(const ExperimentConfig& config) {
  if (config.train.scheme.rl_target() == incentive::RlTarget::kNone) return std::nullopt;
  if (config.sac_checkpoint.empty()) {
    throw UsageError("scheme " + std::string(incentive::to_string(config.train.scheme.kind)) +
                     " needs sac.checkpoint (run pretrain-incentive first)");
  }
  Checkpoint cp = load_checkpoint(config.sac_checkpoint);
  if (!cp.sac) throw FormatError("checkpoint '" + config.sac_checkpoint + "' holds no incentive agent");
  return std::move(cp.sac);
}

cmaddpg::TeamPolicy team_from(const std::string& path, int team, std::string* name = nullptr,
                              int* weak_member = nullptr) {
  Checkpoint cp = load_checkpoint(path);
  if (!cp.trainer) throw FormatError("checkpoint '" + path + "' holds no trained agents");
  if (name) *name = std::string(incentive::to_string(cp.config.train.scheme.kind));
  const auto& roles = cp.trainer->scheme().roles();
  if (team < 0) team = roles.weak_team;
  if (weak_member) *weak_member = roles.weak_agent % 2;
  return cp.trainer->team_policy(team);
}

void print_rule(std::ostream& out, int width) { out << std::string(static_cast<std::size_t>(width), '-') << '\n'; }

}  // namespace

int thread_cap() {
  if (const char* env = std::getenv("TMLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string metrics_path(const std::string& out_dir, std::uint64_t seed) {
  return (fs::path(out_dir) / ("metrics_seed" + std::to_string(seed) + ".csv")).string();
}

std::string checkpoint_path(const std::string& out_dir, std::uint64_t seed) {
  return (fs::path(out_dir) / ("checkpoint_seed" + std::to_string(seed) + ".tmlb")).string();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

eval::MetricsLog train_seed(const ExperimentConfig& config, std::uint64_t seed,
                            const std::optional<std::string>& resume, std::ostream& log) {
  ExperimentConfig run_config = config;
  std::unique_ptr<cmaddpg::Trainer> trainer;
  if (resume) {
    Checkpoint cp = load_checkpoint(*resume);
    if (!cp.trainer) throw FormatError("checkpoint '" + *resume + "' holds no trainer state");
    run_config = cp.config;
    run_config.episodes = config.episodes;
    run_config.out_dir = config.out_dir;
    seed = cp.seed;
    trainer = std::move(cp.trainer);
  } else {
    trainer = std::make_unique<cmaddpg::Trainer>(run_config.train_config(), seed);
  }
  const std::optional<incentive::SacAgent> agent = frozen_incentive_agent(run_config);
  ensure_dir(run_config.out_dir);
  const std::string ckpt = checkpoint_path(run_config.out_dir, seed);

  const int target = run_config.episodes;
  const int interval = run_config.checkpoint_interval;
  while (trainer->episodes_done() < target) {
    const int done = trainer->episodes_done();
    int chunk = target - done;
    if (interval > 0) chunk = std::min(chunk, interval - done % interval);
    if (agent) {
      incentive::run_with_frozen_agent(*trainer, *agent, run_config.sac, chunk);
    } else {
      trainer->run(chunk);
    }
    if (interval > 0 && trainer->episodes_done() % interval == 0) {
      save_checkpoint(ckpt, run_config, seed, trainer.get(), nullptr);
      log << "seed " << seed << ": episode " << trainer->episodes_done() << " checkpointed\n";
    }
  }
  save_checkpoint(ckpt, run_config, seed, trainer.get(), nullptr);
  eval::write_metrics_file(metrics_path(run_config.out_dir, seed), trainer->log());
  return trainer->log();
}

std::vector<SeedOutputs> train_command(const ExperimentConfig& config,
                                       const std::optional<std::string>& resume, std::ostream& log) {
  config.validate();
  ensure_dir(config.out_dir);
  const std::string started = utc_timestamp();

  std::vector<std::uint64_t> seeds = config.seeds;
  if (resume) seeds = {load_checkpoint(*resume).seed};

  std::vector<SeedOutputs> outputs(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= seeds.size()) return;
      try {
        std::ostringstream local;
        train_seed(config, seeds[k], resume, local);
        outputs[k] = {seeds[k], metrics_path(config.out_dir, seeds[k]), checkpoint_path(config.out_dir, seeds[k])};
        std::lock_guard lock(log_mutex);
        log << local.str() << "seed " << seeds[k] << ": done\n";
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min(thread_cap(), static_cast<int>(seeds.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  write_manifest((fs::path(config.out_dir) / "manifest.json").string(), config, outputs, started,
                 utc_timestamp());
  return outputs;
}

void write_manifest(const std::string& path, const ExperimentConfig& config,
                    const std::vector<SeedOutputs>& outputs, const std::string& started,
                    const std::string& finished) {
  nlohmann::ordered_json j;
  j["artifact_version"] = kArtifactVersion;
  j["config_hash"] = hash_hex(config_hash(config));
  j["started"] = started;
  j["finished"] = finished;
  j["seeds"] = nlohmann::ordered_json::array();
  for (const auto& o : outputs) {
    j["seeds"].push_back({{"seed", o.seed}, {"metrics", o.metrics}, {"checkpoint", o.checkpoint}});
  }
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

eval::PairedEvalReport eval_command(const std::string& checkpoint_a, int team_a,
                                    const std::string& checkpoint_b, int team_b, int n_configs,
                                    std::uint64_t seed, const std::string& out_csv, std::ostream& table) {
  Checkpoint a = load_checkpoint(checkpoint_a);
  const cmaddpg::TeamPolicy side_a = team_from(checkpoint_a, team_a);
  const cmaddpg::TeamPolicy side_b = team_from(checkpoint_b, team_b);
  Rng rng(seed);
  const eval::PairedEvalReport r = eval::paired_eval(side_a, side_b, n_configs, a.config.train.env, rng);

  if (!out_csv.empty()) {
    std::ofstream out = open_out(out_csv);
    out << "side,team_rate,member0_rate,member1_rate,goals\n";
    for (int s = 0; s < 2; ++s) {
      out << (s == 0 ? "A" : "B") << ',' << format_double(r.team_rate(s)) << ','
          << format_double(r.agent_rate(2 * s)) << ',' << format_double(r.agent_rate(2 * s + 1)) << ','
          << r.team_goals[s] << '\n';
    }
  }
  table << "paired evaluation: " << r.episodes << " episodes (" << n_configs << " configurations)\n";
  print_rule(table, 60);
  table << "side  team_rate  member0  member1\n";
  for (int s = 0; s < 2; ++s) {
    table << (s == 0 ? "A     " : "B     ") << format_double(r.team_rate(s)) << "  "
          << format_double(r.agent_rate(2 * s)) << "  " << format_double(r.agent_rate(2 * s + 1)) << '\n';
  }
  table << "no goal: " << r.no_goal << ", collisions per episode: " << format_double(r.collision_rate()) << '\n';
  return r;
}

eval::TournamentResult tournament_command(const std::vector<std::string>& checkpoints, int n_configs,
                                          std::uint64_t seed, const std::string& out_csv,
                                          std::ostream& table) {
  if (checkpoints.size() < 2) throw UsageError("tournament needs at least 2 checkpoints");
  std::vector<eval::TournamentEntry> entries;
  env::EnvConfig env_config;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    eval::TournamentEntry e;
    e.team = team_from(checkpoints[i], -1, &e.name, &e.weak_member);
    if (i == 0) env_config = load_checkpoint(checkpoints[0]).config.train.env;
    entries.push_back(std::move(e));
  }
  Rng rng(seed);
  eval::TournamentResult result = eval::tournament(entries, n_configs, env_config, rng);

  if (!out_csv.empty()) {
    std::ofstream out = open_out(out_csv);
    out << "entry,scheme,normalized_weak_rate,matches\n";
    for (std::size_t i = 0; i < entries.size(); ++i) {
      out << i << ',' << entries[i].name << ',' << format_double(result.normalized_weak_rate[i]) << ','
          << entries.size() - 1 << '\n';
    }
  }
  table << "tournament: " << result.matches.size() << " pairings, " << 2 * n_configs << " episodes each\n";
  print_rule(table, 60);
  for (const auto& m : result.matches) {
    table << entries[m.a].name << " vs " << entries[m.b].name << ": team rates "
          << format_double(m.report.team_rate(0)) << " / " << format_double(m.report.team_rate(1)) << '\n';
  }
  print_rule(table, 60);
  table << "scheme  normalized weak-member rate\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    table << entries[i].name << "  " << format_double(result.normalized_weak_rate[i]) << '\n';
  }
  return result;
}

eval::FairnessSummary fairness_command(const std::vector<std::string>& metrics_files, int window,
                                       const std::string& out_csv, std::ostream& table) {
  if (metrics_files.empty()) throw UsageError("fairness needs at least one metrics file");
  std::vector<eval::MetricsLog> logs;
  for (const auto& f : metrics_files) logs.push_back(eval::read_metrics_file(f));
  const eval::FairnessSummary s = eval::fairness_summary(logs, window);

  if (!out_csv.empty()) {
    std::ofstream out = open_out(out_csv);
    out << "file,fairness_stddev\n";
    for (std::size_t i = 0; i < logs.size(); ++i) out << metrics_files[i] << ',' << format_double(s.per_seed[i]) << '\n';
    out << "mean," << format_double(s.interval.mean) << '\n';
    out << "half_width," << format_double(s.interval.half_width) << '\n';
  }
  table << "fairness (population stddev of landmark rates, last " << window << " episodes)\n";
  print_rule(table, 60);
  for (std::size_t i = 0; i < logs.size(); ++i) table << metrics_files[i] << "  " << format_double(s.per_seed[i]) << '\n';
  table << "mean " << format_double(s.interval.mean) << " +- " << format_double(s.interval.half_width) << '\n';
  return s;
}

incentive::PretrainResult pretrain_command(const ExperimentConfig& config, std::uint64_t seed,
                                           std::ostream& log) {
  config.validate();
  ensure_dir(config.out_dir);
  const int episodes = config.sac.pretrain_episodes;
  incentive::PretrainResult result = incentive::pretrain(config.train_config(), config.sac, episodes, seed);

  const fs::path dir(config.out_dir);
  const std::string tag = "_seed" + std::to_string(seed);
  save_checkpoint((dir / ("incentive" + tag + ".tmlb")).string(), config, seed, nullptr, &result.agent);
  eval::write_metrics_file((dir / ("pretrain_metrics" + tag + ".csv")).string(), result.log);
  std::ofstream blocks = open_out((dir / ("pretrain_blocks" + tag + ".csv")).string());
  blocks << "block,first_episode,alpha,gap,reward\n";
  for (std::size_t b = 0; b < result.blocks.size(); ++b) {
    const auto& r = result.blocks[b];
    blocks << b << ',' << r.first_episode << ',' << format_double(r.alpha) << ',' << format_double(r.gap)
           << ',' << format_double(r.reward) << '\n';
  }
  log << "pretrained incentive agent: " << result.blocks.size() << " blocks over " << episodes << " episodes\n";
  return result;
}

}  // namespace tmlab::runner
