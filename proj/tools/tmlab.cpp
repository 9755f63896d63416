// Command-line entry point: train, eval, tournament, fairness,
// pretrain-incentive.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tmlab/errors.hpp"
#include "tmlab/runner/commands.hpp"
#include "tmlab/runner/config.hpp"

namespace {

using tmlab::runner::ExperimentConfig;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::string out;
  std::vector<std::string> checkpoints;
  std::string scheme;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "flat key = value config file");
  cmd->add_option("--seed", f.seed, "single seed (overrides seeds)");
  cmd->add_option("--episodes", f.episodes, "number of episodes");
  cmd->add_option("--out", f.out, "output directory or file");
  cmd->add_option("--scheme", f.scheme, "incentive scheme preset");
  cmd->add_option("--set", f.sets, "extra key=value setting, repeatable");
}

ExperimentConfig build_config(const CommonFlags& f) {
  ExperimentConfig c;
  if (!f.config.empty()) c = tmlab::runner::load_config_file(f.config);
  if (!f.scheme.empty()) tmlab::runner::apply_scheme_preset(c, f.scheme);
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw tmlab::UsageError("--set expects key=value, got '" + s + "'");
    auto trim = [](std::string v) {
      v.erase(0, v.find_first_not_of(' '));
      v.erase(v.find_last_not_of(' ') + 1);
      return v;
    };
    tmlab::runner::apply_setting(c, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  if (f.seed) c.seeds = {*f.seed};
  if (f.episodes) c.episodes = *f.episodes;
  if (!f.out.empty()) c.out_dir = f.out;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tmlab: Touch-Mark multi-agent training and evaluation"};
  app.require_subcommand(1);

  CommonFlags train_f, eval_f, tour_f, fair_f, pre_f;
  std::optional<std::string> resume;
  int team_a = 0, team_b = 0;
  std::optional<int> configs;
  std::optional<int> window;
  std::string summary;
  std::vector<std::string> metrics_files;

  CLI::App* train = app.add_subcommand("train", "train agents for every configured seed");
  add_common(train, train_f);
  train->add_option("--checkpoint", resume, "resume from this checkpoint");

  CLI::App* ev = app.add_subcommand("eval", "paired evaluation of two trained teams");
  add_common(ev, eval_f);
  ev->add_option("--checkpoint", eval_f.checkpoints, "two checkpoints: side A then side B")->required();
  ev->add_option("--team-a", team_a, "team of the first checkpoint playing side A");
  ev->add_option("--team-b", team_b, "team of the second checkpoint playing side B");
  ev->add_option("--configs", configs, "number of initial configurations");

  CLI::App* tour = app.add_subcommand("tournament", "round robin between scheme-trained weak teams");
  add_common(tour, tour_f);
  tour->add_option("--checkpoint", tour_f.checkpoints, "one checkpoint per scheme")->required();
  tour->add_option("--configs", configs, "configurations per pairing");

  CLI::App* fair = app.add_subcommand("fairness", "fairness standard deviation of metrics logs");
  add_common(fair, fair_f);
  fair->add_option("files", metrics_files, "metrics CSV files, one per seed")->required();
  fair->add_option("--window", window, "trailing window in episodes");

  CLI::App* pre = app.add_subcommand("pretrain-incentive", "pretrain the RL incentive agent");
  add_common(pre, pre_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (train->parsed()) {
      const ExperimentConfig c = build_config(train_f);
      const auto outputs = tmlab::runner::train_command(c, resume, std::cout);
      std::cout << "wrote " << outputs.size() << " metrics file(s) and manifest to " << c.out_dir << '\n';
    } else if (ev->parsed()) {
      if (eval_f.checkpoints.size() != 2) throw tmlab::UsageError("eval needs exactly two --checkpoint values");
      const ExperimentConfig c = build_config(eval_f);
      tmlab::runner::eval_command(eval_f.checkpoints[0], team_a, eval_f.checkpoints[1], team_b,
                                  configs.value_or(c.eval_configs), c.seeds.front(), eval_f.out, std::cout);
    } else if (tour->parsed()) {
      const ExperimentConfig c = build_config(tour_f);
      tmlab::runner::tournament_command(tour_f.checkpoints, configs.value_or(c.eval_configs),
                                        c.seeds.front(), tour_f.out, std::cout);
    } else if (fair->parsed()) {
      const ExperimentConfig c = build_config(fair_f);
      tmlab::runner::fairness_command(metrics_files, window.value_or(c.fairness_window), fair_f.out, std::cout);
    } else if (pre->parsed()) {
      ExperimentConfig c = build_config(pre_f);
      if (pre_f.episodes) c.sac.pretrain_episodes = *pre_f.episodes;
      tmlab::runner::pretrain_command(c, c.seeds.front(), std::cout);
    }
  } catch (const tmlab::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const tmlab::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const tmlab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
