#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tmlab/errors.hpp"
#include "tmlab/eval/metrics.hpp"
#include "tmlab/runner/checkpoint.hpp"
#include "tmlab/runner/commands.hpp"
#include "tmlab/runner/config.hpp"

using namespace tmlab;
using namespace tmlab::runner;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tmlab_test_runner_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig quick(const fs::path& out, int episodes) {
  ExperimentConfig c = parse_config(
      "train.hidden = 16,16\n"
      "train.batch = 32\n"
      "train.buffer_capacity = 5000\n"
      "train.warmup_factor = 2\n"
      "train.update_every = 5\n"
      "cmaddpg.tau = 5\n"
      "cmaddpg.exploration_c = 4\n"
      "cmaddpg.controller_batch = 64\n"
      "cmaddpg.controller_passes = 1\n"
      "cmaddpg.controller_window = 500\n");
  c.out_dir = out.string();
  c.episodes = episodes;
  return c;
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config("episodes = 12  # trailing comment\n\n  seeds = 3, 4\nscheme.kind = StaticAgent\n");
  CHECK(c.episodes == 12);
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(c.train.scheme.kind == incentive::SchemeKind::kStaticAgent);

  try {
    parse_config("episodez = 3\n");
    FAIL("expected a UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("episodez") != std::string::npos);
  }
  try {
    parse_config("episodes = 3\nepisodes = 4\n");
    FAIL("expected a UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("episodes") != std::string::npos);
  }
  try {
    parse_config("train.batch = many\n");
    FAIL("expected a UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("train.batch") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("no equals sign\n"), UsageError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/tmlab.cfg"), IoError);
}

TEST_CASE("config text round-trips and the hash ignores order and explicit defaults") {
  const ExperimentConfig a = parse_config("episodes = 7\ntrain.gamma = 0.9\nseeds = 1,2\n");
  const ExperimentConfig b = parse_config("seeds = 1,2\ntrain.gamma = 0.9\nepisodes = 7\ntrain.batch = 1024\n");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(to_text(parse_config(to_text(a))) == to_text(a));
  CHECK(config_hash(parse_config(to_text(a))) == config_hash(a));
  const ExperimentConfig c = parse_config("episodes = 8\ntrain.gamma = 0.9\nseeds = 1,2\n");
  CHECK(config_hash(c) != config_hash(a));
  CHECK(hash_hex(0x1f).size() == 16);
}

TEST_CASE("scheme presets") {
  ExperimentConfig c;
  apply_scheme_preset(c, "StaticAgent");
  CHECK(c.train.scheme.alpha_team == 0.3);
  CHECK(c.train.scheme.alpha_agent == 0.7);
  apply_scheme_preset(c, "StaticTeam");
  CHECK(c.train.scheme.alpha_team == 0.1);
  CHECK(c.train.scheme.alpha_agent == 0.0);
  apply_scheme_preset(c, "plain");
  CHECK(c.train.scheme.alpha_team == 0.0);
  for (const auto& name : preset_names()) CHECK_NOTHROW(apply_scheme_preset(c, name));
  CHECK_THROWS_AS(apply_scheme_preset(c, "Lavish"), UsageError);
}

TEST_CASE("zero episodes writes a header-only metrics file") {
  const fs::path dir = scratch("zero");
  std::ostringstream log;
  const auto out = train_command(quick(dir, 0), std::nullopt, log);
  REQUIRE(out.size() == 1);
  CHECK(slurp(out[0].metrics) == eval::metrics_header());
  CHECK(eval::read_metrics_file(out[0].metrics).empty());
}

TEST_CASE("the same seed gives byte-identical metrics") {
  const fs::path d1 = scratch("same1"), d2 = scratch("same2");
  std::ostringstream log;
  const auto a = train_command(quick(d1, 8), std::nullopt, log);
  const auto b = train_command(quick(d2, 8), std::nullopt, log);
  CHECK(slurp(a[0].metrics) == slurp(b[0].metrics));
  CHECK(eval::read_metrics_file(a[0].metrics).size() == 8);
}

TEST_CASE("several seeds each get their files and one manifest") {
  const fs::path dir = scratch("seeds");
  ExperimentConfig c = quick(dir, 3);
  c.seeds = {1, 2, 3, 4};
  std::ostringstream log;
  const auto out = train_command(c, std::nullopt, log);
  REQUIRE(out.size() == 4);
  for (const auto& o : out) {
    CHECK(fs::exists(o.metrics));
    CHECK(fs::exists(o.checkpoint));
  }
  CHECK(slurp(out[0].metrics) != slurp(out[1].metrics));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["seeds"].size() == 4);
  CHECK(manifest["config_hash"] == hash_hex(config_hash(c)));
  CHECK(manifest["artifact_version"] == kArtifactVersion);
}

TEST_CASE("checkpoint round-trip") {
  const fs::path dir = scratch("ckpt");
  const ExperimentConfig c = quick(dir, 6);
  std::ostringstream log;
  const auto out = train_command(c, std::nullopt, log);
  const Checkpoint cp = load_checkpoint(out[0].checkpoint);
  CHECK(cp.seed == 1);
  CHECK(to_text(cp.config) == to_text(c));
  REQUIRE(cp.trainer);
  CHECK(cp.trainer->episodes_done() == 6);
  CHECK(cp.trainer->log() == eval::read_metrics_file(out[0].metrics));
  CHECK_FALSE(cp.sac.has_value());

  const fs::path again = dir / "again.tmlb";
  save_checkpoint(again.string(), cp.config, cp.seed, cp.trainer.get(), nullptr);
  CHECK(slurp(again) == slurp(out[0].checkpoint));

  const fs::path bad = dir / "bad.tmlb";
  std::string bytes = slurp(again);
  bytes[0] = 'X';
  std::ofstream(bad, std::ios::binary) << bytes;
  CHECK_THROWS_AS(load_checkpoint(bad.string()), FormatError);

  const fs::path cut = dir / "cut.tmlb";
  std::ofstream(cut, std::ios::binary) << slurp(again).substr(0, bytes.size() / 2);
  CHECK_THROWS_AS(load_checkpoint(cut.string()), CorruptionError);

  CHECK_THROWS_AS(load_checkpoint((dir / "missing.tmlb").string()), IoError);
}

TEST_CASE("resuming continues the run exactly") {
  const fs::path full = scratch("resume_full"), first = scratch("resume_first"), rest = scratch("resume_rest");
  std::ostringstream log;
  const auto straight = train_command(quick(full, 12), std::nullopt, log);
  const auto half = train_command(quick(first, 6), std::nullopt, log);
  const auto resumed = train_command(quick(rest, 12), half[0].checkpoint, log);
  REQUIRE(resumed.size() == 1);
  CHECK(slurp(resumed[0].metrics) == slurp(straight[0].metrics));
  CHECK_THROWS_AS(train_command(quick(rest, 12), (rest / "missing.tmlb").string(), log), IoError);
}

TEST_CASE("fairness command") {
  const fs::path dir = scratch("fairness");
  std::ostringstream log;
  const auto out = train_command(quick(dir, 5), std::nullopt, log);
  std::ostringstream table;
  CHECK_THROWS_AS(fairness_command({out[0].metrics}, 1000, "", table), InputError);
  const auto s = fairness_command({out[0].metrics}, 5, (dir / "fair.csv").string(), table);
  CHECK(s.per_seed.size() == 1);
  CHECK(fs::exists(dir / "fair.csv"));
  CHECK_THROWS_AS(fairness_command({}, 5, "", table), UsageError);
}

TEST_CASE("eval and tournament commands read checkpoints") {
  const fs::path dir = scratch("eval");
  ExperimentConfig c = quick(dir, 2);
  c.seeds = {1, 2};
  std::ostringstream log;
  const auto out = train_command(c, std::nullopt, log);
  std::ostringstream table;
  const auto r = eval_command(out[0].checkpoint, 0, out[1].checkpoint, 1, 5, 9, (dir / "eval.csv").string(), table);
  CHECK(r.episodes == 10);
  CHECK(fs::exists(dir / "eval.csv"));
  const auto t = tournament_command({out[0].checkpoint, out[1].checkpoint}, 3, 9, "", table);
  CHECK(t.matches.size() == 1);
  CHECK_THROWS_AS(tournament_command({out[0].checkpoint}, 3, 9, "", table), UsageError);
}

TEST_CASE("validation rejects bad experiment settings") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.seeds = {1, 1};
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = ExperimentConfig{};
  c.episodes = -1;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = ExperimentConfig{};
  c.train.hyper.train.gamma = 2.0;
  CHECK_THROWS_AS(c.validate(), UsageError);
}
