#include "tmlab/runner/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "tmlab/errors.hpp"
#include "tmlab/eval/metrics.hpp"

namespace tmlab::runner {
namespace {

using Getter = std::function<std::string(const ExperimentConfig&)>;
using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

struct Field {
  Getter get;
  Setter set;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw UsageError("config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, const char* expected) {
  T v{};
  const char* end = value.data() + value.size();
  auto res = std::from_chars(value.data(), end, v);
  if (value.empty() || res.ec != std::errc() || res.ptr != end) bad_value(key, value, expected);
  return v;
}

double parse_real(const std::string& key, const std::string& value) {
  return parse_number<double>(key, value, "a number");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) s += ',';
    s += items[i];
  }
  return s;
}

template <typename T>
std::string num(T v) {
  if constexpr (std::is_floating_point_v<T>) {
    return eval::format_double(v);
  } else {
    return std::to_string(v);
  }
}

template <typename T, typename Access>
Field number_field(Access access, const char* expected) {
  return {[access](const ExperimentConfig& c) { return num(access(const_cast<ExperimentConfig&>(c))); },
          [access, expected](ExperimentConfig& c, const std::string& v) {
            access(c) = parse_number<T>("", v, expected);
          }};
}

#define TM_REAL(expr) number_field<double>([](ExperimentConfig& c) -> double& { return expr; }, "a number")
#define TM_INT(expr) number_field<int>([](ExperimentConfig& c) -> int& { return expr; }, "an integer")
#define TM_SIZE(expr) \
  number_field<std::size_t>([](ExperimentConfig& c) -> std::size_t& { return expr; }, "a count")

Field int_list_field(std::function<std::vector<int>&(ExperimentConfig&)> access) {
  return {[access](const ExperimentConfig& c) {
            std::vector<std::string> items;
            for (int v : access(const_cast<ExperimentConfig&>(c))) items.push_back(std::to_string(v));
            return join(items);
          },
          [access](ExperimentConfig& c, const std::string& v) {
            std::vector<int> out;
            for (const auto& item : split_list(v)) out.push_back(parse_number<int>("", item, "an integer list"));
            access(c) = out;
          }};
}

const std::map<std::string, Field>& registry() {
  static const std::map<std::string, Field> fields = [] {
    std::map<std::string, Field> f;
    f["algorithm"] = {[](const ExperimentConfig& c) { return std::string(cmaddpg::to_string(c.train.algorithm)); },
                      [](ExperimentConfig& c, const std::string& v) { c.train.algorithm = cmaddpg::parse_algorithm(v); }};
    f["episodes"] = TM_INT(c.episodes);
    f["seeds"] = {[](const ExperimentConfig& c) {
                    std::vector<std::string> items;
                    for (auto s : c.seeds) items.push_back(std::to_string(s));
                    return join(items);
                  },
                  [](ExperimentConfig& c, const std::string& v) {
                    c.seeds.clear();
                    for (const auto& item : split_list(v)) {
                      c.seeds.push_back(parse_number<std::uint64_t>("", item, "a seed list"));
                    }
                  }};
    f["out"] = {[](const ExperimentConfig& c) { return c.out_dir; },
                [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }};
    f["checkpoint_interval"] = TM_INT(c.checkpoint_interval);
    f["eval.n_configs"] = TM_INT(c.eval_configs);
    f["fairness.window"] = TM_INT(c.fairness_window);

    f["scheme.kind"] = {[](const ExperimentConfig& c) { return std::string(incentive::to_string(c.train.scheme.kind)); },
                        [](ExperimentConfig& c, const std::string& v) { c.train.scheme.kind = incentive::parse_scheme_kind(v); }};
    f["scheme.alpha_team"] = TM_REAL(c.train.scheme.alpha_team);
    f["scheme.alpha_agent"] = TM_REAL(c.train.scheme.alpha_agent);
    f["scheme.window"] = TM_INT(c.train.scheme.window);
    f["roles.weak_team"] = {[](const ExperimentConfig& c) {
                              return c.train.roles ? std::to_string(c.train.roles->weak_team) : std::string("auto");
                            },
                            [](ExperimentConfig& c, const std::string& v) {
                              if (v == "auto") {
                                c.train.roles.reset();
                                return;
                              }
                              const int t = parse_number<int>("", v, "a team id");
                              if (!c.train.roles) c.train.roles = incentive::RoleAssignment{t, 2 * t + 1};
                              c.train.roles->weak_team = t;
                            }};
    f["roles.weak_agent"] = {[](const ExperimentConfig& c) {
                               return c.train.roles ? std::to_string(c.train.roles->weak_agent) : std::string("auto");
                             },
                             [](ExperimentConfig& c, const std::string& v) {
                               if (v == "auto") {
                                 c.train.roles.reset();
                                 return;
                               }
                               const int a = parse_number<int>("", v, "an agent id");
                               if (!c.train.roles) c.train.roles = incentive::RoleAssignment{env::team_of(a), a};
                               c.train.roles->weak_agent = a;
                             }};

    f["env.board_half_extent"] = TM_REAL(c.train.env.board_half_extent);
    f["env.dt"] = TM_REAL(c.train.env.dt);
    f["env.damping"] = TM_REAL(c.train.env.damping);
    f["env.accel_scale"] = TM_REAL(c.train.env.accel_scale);
    f["env.agent_radius"] = TM_REAL(c.train.env.agent_radius);
    f["env.contact_stiffness"] = TM_REAL(c.train.env.contact_stiffness);
    f["env.landmark_reward"] = TM_REAL(c.train.env.landmark_reward);
    f["env.distance_penalty_scale"] = TM_REAL(c.train.env.distance_penalty_scale);
    f["env.boundary_penalty"] = TM_REAL(c.train.env.boundary_penalty);
    f["env.touch_radius"] = TM_REAL(c.train.env.touch_radius);
    f["env.max_speed_limit"] = TM_REAL(c.train.env.max_speed_limit);
    f["env.skill_rate"] = TM_REAL(c.train.env.skill_rate);
    f["env.max_episode_len"] = TM_INT(c.train.env.max_episode_len);
    f["env.initial_max_speeds"] = {[](const ExperimentConfig& c) {
                                     std::vector<std::string> items;
                                     for (double s : c.train.env.initial_max_speeds) items.push_back(num(s));
                                     return join(items);
                                   },
                                   [](ExperimentConfig& c, const std::string& v) {
                                     const auto items = split_list(v);
                                     if (items.size() != env::kNumAgents) bad_value("", v, "four speeds");
                                     for (int i = 0; i < env::kNumAgents; ++i) {
                                       c.train.env.initial_max_speeds[i] = parse_real("", items[i]);
                                     }
                                   }};

    f["train.gamma"] = TM_REAL(c.train.hyper.train.gamma);
    f["train.lr_actor"] = TM_REAL(c.train.hyper.train.lr_actor);
    f["train.lr_critic"] = TM_REAL(c.train.hyper.train.lr_critic);
    f["train.polyak"] = TM_REAL(c.train.hyper.train.polyak);
    f["train.batch"] = TM_INT(c.train.hyper.train.batch);
    f["train.noise_std"] = TM_REAL(c.train.hyper.train.noise_std);
    f["train.noise_decay"] = TM_REAL(c.train.hyper.train.noise_decay);
    f["train.noise_floor"] = TM_REAL(c.train.hyper.train.noise_floor);
    f["train.hidden"] = int_list_field([](ExperimentConfig& c) -> std::vector<int>& { return c.train.hyper.train.hidden; });
    f["train.buffer_capacity"] = TM_SIZE(c.train.hyper.train.buffer_capacity);
    f["train.warmup_factor"] = TM_INT(c.train.hyper.train.warmup_factor);
    f["train.update_every"] = TM_INT(c.train.hyper.train.update_every);

    f["cmaddpg.exploration_c"] = TM_REAL(c.train.hyper.exploration_c);
    f["cmaddpg.tau"] = TM_INT(c.train.hyper.tau);
    f["cmaddpg.controller_lr"] = TM_REAL(c.train.hyper.controller.learning_rate);
    f["cmaddpg.controller_batch"] = TM_INT(c.train.hyper.controller.batch);
    f["cmaddpg.controller_passes"] = TM_INT(c.train.hyper.controller.passes);
    f["cmaddpg.controller_window"] = TM_SIZE(c.train.hyper.controller_window);

    f["sac.apply_period"] = TM_INT(c.sac.apply_period);
    f["sac.alpha_max"] = TM_REAL(c.sac.alpha_max);
    f["sac.pretrain_episodes"] = TM_INT(c.sac.pretrain_episodes);
    f["sac.gamma"] = TM_REAL(c.sac.gamma);
    f["sac.lr"] = TM_REAL(c.sac.learning_rate);
    f["sac.polyak"] = TM_REAL(c.sac.polyak);
    f["sac.batch"] = TM_INT(c.sac.batch);
    f["sac.temperature"] = TM_REAL(c.sac.temperature);
    f["sac.hidden"] = int_list_field([](ExperimentConfig& c) -> std::vector<int>& { return c.sac.hidden; });
    f["sac.buffer_capacity"] = TM_SIZE(c.sac.buffer_capacity);
    f["sac.warmup"] = TM_INT(c.sac.warmup);
    f["sac.updates_per_block"] = TM_INT(c.sac.updates_per_block);
    f["sac.checkpoint"] = {[](const ExperimentConfig& c) { return c.sac_checkpoint; },
                           [](ExperimentConfig& c, const std::string& v) { c.sac_checkpoint = v; }};
    return f;
  }();
  return fields;
}

#undef TM_REAL
#undef TM_INT
#undef TM_SIZE

}  // namespace

void ExperimentConfig::validate() const {
  try {
    train.validate();
    sac.validate();
  } catch (const InputError& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
  if (seeds.empty()) throw UsageError("invalid configuration: seeds must not be empty");
  if (episodes < 0) throw UsageError("invalid configuration: episodes must be >= 0");
  if (checkpoint_interval < 0) throw UsageError("invalid configuration: checkpoint_interval must be >= 0");
  if (eval_configs < 0) throw UsageError("invalid configuration: eval.n_configs must be >= 0");
  if (fairness_window <= 0) throw UsageError("invalid configuration: fairness.window must be positive");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw UsageError("invalid configuration: duplicate seed");
}

cmaddpg::TrainConfig ExperimentConfig::train_config() const {
  cmaddpg::TrainConfig t = train;
  t.planned_episodes = episodes;
  return t;
}

std::map<std::string, std::string> to_entries(const ExperimentConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& [key, field] : registry()) out[key] = field.get(config);
  return out;
}

std::string to_text(const ExperimentConfig& config) {
  std::string s;
  for (const auto& [key, value] : to_entries(config)) s += key + " = " + value + "\n";
  return s;
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const auto it = registry().find(key);
  if (it == registry().end()) throw UsageError("unknown config key '" + key + "'");
  try {
    it->second.set(config, value);
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    // Setters report with an empty key; fill it in.
    const std::string prefix = "config key '': ";
    if (msg.rfind(prefix, 0) == 0) throw UsageError("config key '" + key + "': " + msg.substr(prefix.size()));
    throw;
  } catch (const InputError& e) {
    throw UsageError("config key '" + key + "': " + e.what());
  }
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (!seen.insert(key).second) throw UsageError("config key '" + key + "' given twice");
    apply_setting(base, key, value);
  }
  return base;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_text(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  auto res = std::to_chars(buf, buf + 16, h, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

std::vector<std::string> preset_names() {
  return {"plain", "StaticTeam", "StaticAgent", "DynamicLandmark", "DynamicSpeed",
          "TeamRLAgentDynamic", "TeamDynamicAgentRL"};
}

void apply_scheme_preset(ExperimentConfig& config, std::string_view name) {
  auto& s = config.train.scheme;
  s.alpha_team = 0.0;
  s.alpha_agent = 0.0;
  if (name == "plain") {
    s.kind = incentive::SchemeKind::kStaticTeam;
    return;
  }
  try {
    s.kind = incentive::parse_scheme_kind(name);
  } catch (const InputError&) {
    throw UsageError("unknown scheme preset '" + std::string(name) + "'");
  }
  if (s.kind == incentive::SchemeKind::kStaticTeam) s.alpha_team = 0.1;
  if (s.kind == incentive::SchemeKind::kStaticAgent) {
    s.alpha_team = 0.3;
    s.alpha_agent = 0.7;
  }
}

}  // namespace tmlab::runner
