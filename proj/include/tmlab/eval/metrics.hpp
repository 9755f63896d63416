#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "tmlab/env/touchmark.hpp"

namespace tmlab::eval {

inline constexpr int kMetricsSchemaVersion = 1;

// One training episode.
struct MetricsRow {
  int episode = 0;  // 1-based
  std::array<double, env::kNumTeams> team_reward{};  // mean over members of the episode return
  std::array<int, env::kNumAgents> landmark{};       // 1 if the agent scored
  std::array<double, env::kNumTeams> win_policy{};   // fraction of steps on policy 1
  std::array<double, env::kNumAgents> speed{};       // max_speed after the episode
  double incentive_team = 0.0;
  double incentive_agent = 0.0;
  int collisions = 0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

using MetricsLog = std::vector<MetricsRow>;

// "# tmlab metrics schema v1" followed by the column header.
std::string metrics_header();
std::string format_row(const MetricsRow& row);
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);
void write_metrics(std::ostream& out, const MetricsLog& log);

// Parses a CSV produced by write_metrics. FormatError on schema or value
// problems, with the line number in the message.
MetricsLog read_metrics(std::istream& in);
MetricsLog read_metrics_file(const std::string& path);
void write_metrics_file(const std::string& path, const MetricsLog& log);

// Shortest round-trip text for a double.
std::string format_double(double v);

}  // namespace tmlab::eval
