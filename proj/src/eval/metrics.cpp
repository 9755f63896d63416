#include "tmlab/eval/metrics.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tmlab/errors.hpp"

namespace tmlab::eval {
namespace {

constexpr const char* kColumns =
    "episode,team0_reward,team1_reward,lm_a0,lm_a1,lm_a2,lm_a3,winpol_t0,winpol_t1,"
    "speed_a0,speed_a1,speed_a2,speed_a3,incentive_team,incentive_agent,collisions";
constexpr int kColumnCount = 16;

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view s, int line_no) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("metrics line " + std::to_string(line_no) + ": bad number '" +
                      std::string(s) + "'");
  }
  return v;
}

int parse_int(std::string_view s, int line_no) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("metrics line " + std::to_string(line_no) + ": bad integer '" +
                      std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string metrics_header() {
  return "# tmlab metrics schema v" + std::to_string(kMetricsSchemaVersion) + "\n" + kColumns + "\n";
}

std::string format_row(const MetricsRow& r) {
  std::string s = std::to_string(r.episode);
  auto add = [&s](const std::string& v) {
    s += ',';
    s += v;
  };
  for (double v : r.team_reward) add(format_double(v));
  for (int v : r.landmark) add(std::to_string(v));
  for (double v : r.win_policy) add(format_double(v));
  for (double v : r.speed) add(format_double(v));
  add(format_double(r.incentive_team));
  add(format_double(r.incentive_agent));
  add(std::to_string(r.collisions));
  s += '\n';
  return s;
}

void write_metrics_header(std::ostream& out) { out << metrics_header(); }
void write_metrics_row(std::ostream& out, const MetricsRow& row) { out << format_row(row); }

void write_metrics(std::ostream& out, const MetricsLog& log) {
  write_metrics_header(out);
  for (const MetricsRow& r : log) write_metrics_row(out, r);
}

MetricsLog read_metrics(std::istream& in) {
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw FormatError("metrics: empty input");
  ++line_no;
  const std::string expected_comment = "# tmlab metrics schema v" + std::to_string(kMetricsSchemaVersion);
  if (line != expected_comment) throw FormatError("metrics line 1: unsupported schema line '" + line + "'");
  if (!std::getline(in, line) || line != kColumns) throw FormatError("metrics line 2: unexpected header");
  ++line_no;

  MetricsLog log;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (static_cast<int>(f.size()) != kColumnCount) {
      throw FormatError("metrics line " + std::to_string(line_no) + ": expected " +
                        std::to_string(kColumnCount) + " columns");
    }
    MetricsRow r;
    int k = 0;
    r.episode = parse_int(f[k++], line_no);
    for (double& v : r.team_reward) v = parse_double(f[k++], line_no);
    for (int& v : r.landmark) v = parse_int(f[k++], line_no);
    for (double& v : r.win_policy) v = parse_double(f[k++], line_no);
    for (double& v : r.speed) v = parse_double(f[k++], line_no);
    r.incentive_team = parse_double(f[k++], line_no);
    r.incentive_agent = parse_double(f[k++], line_no);
    r.collisions = parse_int(f[k++], line_no);
    log.push_back(r);
  }
  return log;
}

MetricsLog read_metrics_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics file '" + path + "'");
  return read_metrics(in);
}

void write_metrics_file(const std::string& path, const MetricsLog& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write metrics file '" + path + "'");
  write_metrics(out, log);
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace tmlab::eval
