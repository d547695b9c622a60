#include "drivemine/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace drivemine {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // strip surrounding whitespace and a possible trailing \r
    auto b = field.find_first_not_of(" \t\r");
    auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_number(const std::string& s, std::size_t line_no) {
  if (s.empty()) throw MalformedRow("empty field at line " + std::to_string(line_no));
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw MalformedRow("unparseable number '" + s + "' at line " + std::to_string(line_no));
  return v;
}

// Interpolate ch at query time t. `hint` is the index of the first sample
// with times[hint] >= t from the previous query (queries are ascending).
double value_at(const Channel& ch, double t, std::size_t& hint, ResampleMethod method) {
  while (hint < ch.size() && ch.times[hint] < t) ++hint;
  if (hint < ch.size() && ch.times[hint] == t) return ch.values[hint];
  if (hint == 0) return ch.values[0];  // before first sample: clamp
  if (hint == ch.size()) return ch.values.back();
  if (method == ResampleMethod::hold_last) return ch.values[hint - 1];
  double t0 = ch.times[hint - 1], t1 = ch.times[hint];
  double v0 = ch.values[hint - 1], v1 = ch.values[hint];
  return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
}

std::vector<double> uniform_grid(double t0, double t1, double rate_hz) {
  std::vector<double> grid;
  const std::size_t n = static_cast<std::size_t>(std::floor((t1 - t0) * rate_hz + 1e-9)) + 1;
  grid.reserve(n);
  for (std::size_t k = 0; k < n; ++k) grid.push_back(t0 + static_cast<double>(k) / rate_hz);
  return grid;
}

}  // namespace

const Channel& Session::channel(const std::string& name) const {
  auto it = channels.find(name);
  if (it == channels.end())
    throw UnknownChannel("session '" + participant_id + "' has no channel '" + name + "'");
  return it->second;
}

Channel load_csv(const std::filesystem::path& path, const ChannelSchema& schema,
                 LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path.string());

  std::string line;
  if (!std::getline(in, line)) throw EmptyChannel(path.string() + ": empty file");
  const auto header = split_csv_line(line);

  auto column_index = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw MalformedRow("column '" + name + "' missing from header of " + path.string());
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t t_col = column_index(schema.time_column);
  const std::size_t v_col = column_index(schema.value_column);

  Channel ch;
  ch.name = schema.channel_name.empty() ? schema.value_column : schema.channel_name;
  ch.unit = schema.unit;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw MalformedRow("expected " + std::to_string(header.size()) + " fields, got " +
                         std::to_string(fields.size()) + " at line " + std::to_string(line_no));
    const double t = parse_number(fields[t_col], line_no);
    const double v = parse_number(fields[v_col], line_no);
    if (!std::isfinite(t) || !std::isfinite(v)) {
      if (stats) ++stats->rows_dropped;
      continue;
    }
    if (!ch.times.empty() && t <= ch.times.back())
      throw MalformedRow("timestamp not strictly increasing at line " + std::to_string(line_no));
    ch.times.push_back(t);
    ch.values.push_back(v);
  }
  if (ch.times.empty()) throw EmptyChannel(path.string() + ": no valid rows");
  return ch;
}

Channel resample(const Channel& ch, double rate_hz, ResampleMethod method) {
  if (rate_hz <= 0.0) throw ConfigError("resample rate must be positive");
  if (ch.size() < 2) throw EmptyChannel("resample needs at least 2 samples in '" + ch.name + "'");

  Channel out;
  out.name = ch.name;
  out.unit = ch.unit;
  out.times = uniform_grid(ch.times.front(), ch.times.back(), rate_hz);
  out.values.reserve(out.times.size());
  std::size_t hint = 0;
  for (double t : out.times) out.values.push_back(value_at(ch, t, hint, method));
  return out;
}

Channel zscore(const Channel& ch) {
  if (ch.size() < 2) throw EmptyChannel("zscore needs at least 2 samples in '" + ch.name + "'");
  const double n = static_cast<double>(ch.size());
  double mean = 0.0;
  for (double v : ch.values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : ch.values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd <= 0.0)
    throw DegenerateVariance("channel '" + ch.name + "' is constant");

  Channel out;
  out.name = ch.name;
  out.unit = "z";
  out.times = ch.times;
  out.values.reserve(ch.size());
  for (double v : ch.values) out.values.push_back((v - mean) / sd);
  return out;
}

Channel accel_from_speed(const Channel& speed) {
  if (speed.size() < 2)
    throw EmptyChannel("accel_from_speed needs at least 2 samples");
  const std::size_t n = speed.size();
  const double dt = speed.times[1] - speed.times[0];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double d = speed.times[i + 1] - speed.times[i];
    if (std::abs(d - dt) > 1e-6 * std::max(1.0, std::abs(dt)))
      throw NonUniformTimeline("speed channel is not uniformly sampled");
  }

  Channel out;
  out.name = speed.name + "_accel";
  out.unit = speed.unit.empty() ? "1/s" : speed.unit + "/s";
  out.times = speed.times;
  out.values.resize(n);
  out.values[0] = (speed.values[1] - speed.values[0]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i)
    out.values[i] = (speed.values[i + 1] - speed.values[i - 1]) / (2.0 * dt);
  out.values[n - 1] = (speed.values[n - 1] - speed.values[n - 2]) / dt;
  return out;
}

KinematicMatrix assemble_matrix(const Session& session,
                                const std::vector<std::string>& names,
                                double rate_hz) {
  if (names.empty()) throw ConfigError("assemble_matrix needs at least one channel name");
  std::vector<const Channel*> chans;
  chans.reserve(names.size());
  for (const auto& name : names) chans.push_back(&session.channel(name));

  double t0 = chans[0]->times.front();
  double t1 = chans[0]->times.back();
  for (const Channel* c : chans) {
    if (c->size() < 2) throw EmptyChannel("channel '" + c->name + "' too short");
    t0 = std::max(t0, c->times.front());
    t1 = std::min(t1, c->times.back());
  }
  if (t1 <= t0) throw EmptyChannel("channels share no overlapping time range");

  KinematicMatrix m;
  m.columns = names;
  m.times = uniform_grid(t0, t1, rate_hz);
  if (m.times.size() < 2) throw EmptyChannel("shared timeline has fewer than 2 samples");
  m.values.resize(static_cast<Eigen::Index>(m.times.size()),
                  static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < chans.size(); ++j) {
    std::size_t hint = 0;
    for (std::size_t i = 0; i < m.times.size(); ++i)
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          value_at(*chans[j], m.times[i], hint, ResampleMethod::linear);
  }
  return m;
}

Session load_session_dir(const std::filesystem::path& dir,
                         const std::string& participant_id, LoadStats* stats) {
  Session s;
  s.participant_id = participant_id;

  auto add = [&](const std::filesystem::path& file, const ChannelSchema& schema) {
    Channel ch = load_csv(file, schema, stats);
    s.channels[ch.name] = std::move(ch);
  };

  const auto telemetry = dir / "telemetry.csv";
  if (std::filesystem::exists(telemetry)) {
    add(telemetry, {"t", "ax", "ax", "m/s^2"});
    add(telemetry, {"t", "ay", "ay", "m/s^2"});
    add(telemetry, {"t", "wz", "wz", "rad/s"});
    // optional speed column
    std::ifstream in(telemetry);
    std::string header_line;
    std::getline(in, header_line);
    if (header_line.find("speed") != std::string::npos)
      add(telemetry, {"t", "speed", "speed", "km/h"});
  }
  const auto hr = dir / "hr.csv";
  if (std::filesystem::exists(hr)) add(hr, {"t", "bpm", "hr", "bpm"});
  const auto gaze = dir / "gaze.csv";
  if (std::filesystem::exists(gaze)) {
    add(gaze, {"t", "gaze_angle_x", "gaze_x", "rad"});
    add(gaze, {"t", "gaze_angle_y", "gaze_y", "rad"});
  }
  const auto speed = dir / "speed.csv";
  if (std::filesystem::exists(speed) && !s.has_channel("speed"))
    add(speed, {"t", "speed", "speed", "km/h"});

  if (s.channels.empty())
    throw FileNotFound("no session CSVs found under " + dir.string());
  return s;
}

}  // namespace drivemine
