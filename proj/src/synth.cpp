#include "drivemine/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <random>

namespace drivemine::synth {

namespace {

void check_rows_stochastic(const std::vector<std::vector<double>>& rows,
                           const std::string& what) {
  if (rows.empty()) throw MalformedDistribution(what + " is empty");
  for (const auto& row : rows) {
    double sum = 0.0;
    for (double v : row) {
      if (v < 0.0 || !std::isfinite(v))
        throw MalformedDistribution(what + " has invalid entries");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw MalformedDistribution(what + " rows must sum to 1");
  }
}

std::size_t draw_categorical(const std::vector<double>& probs,
                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  for (std::size_t k = 0; k < probs.size(); ++k) {
    u -= probs[k];
    if (u <= 0.0) return k;
  }
  return probs.size() - 1;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void SynthSpec::validate() const {
  for (std::size_t i = 0; i < change_points.size(); ++i) {
    if (change_points[i] == 0 || change_points[i] >= n)
      throw ConfigError("change points must lie strictly inside (0, n)");
    if (i > 0 && change_points[i] <= change_points[i - 1])
      throw ConfigError("change points must be strictly increasing");
  }
  if (!coupling.empty()) check_rows_stochastic(coupling, "coupling table");
}

SynthSpec SynthSpec::with_defaults() const {
  SynthSpec s = *this;
  if (s.pattern_means.empty()) {
    // normal brake, harsh brake, accelerating, free flow: (ax, ay, wz)
    s.pattern_means = {{-2.0, 0.3, 0.1},
                       {-5.0, -0.3, 0.3},
                       {2.5, 1.5, 1.0},
                       {0.0, 0.0, 0.0}};
  }
  if (s.coupling.empty()) {
    // aggressive patterns lean to the elevated state, free flow to normal
    s.coupling = {{0.2, 0.8}, {0.2, 0.8}, {0.2, 0.8}, {0.8, 0.2}};
  }
  return s;
}

PiecewiseData gen_piecewise(const SynthSpec& spec) {
  spec.validate();
  if (spec.block_means.empty())
    throw ConfigError("gen_piecewise needs block means");
  if (spec.block_means.size() != spec.change_points.size() + 1)
    throw ConfigError("need exactly one block mean per block");
  const std::size_t d = spec.block_means[0].size();
  for (const auto& row : spec.block_means)
    if (row.size() != d) throw ConfigError("block means have uneven widths");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  PiecewiseData out;
  out.change_points = spec.change_points;
  out.matrix.values.resize(static_cast<Eigen::Index>(spec.n),
                           static_cast<Eigen::Index>(d));
  out.matrix.times.reserve(spec.n);
  for (std::size_t j = 0; j < d; ++j)
    out.matrix.columns.push_back("c" + std::to_string(j));

  std::size_t block = 0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    if (block < spec.change_points.size() && i >= spec.change_points[block])
      ++block;
    out.matrix.times.push_back(static_cast<double>(i));
    for (std::size_t j = 0; j < d; ++j)
      out.matrix.values(static_cast<Eigen::Index>(i),
                        static_cast<Eigen::Index>(j)) =
          spec.block_means[block][j] +
          (spec.sigma > 0 ? spec.sigma * noise(rng) : 0.0);
  }
  return out;
}

std::vector<quantize::WordDocument> gen_corpus(
    const std::vector<std::vector<double>>& phi,
    const std::vector<std::vector<double>>& theta,
    const std::vector<std::size_t>& doc_lengths, std::uint64_t seed) {
  check_rows_stochastic(phi, "phi");
  check_rows_stochastic(theta, "theta");
  if (theta.size() != doc_lengths.size())
    throw MalformedDistribution("theta rows must match doc_lengths");
  for (const auto& row : theta)
    if (row.size() != phi.size())
      throw MalformedDistribution("theta width must equal topic count");

  std::mt19937_64 rng(seed);
  std::vector<quantize::WordDocument> docs(doc_lengths.size());
  for (std::size_t m = 0; m < doc_lengths.size(); ++m) {
    docs[m].segment_id = m;
    docs[m].words.reserve(doc_lengths[m]);
    for (std::size_t i = 0; i < doc_lengths[m]; ++i) {
      const std::size_t z = draw_categorical(theta[m], rng);
      docs[m].words.push_back(draw_categorical(phi[z], rng));
    }
  }
  return docs;
}

gaze::SymbolSequence gen_markov(const std::vector<std::vector<double>>& transition,
                                std::size_t n, std::uint64_t seed) {
  check_rows_stochastic(transition, "transition matrix");
  const std::size_t states = transition.size();
  for (const auto& row : transition)
    if (row.size() != states)
      throw MalformedDistribution("transition matrix must be square");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> start(0, states - 1);
  gaze::SymbolSequence out;
  std::size_t state = start(rng);
  for (std::size_t i = 0; i < n; ++i) {
    out.times.push_back(static_cast<double>(i));
    out.symbols.push_back(state);
    state = draw_categorical(transition[state], rng);
  }
  return out;
}

CoupledSession gen_coupled_session(const SynthSpec& raw_spec) {
  const SynthSpec spec = raw_spec.with_defaults();
  spec.validate();
  check_rows_stochastic(spec.coupling, "coupling table");
  const std::size_t n_patterns = spec.pattern_means.size();
  if (spec.coupling.size() != n_patterns)
    throw ConfigError("coupling needs one row per behavior pattern");
  if (spec.segment_count < 2) throw ConfigError("need at least 2 segments");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_pattern(0, n_patterns - 1);

  CoupledSession out;
  out.session.participant_id = "synth";
  out.truth.coupling = spec.coupling;

  // segment boundaries: lengths jittered around duration / segment_count
  std::vector<double> lengths(spec.segment_count);
  double total = 0.0;
  for (auto& len : lengths) {
    len = 0.6 + 0.8 * unif(rng);
    total += len;
  }
  for (auto& len : lengths) len *= spec.duration_s / total;
  std::vector<double> starts(spec.segment_count);
  double t_acc = 0.0;
  for (std::size_t s = 0; s < spec.segment_count; ++s) {
    starts[s] = t_acc;
    t_acc += lengths[s];
  }
  out.truth.segment_starts = starts;

  // behavior per segment, never repeating the previous pattern so every
  // boundary is a real mean change
  out.truth.behavior.resize(spec.segment_count);
  for (std::size_t s = 0; s < spec.segment_count; ++s) {
    std::size_t p = pick_pattern(rng);
    while (s > 0 && p == out.truth.behavior[s - 1]) p = pick_pattern(rng);
    out.truth.behavior[s] = p;
  }

  auto segment_of = [&](double t) {
    std::size_t s = 0;
    while (s + 1 < starts.size() && t >= starts[s + 1]) ++s;
    return s;
  };

  // kinematics at kin_rate_hz
  {
    Channel ax, ay, wz;
    ax.name = "ax";
    ax.unit = "m/s^2";
    ay.name = "ay";
    ay.unit = "m/s^2";
    wz.name = "wz";
    wz.unit = "rad/s";
    const auto count =
        static_cast<std::size_t>(spec.duration_s * spec.kin_rate_hz);
    for (std::size_t i = 0; i < count; ++i) {
      const double t = static_cast<double>(i) / spec.kin_rate_hz;
      const auto& mu = spec.pattern_means[out.truth.behavior[segment_of(t)]];
      ax.times.push_back(t);
      ay.times.push_back(t);
      wz.times.push_back(t);
      ax.values.push_back(mu[0] + spec.kin_sigma * gauss(rng));
      ay.values.push_back(mu[1] + spec.kin_sigma * gauss(rng));
      wz.values.push_back(mu[2] + spec.kin_sigma * gauss(rng));
    }
    out.session.channels["ax"] = std::move(ax);
    out.session.channels["ay"] = std::move(ay);
    out.session.channels["wz"] = std::move(wz);
  }

  // heart rate: per-sample state drawn from the coupling row
  {
    Channel hr;
    hr.name = "hr";
    hr.unit = "bpm";
    const auto count =
        static_cast<std::size_t>(spec.duration_s * spec.hr_rate_hz);
    for (std::size_t i = 0; i < count; ++i) {
      const double t = static_cast<double>(i) / spec.hr_rate_hz;
      const std::size_t b = out.truth.behavior[segment_of(t)];
      const std::size_t state = draw_categorical(spec.coupling[b], rng);
      out.truth.hr_times.push_back(t);
      out.truth.hr_state.push_back(state);
      hr.times.push_back(t);
      hr.values.push_back(spec.hr_base +
                          spec.hr_shift * static_cast<double>(state) +
                          spec.hr_sigma * gauss(rng));
    }
    out.session.channels["hr"] = std::move(hr);
  }

  // gaze: per-segment regime, fixation on one AOI vs uniform scanning
  {
    out.truth.gaze_state.resize(spec.segment_count);
    for (std::size_t s = 0; s < spec.segment_count; ++s)
      out.truth.gaze_state[s] =
          draw_categorical(spec.coupling[out.truth.behavior[s]], rng);

    Channel gx, gy;
    gx.name = "gaze_x";
    gx.unit = "rad";
    gy.name = "gaze_y";
    gy.unit = "rad";
    const auto count =
        static_cast<std::size_t>(spec.duration_s * spec.gaze_rate_hz);
    for (std::size_t i = 0; i < count; ++i) {
      const double t = static_cast<double>(i) / spec.gaze_rate_hz;
      const std::size_t state = out.truth.gaze_state[segment_of(t)];
      double x, y;
      if (state == 0) {
        x = -0.35 + 0.02 * gauss(rng);  // stays inside one 4x4 cell
        y = -0.35 + 0.02 * gauss(rng);
      } else {
        x = -0.6 + 1.2 * unif(rng);
        y = -0.6 + 1.2 * unif(rng);
      }
      gx.times.push_back(t);
      gy.times.push_back(t);
      gx.values.push_back(x);
      gy.values.push_back(y);
    }
    out.session.channels["gaze_x"] = std::move(gx);
    out.session.channels["gaze_y"] = std::move(gy);
  }

  // speed, pattern-linked for summary realism (not a segmentation input)
  {
    Channel speed;
    speed.name = "speed";
    speed.unit = "km/h";
    const double mean_speed[] = {80.0, 50.0, 100.0, 110.0};
    const auto count = static_cast<std::size_t>(spec.duration_s);
    for (std::size_t i = 0; i < count; ++i) {
      const double t = static_cast<double>(i);
      const std::size_t b = out.truth.behavior[segment_of(t)];
      speed.times.push_back(t);
      speed.values.push_back(mean_speed[b % 4] + 3.0 * gauss(rng));
    }
    out.session.channels["speed"] = std::move(speed);
  }

  out.session.metadata["generator"] = "gen_coupled_session";
  out.session.metadata["seed"] = std::to_string(spec.seed);
  return out;
}

void write_session_csv(const Session& session, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  auto write_csv = [&](const std::string& file,
                       const std::vector<std::string>& header,
                       const std::vector<const Channel*>& chans) {
    std::ofstream out(dir / file);
    out << "t";
    for (const auto& h : header) out << "," << h;
    out << "\n";
    const auto n = chans[0]->size();
    for (std::size_t i = 0; i < n; ++i) {
      out << format_number(chans[0]->times[i]);
      for (const Channel* c : chans) out << "," << format_number(c->values[i]);
      out << "\n";
    }
  };

  if (session.has_channel("ax"))
    write_csv("telemetry.csv", {"ax", "ay", "wz"},
              {&session.channel("ax"), &session.channel("ay"),
               &session.channel("wz")});
  if (session.has_channel("hr"))
    write_csv("hr.csv", {"bpm"}, {&session.channel("hr")});
  if (session.has_channel("gaze_x"))
    write_csv("gaze.csv", {"gaze_angle_x", "gaze_angle_y"},
              {&session.channel("gaze_x"), &session.channel("gaze_y")});
  if (session.has_channel("speed"))
    write_csv("speed.csv", {"speed"}, {&session.channel("speed")});
}

std::string CoupledTruth::to_json() const {
  nlohmann::json j;
  j["segment_starts"] = segment_starts;
  j["behavior"] = behavior;
  j["hr_times"] = hr_times;
  j["hr_state"] = hr_state;
  j["gaze_state"] = gaze_state;
  j["coupling"] = coupling;
  return j.dump(2);
}

void write_truth_json(const CoupledTruth& truth, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << truth.to_json() << "\n";
}

std::string SynthSpec::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["n"] = n;
  j["change_points"] = change_points;
  j["block_means"] = block_means;
  j["sigma"] = sigma;
  j["duration_s"] = duration_s;
  j["kin_rate_hz"] = kin_rate_hz;
  j["hr_rate_hz"] = hr_rate_hz;
  j["gaze_rate_hz"] = gaze_rate_hz;
  j["segment_count"] = segment_count;
  j["pattern_means"] = pattern_means;
  j["kin_sigma"] = kin_sigma;
  j["coupling"] = coupling;
  j["hr_base"] = hr_base;
  j["hr_shift"] = hr_shift;
  j["hr_sigma"] = hr_sigma;
  return j.dump(2);
}

SynthSpec SynthSpec::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SynthSpec s;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("seed", s.seed);
  get("n", s.n);
  get("change_points", s.change_points);
  get("block_means", s.block_means);
  get("sigma", s.sigma);
  get("duration_s", s.duration_s);
  get("kin_rate_hz", s.kin_rate_hz);
  get("hr_rate_hz", s.hr_rate_hz);
  get("gaze_rate_hz", s.gaze_rate_hz);
  get("segment_count", s.segment_count);
  get("pattern_means", s.pattern_means);
  get("kin_sigma", s.kin_sigma);
  get("coupling", s.coupling);
  get("hr_base", s.hr_base);
  get("hr_shift", s.hr_shift);
  get("hr_sigma", s.hr_sigma);
  return s;
}

}  // namespace drivemine::synth
