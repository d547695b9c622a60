#include "drivemine/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace drivemine {

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

void RunConfig::validate() const {
  std::vector<std::string> problems;
  auto require = [&](bool ok, const std::string& message) {
    if (!ok) problems.push_back(message);
  };
  require(jobs >= 1, "jobs: must be >= 1");
  require(bcp.p0 > 0 && bcp.p0 <= 1, "bcp.p0: must be in (0, 1]");
  require(bcp.w0 > 0 && bcp.w0 <= 1, "bcp.w0: must be in (0, 1]");
  require(bcp.sweeps > 0, "bcp.sweeps: must be positive");
  require(bcp.burnin < bcp.sweeps, "bcp.burnin: must be smaller than bcp.sweeps");
  require(bcp.threshold > 0 && bcp.threshold < 1,
          "bcp.threshold: must be in (0, 1)");
  require(bcp.min_len_s >= 0, "bcp.min_len_s: must be non-negative");
  require(kin_rate_hz >= 0, "kin.rate_hz: must be non-negative (0 = native)");
  require(gmm.k >= 1, "gmm.k: must be >= 1");
  require(gmm.k_state >= 1, "gmm.k_state: must be >= 1");
  require(gmm.restarts >= 1, "gmm.restarts: must be >= 1");
  require(gmm.max_iter >= 1, "gmm.max_iter: must be >= 1");
  require(gmm.tol > 0, "gmm.tol: must be positive");
  require(lda.behavior_k >= 1, "lda.behavior_k: must be >= 1");
  require(lda.state_k >= 1, "lda.state_k: must be >= 1");
  require(lda.alpha >= 0, "lda.alpha: must be >= 0 (0 = 50/K)");
  require(lda.beta > 0, "lda.beta: must be positive");
  require(lda.iters > 0, "lda.iters: must be positive");
  require(lda.burnin < lda.iters, "lda.burnin: must be smaller than lda.iters");
  require(gaze.rows >= 1 && gaze.cols >= 1 && gaze.rows * gaze.cols >= 2,
          "gaze.rows/cols: grid needs at least 2 cells");
  require(gaze.x_min < gaze.x_max, "gaze.x_min: must be below gaze.x_max");
  require(gaze.y_min < gaze.y_max, "gaze.y_min: must be below gaze.y_max");
  require(gaze.window_s > 0, "gaze.window_s: must be positive");
  require(gaze.stride_s > 0, "gaze.stride_s: must be positive");
  require(gaze.pi_mode == "empirical" || gaze.pi_mode == "stationary",
          "gaze.pi_mode: must be 'empirical' or 'stationary'");
  require(znorm_states == "auto" || znorm_states == "on" || znorm_states == "off",
          "states.znorm: must be 'auto', 'on' or 'off'");
  if (!problems.empty()) {
    std::string joined;
    for (const auto& p : problems) joined += (joined.empty() ? "" : "; ") + p;
    throw ConfigError(joined);
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "seed") seed = parse_uint(key, value);
  else if (key == "jobs") jobs = static_cast<int>(parse_uint(key, value));
  else if (key == "bcp.p0") bcp.p0 = parse_double(key, value);
  else if (key == "bcp.w0") bcp.w0 = parse_double(key, value);
  else if (key == "bcp.sweeps") bcp.sweeps = parse_uint(key, value);
  else if (key == "bcp.burnin") bcp.burnin = parse_uint(key, value);
  else if (key == "bcp.threshold") bcp.threshold = parse_double(key, value);
  else if (key == "bcp.min_len_s") bcp.min_len_s = parse_double(key, value);
  else if (key == "kin.rate_hz") kin_rate_hz = parse_double(key, value);
  else if (key == "gmm.k") gmm.k = parse_uint(key, value);
  else if (key == "gmm.k_state") gmm.k_state = parse_uint(key, value);
  else if (key == "gmm.restarts") gmm.restarts = parse_uint(key, value);
  else if (key == "gmm.max_iter") gmm.max_iter = parse_uint(key, value);
  else if (key == "gmm.tol") gmm.tol = parse_double(key, value);
  else if (key == "lda.behavior_k") lda.behavior_k = parse_uint(key, value);
  else if (key == "lda.state_k") lda.state_k = parse_uint(key, value);
  else if (key == "lda.alpha") lda.alpha = parse_double(key, value);
  else if (key == "lda.beta") lda.beta = parse_double(key, value);
  else if (key == "lda.iters") lda.iters = parse_uint(key, value);
  else if (key == "lda.burnin") lda.burnin = parse_uint(key, value);
  else if (key == "gaze.rows") gaze.rows = parse_uint(key, value);
  else if (key == "gaze.cols") gaze.cols = parse_uint(key, value);
  else if (key == "gaze.x_min") gaze.x_min = parse_double(key, value);
  else if (key == "gaze.x_max") gaze.x_max = parse_double(key, value);
  else if (key == "gaze.y_min") gaze.y_min = parse_double(key, value);
  else if (key == "gaze.y_max") gaze.y_max = parse_double(key, value);
  else if (key == "gaze.window_s") gaze.window_s = parse_double(key, value);
  else if (key == "gaze.stride_s") gaze.stride_s = parse_double(key, value);
  else if (key == "gaze.pi_mode") gaze.pi_mode = value;
  else if (key == "states.znorm") znorm_states = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

std::map<std::string, std::string> RunConfig::to_map() const {
  return {
      {"seed", std::to_string(seed)},
      {"jobs", std::to_string(jobs)},
      {"bcp.p0", format_double(bcp.p0)},
      {"bcp.w0", format_double(bcp.w0)},
      {"bcp.sweeps", std::to_string(bcp.sweeps)},
      {"bcp.burnin", std::to_string(bcp.burnin)},
      {"bcp.threshold", format_double(bcp.threshold)},
      {"bcp.min_len_s", format_double(bcp.min_len_s)},
      {"kin.rate_hz", format_double(kin_rate_hz)},
      {"gmm.k", std::to_string(gmm.k)},
      {"gmm.k_state", std::to_string(gmm.k_state)},
      {"gmm.restarts", std::to_string(gmm.restarts)},
      {"gmm.max_iter", std::to_string(gmm.max_iter)},
      {"gmm.tol", format_double(gmm.tol)},
      {"lda.behavior_k", std::to_string(lda.behavior_k)},
      {"lda.state_k", std::to_string(lda.state_k)},
      {"lda.alpha", format_double(lda.alpha)},
      {"lda.beta", format_double(lda.beta)},
      {"lda.iters", std::to_string(lda.iters)},
      {"lda.burnin", std::to_string(lda.burnin)},
      {"gaze.rows", std::to_string(gaze.rows)},
      {"gaze.cols", std::to_string(gaze.cols)},
      {"gaze.x_min", format_double(gaze.x_min)},
      {"gaze.x_max", format_double(gaze.x_max)},
      {"gaze.y_min", format_double(gaze.y_min)},
      {"gaze.y_max", format_double(gaze.y_max)},
      {"gaze.window_s", format_double(gaze.window_s)},
      {"gaze.stride_s", format_double(gaze.stride_s)},
      {"gaze.pi_mode", gaze.pi_mode},
      {"states.znorm", znorm_states},
  };
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path.string());
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer over the combined state
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t hash_string(const std::string& s) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace drivemine
