// Runtime configuration for the pipeline and CLI: documented defaults, a
// key = value config-file loader, and field-level validation.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "drivemine/errors.hpp"

namespace drivemine {

struct RunConfig {
  std::uint64_t seed = 0;
  int jobs = 1;

  struct BcpSection {
    double p0 = 0.2;
    double w0 = 0.2;
    std::size_t sweeps = 500;
    std::size_t burnin = 50;
    double threshold = 0.5;
    double min_len_s = 0.5;
  } bcp;

  double kin_rate_hz = 0;  // 0 = use the native rate of the input channels

  struct GmmSection {
    std::size_t k = 50;        // kinematic vocabulary size
    std::size_t k_state = 50;  // HR / gaze-entropy vocabulary size
    std::size_t restarts = 5;
    std::size_t max_iter = 200;
    double tol = 1e-6;
  } gmm;

  struct LdaSection {
    std::size_t behavior_k = 4;
    std::size_t state_k = 2;
    double alpha = 0;  // 0 = 50/K
    double beta = 0.01;
    std::size_t iters = 1000;
    std::size_t burnin = 200;
  } lda;

  struct GazeSection {
    std::size_t rows = 4;
    std::size_t cols = 4;
    double x_min = -0.6;
    double x_max = 0.6;
    double y_min = -0.6;
    double y_max = 0.6;
    double window_s = 240;
    double stride_s = 1;
    std::string pi_mode = "empirical";  // empirical | stationary
  } gaze;

  std::string znorm_states = "auto";  // auto | on | off

  /// Throws ConfigError naming every invalid field.
  void validate() const;

  /// Set one field by its config key (e.g. "bcp.sweeps"). Unknown keys and
  /// unparseable values raise ConfigError.
  void set(const std::string& key, const std::string& value);

  /// All fields as ordered key -> value strings (config-file syntax).
  std::map<std::string, std::string> to_map() const;

  /// Parse a key = value config file ('#' starts a comment).
  static RunConfig from_file(const std::filesystem::path& path);
};

/// Deterministic seed derivation for pipeline stages and sessions.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);
std::uint64_t hash_string(const std::string& s);

}  // namespace drivemine
