// Seeded ground-truth generators: piecewise-constant kinematics for the
// change-point sampler, LDA forward sampling for the topic model, Markov
// symbol chains for the entropy estimators, and a full coupled session
// (behavior segments + state-linked HR and gaze) for end-to-end checks.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drivemine/gaze.hpp"
#include "drivemine/ingest.hpp"
#include "drivemine/quantize.hpp"

namespace drivemine::synth {

struct SynthSpec {
  std::uint64_t seed = 0;

  // piecewise kinematics
  std::size_t n = 2000;
  std::vector<std::size_t> change_points;         // strictly increasing, in (0, n)
  std::vector<std::vector<double>> block_means;   // per block, per channel
  double sigma = 1.0;

  // coupled session
  double duration_s = 900.0;
  double kin_rate_hz = 4.0;
  double hr_rate_hz = 1.0;
  double gaze_rate_hz = 10.0;
  std::size_t segment_count = 30;
  std::vector<std::vector<double>> pattern_means;  // behavior -> (ax, ay, wz)
  double kin_sigma = 1.0;
  std::vector<std::vector<double>> coupling;       // behavior x state rows
  double hr_base = 70.0;
  double hr_shift = 20.0;
  double hr_sigma = 2.0;

  void validate() const;
  std::string to_json() const;
  static SynthSpec from_json(const std::string& text);

  /// The 4-pattern / 2-state desk-scale defaults for every field left empty.
  SynthSpec with_defaults() const;
};

struct PiecewiseData {
  KinematicMatrix matrix;
  std::vector<std::size_t> change_points;  // truth record
};

/// Gaussian noise around per-block means; truth carried alongside.
PiecewiseData gen_piecewise(const SynthSpec& spec);

/// Forward-sample the topic model: z ~ theta_m, w ~ phi_z.
std::vector<quantize::WordDocument> gen_corpus(
    const std::vector<std::vector<double>>& phi,
    const std::vector<std::vector<double>>& theta,
    const std::vector<std::size_t>& doc_lengths, std::uint64_t seed);

/// First symbol uniform, then the chain follows the transition matrix.
gaze::SymbolSequence gen_markov(const std::vector<std::vector<double>>& transition,
                                std::size_t n, std::uint64_t seed);

struct CoupledTruth {
  std::vector<double> segment_starts;   // seconds, one per true segment
  std::vector<std::size_t> behavior;    // per true segment
  std::vector<double> hr_times;
  std::vector<std::size_t> hr_state;    // per HR sample, drawn from coupling
  std::vector<std::size_t> gaze_state;  // per true segment
  std::vector<std::vector<double>> coupling;

  std::string to_json() const;
};

struct CoupledSession {
  Session session;
  CoupledTruth truth;
};

/// Kinematic blocks drawn per behavior pattern; HR states drawn per sample
/// from the coupling row of the enclosing segment's behavior; gaze switches
/// between a single-AOI fixation regime and a uniform scanning regime per
/// segment.
CoupledSession gen_coupled_session(const SynthSpec& spec);

/// Write the session in the same CSV layout ingest consumes, plus truth.json
/// when truth is given.
void write_session_csv(const Session& session, const std::filesystem::path& dir);
void write_truth_json(const CoupledTruth& truth, const std::filesystem::path& path);

}  // namespace drivemine::synth
