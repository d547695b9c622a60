// End-to-end orchestration: segmentation of the kinematic stream, GMM-LDA
// pattern inference for behavior and state modalities, and the derived
// association artifacts (co-occurrence fractions, transition matrices,
// per-pattern summaries, statistical tests, style aggregation).
#pragma once

#include <string>
#include <vector>

#include "drivemine/bcp.hpp"
#include "drivemine/config.hpp"
#include "drivemine/gaze.hpp"
#include "drivemine/ingest.hpp"
#include "drivemine/quantize.hpp"
#include "drivemine/stats.hpp"
#include "drivemine/topics.hpp"

namespace drivemine::pipeline {

struct TransitionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::vector<double>> probs;  // rows with counts sum to 1
};

struct Cooccurrence {
  std::string modality;
  std::vector<std::string> behavior_labels;
  std::vector<std::string> state_labels;
  std::vector<std::vector<std::size_t>> counts;  // behavior x state
  std::vector<std::vector<double>> fractions;    // row-normalized
};

struct StyleSummary {
  std::string participant_id;
  std::string style;  // "aggressive" | "conservative"
  double fraction_abnormal_hr = 0;
  double fraction_high_gte = 0;
  std::size_t n_hr = 0;
  std::size_t n_gte = 0;
  bool partial = false;  // the opposite style group was empty
};

/// Token-level state labels of one modality, aligned with the samples the
/// topic model actually covered (samples outside every segment are dropped).
struct StateSeries {
  std::string modality;  // "hr" | "gte"
  std::vector<double> times;
  std::vector<double> values;        // analysis-scale values (maybe z-scored)
  std::vector<std::size_t> labels;   // per-sample state pattern
  std::size_t n_states = 2;
  std::size_t elevated_state = 0;    // pattern with the higher mean value
  std::vector<long> per_segment;     // majority label per segment, -1 uncovered
};

struct SummaryRow {
  std::string source;      // channel or modality name
  std::string group_kind;  // "behavior" | "state"
  std::size_t pattern = 0;
  stats::Summary summary;
};

struct SessionReport {
  std::string participant_id;
  std::string mode;  // "imu" | "speed"
  std::map<std::string, std::string> config_echo;

  std::vector<double> kin_times;
  std::vector<std::string> kin_columns;
  std::vector<double> change_prob;
  bcp::SegmentSet segments;

  std::vector<long> behavior_per_segment;  // -1 for unassigned segments
  std::vector<std::string> behavior_names;  // advisory naming by accel rank
  std::vector<StateSeries> states;

  std::vector<SummaryRow> summaries;
  std::vector<stats::TestResult> tests;
  TransitionMatrix transitions;
  std::vector<Cooccurrence> cooccurrence;
  std::vector<StyleSummary> styles;
};

/// Majority state per segment; -1 where no state sample falls inside.
std::vector<long> map_states_to_segments(const std::vector<double>& state_times,
                                         const std::vector<std::size_t>& state_labels,
                                         const bcp::SegmentSet& segs,
                                         std::size_t n_states);

/// Sample-weighted co-occurrence: counts[b][s] = state samples with pattern s
/// falling inside segments labeled with behavior b.
Cooccurrence cooccurrence(const bcp::SegmentSet& segs,
                          const std::vector<long>& behavior_per_segment,
                          std::size_t n_behavior,
                          const std::vector<double>& state_times,
                          const std::vector<std::size_t>& state_labels,
                          std::size_t n_states, const std::string& modality);

/// Consecutive-pair transition counts over the per-segment behavior labels.
TransitionMatrix transitions(const std::vector<long>& sequence, std::size_t K);

struct StyleInputs {
  std::string participant_id;
  // forward-acceleration samples grouped by behavior pattern
  std::vector<std::vector<double>> accel_by_pattern;
  // per state sample: behavior pattern of its segment, elevated-state flag
  std::vector<std::pair<long, bool>> hr_samples;
  std::vector<std::pair<long, bool>> gte_samples;
};

struct StyleResult {
  std::vector<bool> pattern_is_aggressive;  // per behavior pattern
  std::vector<StyleSummary> summaries;      // aggressive and/or conservative
};

/// Patterns whose forward acceleration is significantly nonzero (sign test,
/// alpha = 0.05) form the aggressive style; fractions of elevated states are
/// reported per style. A missing style group yields partial output.
StyleResult style_aggregate(const StyleInputs& inputs);

/// The whole analysis for one session. Deterministic given config.seed.
SessionReport run_pipeline(const Session& session, const RunConfig& config);

/// Report serialization: report.json plus figure-ready CSV exports.
std::string report_to_json(const SessionReport& report);
std::string multi_report_to_json(const std::vector<SessionReport>& reports);
void write_report_files(const SessionReport& report,
                        const std::filesystem::path& dir);

}  // namespace drivemine::pipeline
