// Canonical data model for multimodal session telemetry plus the parsing,
// resampling and normalization steps that feed every downstream stage.
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "drivemine/errors.hpp"

namespace drivemine {

/// A single timestamped sample stream. Timestamps are seconds since session
/// start, strictly increasing; values are finite after validation.
struct Channel {
  std::string name;
  std::string unit;
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const { return times.size(); }
};

/// One participant's recording: uniquely named channels plus free-form
/// metadata (units, provenance, generator truth ids, ...).
struct Session {
  std::string participant_id;
  std::map<std::string, Channel> channels;
  std::map<std::string, std::string> metadata;

  bool has_channel(const std::string& name) const {
    return channels.count(name) != 0;
  }
  const Channel& channel(const std::string& name) const;
};

/// Several channels resampled onto one shared uniform timeline, column per
/// channel. This is the segmentation input.
struct KinematicMatrix {
  std::vector<double> times;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  // n x d, row i sampled at times[i]

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// Names the time/value columns to pull out of a CSV file.
struct ChannelSchema {
  std::string time_column;
  std::string value_column;
  std::string channel_name;  // defaults to value_column when empty
  std::string unit;
};

/// Tally of rows dropped during load (non-finite values).
struct LoadStats {
  std::size_t rows_dropped = 0;
};

enum class ResampleMethod { hold_last, linear };

/// Parse one channel out of a headered CSV file. Rows carrying non-finite
/// values are dropped and counted in `stats`; structurally broken rows and
/// non-increasing timestamps raise MalformedRow with the line number.
Channel load_csv(const std::filesystem::path& path, const ChannelSchema& schema,
                 LoadStats* stats = nullptr);

/// Resample onto a uniform grid t_first + k/rate covering [t_first, t_last].
Channel resample(const Channel& ch, double rate_hz, ResampleMethod method);

/// Standardize to mean 0, sample standard deviation (n-1 denominator) 1.
Channel zscore(const Channel& ch);

/// Differentiate a uniformly sampled speed channel: central differences at
/// interior points, one-sided at the ends.
Channel accel_from_speed(const Channel& speed);

/// Resample the named channels onto a shared uniform timeline (linear
/// interpolation over the overlap of their time ranges), column order as
/// given.
KinematicMatrix assemble_matrix(const Session& session,
                                const std::vector<std::string>& names,
                                double rate_hz);

/// Load a session directory laid out per the CSV interface:
/// telemetry.csv (t,ax,ay,wz[,speed]), hr.csv (t,bpm),
/// gaze.csv (t,gaze_angle_x,gaze_angle_y), speed.csv (t,speed).
/// Missing files simply leave their channels absent.
Session load_session_dir(const std::filesystem::path& dir,
                         const std::string& participant_id,
                         LoadStats* stats = nullptr);

}  // namespace drivemine
