// AOI binning of gaze angles and stationary / transition gaze entropy over
// rolling windows. Entropies are in bits; 0 log 0 is taken as 0 throughout.
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "drivemine/errors.hpp"

namespace drivemine::gaze {

/// Uniform grid of areas of interest over a gaze-angle rectangle (radians).
/// Samples outside the bounds are clamped onto the border cells.
struct AoiGrid {
  double x_min = -0.6;
  double x_max = 0.6;
  double y_min = -0.6;
  double y_max = 0.6;
  std::size_t rows = 4;
  std::size_t cols = 4;

  std::size_t bins() const { return rows * cols; }
  void validate() const;
};

struct GazeSample {
  double t = 0;
  double x = 0;
  double y = 0;
};

/// AOI index sequence, one symbol per sample.
struct SymbolSequence {
  std::vector<double> times;
  std::vector<std::size_t> symbols;

  std::size_t size() const { return symbols.size(); }
};

/// Rolling-window entropies; a gap (window with < 2 symbols) is nullopt.
struct EntropySeries {
  std::vector<double> window_centers;
  std::vector<std::optional<double>> sge;
  std::vector<std::optional<double>> gte;
};

/// First-order transition counts and row-normalized probabilities. Rows with
/// no observed transitions are uniform and flagged unobserved.
struct TransitionEstimate {
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::vector<double>> probs;
  std::vector<bool> row_observed;
};

/// How the stationary weights of the transition entropy are obtained:
/// empirical source occupancy (default; well defined on any window) or the
/// stationary vector of the estimated transition matrix.
enum class PiMode { empirical_source, stationary_vector };

/// Map each (x, y) into its grid cell index row * cols + col, clamping
/// out-of-range angles, with half-open [low, high) cell edges.
SymbolSequence bin_gaze(const std::vector<GazeSample>& samples, const AoiGrid& grid);

/// Stationary gaze entropy of the empirical bin occupancy, in bits.
double sge(const SymbolSequence& symbols);

TransitionEstimate transition_matrix(const SymbolSequence& symbols, std::size_t n_bins);

/// Transition gaze entropy: occupancy-weighted entropy of transition rows.
double gte(const SymbolSequence& symbols, std::size_t n_bins,
           PiMode mode = PiMode::empirical_source);

/// Both entropies over centered rolling windows [c - w/2, c + w/2), window
/// centers stride apart. A window shorter than 2 symbols yields a gap.
EntropySeries rolling_entropy(const SymbolSequence& symbols, double window_s,
                              double stride_s, std::size_t n_bins,
                              PiMode mode = PiMode::empirical_source);

}  // namespace drivemine::gaze
