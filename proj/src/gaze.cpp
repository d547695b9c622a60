#include "drivemine/gaze.hpp"

#include <algorithm>
#include <cmath>

namespace drivemine::gaze {

namespace {

double entropy_bits(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

// Stationary vector of a row-stochastic matrix by power iteration.
std::vector<double> stationary_vector(const std::vector<std::vector<double>>& probs) {
  const std::size_t n = probs.size();
  std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n);
  for (int iter = 0; iter < 500; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) next[j] += pi[i] * probs[i][j];
    double delta = 0.0;
    for (std::size_t j = 0; j < n; ++j) delta += std::abs(next[j] - pi[j]);
    pi.swap(next);
    if (delta < 1e-12) break;
  }
  return pi;
}

}  // namespace

void AoiGrid::validate() const {
  if (!(x_min < x_max) || !(y_min < y_max))
    throw ConfigError("AOI grid bounds must satisfy min < max");
  if (rows * cols < 2) throw ConfigError("AOI grid needs at least 2 cells");
}

SymbolSequence bin_gaze(const std::vector<GazeSample>& samples, const AoiGrid& grid) {
  grid.validate();
  if (samples.empty()) throw EmptyInput("no gaze samples to bin");

  SymbolSequence out;
  out.times.reserve(samples.size());
  out.symbols.reserve(samples.size());
  const double cell_w = (grid.x_max - grid.x_min) / static_cast<double>(grid.cols);
  const double cell_h = (grid.y_max - grid.y_min) / static_cast<double>(grid.rows);
  for (const auto& s : samples) {
    auto clamp_cell = [](double v, double lo, double width, std::size_t count) {
      if (v < lo) return std::size_t{0};
      auto idx = static_cast<long>((v - lo) / width);
      if (idx < 0) idx = 0;
      if (idx >= static_cast<long>(count)) idx = static_cast<long>(count) - 1;
      return static_cast<std::size_t>(idx);
    };
    const std::size_t col = clamp_cell(s.x, grid.x_min, cell_w, grid.cols);
    const std::size_t row = clamp_cell(s.y, grid.y_min, cell_h, grid.rows);
    out.times.push_back(s.t);
    out.symbols.push_back(row * grid.cols + col);
  }
  return out;
}

double sge(const SymbolSequence& symbols) {
  if (symbols.size() == 0) throw EmptyInput("sge needs at least one symbol");
  std::size_t max_sym = 0;
  for (std::size_t s : symbols.symbols) max_sym = std::max(max_sym, s);
  std::vector<double> p(max_sym + 1, 0.0);
  for (std::size_t s : symbols.symbols) p[s] += 1.0;
  for (double& v : p) v /= static_cast<double>(symbols.size());
  return entropy_bits(p);
}

TransitionEstimate transition_matrix(const SymbolSequence& symbols, std::size_t n_bins) {
  if (symbols.size() < 2)
    throw EmptyInput("transition matrix needs at least two symbols");

  TransitionEstimate est;
  est.counts.assign(n_bins, std::vector<std::size_t>(n_bins, 0));
  est.probs.assign(n_bins, std::vector<double>(n_bins, 0.0));
  est.row_observed.assign(n_bins, false);
  for (std::size_t k = 0; k + 1 < symbols.size(); ++k) {
    const std::size_t i = symbols.symbols[k];
    const std::size_t j = symbols.symbols[k + 1];
    if (i >= n_bins || j >= n_bins)
      throw WordOutOfRange("symbol exceeds bin count");
    ++est.counts[i][j];
  }
  for (std::size_t i = 0; i < n_bins; ++i) {
    std::size_t row_total = 0;
    for (std::size_t j = 0; j < n_bins; ++j) row_total += est.counts[i][j];
    if (row_total == 0) {
      for (std::size_t j = 0; j < n_bins; ++j)
        est.probs[i][j] = 1.0 / static_cast<double>(n_bins);
    } else {
      est.row_observed[i] = true;
      for (std::size_t j = 0; j < n_bins; ++j)
        est.probs[i][j] = static_cast<double>(est.counts[i][j]) /
                          static_cast<double>(row_total);
    }
  }
  return est;
}

double gte(const SymbolSequence& symbols, std::size_t n_bins, PiMode mode) {
  const TransitionEstimate est = transition_matrix(symbols, n_bins);

  std::vector<double> pi(n_bins, 0.0);
  if (mode == PiMode::empirical_source) {
    // occupancy among transition sources (all symbols but the last)
    const double total = static_cast<double>(symbols.size() - 1);
    for (std::size_t k = 0; k + 1 < symbols.size(); ++k)
      pi[symbols.symbols[k]] += 1.0 / total;
  } else {
    pi = stationary_vector(est.probs);
  }

  double h = 0.0;
  for (std::size_t i = 0; i < n_bins; ++i) {
    if (!est.row_observed[i] || pi[i] <= 0.0) continue;
    h += pi[i] * entropy_bits(est.probs[i]);
  }
  return h;
}

EntropySeries rolling_entropy(const SymbolSequence& symbols, double window_s,
                              double stride_s, std::size_t n_bins, PiMode mode) {
  if (symbols.size() == 0) throw EmptyInput("rolling entropy needs symbols");
  if (!(window_s > 0.0) || !(stride_s > 0.0))
    throw ConfigError("window and stride must be positive");

  const double t0 = symbols.times.front();
  const double t1 = symbols.times.back();

  if (t1 - t0 <= window_s) {
    // degenerate window: one value over the whole sequence
    EntropySeries series;
    series.window_centers.push_back(0.5 * (t0 + t1));
    if (symbols.size() < 2) {
      series.sge.push_back(std::nullopt);
      series.gte.push_back(std::nullopt);
    } else {
      series.sge.push_back(sge(symbols));
      series.gte.push_back(gte(symbols, n_bins, mode));
    }
    return series;
  }

  std::vector<double> centers;
  for (std::size_t k = 0;; ++k) {
    const double c = t0 + 0.5 * window_s + static_cast<double>(k) * stride_s;
    if (c + 0.5 * window_s > t1 + 1e-9) break;
    centers.push_back(c);
  }

  EntropySeries series;
  series.window_centers = centers;
  series.sge.reserve(centers.size());
  series.gte.reserve(centers.size());

  std::size_t lo = 0, hi = 0;
  for (double c : centers) {
    const double wl = c - 0.5 * window_s;
    const double wh = c + 0.5 * window_s;
    while (lo < symbols.size() && symbols.times[lo] < wl) ++lo;
    if (hi < lo) hi = lo;
    while (hi < symbols.size() && symbols.times[hi] < wh) ++hi;
    const std::size_t count = hi - lo;
    if (count < 2) {
      series.sge.push_back(std::nullopt);
      series.gte.push_back(std::nullopt);
      continue;
    }
    SymbolSequence win;
    win.times.assign(symbols.times.begin() + static_cast<std::ptrdiff_t>(lo),
                     symbols.times.begin() + static_cast<std::ptrdiff_t>(hi));
    win.symbols.assign(symbols.symbols.begin() + static_cast<std::ptrdiff_t>(lo),
                       symbols.symbols.begin() + static_cast<std::ptrdiff_t>(hi));
    series.sge.push_back(sge(win));
    series.gte.push_back(gte(win, n_bins, mode));
  }
  return series;
}

}  // namespace drivemine::gaze
