#include "drivemine/bcp.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>

#include "drivemine/errors.hpp"

namespace drivemine::bcp {

namespace {

constexpr std::size_t kQuadOrder = 16;
constexpr std::size_t kQuadPanels = 8;  // 128 nodes total
constexpr double kInf = std::numeric_limits<double>::infinity();

double lbeta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// log of the integral over [0, x] of p^(a-1) (1-p)^(c-1) dp by log-space
// quadrature; fallback for when the regularized incomplete beta underflows.
double log_beta_integral_quad(double a, double c, double x) {
  GaussLegendre quad(0.0, x, kQuadOrder, kQuadPanels);
  return quad.log_integrate([&](double p) {
    return (a - 1.0) * std::log(p) + (c - 1.0) * std::log1p(-p);
  });
}

}  // namespace

std::size_t Partition::block_count() const {
  std::size_t b = 0;
  for (auto u : indicators) b += (u != 0);
  return b;
}

std::vector<std::pair<std::size_t, std::size_t>> Partition::blocks() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t n = indicators.size();
  std::size_t start = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (indicators[i]) {
      out.emplace_back(start, i);
      start = i;
    }
  }
  if (n > 0) out.emplace_back(start, n);
  return out;
}

void Partition::validate() const {
  if (indicators.empty() || indicators[0] == 0)
    throw ConfigError("partition must open a block at index 0");
}

Partition Partition::single_block(std::size_t n) {
  Partition p;
  p.indicators.assign(n, 0);
  if (n > 0) p.indicators[0] = 1;
  return p;
}

void BcpParams::validate() const {
  if (!(p0 > 0.0 && p0 <= 1.0)) throw ConfigError("p0 must be in (0, 1]");
  if (!(w0 > 0.0 && w0 <= 1.0)) throw ConfigError("w0 must be in (0, 1]");
  if (sweeps == 0) throw ConfigError("sweeps must be positive");
  if (burn_in >= sweeps) throw ConfigError("burn_in must be smaller than sweeps");
}

BlockSums block_sums(const KinematicMatrix& data, const Partition& partition) {
  partition.validate();
  const auto n = data.rows();
  const auto d = data.cols();
  if (static_cast<std::size_t>(n) != partition.size())
    throw DimensionMismatch("partition length does not match data rows");

  BlockSums sums;
  const Eigen::RowVectorXd grand = data.values.colwise().mean();
  for (const auto& [s, e] : partition.blocks()) {
    const auto len = static_cast<Eigen::Index>(e - s);
    const auto rows = data.values.middleRows(static_cast<Eigen::Index>(s), len);
    const Eigen::RowVectorXd mean = rows.colwise().mean();
    for (Eigen::Index j = 0; j < d; ++j) {
      const double dm = mean(j) - grand(j);
      sums.between += static_cast<double>(len) * dm * dm;
      sums.within += (rows.col(j).array() - mean(j)).square().sum();
    }
  }
  return sums;
}

double log_cohesion_integral(std::size_t blocks, std::size_t n, double p0) {
  const double a = static_cast<double>(blocks);
  const double c = static_cast<double>(n - blocks) + 1.0;
  if (p0 >= 1.0) return lbeta(a, c);
  const double reg = boost::math::ibeta(a, c, p0);
  if (reg > 0.0 && std::isfinite(reg)) return lbeta(a, c) + std::log(reg);
  return log_beta_integral_quad(a, c, p0);
}

double log_data_integral(std::size_t blocks, double between, double within,
                         std::size_t n, const GaussLegendre& quad) {
  const double half_exp = (static_cast<double>(blocks) - 1.0) / 2.0;
  const double c2 = (static_cast<double>(n) - 1.0) / 2.0;
  return quad.log_integrate([&](double w) {
    return half_exp * std::log(w) - c2 * std::log(within + between * w);
  });
}

KinematicMatrix standardize_columns(const KinematicMatrix& data) {
  KinematicMatrix out = data;
  const auto n = data.rows();
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double mean = data.values.col(j).mean();
    const double ss = (data.values.col(j).array() - mean).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd > 0.0) out.values.col(j) /= sd;
  }
  return out;
}

double log_marginal(const KinematicMatrix& data, const Partition& partition,
                    double p0, double w0) {
  const auto n = data.rows();
  const auto sums = block_sums(data, partition);

  // data scale for the W floor: total sum of squares about the grand means
  double total_ss = 0.0;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double mean = data.values.col(j).mean();
    total_ss += (data.values.col(j).array() - mean).square().sum();
  }
  if (total_ss <= 0.0)
    throw DegenerateData("all observations identical; marginal undefined");

  const double within = std::max(sums.within, 1e-12 * total_ss);
  const GaussLegendre quad = GaussLegendre::graded(0.0, w0, kQuadOrder, kQuadPanels);
  const std::size_t b = partition.block_count();
  return log_data_integral(b, sums.between, within, static_cast<std::size_t>(n),
                           quad) +
         log_cohesion_integral(b, static_cast<std::size_t>(n), p0);
}

GibbsSampler::GibbsSampler(const KinematicMatrix& data, const BcpParams& params) {
  params.validate();
  n_ = static_cast<std::size_t>(data.rows());
  d_ = static_cast<std::size_t>(data.cols());
  if (n_ < 2) throw InsufficientData("need at least 2 samples to segment");
  p0_ = params.p0;
  w0_ = params.w0;
  half_n_minus_1_ = (static_cast<double>(n_) - 1.0) / 2.0;

  const KinematicMatrix analysis =
      params.standardize ? standardize_columns(data) : data;

  cum_.assign(d_, std::vector<double>(n_ + 1, 0.0));
  cumsq_.assign(d_, std::vector<double>(n_ + 1, 0.0));
  orig_cum_.assign(d_, std::vector<double>(n_ + 1, 0.0));
  grand_mean_.assign(d_, 0.0);
  for (std::size_t j = 0; j < d_; ++j) {
    for (std::size_t i = 0; i < n_; ++i) {
      const double v = analysis.values(static_cast<Eigen::Index>(i),
                                       static_cast<Eigen::Index>(j));
      cum_[j][i + 1] = cum_[j][i] + v;
      cumsq_[j][i + 1] = cumsq_[j][i] + v * v;
      orig_cum_[j][i + 1] =
          orig_cum_[j][i] + data.values(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j));
    }
    grand_mean_[j] = cum_[j][n_] / static_cast<double>(n_);
    total_ss_ += cumsq_[j][n_] - static_cast<double>(n_) * grand_mean_[j] * grand_mean_[j];
  }
  if (total_ss_ <= 0.0)
    throw DegenerateData("all observations identical; nothing to segment");
  w_floor_ = 1e-12 * total_ss_;

  log_cohesion_.assign(n_ + 2, -kInf);
  for (std::size_t b = 1; b <= n_; ++b)
    log_cohesion_[b] = log_cohesion_integral(b, n_, p0_);

  const GaussLegendre quad = GaussLegendre::graded(0.0, w0_, kQuadOrder, kQuadPanels);
  quad_nodes_ = quad.nodes();
  quad_log_weights_ = quad.log_weights();
  quad_log_nodes_.reserve(quad_nodes_.size());
  for (double w : quad_nodes_) quad_log_nodes_.push_back(std::log(w));

  boundaries_.insert(0);
  recompute_totals();
}

Partition GibbsSampler::state() const {
  Partition p;
  p.indicators.assign(n_, 0);
  for (std::size_t b : boundaries_) p.indicators[b] = 1;
  return p;
}

void GibbsSampler::set_state(const Partition& p) {
  p.validate();
  if (p.size() != n_) throw DimensionMismatch("partition length mismatch");
  boundaries_.clear();
  for (std::size_t i = 0; i < n_; ++i)
    if (p.indicators[i]) boundaries_.insert(i);
  recompute_totals();
}

GibbsSampler::Contrib GibbsSampler::contrib(std::size_t s, std::size_t e) const {
  Contrib c;
  const double len = static_cast<double>(e - s);
  for (std::size_t j = 0; j < d_; ++j) {
    const double sum = cum_[j][e] - cum_[j][s];
    const double sumsq = cumsq_[j][e] - cumsq_[j][s];
    const double mean = sum / len;
    const double dm = mean - grand_mean_[j];
    c.between += len * dm * dm;
    c.within += sumsq - sum * mean;
  }
  return c;
}

void GibbsSampler::recompute_totals() {
  cur_between_ = 0.0;
  cur_within_ = 0.0;
  auto it = boundaries_.begin();
  std::size_t start = *it;
  ++it;
  for (; it != boundaries_.end(); ++it) {
    const Contrib c = contrib(start, *it);
    cur_between_ += c.between;
    cur_within_ += c.within;
    start = *it;
  }
  const Contrib last = contrib(start, n_);
  cur_between_ += last.between;
  cur_within_ += last.within;
}

double GibbsSampler::log_data_integral_fast(double half_exponent, double between,
                                            double within) const {
  within = std::max(within, w_floor_);
  const std::size_t m = quad_nodes_.size();
  double terms[kQuadOrder * kQuadPanels];
  double max_term = -kInf;
  for (std::size_t j = 0; j < m; ++j) {
    const double t = half_exponent * quad_log_nodes_[j] -
                     half_n_minus_1_ * std::log(within + between * quad_nodes_[j]) +
                     quad_log_weights_[j];
    terms[j] = t;
    if (t > max_term) max_term = t;
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j) acc += std::exp(terms[j] - max_term);
  return max_term + std::log(acc);
}

std::pair<std::size_t, std::size_t> GibbsSampler::neighbors(std::size_t i) const {
  auto it = boundaries_.lower_bound(i);
  // left neighbor: largest boundary < i (always exists: 0 is a boundary)
  auto lt = it;
  --lt;
  const std::size_t left = *lt;
  if (it != boundaries_.end() && *it == i) ++it;
  const std::size_t right = (it == boundaries_.end()) ? n_ : *it;
  return {left, right};
}

double GibbsSampler::log_odds(std::size_t i) const {
  if (i == 0 || i >= n_) throw ConfigError("log_odds index must be in [1, n)");
  const bool present = boundaries_.count(i) != 0;
  const auto [left, right] = neighbors(i);

  const Contrib merged = contrib(left, right);
  const Contrib lo = contrib(left, i);
  const Contrib hi = contrib(i, right);

  double b_without, w_without;
  if (present) {
    b_without = cur_between_ - lo.between - hi.between + merged.between;
    w_without = cur_within_ - lo.within - hi.within + merged.within;
  } else {
    b_without = cur_between_;
    w_without = cur_within_;
  }
  const double b_with = b_without - merged.between + lo.between + hi.between;
  const double w_with = w_without - merged.within + lo.within + hi.within;

  const std::size_t blocks_without = boundaries_.size() - (present ? 1 : 0);
  const double half_exp_without = (static_cast<double>(blocks_without) - 1.0) / 2.0;

  const double cohesion_term =
      log_cohesion_[blocks_without + 1] - log_cohesion_[blocks_without];
  const double data_term =
      log_data_integral_fast(half_exp_without + 0.5, b_with, w_with) -
      log_data_integral_fast(half_exp_without, b_without, w_without);
  return cohesion_term + data_term;
}

void GibbsSampler::sweep(std::mt19937_64& rng) {
  recompute_totals();  // reset O(n) of accumulated float drift each pass
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 1; i < n_; ++i) {
    const bool present = boundaries_.count(i) != 0;
    const auto [left, right] = neighbors(i);
    const Contrib merged = contrib(left, right);
    const Contrib lo = contrib(left, i);
    const Contrib hi = contrib(i, right);

    double b_without, w_without;
    if (present) {
      b_without = cur_between_ - lo.between - hi.between + merged.between;
      w_without = cur_within_ - lo.within - hi.within + merged.within;
    } else {
      b_without = cur_between_;
      w_without = cur_within_;
    }
    const double b_with = b_without - merged.between + lo.between + hi.between;
    const double w_with = w_without - merged.within + lo.within + hi.within;

    const std::size_t blocks_without = boundaries_.size() - (present ? 1 : 0);
    const double half_exp = (static_cast<double>(blocks_without) - 1.0) / 2.0;
    const double log_odds_i =
        log_cohesion_[blocks_without + 1] - log_cohesion_[blocks_without] +
        log_data_integral_fast(half_exp + 0.5, b_with, w_with) -
        log_data_integral_fast(half_exp, b_without, w_without);

    // p_i = odds / (1 + odds), sampled without leaving log space
    const double p_change = 1.0 / (1.0 + std::exp(-log_odds_i));
    const bool change = unif(rng) < p_change;
    if (change) {
      boundaries_.insert(i);
      cur_between_ = b_with;
      cur_within_ = w_with;
    } else {
      boundaries_.erase(i);
      cur_between_ = b_without;
      cur_within_ = w_without;
    }
  }
}

void GibbsSampler::accumulate(std::vector<double>& change_count,
                              Eigen::MatrixXd& mean_acc) const {
  for (std::size_t b : boundaries_) change_count[b] += 1.0;
  auto it = boundaries_.begin();
  std::size_t start = *it;
  ++it;
  auto flush = [&](std::size_t s, std::size_t e) {
    const double len = static_cast<double>(e - s);
    for (std::size_t j = 0; j < d_; ++j) {
      const double mean = (orig_cum_[j][e] - orig_cum_[j][s]) / len;
      mean_acc.block(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j),
                     static_cast<Eigen::Index>(e - s), 1)
          .array() += mean;
    }
  };
  for (; it != boundaries_.end(); ++it) {
    flush(start, *it);
    start = *it;
  }
  flush(start, n_);
}

Partition gibbs_sweep(const Partition& state, const KinematicMatrix& data,
                      const BcpParams& params, std::mt19937_64& rng) {
  GibbsSampler sampler(data, params);
  sampler.set_state(state);
  sampler.sweep(rng);
  return sampler.state();
}

BcpResult run(const KinematicMatrix& data, const BcpParams& params) {
  params.validate();
  const auto n = static_cast<std::size_t>(data.rows());
  if (n < 2) throw InsufficientData("need at least 2 samples to segment");

  GibbsSampler sampler(data, params);
  std::mt19937_64 rng(params.seed);

  std::vector<double> counts(n, 0.0);
  Eigen::MatrixXd mean_acc = Eigen::MatrixXd::Zero(data.rows(), data.cols());
  std::size_t kept = 0;
  for (std::size_t s = 0; s < params.sweeps; ++s) {
    sampler.sweep(rng);
    if (s >= params.burn_in) {
      sampler.accumulate(counts, mean_acc);
      ++kept;
    }
  }

  BcpResult result;
  result.sweeps_used = kept;
  result.change_prob.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    result.change_prob[i] = counts[i] / static_cast<double>(kept);
  result.change_prob[0] = 1.0;
  result.posterior_mean = mean_acc / static_cast<double>(kept);
  return result;
}

SegmentSet extract_segments(const BcpResult& result,
                            const std::vector<double>& times, double threshold,
                            std::size_t min_len) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ConfigError("segment threshold must be in (0, 1)");
  if (min_len < 1) throw ConfigError("min_len must be at least 1");
  const std::size_t n = result.change_prob.size();
  if (times.size() != n) throw DimensionMismatch("times length mismatch");

  std::vector<std::size_t> bounds;
  bounds.push_back(0);
  for (std::size_t i = 1; i < n; ++i)
    if (result.change_prob[i] >= threshold) bounds.push_back(i);

  // merge boundary pairs closer than min_len, dropping the less probable one
  bool merged = true;
  while (merged && bounds.size() > 1) {
    merged = false;
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
      if (bounds[k + 1] - bounds[k] < min_len) {
        std::size_t drop = k + 1;
        if (k > 0 &&
            result.change_prob[bounds[k]] < result.change_prob[bounds[k + 1]])
          drop = k;
        bounds.erase(bounds.begin() + static_cast<std::ptrdiff_t>(drop));
        merged = true;
        break;
      }
    }
  }

  SegmentSet out;
  out.threshold = threshold;
  out.min_len = min_len;
  const double dt = (n >= 2) ? times[n - 1] - times[n - 2] : 0.0;
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    Segment seg;
    seg.start_idx = bounds[k];
    seg.end_idx = (k + 1 < bounds.size()) ? bounds[k + 1] : n;
    seg.start_t = times[seg.start_idx];
    seg.end_t = (seg.end_idx < n) ? times[seg.end_idx] : times[n - 1] + dt;
    seg.boundary_prob = result.change_prob[seg.start_idx];
    out.segments.push_back(seg);
  }
  return out;
}

}  // namespace drivemine::bcp
