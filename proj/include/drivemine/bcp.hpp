// Bayesian change-point segmentation of a multivariate kinematic matrix
// under a product partition model with constant block means. Block means and
// the within/between variance split are marginalized analytically; the
// remaining variance-ratio integral is evaluated by composite Gauss-Legendre
// quadrature in log space and the change-probability integral in closed form
// as an incomplete beta function. Posterior change probabilities come from
// Gibbs sampling over the indicator vector.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "drivemine/ingest.hpp"
#include "drivemine/quadrature.hpp"

namespace drivemine::bcp {

/// Change-point indicator vector. indicators[i] == 1 opens a new block at
/// sample i; indicators[0] is always 1, so blocks tile [0, n).
struct Partition {
  std::vector<std::uint8_t> indicators;

  std::size_t size() const { return indicators.size(); }
  std::size_t block_count() const;
  /// Contiguous [start, end) index intervals covering [0, n).
  std::vector<std::pair<std::size_t, std::size_t>> blocks() const;
  void validate() const;

  static Partition single_block(std::size_t n);
};

struct BcpParams {
  double p0 = 0.2;   // prior upper bound on the change probability
  double w0 = 0.2;   // prior upper bound on the variance ratio
  std::size_t sweeps = 500;
  std::size_t burn_in = 50;
  std::uint64_t seed = 0;
  bool standardize = true;  // scale each column to unit variance first

  void validate() const;
};

struct BcpResult {
  std::vector<double> change_prob;  // per index, change_prob[0] == 1
  Eigen::MatrixXd posterior_mean;   // n x d block means, original scale
  std::size_t sweeps_used = 0;      // post-burn-in sweeps in the estimates
};

struct Segment {
  double start_t = 0;
  double end_t = 0;
  std::size_t start_idx = 0;
  std::size_t end_idx = 0;  // half-open
  double boundary_prob = 0;
};

struct SegmentSet {
  std::vector<Segment> segments;
  double threshold = 0.5;
  std::size_t min_len = 1;
};

struct BlockSums {
  double between = 0;  // B: sum over blocks of len * (block mean - grand mean)^2
  double within = 0;   // W: sum over blocks of squared deviations from block mean
};

/// B and W of the partition; for d > 1 the per-column quantities (each column
/// centered by its own grand mean) are summed on the shared partition.
BlockSums block_sums(const KinematicMatrix& data, const Partition& partition);

/// log of the p-integral of the prior cohesion for b blocks out of n points,
/// evaluated as a regularized incomplete beta function.
double log_cohesion_integral(std::size_t blocks, std::size_t n, double p0);

/// log of the w-integral of the data marginal for b blocks: the integral of
/// w^((b-1)/2) / (W + B w)^((n-1)/2) over the quadrature's [0, w0] range.
double log_data_integral(std::size_t blocks, double between, double within,
                         std::size_t n, const GaussLegendre& quad);

/// log of f(X|rho) f(rho) up to a partition-independent constant.
double log_marginal(const KinematicMatrix& data, const Partition& partition,
                    double p0, double w0);

/// Copy with every non-constant column scaled to unit sample variance.
KinematicMatrix standardize_columns(const KinematicMatrix& data);

/// Incremental Gibbs machinery shared by gibbs_sweep and run. Keeps prefix
/// sums, the boundary set, the cached cohesion integrals and the current
/// (B, W) so each indicator update costs O(d) plus one quadrature pass.
class GibbsSampler {
public:
  GibbsSampler(const KinematicMatrix& data, const BcpParams& params);

  std::size_t n() const { return n_; }
  Partition state() const;
  void set_state(const Partition& p);

  /// Posterior log odds of a change at index i given every other indicator.
  double log_odds(std::size_t i) const;

  /// One in-order pass resampling indicators 1..n-1.
  void sweep(std::mt19937_64& rng);

  /// Add the current boundaries / block means into running tallies.
  void accumulate(std::vector<double>& change_count,
                  Eigen::MatrixXd& mean_acc) const;

private:
  struct Contrib {
    double between = 0;
    double within = 0;
  };

  Contrib contrib(std::size_t s, std::size_t e) const;
  double log_data_integral_fast(double half_exponent, double between,
                                double within) const;
  void recompute_totals();
  std::pair<std::size_t, std::size_t> neighbors(std::size_t i) const;

  std::size_t n_ = 0;
  std::size_t d_ = 0;
  double p0_ = 0.2;
  double w0_ = 0.2;
  // prefix sums over the (possibly standardized) analysis data
  std::vector<std::vector<double>> cum_, cumsq_;
  // prefix sums over the original data, for posterior block means
  std::vector<std::vector<double>> orig_cum_;
  std::vector<double> grand_mean_;
  double total_ss_ = 0;
  double w_floor_ = 0;
  double half_n_minus_1_ = 0;  // (n-1)/2
  std::vector<double> log_cohesion_;  // index b in [1, n]
  std::vector<double> quad_nodes_, quad_log_nodes_, quad_log_weights_;
  std::set<std::size_t> boundaries_;
  double cur_between_ = 0;
  double cur_within_ = 0;
};

/// One Gibbs pass per Eq.-14-style odds; returns the updated partition.
Partition gibbs_sweep(const Partition& state, const KinematicMatrix& data,
                      const BcpParams& params, std::mt19937_64& rng);

/// Full MCMC: initialize with a single block, discard burn-in sweeps,
/// estimate per-index change probabilities and block means.
BcpResult run(const KinematicMatrix& data, const BcpParams& params);

/// Threshold change probabilities into segments; boundaries closer than
/// min_len samples are merged by keeping the higher-probability one.
SegmentSet extract_segments(const BcpResult& result,
                            const std::vector<double>& times, double threshold,
                            std::size_t min_len);

}  // namespace drivemine::bcp
