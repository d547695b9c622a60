// Gaussian mixture codebooks: EM fitting with k-means++-style starts,
// BIC for vocabulary-size checks, hard assignment of samples to words and
// the grouping of word streams into per-segment documents.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "drivemine/bcp.hpp"
#include "drivemine/errors.hpp"

namespace drivemine::quantize {

struct GmmConfig {
  std::size_t max_iter = 200;
  double tol = 1e-6;  // relative log-likelihood change
  std::size_t restarts = 5;
  std::uint64_t seed = 0;
};

/// Fitted mixture vocabulary: weights sum to 1, every covariance admits a
/// Cholesky factorization.
struct Codebook {
  std::size_t K = 0;
  std::size_t d = 0;
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
  double log_likelihood = 0;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static Codebook from_json(const std::string& text);
};

/// Word sequence of one segment; empty documents are excluded from topic
/// fitting downstream.
struct WordDocument {
  std::size_t segment_id = 0;
  std::vector<std::size_t> words;

  bool empty() const { return words.empty(); }
};

/// EM fit, best of `restarts` runs by final log-likelihood. Per-iteration
/// log-likelihood is non-decreasing up to the covariance floor; `ll_trace`,
/// when given, receives the winning run's per-iteration log-likelihoods.
Codebook fit_gmm(const Eigen::MatrixXd& data, std::size_t K,
                 const GmmConfig& config, std::vector<double>* ll_trace = nullptr);

/// Bayesian information criterion of a fitted codebook on `data`:
/// -2 logL + m ln n with m = K-1 + K d + K d(d+1)/2 free parameters.
double bic(const Codebook& cb, const Eigen::MatrixXd& data);

/// Hard assignment: argmax_i w_i g(x | mu_i, Sigma_i), ties to the lowest
/// component index.
std::vector<std::size_t> encode(const Codebook& cb, const Eigen::MatrixXd& data);

/// Partition a timestamped word stream into per-segment documents with
/// half-open [start_t, end_t) membership.
std::vector<WordDocument> documents_from_segments(
    const std::vector<std::size_t>& words, const std::vector<double>& times,
    const bcp::SegmentSet& segs);

/// Log-likelihood of data under the codebook (sum over samples of the log
/// mixture density).
double log_likelihood(const Codebook& cb, const Eigen::MatrixXd& data);

}  // namespace drivemine::quantize
