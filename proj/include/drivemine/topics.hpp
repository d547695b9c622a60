// Latent Dirichlet Allocation over segment-documents by collapsed Gibbs
// sampling. phi/theta are posterior means averaged over post-burn-in sweeps;
// per-token labels are the modal sampled topic.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "drivemine/errors.hpp"
#include "drivemine/quantize.hpp"

namespace drivemine::topics {

struct LdaConfig {
  std::size_t K = 4;
  double alpha = 0;  // <= 0 means the 50/K default
  double beta = 0.01;
  std::size_t iters = 1000;
  std::size_t burn_in = 200;
  std::uint64_t seed = 0;

  double effective_alpha() const {
    return alpha > 0 ? alpha : 50.0 / static_cast<double>(K);
  }
  void validate() const;
};

struct TopicModel {
  std::size_t K = 0;
  std::size_t V = 0;
  double alpha = 0;
  double beta = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> phi;    // K x V, rows sum to 1
  std::vector<std::vector<double>> theta;  // M x K, rows sum to 1
  // Modal sampled topic per token, aligned with the input documents; empty
  // documents have empty rows.
  std::vector<std::vector<std::size_t>> assignments;

  std::string to_json() const;
  static TopicModel from_json(const std::string& text);
};

struct PatternAssignment {
  std::size_t segment_id = 0;
  std::size_t dominant_topic = 0;
  std::vector<double> theta_row;
  bool assigned = false;  // false for empty documents
};

/// Exposed sampler so the count-table invariants stay checkable; fit_lda is
/// the normal entry point.
class CollapsedGibbs {
public:
  CollapsedGibbs(const std::vector<quantize::WordDocument>& docs,
                 std::size_t vocab_size, const LdaConfig& cfg);

  void sweep();
  void accumulate();  // add the current state to the phi/theta/mode tallies
  TopicModel finish() const;

  std::size_t total_tokens() const { return total_tokens_; }
  std::size_t topic_word_total() const;
  std::size_t doc_topic_total() const;

private:
  double alpha_ = 0;
  double beta_ = 0;
  std::size_t K_ = 0;
  std::size_t V_ = 0;
  const std::vector<quantize::WordDocument>* docs_ = nullptr;
  LdaConfig cfg_;
  std::mt19937_64 rng_;
  std::size_t total_tokens_ = 0;
  std::vector<std::vector<std::size_t>> z_;         // per doc, per token
  std::vector<std::vector<std::size_t>> doc_topic_;  // M x K
  std::vector<std::vector<std::size_t>> topic_word_; // K x V
  std::vector<std::size_t> topic_total_;             // K
  // accumulators
  std::size_t samples_ = 0;
  std::vector<std::vector<double>> phi_acc_, theta_acc_;
  std::vector<std::vector<std::uint32_t>> mode_count_;  // per doc, token*K + k
};

TopicModel fit_lda(const std::vector<quantize::WordDocument>& docs,
                   std::size_t vocab_size, const LdaConfig& cfg);

/// argmax of a document-topic row; ties to the lowest index.
std::size_t dominant(const std::vector<double>& theta_row);

/// Token log-likelihood of the corpus under the estimated phi/theta mixture;
/// the quantity compared across K in the topic-count sweep.
double corpus_log_likelihood(const TopicModel& model,
                             const std::vector<quantize::WordDocument>& docs);

std::vector<PatternAssignment> assign_patterns(
    const TopicModel& model, const std::vector<quantize::WordDocument>& docs);

}  // namespace drivemine::topics
