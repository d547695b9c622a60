#include "drivemine/topics.hpp"

#include <cmath>
#include <json.hpp>
#include <random>

namespace drivemine::topics {

void LdaConfig::validate() const {
  if (K < 1) throw ConfigError("LDA needs K >= 1");
  if (alpha < 0) throw ConfigError("alpha must be positive (or 0 for default)");
  if (!(beta > 0)) throw ConfigError("beta must be positive");
  if (iters == 0) throw ConfigError("iters must be positive");
  if (burn_in >= iters) throw ConfigError("burn_in must be smaller than iters");
}

CollapsedGibbs::CollapsedGibbs(const std::vector<quantize::WordDocument>& docs,
                               std::size_t vocab_size, const LdaConfig& cfg)
    : alpha_(cfg.effective_alpha()),
      beta_(cfg.beta),
      K_(cfg.K),
      V_(vocab_size),
      docs_(&docs),
      cfg_(cfg),
      rng_(cfg.seed) {
  cfg.validate();
  if (vocab_size == 0) throw ConfigError("vocab_size must be positive");

  const std::size_t M = docs.size();
  bool any_tokens = false;
  for (const auto& doc : docs) {
    for (std::size_t w : doc.words)
      if (w >= V_)
        throw WordOutOfRange("word id " + std::to_string(w) +
                             " >= vocab size " + std::to_string(V_));
    any_tokens |= !doc.words.empty();
  }
  if (M == 0 || !any_tokens) throw EmptyCorpus("no non-empty documents");

  z_.resize(M);
  doc_topic_.assign(M, std::vector<std::size_t>(K_, 0));
  topic_word_.assign(K_, std::vector<std::size_t>(V_, 0));
  topic_total_.assign(K_, 0);
  std::uniform_int_distribution<std::size_t> pick(0, K_ - 1);
  for (std::size_t m = 0; m < M; ++m) {
    z_[m].resize(docs[m].words.size());
    for (std::size_t i = 0; i < docs[m].words.size(); ++i) {
      const std::size_t k = pick(rng_);
      z_[m][i] = k;
      ++doc_topic_[m][k];
      ++topic_word_[k][docs[m].words[i]];
      ++topic_total_[k];
      ++total_tokens_;
    }
  }

  phi_acc_.assign(K_, std::vector<double>(V_, 0.0));
  theta_acc_.assign(M, std::vector<double>(K_, 0.0));
  mode_count_.resize(M);
  for (std::size_t m = 0; m < M; ++m)
    mode_count_[m].assign(docs[m].words.size() * K_, 0);
}

void CollapsedGibbs::sweep() {
  const double v_beta = static_cast<double>(V_) * beta_;
  std::vector<double> probs(K_);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t m = 0; m < z_.size(); ++m) {
    const auto& words = (*docs_)[m].words;
    for (std::size_t i = 0; i < words.size(); ++i) {
      const std::size_t w = words[i];
      const std::size_t old_k = z_[m][i];
      --doc_topic_[m][old_k];
      --topic_word_[old_k][w];
      --topic_total_[old_k];

      double total = 0.0;
      for (std::size_t k = 0; k < K_; ++k) {
        probs[k] = (static_cast<double>(doc_topic_[m][k]) + alpha_) *
                   (static_cast<double>(topic_word_[k][w]) + beta_) /
                   (static_cast<double>(topic_total_[k]) + v_beta);
        total += probs[k];
      }
      double u = unif(rng_) * total;
      std::size_t new_k = K_ - 1;
      for (std::size_t k = 0; k < K_; ++k) {
        u -= probs[k];
        if (u <= 0.0) {
          new_k = k;
          break;
        }
      }
      z_[m][i] = new_k;
      ++doc_topic_[m][new_k];
      ++topic_word_[new_k][w];
      ++topic_total_[new_k];
    }
  }
}

void CollapsedGibbs::accumulate() {
  const double v_beta = static_cast<double>(V_) * beta_;
  const double k_alpha = static_cast<double>(K_) * alpha_;
  for (std::size_t k = 0; k < K_; ++k) {
    const double denom = static_cast<double>(topic_total_[k]) + v_beta;
    for (std::size_t v = 0; v < V_; ++v)
      phi_acc_[k][v] +=
          (static_cast<double>(topic_word_[k][v]) + beta_) / denom;
  }
  for (std::size_t m = 0; m < theta_acc_.size(); ++m) {
    const double nd = static_cast<double>((*docs_)[m].words.size());
    const double denom = nd + k_alpha;
    for (std::size_t k = 0; k < K_; ++k)
      theta_acc_[m][k] +=
          (static_cast<double>(doc_topic_[m][k]) + alpha_) / denom;
    for (std::size_t i = 0; i < z_[m].size(); ++i)
      ++mode_count_[m][i * K_ + z_[m][i]];
  }
  ++samples_;
}

std::size_t CollapsedGibbs::topic_word_total() const {
  std::size_t total = 0;
  for (const auto& row : topic_word_)
    for (std::size_t c : row) total += c;
  return total;
}

std::size_t CollapsedGibbs::doc_topic_total() const {
  std::size_t total = 0;
  for (const auto& row : doc_topic_)
    for (std::size_t c : row) total += c;
  return total;
}

TopicModel CollapsedGibbs::finish() const {
  TopicModel model;
  model.K = K_;
  model.V = V_;
  model.alpha = alpha_;
  model.beta = beta_;
  model.seed = cfg_.seed;
  const double s = static_cast<double>(samples_);
  model.phi.assign(K_, std::vector<double>(V_, 0.0));
  for (std::size_t k = 0; k < K_; ++k)
    for (std::size_t v = 0; v < V_; ++v) model.phi[k][v] = phi_acc_[k][v] / s;
  model.theta.assign(theta_acc_.size(), std::vector<double>(K_, 0.0));
  for (std::size_t m = 0; m < theta_acc_.size(); ++m)
    for (std::size_t k = 0; k < K_; ++k)
      model.theta[m][k] = theta_acc_[m][k] / s;

  model.assignments.resize(mode_count_.size());
  for (std::size_t m = 0; m < mode_count_.size(); ++m) {
    const std::size_t n_tok = mode_count_[m].size() / K_;
    model.assignments[m].resize(n_tok);
    for (std::size_t i = 0; i < n_tok; ++i) {
      std::size_t best = 0;
      std::uint32_t best_c = mode_count_[m][i * K_];
      for (std::size_t k = 1; k < K_; ++k) {
        if (mode_count_[m][i * K_ + k] > best_c) {
          best_c = mode_count_[m][i * K_ + k];
          best = k;
        }
      }
      model.assignments[m][i] = best;
    }
  }
  return model;
}

TopicModel fit_lda(const std::vector<quantize::WordDocument>& docs,
                   std::size_t vocab_size, const LdaConfig& cfg) {
  CollapsedGibbs sampler(docs, vocab_size, cfg);
  for (std::size_t it = 0; it < cfg.iters; ++it) {
    sampler.sweep();
    if (it >= cfg.burn_in) sampler.accumulate();
  }
  return sampler.finish();
}

std::size_t dominant(const std::vector<double>& theta_row) {
  if (theta_row.empty()) throw MalformedDistribution("empty topic row");
  double sum = 0.0;
  for (double v : theta_row) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw MalformedDistribution("topic row has invalid entries");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw MalformedDistribution("topic row does not sum to 1");
  std::size_t best = 0;
  for (std::size_t k = 1; k < theta_row.size(); ++k)
    if (theta_row[k] > theta_row[best]) best = k;
  return best;
}

double corpus_log_likelihood(const TopicModel& model,
                             const std::vector<quantize::WordDocument>& docs) {
  if (model.theta.size() != docs.size())
    throw DimensionMismatch("model fitted on a different document count");
  double ll = 0.0;
  for (std::size_t m = 0; m < docs.size(); ++m) {
    for (std::size_t w : docs[m].words) {
      if (w >= model.V) throw WordOutOfRange("word id exceeds vocabulary");
      double p = 0.0;
      for (std::size_t k = 0; k < model.K; ++k)
        p += model.theta[m][k] * model.phi[k][w];
      ll += std::log(std::max(p, 1e-300));
    }
  }
  return ll;
}

std::vector<PatternAssignment> assign_patterns(
    const TopicModel& model, const std::vector<quantize::WordDocument>& docs) {
  if (model.theta.size() != docs.size())
    throw DimensionMismatch("model fitted on a different document count");
  std::vector<PatternAssignment> out(docs.size());
  for (std::size_t m = 0; m < docs.size(); ++m) {
    out[m].segment_id = docs[m].segment_id;
    out[m].theta_row = model.theta[m];
    if (docs[m].empty()) {
      out[m].assigned = false;
      continue;
    }
    out[m].assigned = true;
    out[m].dominant_topic = dominant(model.theta[m]);
  }
  return out;
}

std::string TopicModel::to_json() const {
  nlohmann::json j;
  j["K"] = K;
  j["V"] = V;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["seed"] = seed;
  j["phi"] = phi;
  j["theta"] = theta;
  return j.dump(2);
}

TopicModel TopicModel::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  TopicModel m;
  m.K = j.at("K").get<std::size_t>();
  m.V = j.at("V").get<std::size_t>();
  m.alpha = j.at("alpha").get<double>();
  m.beta = j.at("beta").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.phi = j.at("phi").get<std::vector<std::vector<double>>>();
  m.theta = j.at("theta").get<std::vector<std::vector<double>>>();
  return m;
}

}  // namespace drivemine::topics
