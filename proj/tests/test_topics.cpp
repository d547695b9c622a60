#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "drivemine/synth.hpp"
#include "drivemine/topics.hpp"

using namespace drivemine;
using namespace drivemine::topics;

namespace {

// Two topics over disjoint vocabulary halves.
std::vector<std::vector<double>> disjoint_phi(std::size_t v) {
  std::vector<std::vector<double>> phi(2, std::vector<double>(v, 0.0));
  for (std::size_t w = 0; w < v / 2; ++w) phi[0][w] = 2.0 / static_cast<double>(v);
  for (std::size_t w = v / 2; w < v; ++w) phi[1][w] = 2.0 / static_cast<double>(v);
  return phi;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
  return tv / 2.0;
}

}  // namespace

TEST_SUITE("topics") {

TEST_CASE("two disjoint-vocabulary topics are recovered") {
  const std::size_t V = 20;
  const auto phi_true = disjoint_phi(V);
  std::vector<std::vector<double>> theta_true;
  std::vector<std::size_t> lengths;
  for (std::size_t m = 0; m < 200; ++m) {
    const double p = (m % 2 == 0) ? 0.9 : 0.1;
    theta_true.push_back({p, 1.0 - p});
    lengths.push_back(100);
  }
  const auto docs = synth::gen_corpus(phi_true, theta_true, lengths, 99);

  LdaConfig cfg;
  cfg.K = 2;
  cfg.alpha = 1.0;
  cfg.iters = 400;
  cfg.burn_in = 100;
  cfg.seed = 9;
  const TopicModel model = fit_lda(docs, V, cfg);

  // best permutation alignment of the two topics
  const double direct = total_variation(model.phi[0], phi_true[0]) +
                        total_variation(model.phi[1], phi_true[1]);
  const double swapped = total_variation(model.phi[0], phi_true[1]) +
                         total_variation(model.phi[1], phi_true[0]);
  CHECK(std::min(direct, swapped) / 2.0 <= 0.05);
}

TEST_CASE("K=1 degenerates to smoothed corpus frequencies") {
  std::vector<quantize::WordDocument> docs(3);
  docs[0] = {0, {0, 0, 1}};
  docs[1] = {1, {1, 2}};
  docs[2] = {2, {0}};
  LdaConfig cfg;
  cfg.K = 1;
  cfg.beta = 0.01;
  cfg.iters = 10;
  cfg.burn_in = 1;
  const TopicModel model = fit_lda(docs, 3, cfg);
  for (const auto& row : model.theta) {
    REQUIRE(row.size() == 1);
    CHECK(row[0] == doctest::Approx(1.0));
  }
  // corpus counts: word0 x3, word1 x2, word2 x1 out of 6 tokens
  CHECK(model.phi[0][0] == doctest::Approx((3 + 0.01) / (6 + 0.03)));
  CHECK(model.phi[0][1] == doctest::Approx((2 + 0.01) / (6 + 0.03)));
  CHECK(model.phi[0][2] == doctest::Approx((1 + 0.01) / (6 + 0.03)));
}

TEST_CASE("error paths") {
  LdaConfig cfg;
  cfg.K = 2;
  CHECK_THROWS_AS(fit_lda({}, 10, cfg), EmptyCorpus);
  std::vector<quantize::WordDocument> empties(2);
  empties[0] = {0, {}};
  empties[1] = {1, {}};
  CHECK_THROWS_AS(fit_lda(empties, 10, cfg), EmptyCorpus);
  std::vector<quantize::WordDocument> oob(1);
  oob[0] = {0, {11}};
  CHECK_THROWS_AS(fit_lda(oob, 10, cfg), WordOutOfRange);
  LdaConfig bad = cfg;
  bad.burn_in = bad.iters;
  std::vector<quantize::WordDocument> ok(1);
  ok[0] = {0, {1}};
  CHECK_THROWS_AS(fit_lda(ok, 10, bad), ConfigError);
}

TEST_CASE("dominant picks the argmax with ties to the lowest index") {
  CHECK(dominant({0.7, 0.1, 0.1, 0.1}) == 0);
  CHECK(dominant({0.5, 0.5}) == 0);
  CHECK(dominant({0.1, 0.2, 0.7}) == 2);
  CHECK_THROWS_AS(dominant({0.5, 0.2}), MalformedDistribution);
  CHECK_THROWS_AS(dominant({}), MalformedDistribution);
}

TEST_CASE("count tables stay conserved across sweeps") {
  const auto phi_true = disjoint_phi(10);
  std::vector<std::vector<double>> theta_true(20, {0.5, 0.5});
  const auto docs = synth::gen_corpus(phi_true, theta_true,
                                      std::vector<std::size_t>(20, 30), 3);
  LdaConfig cfg;
  cfg.K = 3;
  cfg.iters = 10;
  cfg.burn_in = 2;
  CollapsedGibbs sampler(docs, 10, cfg);
  const std::size_t total = sampler.total_tokens();
  CHECK(total == 600);
  for (int sweep = 0; sweep < 10; ++sweep) {
    sampler.sweep();
    CHECK(sampler.topic_word_total() == total);
    CHECK(sampler.doc_topic_total() == total);
  }
}

TEST_CASE("phi and theta rows are strictly positive distributions") {
  const auto phi_true = disjoint_phi(12);
  std::vector<std::vector<double>> theta_true(15, {0.3, 0.7});
  const auto docs = synth::gen_corpus(phi_true, theta_true,
                                      std::vector<std::size_t>(15, 40), 4);
  LdaConfig cfg;
  cfg.K = 4;
  cfg.iters = 50;
  cfg.burn_in = 10;
  const TopicModel model = fit_lda(docs, 12, cfg);
  for (const auto& row : model.phi) {
    double sum = 0.0;
    for (double v : row) {
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (const auto& row : model.theta) {
    double sum = 0.0;
    for (double v : row) {
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("identical seed and corpus give identical models") {
  const auto phi_true = disjoint_phi(16);
  std::vector<std::vector<double>> theta_true(30, {0.6, 0.4});
  const auto docs = synth::gen_corpus(phi_true, theta_true,
                                      std::vector<std::size_t>(30, 25), 8);
  LdaConfig cfg;
  cfg.K = 2;
  cfg.iters = 60;
  cfg.burn_in = 20;
  cfg.seed = 1234;
  const TopicModel a = fit_lda(docs, 16, cfg);
  const TopicModel b = fit_lda(docs, 16, cfg);
  CHECK(a.phi == b.phi);
  CHECK(a.theta == b.theta);
  CHECK(a.assignments == b.assignments);
}

TEST_CASE("relabeling the vocabulary permutes phi columns only") {
  const std::size_t V = 10;
  const auto phi_true = disjoint_phi(V);
  std::vector<std::vector<double>> theta_true(25, {0.5, 0.5});
  const auto docs = synth::gen_corpus(phi_true, theta_true,
                                      std::vector<std::size_t>(25, 30), 6);
  std::vector<std::size_t> perm = {7, 3, 9, 1, 0, 8, 2, 6, 4, 5};
  auto relabeled = docs;
  for (auto& d : relabeled)
    for (auto& w : d.words) w = perm[w];

  LdaConfig cfg;
  cfg.K = 2;
  cfg.iters = 40;
  cfg.burn_in = 10;
  cfg.seed = 5;
  const TopicModel a = fit_lda(docs, V, cfg);
  const TopicModel b = fit_lda(relabeled, V, cfg);
  CHECK(a.theta == b.theta);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t w = 0; w < V; ++w)
      CHECK(a.phi[k][w] == doctest::Approx(b.phi[k][perm[w]]).epsilon(1e-12));
}

TEST_CASE("assign_patterns labels documents and skips empty ones") {
  const std::size_t V = 16;
  const auto phi_true = disjoint_phi(V);
  std::vector<std::vector<double>> theta_true;
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> truth;
  for (std::size_t m = 0; m < 120; ++m) {
    const std::size_t topic = m % 2;
    truth.push_back(topic);
    theta_true.push_back(topic == 0 ? std::vector<double>{0.95, 0.05}
                                    : std::vector<double>{0.05, 0.95});
    lengths.push_back(60);
  }
  auto docs = synth::gen_corpus(phi_true, theta_true, lengths, 17);
  docs.push_back({120, {}});  // one empty document

  LdaConfig cfg;
  cfg.K = 2;
  cfg.alpha = 1.0;
  cfg.iters = 300;
  cfg.burn_in = 100;
  cfg.seed = 17;
  const TopicModel model = fit_lda(docs, V, cfg);
  const auto assignments = assign_patterns(model, docs);
  REQUIRE(assignments.size() == 121);
  CHECK_FALSE(assignments[120].assigned);

  // align topics by the best of the two labelings, then require >= 90%
  std::size_t agree_direct = 0;
  for (std::size_t m = 0; m < 120; ++m)
    agree_direct += (assignments[m].dominant_topic == truth[m]);
  const std::size_t agree = std::max(agree_direct, 120 - agree_direct);
  CHECK(static_cast<double>(agree) / 120.0 >= 0.9);

  SUBCASE("single-document corpus gets one assignment") {
    std::vector<quantize::WordDocument> one(1);
    one[0] = {0, {1, 1, 2, 3}};
    LdaConfig c2;
    c2.K = 2;
    c2.iters = 20;
    c2.burn_in = 5;
    const TopicModel m2 = fit_lda(one, V, c2);
    const auto a2 = assign_patterns(m2, one);
    REQUIRE(a2.size() == 1);
    CHECK(a2[0].assigned);
    CHECK(a2[0].dominant_topic == dominant(m2.theta[0]));
  }
}

TEST_CASE("corpus log-likelihood is finite and improves with the right K") {
  const std::size_t V = 20;
  const auto phi_true = disjoint_phi(V);
  std::vector<std::vector<double>> theta_true;
  for (std::size_t m = 0; m < 60; ++m)
    theta_true.push_back(m % 2 == 0 ? std::vector<double>{0.95, 0.05}
                                    : std::vector<double>{0.05, 0.95});
  const auto docs = synth::gen_corpus(phi_true, theta_true,
                                      std::vector<std::size_t>(60, 80), 29);
  LdaConfig cfg;
  cfg.alpha = 1.0;
  cfg.iters = 200;
  cfg.burn_in = 50;
  cfg.seed = 29;
  cfg.K = 1;
  const double ll1 = corpus_log_likelihood(fit_lda(docs, V, cfg), docs);
  cfg.K = 2;
  const double ll2 = corpus_log_likelihood(fit_lda(docs, V, cfg), docs);
  CHECK(std::isfinite(ll1));
  CHECK(ll2 > ll1);
}

}  // TEST_SUITE
