#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "drivemine/ingest.hpp"
#include "drivemine/stats.hpp"
#include "drivemine/synth.hpp"

using namespace drivemine;
using namespace drivemine::synth;

TEST_SUITE("synth") {

TEST_CASE("gen_piecewise with zero noise is exactly piecewise constant") {
  SynthSpec spec;
  spec.n = 20;
  spec.change_points = {5, 12};
  spec.block_means = {{1.0}, {-2.0}, {4.0}};
  spec.sigma = 0.0;
  const auto out = gen_piecewise(spec);
  REQUIRE(out.matrix.rows() == 20);
  for (std::size_t i = 0; i < 20; ++i) {
    const double expect = i < 5 ? 1.0 : (i < 12 ? -2.0 : 4.0);
    CHECK(out.matrix.values(static_cast<Eigen::Index>(i), 0) == expect);
  }
  CHECK(out.change_points == spec.change_points);
}

TEST_CASE("gen_piecewise block means concentrate around the truth") {
  SynthSpec spec;
  spec.n = 3000;
  spec.change_points = {800, 1500, 2400};
  spec.block_means = {{0.0, 5.0}, {3.0, 5.0}, {-1.0, 0.0}, {2.0, -2.0}};
  spec.sigma = 1.0;
  spec.seed = 77;
  const auto out = gen_piecewise(spec);

  std::vector<std::size_t> bounds = {0, 800, 1500, 2400, 3000};
  for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
    const auto len = static_cast<Eigen::Index>(bounds[b + 1] - bounds[b]);
    for (int col = 0; col < 2; ++col) {
      const double mean = out.matrix.values
                              .block(static_cast<Eigen::Index>(bounds[b]), col,
                                     len, 1)
                              .mean();
      const double limit = 3.0 / std::sqrt(static_cast<double>(len));
      CHECK(std::abs(mean - spec.block_means[b][static_cast<std::size_t>(col)]) <
            limit);
    }
  }
}

TEST_CASE("gen_piecewise is reproducible and validates its spec") {
  SynthSpec spec;
  spec.n = 100;
  spec.change_points = {50};
  spec.block_means = {{0.0}, {1.0}};
  spec.seed = 5;
  const auto a = gen_piecewise(spec);
  const auto b = gen_piecewise(spec);
  CHECK(a.matrix.values == b.matrix.values);

  SynthSpec bad = spec;
  bad.change_points = {50, 30};
  CHECK_THROWS_AS(gen_piecewise(bad), ConfigError);
  bad.change_points = {150};
  CHECK_THROWS_AS(gen_piecewise(bad), ConfigError);
}

TEST_CASE("gen_corpus one-hot distributions repeat a single word") {
  const std::vector<std::vector<double>> phi = {{1.0, 0.0, 0.0},
                                                {0.0, 0.0, 1.0}};
  const std::vector<std::vector<double>> theta = {{1.0, 0.0}, {0.0, 1.0}};
  const auto docs = gen_corpus(phi, theta, {10, 10}, 3);
  REQUIRE(docs.size() == 2);
  for (std::size_t w : docs[0].words) CHECK(w == 0);
  for (std::size_t w : docs[1].words) CHECK(w == 2);
}

TEST_CASE("gen_corpus long-document frequencies approach theta * phi") {
  const std::vector<std::vector<double>> phi = {{0.6, 0.3, 0.1, 0.0},
                                                {0.0, 0.1, 0.3, 0.6}};
  const std::vector<std::vector<double>> theta = {{0.7, 0.3}};
  const auto docs = gen_corpus(phi, theta, {10000}, 11);
  std::vector<double> freq(4, 0.0);
  for (std::size_t w : docs[0].words) freq[w] += 1.0 / 10000.0;
  for (std::size_t w = 0; w < 4; ++w) {
    const double expect = 0.7 * phi[0][w] + 0.3 * phi[1][w];
    CHECK(std::abs(freq[w] - expect) < 0.02);
  }
}

TEST_CASE("gen_corpus rejects malformed distributions") {
  CHECK_THROWS_AS(gen_corpus({{0.5, 0.2}}, {{1.0}}, {5}, 1),
                  MalformedDistribution);
  CHECK_THROWS_AS(gen_corpus({{1.0}}, {{0.9, 0.2}}, {5}, 1),
                  MalformedDistribution);
  CHECK_THROWS_AS(gen_corpus({{1.0}}, {{1.0}}, {5, 5}, 1),
                  MalformedDistribution);
}

TEST_CASE("gen_markov identity matrix freezes the chain") {
  const std::vector<std::vector<double>> identity = {{1.0, 0.0}, {0.0, 1.0}};
  const auto seq = gen_markov(identity, 50, 2);
  for (std::size_t i = 1; i < seq.size(); ++i)
    CHECK(seq.symbols[i] == seq.symbols[0]);
}

TEST_CASE("gen_markov empirical transitions converge to the generator") {
  const std::vector<std::vector<double>> P = {{0.7, 0.2, 0.1},
                                              {0.1, 0.8, 0.1},
                                              {0.3, 0.3, 0.4}};
  const auto seq = gen_markov(P, 100000, 4);
  std::vector<std::vector<double>> counts(3, std::vector<double>(3, 0.0));
  std::vector<double> row_totals(3, 0.0);
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
    counts[seq.symbols[i]][seq.symbols[i + 1]] += 1.0;
    row_totals[seq.symbols[i]] += 1.0;
  }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(std::abs(counts[i][j] / row_totals[i] - P[i][j]) < 0.02);

  const auto again = gen_markov(P, 1000, 4);
  const auto again2 = gen_markov(P, 1000, 4);
  CHECK(again.symbols == again2.symbols);
  CHECK_THROWS_AS(gen_markov({{0.5, 0.2}}, 10, 1), MalformedDistribution);
}

TEST_CASE("gen_coupled_session truth is consistent with the emitted data") {
  SynthSpec spec;
  spec.seed = 21;
  spec.duration_s = 300;
  spec.kin_rate_hz = 4;
  spec.segment_count = 12;
  const auto coupled = gen_coupled_session(spec);
  const auto& truth = coupled.truth;
  REQUIRE(truth.behavior.size() == 12);
  REQUIRE(truth.segment_starts.size() == 12);

  // kinematic block means sit near the pattern means of the truth labels
  const SynthSpec resolved = spec.with_defaults();
  const auto& ax = coupled.session.channel("ax");
  for (std::size_t s = 0; s < 12; ++s) {
    const double t0 = truth.segment_starts[s];
    const double t1 =
        s + 1 < 12 ? truth.segment_starts[s + 1] : spec.duration_s;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < ax.size(); ++i) {
      if (ax.times[i] >= t0 && ax.times[i] < t1) {
        sum += ax.values[i];
        ++count;
      }
    }
    REQUIRE(count > 0);
    const double mean = sum / static_cast<double>(count);
    const double expect = resolved.pattern_means[truth.behavior[s]][0];
    CHECK(std::abs(mean - expect) < 4.0 / std::sqrt(static_cast<double>(count)));
  }

  // adjacent true segments always change pattern
  for (std::size_t s = 1; s < 12; ++s)
    CHECK(truth.behavior[s] != truth.behavior[s - 1]);

  // determinism
  const auto again = gen_coupled_session(spec);
  CHECK(again.truth.behavior == truth.behavior);
  CHECK(again.session.channel("hr").values == coupled.session.channel("hr").values);
}

TEST_CASE("identity-like coupling reproduces its fractions in the truth") {
  SynthSpec spec;
  spec.seed = 33;
  spec.duration_s = 1200;
  spec.kin_rate_hz = 2;
  spec.hr_rate_hz = 2;
  spec.segment_count = 40;
  const auto coupled = gen_coupled_session(spec);
  const auto& truth = coupled.truth;
  const SynthSpec resolved = spec.with_defaults();

  auto segment_of = [&](double t) {
    std::size_t s = 0;
    while (s + 1 < truth.segment_starts.size() &&
           t >= truth.segment_starts[s + 1])
      ++s;
    return s;
  };
  std::vector<std::vector<double>> counts(4, std::vector<double>(2, 0.0));
  for (std::size_t i = 0; i < truth.hr_times.size(); ++i) {
    const std::size_t b = truth.behavior[segment_of(truth.hr_times[i])];
    counts[b][truth.hr_state[i]] += 1.0;
  }
  for (std::size_t b = 0; b < 4; ++b) {
    const double total = counts[b][0] + counts[b][1];
    if (total < 50) continue;
    CHECK(std::abs(counts[b][1] / total - resolved.coupling[b][1]) < 0.08);
  }
}

TEST_CASE("uniform coupling leaves state ratios unremarkable") {
  std::size_t quiet = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthSpec spec;
    spec.seed = 400 + seed;
    spec.duration_s = 600;
    spec.kin_rate_hz = 2;
    spec.segment_count = 16;
    spec.coupling = {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
    const auto coupled = gen_coupled_session(spec);
    std::size_t abnormal = 0;
    for (std::size_t s : coupled.truth.hr_state) abnormal += s;
    const auto test = stats::chi_square_equal(
        abnormal, coupled.truth.hr_state.size() - abnormal);
    if (!test.significant_at_05) ++quiet;
  }
  CHECK(quiet >= 18);  // >= 90% of seeds
}

TEST_CASE("write_session_csv round-trips through the ingest loader") {
  SynthSpec spec;
  spec.seed = 55;
  spec.duration_s = 60;
  spec.kin_rate_hz = 4;
  spec.segment_count = 4;
  const auto coupled = gen_coupled_session(spec);
  const auto dir = std::filesystem::temp_directory_path() / "dm_synth_roundtrip";
  std::filesystem::remove_all(dir);
  write_session_csv(coupled.session, dir);
  write_truth_json(coupled.truth, dir / "truth.json");

  const Session loaded = load_session_dir(dir, "p");
  for (const auto& name : {"ax", "ay", "wz", "hr", "gaze_x", "gaze_y", "speed"}) {
    REQUIRE(loaded.has_channel(name));
    const auto& a = coupled.session.channel(name);
    const auto& b = loaded.channel(name);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.times[i] == b.times[i]);
      CHECK(a.values[i] == b.values[i]);
    }
  }
  CHECK(std::filesystem::exists(dir / "truth.json"));
}

TEST_CASE("coupled spec round-trips through JSON") {
  SynthSpec spec;
  spec.seed = 9;
  spec.segment_count = 7;
  spec.coupling = {{0.9, 0.1}, {0.1, 0.9}, {0.5, 0.5}, {0.2, 0.8}};
  const auto back = SynthSpec::from_json(spec.to_json());
  CHECK(back.seed == 9);
  CHECK(back.segment_count == 7);
  CHECK(back.coupling == spec.coupling);
}

}  // TEST_SUITE
