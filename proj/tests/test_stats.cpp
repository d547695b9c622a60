#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "drivemine/stats.hpp"

using namespace drivemine;
using namespace drivemine::stats;

namespace {

// Brute-force KS statistic: scan |ECDF_a - ECDF_b| at every pooled value.
double ks_brute_force(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  double d = 0.0;
  for (double v : pooled) {
    const auto below = [v](const std::vector<double>& s) {
      std::size_t c = 0;
      for (double x : s) c += (x <= v);
      return static_cast<double>(c) / static_cast<double>(s.size());
    };
    d = std::max(d, std::abs(below(a) - below(b)));
  }
  return d;
}

std::vector<double> normal_sample(double mu, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(mu, 1.0);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("ks_two_sample basics") {
  const std::vector<double> s = {1, 2, 3, 4};
  const auto same = ks_two_sample(s, s);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  CHECK_FALSE(same.significant_at_05);

  const auto disjoint = ks_two_sample({1, 2, 3, 4}, {5, 6, 7, 8});
  CHECK(disjoint.statistic == 1.0);

  CHECK_THROWS_AS(ks_two_sample({}, s), EmptySample);
  CHECK_THROWS_AS(ks_two_sample(s, {}), EmptySample);
}

TEST_CASE("ks statistic agrees exactly with the brute-force scan") {
  const auto a = normal_sample(0.0, 1000, 11);
  const auto b = normal_sample(1.0, 1000, 12);
  const auto r = ks_two_sample(a, b);
  CHECK(r.statistic == ks_brute_force(a, b));
  CHECK(r.p_value < 0.0001);
}

TEST_CASE("ks is symmetric and p-values stay in [0,1]") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::size_t> len(1, 80);
  std::normal_distribution<double> val(0.0, 1.0);
  std::uniform_int_distribution<int> rounder(0, 1);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> a(len(rng)), b(len(rng));
    for (auto& v : a) v = val(rng);
    for (auto& v : b) v = val(rng);
    if (rounder(rng)) {  // inject ties
      for (auto& v : a) v = std::round(v * 4) / 4;
      for (auto& v : b) v = std::round(v * 4) / 4;
    }
    const auto ab = ks_two_sample(a, b);
    const auto ba = ks_two_sample(b, a);
    CHECK(ab.statistic == ba.statistic);
    CHECK(ab.p_value == ba.p_value);
    CHECK(ab.statistic == ks_brute_force(a, b));
    CHECK(ab.p_value >= 0.0);
    CHECK(ab.p_value <= 1.0);
  }
}

TEST_CASE("chi_square_equal hand values") {
  const auto even = chi_square_equal(50, 50);
  CHECK(even.statistic == 0.0);
  CHECK(even.p_value == 1.0);

  const auto skewed = chi_square_equal(75, 25);
  CHECK(skewed.statistic == doctest::Approx(25.0));
  CHECK(skewed.p_value == doctest::Approx(5.7e-7).epsilon(0.02));
  CHECK(skewed.significant_at_05);

  CHECK(chi_square_equal(0, 100).statistic == doctest::Approx(100.0));
  CHECK_THROWS_AS(chi_square_equal(0, 0), ZeroTotal);
}

TEST_CASE("kruskal_wallis hand values") {
  const auto identical = kruskal_wallis({{1, 2, 3}, {1, 2, 3}});
  CHECK(identical.statistic == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(identical.p_value == doctest::Approx(1.0));

  const auto separated = kruskal_wallis({{1, 2, 3}, {4, 5, 6}});
  CHECK(std::abs(separated.statistic - 3.857) <= 0.001);

  CHECK_THROWS_AS(kruskal_wallis({{1.0, 2.0}}), TooFewGroups);
  CHECK_THROWS_AS(kruskal_wallis({{1.0}, {}}), EmptySample);
}

TEST_CASE("kruskal_wallis is invariant under monotone transforms") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> val(0.0, 2.0);
  std::vector<std::vector<double>> groups(3);
  for (std::size_t g = 0; g < 3; ++g)
    for (int i = 0; i < 25; ++i)
      groups[g].push_back(val(rng) + static_cast<double>(g));
  const double h0 = kruskal_wallis(groups).statistic;

  auto transformed = groups;
  for (auto& g : transformed)
    for (auto& v : g) v = std::exp(0.5 * v);  // strictly increasing
  CHECK(kruskal_wallis(transformed).statistic == doctest::Approx(h0).epsilon(1e-12));

  for (auto& g : transformed)
    for (auto& v : g) v = v * v * v + 2.0;  // still strictly increasing on v>0
  CHECK(kruskal_wallis(transformed).statistic == doctest::Approx(h0).epsilon(1e-12));
}

TEST_CASE("describe hand values") {
  const auto s = describe({1, 2, 3, 4, 5});
  CHECK(s.mean == doctest::Approx(3.0));
  CHECK(s.median == doctest::Approx(3.0));
  CHECK(s.p25 == doctest::Approx(2.0));
  CHECK(s.p75 == doctest::Approx(4.0));
  CHECK(s.n == 5);

  const auto flat = describe({7, 7, 7});
  CHECK(flat.sd == 0.0);
  CHECK(flat.p25 == 7.0);
  CHECK(flat.median == 7.0);
  CHECK(flat.p75 == 7.0);

  const auto single = describe({42});
  CHECK(single.mean == 42.0);
  CHECK(single.median == 42.0);
  CHECK(single.sd == 0.0);

  CHECK_THROWS_AS(describe({}), EmptySample);
}

TEST_CASE("describe quantiles interpolate linearly") {
  // n = 4: p25 at h = 0.75 between ranks 0 and 1
  const auto s = describe({10, 20, 30, 40});
  CHECK(s.p25 == doctest::Approx(17.5));
  CHECK(s.median == doctest::Approx(25.0));
  CHECK(s.p75 == doctest::Approx(32.5));
}

TEST_CASE("describe mean is invariant under concatenating copies") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> val(3.0, 5.0);
  std::vector<double> s(37);
  for (auto& v : s) v = val(rng);
  std::vector<double> tripled;
  for (int k = 0; k < 3; ++k) tripled.insert(tripled.end(), s.begin(), s.end());
  CHECK(describe(tripled).mean == doctest::Approx(describe(s).mean).epsilon(1e-12));
  CHECK(describe(tripled).median == doctest::Approx(describe(s).median).epsilon(1e-12));
}

TEST_CASE("sign test flags one-sided samples and passes balanced ones") {
  std::vector<double> mostly_positive;
  for (int i = 0; i < 100; ++i) mostly_positive.push_back(i < 90 ? 1.0 : -1.0);
  CHECK(sign_test(mostly_positive).significant_at_05);

  std::vector<double> balanced;
  for (int i = 0; i < 100; ++i) balanced.push_back(i % 2 == 0 ? 1.0 : -1.0);
  CHECK_FALSE(sign_test(balanced).significant_at_05);

  CHECK(sign_test({0.0, 0.0}).p_value == 1.0);  // all zeros carry no sign
  CHECK_THROWS_AS(sign_test({}), EmptySample);
}

TEST_CASE("statistics are non-negative and p-values bounded") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> val(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> groups(2 + trial % 3);
    for (auto& g : groups) {
      g.resize(5 + static_cast<std::size_t>(trial));
      for (auto& v : g) v = val(rng);
    }
    const auto kw = kruskal_wallis(groups);
    CHECK(kw.statistic >= -1e-9);
    CHECK(kw.p_value >= 0.0);
    CHECK(kw.p_value <= 1.0);
    CHECK(kw.significant_at_05 == (kw.p_value < 0.05));
  }
}

}  // TEST_SUITE
