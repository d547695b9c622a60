#include "drivemine/stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

namespace drivemine::stats {

namespace {

double chi_square_survival(double x, double df) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

TestResult make_result(std::string name, double statistic, double p) {
  TestResult r;
  r.name = std::move(name);
  r.statistic = statistic;
  r.p_value = std::clamp(p, 0.0, 1.0);
  r.significant_at_05 = r.p_value < 0.05;
  return r;
}

}  // namespace

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // theta-function form of the CDF converges fast for small lambda
    const double y = std::exp(-std::numbers::pi * std::numbers::pi /
                              (8.0 * lambda * lambda));
    const double cdf = std::sqrt(2.0 * std::numbers::pi) / lambda *
                       (y + std::pow(y, 9) + std::pow(y, 25) + std::pow(y, 49));
    return 1.0 - cdf;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return 2.0 * s;
}

TestResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw EmptySample("KS needs non-empty samples");
  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= v) ++i;
    while (j < sb.size() && sb[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }

  const double ne = na * nb / (na + nb);
  const double p = (d == 0.0) ? 1.0 : kolmogorov_survival(std::sqrt(ne) * d);
  return make_result("ks_two_sample", d, p);
}

TestResult chi_square_equal(std::size_t count_a, std::size_t count_b) {
  const double total = static_cast<double>(count_a + count_b);
  if (total <= 0.0) throw ZeroTotal("chi-square needs a positive total");
  const double expected = total / 2.0;
  const double da = static_cast<double>(count_a) - expected;
  const double db = static_cast<double>(count_b) - expected;
  const double chi2 = da * da / expected + db * db / expected;
  return make_result("chi_square_equal", chi2, chi_square_survival(chi2, 1.0));
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw TooFewGroups("Kruskal-Wallis needs >= 2 groups");
  std::size_t total = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw EmptySample("Kruskal-Wallis group is empty");
    total += g.size();
  }
  if (total < 3) throw TooFewGroups("Kruskal-Wallis needs >= 3 observations");

  struct Tagged {
    double value;
    std::size_t group;
  };
  std::vector<Tagged> pooled;
  pooled.reserve(total);
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (double v : groups[g]) pooled.push_back({v, g});
  std::sort(pooled.begin(), pooled.end(),
            [](const Tagged& x, const Tagged& y) { return x.value < y.value; });

  // midranks plus the tie-correction tally
  std::vector<double> rank_sum(groups.size(), 0.0);
  double tie_correction = 0.0;
  std::size_t idx = 0;
  while (idx < pooled.size()) {
    std::size_t run_end = idx;
    while (run_end + 1 < pooled.size() &&
           pooled[run_end + 1].value == pooled[idx].value)
      ++run_end;
    const double midrank =
        0.5 * (static_cast<double>(idx + 1) + static_cast<double>(run_end + 1));
    const double t = static_cast<double>(run_end - idx + 1);
    tie_correction += t * t * t - t;
    for (std::size_t k = idx; k <= run_end; ++k)
      rank_sum[pooled[k].group] += midrank;
    idx = run_end + 1;
  }

  const double n = static_cast<double>(total);
  double h = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g)
    h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
  const double c = 1.0 - tie_correction / (n * n * n - n);
  if (c > 0.0) h /= c;

  const double df = static_cast<double>(groups.size()) - 1.0;
  return make_result("kruskal_wallis", h, chi_square_survival(h, df));
}

TestResult sign_test(const std::vector<double>& sample) {
  if (sample.empty()) throw EmptySample("sign test needs a non-empty sample");
  std::size_t pos = 0, neg = 0;
  for (double v : sample) {
    if (v > 0.0) ++pos;
    if (v < 0.0) ++neg;
  }
  if (pos + neg == 0) return make_result("sign_test", 0.0, 1.0);
  TestResult inner = chi_square_equal(pos, neg);
  return make_result("sign_test", inner.statistic, inner.p_value);
}

Summary describe(const std::vector<double>& sample) {
  if (sample.empty()) throw EmptySample("describe needs a non-empty sample");
  std::vector<double> sorted = sample;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  auto quantile = [&](double q) {
    // type-7: linear interpolation between closest ranks
    const double h = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  };

  Summary s;
  s.n = n;
  double mean = 0.0;
  for (double v : sorted) mean += v;
  s.mean = mean / static_cast<double>(n);
  double ss = 0.0;
  for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
  s.sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  s.p25 = quantile(0.25);
  s.median = quantile(0.5);
  s.p75 = quantile(0.75);
  return s;
}

}  // namespace drivemine::stats
