// Nonparametric tests and descriptive summaries used to vet detected
// patterns: two-sample Kolmogorov-Smirnov, equal-ratio chi-square,
// Kruskal-Wallis with tie correction, quartile summaries and a one-sample
// sign test for the style split.
#pragma once

#include <string>
#include <vector>

#include "drivemine/errors.hpp"

namespace drivemine::stats {

struct TestResult {
  std::string name;
  double statistic = 0;
  double p_value = 1;
  bool significant_at_05 = false;
};

struct Summary {
  double mean = 0;
  double sd = 0;  // n-1 denominator
  double p25 = 0;
  double median = 0;
  double p75 = 0;
  std::size_t n = 0;
};

/// D = sup |ECDF_a - ECDF_b|; p-value from the asymptotic Kolmogorov
/// distribution at sqrt(n_a n_b / (n_a + n_b)) * D.
TestResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b);

/// Chi-square test of two counts against an equal split, df = 1.
TestResult chi_square_equal(std::size_t count_a, std::size_t count_b);

/// Kruskal-Wallis H with midranks and tie correction, df = groups - 1.
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

/// Two-sided sign test of the sample median against zero (zeros dropped,
/// large-sample chi-square approximation).
TestResult sign_test(const std::vector<double>& sample);

/// Mean, n-1 standard deviation and linear-interpolation quartiles.
Summary describe(const std::vector<double>& sample);

/// Survival function of the asymptotic Kolmogorov distribution.
double kolmogorov_survival(double lambda);

}  // namespace drivemine::stats
