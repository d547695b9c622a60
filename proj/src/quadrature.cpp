#include "drivemine/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "drivemine/errors.hpp"

namespace drivemine {

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
void legendre_rule(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    // Chebyshev-based initial guess for the i-th root
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace

namespace {

void fill_panels(const std::vector<double>& breaks, std::size_t order,
                 std::vector<double>& nodes, std::vector<double>& weights) {
  std::vector<double> x, w;
  legendre_rule(order, x, w);
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double lo = breaks[p], hi = breaks[p + 1];
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (std::size_t j = 0; j < order; ++j) {
      nodes.push_back(mid + half * x[j]);
      weights.push_back(half * w[j]);
    }
  }
}

}  // namespace

GaussLegendre::GaussLegendre(double a, double b, std::size_t order, std::size_t panels) {
  if (!(b > a) || order == 0 || panels == 0)
    throw ConfigError("invalid quadrature setup");
  std::vector<double> breaks;
  for (std::size_t p = 0; p <= panels; ++p)
    breaks.push_back(a + (b - a) * static_cast<double>(p) /
                             static_cast<double>(panels));
  nodes_.reserve(order * panels);
  weights_.reserve(order * panels);
  fill_panels(breaks, order, nodes_, weights_);
  log_weights_.reserve(weights_.size());
  for (double wt : weights_) log_weights_.push_back(std::log(wt));
}

GaussLegendre GaussLegendre::graded(double a, double b, std::size_t order,
                                    std::size_t panels, double ratio) {
  if (!(b > a) || order == 0 || panels == 0 || !(ratio > 0) || !(ratio < 1))
    throw ConfigError("invalid quadrature setup");
  GaussLegendre rule;
  std::vector<double> breaks{a};
  for (std::size_t p = panels - 1; p > 0; --p)
    breaks.push_back(a + (b - a) * std::pow(ratio, static_cast<double>(p)));
  breaks.push_back(b);
  rule.nodes_.reserve(order * panels);
  rule.weights_.reserve(order * panels);
  fill_panels(breaks, order, rule.nodes_, rule.weights_);
  rule.log_weights_.reserve(rule.weights_.size());
  for (double wt : rule.weights_) rule.log_weights_.push_back(std::log(wt));
  return rule;
}

double GaussLegendre::log_integrate(const std::function<double(double)>& log_f) const {
  const std::size_t n = nodes_.size();
  std::vector<double> terms(n);
  double max_term = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    terms[j] = log_f(nodes_[j]) + log_weights_[j];
    if (terms[j] > max_term) max_term = terms[j];
  }
  if (!std::isfinite(max_term)) return max_term;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

}  // namespace drivemine
