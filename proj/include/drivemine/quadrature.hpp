// Composite Gauss-Legendre quadrature over a fixed interval, with a
// log-space accumulator for integrands that underflow in linear space.
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace drivemine {

/// Nodes and weights for composite Gauss-Legendre quadrature on [a, b]:
/// `panels` equal subintervals, `order` points each (panels*order nodes).
class GaussLegendre {
public:
  GaussLegendre(double a, double b, std::size_t order, std::size_t panels);

  /// Composite rule with panels geometrically refined toward `a` (panel
  /// widths shrink by `ratio`); resolves integrable endpoint singularities
  /// like w^(1/2) without extra nodes.
  static GaussLegendre graded(double a, double b, std::size_t order,
                              std::size_t panels, double ratio = 0.25);

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& log_weights() const { return log_weights_; }

  /// log of integral of exp(log_f) over [a, b], evaluated with the
  /// max-log-subtraction trick so that huge negative log_f values are safe.
  double log_integrate(const std::function<double(double)>& log_f) const;

private:
  GaussLegendre() = default;

  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
};

}  // namespace drivemine
