#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "shorttime/errors.hpp"

namespace shorttime {

// Composite Simpson rule on [0, delta] with an odd node count M >= 9.
struct QuadratureRule {
  double delta = 0.0;
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }

  template <class F>
  [[nodiscard]] double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) s += weights[j] * f(nodes[j]);
    return s;
  }
};

[[nodiscard]] inline QuadratureRule simpson_rule(std::size_t m, double delta) {
  if (m < 9 || m % 2 == 0) {
    throw SamplingError("quadrature needs an odd node count >= 9, got " + std::to_string(m));
  }
  if (!(delta > 0.0)) throw SamplingError("quadrature interval must have positive length");
  QuadratureRule q;
  q.delta = delta;
  q.nodes.resize(m);
  q.weights.resize(m);
  const double h = delta / static_cast<double>(m - 1);
  for (std::size_t j = 0; j < m; ++j) {
    q.nodes[j] = delta * static_cast<double>(j) / static_cast<double>(m - 1);
    q.weights[j] = (j == 0 || j == m - 1) ? h / 3.0 : (j % 2 == 1 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
  }
  return q;
}

// Enough nodes to follow the fastest phase on band N across its window.
[[nodiscard]] inline std::size_t default_node_count(long n) {
  return std::max<std::size_t>(129, 8 * static_cast<std::size_t>(n) + 1);
}

}  // namespace shorttime
