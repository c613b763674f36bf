#pragma once

#include <vector>

namespace flexsyn {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss–Legendre rule mapped to [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

/// Gauss–Legendre rule of `points_per_panel` points on each of `panels`
/// equal sub-intervals of [a, b].
QuadratureRule composite_gauss_legendre(int panels, int points_per_panel, double a, double b);

}  // namespace flexsyn
