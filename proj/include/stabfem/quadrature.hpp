#pragma once

#include <array>
#include <vector>

namespace stabfem {

/// Triangle rule on the reference triangle (0,0),(1,0),(0,1); weights sum to 1.
struct QuadratureRule {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }
};

/// Gauss-Legendre points and weights on [0,1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

/// Symmetric rule exact for the given degree (1, 2, 4 or 6 built in; other
/// degrees fall back to a collapsed Gauss product rule).
QuadratureRule triangle_rule(int degree);

/// Collapsed Gauss product rule exact for polynomials of the given degree.
QuadratureRule collapsed_gauss_rule(int degree);

}  // namespace stabfem
