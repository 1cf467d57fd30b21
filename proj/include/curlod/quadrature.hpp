#pragma once

// Quadrature on simplices in barycentric form. Weights are relative to the
// cell volume, i.e. they sum to one.

#include <array>
#include <vector>

namespace curlod {

struct QuadratureRule {
  int dim = 0;
  int degree = 0;
  std::vector<std::array<double, 4>> lambda;
  std::vector<double> weight;

  int size() const { return static_cast<int>(weight.size()); }
};

/// Rule exact for polynomials of the given total degree on a dim-simplex.
/// Degree <= 2 uses edge midpoints (2D) or the symmetric 4-point rule (3D);
/// higher degrees use a collapsed tensor Gauss-Legendre rule.
const QuadratureRule& simplex_rule(int dim, int degree);

/// Gauss-Legendre nodes and weights on [0,1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

}  // namespace curlod
