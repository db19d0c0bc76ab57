#pragma once

#include <array>
#include <vector>

namespace fracafem::quad {

/// Points and weights of a rule on a reference domain.
struct Rule1D {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Barycentric points on the reference triangle; weights sum to 1 (the rule
/// integrates mean values, multiply by the element area).
struct RuleSimplex {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [0,1]; exact for degree 2n-1.
const Rule1D& gauss_legendre(int n);

/// n-point Gauss-Jacobi rule on [0,1] for the weight t^beta, beta > -1.
/// Weights integrate against t^beta, so sum(w) = 1/(1+beta).
Rule1D gauss_jacobi(int n, double beta);

/// Interval rule (barycentric form, weights sum to 1) exact for the degree.
RuleSimplex interval_rule(int degree);

/// Collapsed (Duffy) Gauss rule on the triangle exact for the degree.
RuleSimplex triangle_rule(int degree);

/// Rule on the reference simplex of dimension dim (1 or 2).
inline RuleSimplex simplex_rule(int dim, int degree) {
  return dim == 1 ? interval_rule(degree) : triangle_rule(degree);
}

}  // namespace fracafem::quad
