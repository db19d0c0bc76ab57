#pragma once

#include "fracafem/mesh.hpp"
#include "fracafem/quadrature.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>
#include <string_view>
#include <vector>

namespace fracafem {

/// Pointwise data on the base domain.
using ScalarField = std::function<double(const Point&)>;

/// Order s of the fractional Laplacian and the derived constants
/// alpha = 1 - 2s and d_s = 2^(1-2s) Gamma(1-s) / Gamma(s).
struct FractionalParams {
  double s = 0.5;
  double alpha = 0.0;
  double d_s = 1.0;

  static FractionalParams from_s(double s);
};

/// Closed form of the integral of y^(alpha+k) over [a, b], 0 <= a < b.
double weighted_moment(double a, double b, double alpha, int k);

/// mu_i = integral over [a,b] of y^alpha t^i dy with t = (y-a)/(b-a), i = 0..max_power.
/// Evaluated without cancellation for intervals far from y = 0.
std::vector<double> shifted_weighted_moments(double a, double b, double alpha, int max_power);

/// Weighted 1D matrices on one interval: mass = int y^a l_i l_j,
/// stiffness = int y^a l_i' l_j'. P1 basis {1-t, t}; P2 adds the bubble 4t(1-t).
struct IntervalMatrices {
  Eigen::MatrixXd mass;
  Eigen::MatrixXd stiffness;
};
IntervalMatrices interval_matrices(double a, double b, double alpha, int degree);

/// Local finite element spaces used by the star problems.
enum class LocalSpace { P2Bubble, P2Plain, Q2 };
LocalSpace parse_local_space(std::string_view tag);
std::string to_string(LocalSpace space);

/// Unweighted x'-matrices on one base element: stiffness int grad phi_i . grad phi_j and
/// mass int phi_i phi_j. Degree 1 is the nodal P1 basis.
struct ElementXMatrices {
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd mass;
};
ElementXMatrices p1_element_matrices(const BaseMesh& mesh, int element);

/// Hierarchical enriched basis on a base element: vertex hats, then edge
/// bubbles 4 l_a l_b (edge i opposite vertex i; the single interval bubble for
/// n = 1), then the cubic bubble 27 l_0 l_1 l_2 for P2Bubble on triangles.
int enriched_basis_size(int dim, LocalSpace space);
ElementXMatrices enriched_element_matrices(const BaseMesh& mesh, int element, LocalSpace space);

/// Values of the enriched basis at a barycentric point.
void enriched_basis_values(int dim, LocalSpace space, const std::array<double, 3>& bary,
                           std::span<double> out);

/// Gradients of the enriched basis from the barycentric gradients of the element.
void enriched_basis_gradients(int dim, LocalSpace space, const std::array<double, 3>& bary,
                              const std::array<Point, 3>& bary_grads, std::span<Point> out);

/// Interpolatory rule on [a, b] with weight y^alpha, exact for polynomials of
/// the given degree (nodes at the Gauss-Legendre points).
quad::Rule1D weighted_interval_rule(double a, double b, double alpha, int degree);

/// Gradients of the barycentric coordinates (the P1 hats) of a base element.
std::array<Point, 3> barycentric_gradients(const BaseMesh& mesh, int element);

/// Physical point of a barycentric coordinate on a base element.
Point map_to_element(const BaseMesh& mesh, int element, const std::array<double, 3>& bary);

/// Dense local matrix with the global (tensor node) ids of its rows.
struct ElementMatrix {
  std::vector<int> dofs;
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd mass;
};

/// P1 x P1 weighted stiffness and mass of the prism cell. Local index of
/// (vertex i, level j) is 2*i + j.
ElementMatrix local_stiffness(const CylinderMesh& cyl, int cell, double alpha);

/// Enriched (x-space of `space`) x P2 weighted stiffness and mass of the prism
/// cell. Local index of (x-basis i, y-basis j) is 3*i + j; dofs are left empty.
ElementMatrix local_stiffness_enriched(const CylinderMesh& cyl, int cell, double alpha,
                                       LocalSpace space);

/// d_s * int_K f phi_i for the P1 hats of element K with a rule exact to `degree`.
std::vector<double> trace_load(const BaseMesh& mesh, int element, const ScalarField& f,
                               double d_s, int degree = 4);

/// Default quadrature degrees: load assembly and every data integral in the estimator.
inline constexpr int kLoadDegree = 4;
inline constexpr int kDataDegree = 7;

}  // namespace fracafem
