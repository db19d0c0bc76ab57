#pragma once

#include "fracafem/afem.hpp"
#include "fracafem/mesh.hpp"
#include "fracafem/weighted_forms.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <memory>
#include <vector>

namespace fracafem {

// Shape-regular baseline for n = 1: the truncated cylinder (0,1) x (0,Y) is
// triangulated directly and refined by newest-vertex bisection in both x and y.

/// Integral of g * y^alpha over a triangle (y >= 0), exact when g is a
/// polynomial of the given degree.
double weighted_triangle_integral(const std::array<Point, 3>& tri, double alpha, int degree,
                                  const std::function<double(const Point&)>& g);

/// Lateral sides x = 0, x = 1 and the top y = Y carry the Dirichlet condition.
bool isotropic_dirichlet(const Point& p, double Y);

struct IsotropicSystem {
  std::shared_ptr<const BaseMesh> mesh;
  double Y = 1.0;
  std::vector<int> free_of_vertex;
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
};

IsotropicSystem assemble_isotropic(std::shared_ptr<const BaseMesh> mesh, double Y,
                                   const FractionalParams& params, const ScalarField& f,
                                   int load_degree = kLoadDegree);

/// Nodal values over all vertices (zero on the Dirichlet part).
std::vector<double> solve_isotropic(const IsotropicSystem& sys);

/// sqrt(max(0, d_s int_0^1 f (u - V(., 0)))).
double isotropic_error(const BaseMesh& mesh, const std::vector<double>& values, const ScalarField& f,
                       const ScalarField& u_exact, const FractionalParams& params,
                       int degree = kDataDegree);

struct IsotropicIndicators {
  std::vector<double> estimator;  ///< per vertex patch
  std::vector<double> oscillation;
  std::vector<double> tau;
  std::vector<double> element_tau;
  double total_estimator = 0.0;
  double total_oscillation = 0.0;
  double total_tau = 0.0;
};

/// Local problems on vertex patches with the P2 + cubic bubble space, vanishing
/// on the patch boundary away from y = 0.
IsotropicIndicators estimate_isotropic(const BaseMesh& mesh, double Y, const std::vector<double>& values,
                                       const ScalarField& f, const FractionalParams& params,
                                       int degree = kDataDegree);

/// Adaptive loop on the shape-regular mesh; Y is fixed to 1 + ln(dof_budget)/3.
AfemResult run_isotropic(const AfemConfig& config);

}  // namespace fracafem
