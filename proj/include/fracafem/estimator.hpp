#pragma once

#include "fracafem/mesh.hpp"
#include "fracafem/system.hpp"
#include "fracafem/weighted_forms.hpp"

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <memory>
#include <vector>

namespace fracafem {

/// Symmetric banded matrix with half-bandwidth 2: band[d][k] = A(k, k+d).
struct Banded2 {
  int n = 0;
  std::array<std::vector<double>, 3> band;

  void apply(const double* x, double* y) const;
  Eigen::MatrixXd dense() const;
};

/// Weighted P2 matrices of a partition in the hierarchical basis, restricted to
/// the functions vanishing at y = Y. Order: hat_0, bubble_0, hat_1, bubble_1, ...
struct LocalYMatrices {
  Banded2 mass;
  Banded2 stiffness;
  std::vector<double> hat_flux;     ///< weighted stiffness of the hats on interval k
  std::vector<double> bubble_flux;  ///< bubble against the upper hat on interval k
  std::vector<double> bubble_stiffness;
  std::vector<std::array<double, 6>> interval_mass;  ///< m00 m01 m02 m11 m12 m22 (hat, hat, bubble)

  /// stiffness * v for a field with hat values v[0..M-1] (zero at y = Y), from
  /// differences per interval.
  void apply_stiffness_to_hats(const double* v, double* out) const;
};
LocalYMatrices local_y_matrices(const YPartition& ypart, double alpha);

/// Enriched local problem on the cylindrical star over a base vertex. Unknowns
/// are indexed (x-dof i, y-dof p) -> i * ny + p.
struct StarProblem {
  Star star;
  LocalSpace space = LocalSpace::P2Bubble;
  int nx = 0;
  int ny = 0;
  Eigen::MatrixXd kx;    ///< x stiffness over the star
  Eigen::MatrixXd mx;    ///< x mass over the star
  std::shared_ptr<const LocalYMatrices> y;
  Eigen::MatrixXd load;  ///< nx x ny residual load
  Eigen::MatrixXd eta;   ///< nx x ny solution

  Eigen::MatrixXd dense_matrix() const;
  Eigen::VectorXd load_vector() const;
  Eigen::VectorXd solution_vector() const;
};

/// Builds and solves the local problem of `star` for the discrete solution V.
StarProblem solve_local(const Star& star, const DiscreteField& field, const ScalarField& f,
                        const FractionalParams& params, LocalSpace space,
                        int data_degree = kDataDegree);

/// sqrt(eta^T load), equal to the local energy norm of eta.
double indicator(const StarProblem& sp);

/// d_s^(1/2) h_z^s ||f - f_K||_{L2(S_z)} with elementwise averages f_K.
double oscillation_node(const BaseMesh& base, const Star& star, const ScalarField& f,
                        const FractionalParams& params, int degree = kDataDegree);

/// ||y^a grad V - sigma||_{L2(y^-a)} over the cells of the cylindrical star,
/// sigma being the cellwise mean of y^a grad V.
double oscillation_flux(const Star& star, const DiscreteField& field, double alpha);

struct EstimatorOptions {
  LocalSpace space = LocalSpace::P2Bubble;
  bool flux_oscillation = false;
  int data_degree = kDataDegree;
};

/// Per-vertex and per-element indicators. tau^2 = E^2 + osc^2 with
/// osc^2 = osc_data^2 + osc_flux^2.
struct IndicatorSet {
  std::vector<double> estimator;
  std::vector<double> osc_data;
  std::vector<double> osc_flux;
  std::vector<double> tau;
  std::vector<double> element_estimator;
  std::vector<double> element_oscillation;
  std::vector<double> element_tau;
  double total_estimator = 0.0;
  double total_oscillation = 0.0;
  double total_tau = 0.0;

  double oscillation(int v) const;
};

/// Solves every star problem (concurrently) and reduces in vertex order.
IndicatorSet estimate_all(const DiscreteField& field, const ScalarField& f,
                          const FractionalParams& params, const EstimatorOptions& options = {});

/// Fills the element fields: E_K^2 = sum_{z in K} E_z^2 / #S_z and
/// osc_K^2 = d_s h_K^(2s) ||f - f_K||^2_K (+ flux shares).
void to_elementwise(IndicatorSet& ind, const BaseMesh& base, const ScalarField& f,
                    const FractionalParams& params, int degree = kDataDegree);

/// tau_total / error.
double effectivity(const IndicatorSet& ind, double error);

/// CSV with columns node, estimator, oscillation, tau.
void write_indicators(std::ostream& out, const IndicatorSet& ind);

}  // namespace fracafem
