#pragma once

#include "fracafem/mesh.hpp"
#include "fracafem/weighted_forms.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace fracafem {

/// Compressed sparse rows with sorted column indices.
struct CsrMatrix {
  int rows = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;

  double at(int i, int j) const;
};

/// Symmetric tridiagonal matrix: diag[k] and off[k] = A(k, k+1).
struct SymTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;
  /// Optional Laplacian form sum_k w_k (e_k - e_{k+1})(e_k - e_{k+1})^T with
  /// e_size = 0. When set, apply works on differences so the zero row sums
  /// survive rounding.
  std::vector<double> chain;

  int size() const noexcept { return static_cast<int>(diag.size()); }
  void apply(std::span<const double> x, std::span<double> y) const;
  /// Same product accumulated in extended precision.
  void apply_extended(const double* x, long double* y) const;
};

/// Free degrees of freedom: interior base vertices times levels 0..M-1,
/// numbered vertex-major so every vertical line is a contiguous block.
struct DofMap {
  int levels = 0;                   ///< M
  std::vector<int> free_of_vertex;  ///< -1 on the lateral boundary
  std::vector<int> vertex_of_free;

  int size() const noexcept { return static_cast<int>(vertex_of_free.size()) * levels; }
  int index(int free_vertex, int level) const { return free_vertex * levels + level; }
};

DofMap make_dof_map(const CylinderMesh& cyl);

/// A = Kx (x) My + Mx (x) Ky restricted to free dofs, where Kx, Mx are the P1
/// stiffness and mass of the base mesh and My, Ky the y^alpha-weighted P1 mass
/// and stiffness of the partition. This equals the sum of the cell matrices.
class TensorOperator {
 public:
  CsrMatrix kx;
  CsrMatrix mx;  ///< same pattern as kx
  SymTridiagonal my;
  SymTridiagonal ky;

  int size() const noexcept { return kx.rows * my.size(); }
  void apply(std::span<const double> x, std::span<double> y) const;
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    y.resize(x.size());
    apply(std::span<const double>(x.data(), x.size()), std::span<double>(y.data(), y.size()));
  }
  /// b - A x accumulated in extended precision.
  Eigen::VectorXd residual(const Eigen::VectorXd& b, const Eigen::VectorXd& x) const;
  double entry(int row, int col) const;
  Eigen::MatrixXd dense() const;
};

struct AssembledSystem {
  std::shared_ptr<const CylinderMesh> mesh;
  FractionalParams params;
  DofMap dofs;
  TensorOperator matrix;
  Eigen::VectorXd rhs;
};

/// Assembles the truncated extension problem with data f on the bottom face.
AssembledSystem assemble(std::shared_ptr<const CylinderMesh> mesh, const FractionalParams& params,
                         const ScalarField& f, int load_degree = kLoadDegree);

/// Coefficients over all tensor nodes; Dirichlet nodes (lateral boundary and
/// top) are exactly zero.
struct DiscreteField {
  std::shared_ptr<const CylinderMesh> mesh;
  std::vector<double> values;
  std::vector<std::uint8_t> dirichlet;

  /// Free-dof vector in the numbering of `dofs`.
  Eigen::VectorXd free_values(const DofMap& dofs) const;
  /// Trace values at the base vertices (level 0).
  std::vector<double> trace() const;
};

DiscreteField make_field(std::shared_ptr<const CylinderMesh> mesh, const DofMap& dofs,
                         const Eigen::VectorXd& free_values);

struct SolverOptions {
  double rel_tol = 1e-10;
  int max_iterations = 50000;
  int dense_threshold = 2000;  ///< direct dense solve below this many dofs
};

struct SolveInfo {
  int iterations = 0;
  double relative_residual = 0.0;
  double preconditioned_residual = 0.0;  ///< sqrt(r'Pr / b'Pb)
  bool direct = false;
};

/// Solves A x = b. Throws SolverDivergence when the iteration cap is hit.
DiscreteField solve(const AssembledSystem& sys, const SolverOptions& options = {},
                    SolveInfo* info = nullptr);

/// Preconditioned CG with a symmetric block Gauss-Seidel sweep over vertical lines.
Eigen::VectorXd solve_pcg(const TensorOperator& a, const Eigen::VectorXd& b,
                          const SolverOptions& options, SolveInfo* info = nullptr);

/// E(V) = 1/2 x^T A x - b^T x.
double energy(const DiscreteField& field, const AssembledSystem& sys);

/// sqrt(max(0, 2 (E(V_coarse) - E(V_fine)))) with each field's own system.
/// Requires the fine base mesh to descend from the coarse one.
double energy_error(const DiscreteField& coarse, const AssembledSystem& coarse_sys,
                    const DiscreteField& fine, const AssembledSystem& fine_sys);

/// sqrt(max(0, d_s int_Omega f (u - tr V))) with a rule exact to `degree`.
double exact_error_identity(const DiscreteField& field, const ScalarField& f,
                            const ScalarField& u_exact, const FractionalParams& params,
                            int degree = kDataDegree);

/// Interpolates a field onto a mesh whose base descends from the field's base
/// by bisection. Exact when the partitions are nested; zero above the coarse Y.
DiscreteField prolongate(const DiscreteField& field, std::shared_ptr<const CylinderMesh> fine);

}  // namespace fracafem
