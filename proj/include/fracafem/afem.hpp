#pragma once

#include "fracafem/estimator.hpp"
#include "fracafem/mesh.hpp"
#include "fracafem/system.hpp"
#include "fracafem/weighted_forms.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracafem {

enum class GammaPolicy { Default, Strong };
GammaPolicy parse_gamma_policy(std::string_view tag);
std::string to_string(GammaPolicy policy);

/// 3/(2s) + 0.1, or 3/(1-|alpha|) + 0.1 for the strong policy.
double grading_exponent(double s, GammaPolicy policy);

/// Y = 1 + ln(#elements) / 3.
double truncation_height(std::size_t num_elements);

enum class MarkingMode { Stars, Elements };

struct AfemConfig {
  double s = 0.5;
  Domain domain = Domain::UnitSquare;
  ScalarField f;
  ScalarField u_exact;  ///< trace solution; empty when unknown
  double theta = 0.5;
  int max_iterations = 100;
  long long dof_budget = 200000;
  GammaPolicy gamma_policy = GammaPolicy::Default;
  double c_t = 1.0;
  bool enforce_mesh_condition = false;
  SolverOptions solver;
  LocalSpace space = LocalSpace::P2Bubble;
  std::optional<bool> flux_oscillation;  ///< defaults to on for the plain P2 space
  double initial_h = 0.25;
  MarkingMode marking = MarkingMode::Stars;
  bool reference_error = true;  ///< energy error against a refined solve when u is unknown
  int load_degree = kLoadDegree;
  int data_degree = kDataDegree;

  void validate() const;
  bool uses_flux_oscillation() const { return flux_oscillation.value_or(space == LocalSpace::P2Plain); }
};

struct IterationRecord {
  int iter = 0;
  long long n_base_elems = 0;
  long long n_cyl_cells = 0;
  long long dofs = 0;
  int M = 0;
  double Y = 0.0;
  double error = 0.0;  ///< NaN when not computed
  double estimator = 0.0;
  double oscillation = 0.0;
  double tau = 0.0;
  double effectivity = 0.0;  ///< NaN when the error is unknown
  double aspect_bottom_mean = 0.0;
  double mesh_cond_worst = 0.0;
  int solver_iters = 0;
  double wall_ms = 0.0;
};

enum class StopReason { Converged, BudgetReached, IterationCap };
std::string to_string(StopReason reason);

struct AfemResult {
  std::vector<IterationRecord> records;
  StopReason stop = StopReason::IterationCap;
  std::vector<std::shared_ptr<const BaseMesh>> meshes;  ///< base mesh of every iteration
  double reference_energy = 0.0;
  long long reference_dofs = 0;
};

/// Failure inside the loop; carries the records completed so far.
class AfemRunError : public std::runtime_error {
 public:
  AfemRunError(const std::string& what, std::vector<IterationRecord> partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const std::vector<IterationRecord>& partial() const noexcept { return partial_; }

 private:
  std::vector<IterationRecord> partial_;
};

/// Minimal-cardinality set with tau(M)^2 >= theta^2 tau^2: indices sorted by
/// descending tau (ties by index), shortest qualifying prefix. Empty when all
/// indicators vanish.
std::vector<int> mark_dorfler(std::span<const double> tau, double theta);

/// Elements of the marked stars, sorted and unique.
std::vector<int> star_elements(const BaseMesh& base, std::span<const int> stars);

/// Graded partition for a base mesh: Y from the element count, M = ceil(#T^(1/n)),
/// and, when enforcing, the smallest larger M satisfying h_Y <= C_T h_z.
YPartition partition_for(std::shared_ptr<const BaseMesh> base, const AfemConfig& config);

struct RefinedMesh {
  std::shared_ptr<const BaseMesh> base;
  YPartition ypart;
};

/// Bisects every element of the marked stars (with closure) and rebuilds the partition.
RefinedMesh refine_step(const BaseMesh& base, std::span<const int> marked_stars, const AfemConfig& config);

/// Free dof count of the tensor space over `base` with M intervals.
long long dof_count(const BaseMesh& base, int M);

/// Uniform refinement used for reference solutions: base bisected twice (n=2)
/// or once (n=1), every y-interval halved, Y unchanged.
std::shared_ptr<const CylinderMesh> reference_mesh(const CylinderMesh& cyl);

/// SOLVE -> ESTIMATE -> MARK -> REFINE until the indicators vanish, the next
/// mesh exceeds the dof budget, or the iteration cap is reached.
AfemResult run(const AfemConfig& config);

}  // namespace fracafem
