#pragma once

#include <stdexcept>
#include <string>

namespace fracafem {

/// Degenerate or inconsistent geometry (zero-measure cells, bad orientation).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Data function produced a non-finite sample.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver hit its iteration cap before reaching the tolerance.
class SolverDivergence : public std::runtime_error {
 public:
  SolverDivergence(const std::string& what, double final_residual, int iterations)
      : std::runtime_error(what), final_residual_(final_residual), iterations_(iterations) {}
  double final_residual() const noexcept { return final_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double final_residual_;
  int iterations_;
};

/// Caller broke an API contract (dimension mismatch, non-nested meshes, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical breakdown that should not happen for valid input (singular SPD matrix).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fracafem
