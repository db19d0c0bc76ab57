#pragma once

#include "fracafem/afem.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fracafem {

enum class Experiment {
  SmoothCompatible2d,
  IncompatibleConst2d,
  LShapeCompatible,
  LShapeIncompatible,
  Bessel1d,
  IsotropicBaseline1d,
  OscillationVariant,
};

Experiment parse_experiment(std::string_view name);
std::string to_string(Experiment experiment);
const std::vector<Experiment>& all_experiments();

struct ExperimentSpec {
  Experiment experiment = Experiment::SmoothCompatible2d;
  std::vector<double> s_values{0.2, 0.4, 0.6, 0.8};
  std::optional<double> theta;
  std::optional<long long> dof_budget;
  std::optional<int> max_iterations;
  std::optional<bool> enforce_mesh_condition;
  std::optional<LocalSpace> space;
  std::optional<GammaPolicy> gamma_policy;
  std::optional<double> initial_h;
};

/// Domain, data, exact trace (when known) and overrides for one s.
AfemConfig make_config(const ExperimentSpec& spec, double s);

/// Runs the loop that matches the experiment (isotropic for the baseline).
AfemResult run_config(Experiment experiment, const AfemConfig& config);

enum class RateQuantity { Error, Estimator, Tau };

/// Least-squares slope of log(quantity) against log(#cells) over the last
/// `window` records.
double estimate_rate(std::span<const IterationRecord> records, std::size_t window = 8,
                     RateQuantity quantity = RateQuantity::Error);

struct RunSummary {
  double s = 0.0;
  std::size_t iterations = 0;
  long long final_dofs = 0;
  std::string stop;
  double rate_error = 0.0;
  double rate_estimator = 0.0;
  double rate_tau = 0.0;
  double effectivity_mean = 0.0;
  double effectivity_tail_mean = 0.0;  ///< last 8 iterations
  long long reference_dofs = 0;
};

RunSummary summarize(double s, const AfemResult& result);

/// CSV with the iteration columns in fixed order; reals at 17 significant digits.
void write_records(std::ostream& out, std::span<const IterationRecord> records);
std::vector<IterationRecord> read_records(std::istream& in);
void write_summary(std::ostream& out, std::span<const RunSummary> rows);

struct ExperimentOutput {
  std::vector<RunSummary> summaries;
  std::vector<AfemResult> results;
  StopReason worst_stop = StopReason::Converged;
};

/// One CSV per s value (NAME_sS.csv) and NAME_summary.csv under `dir`.
ExperimentOutput run_experiment(const ExperimentSpec& spec, const std::filesystem::path& dir);

std::string csv_file_name(Experiment experiment, double s);

/// Experiment description from an INI file:
///   [experiment] name, s, theta, budget, max_iterations, enforce_mesh_condition,
///                space, gamma_policy, initial_h
ExperimentSpec read_experiment_config(const std::filesystem::path& file);

}  // namespace fracafem
