#include "fracafem/errors.hpp"
#include "fracafem/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace fracafem;

namespace {

int exit_code(StopReason stop) {
  switch (stop) {
    case StopReason::Converged: return 0;
    case StopReason::BudgetReached: return 2;
    case StopReason::IterationCap: return 3;
  }
  return 1;
}

int cmd_run(const ExperimentSpec& spec, const std::string& out_dir) {
  const ExperimentOutput out = run_experiment(spec, out_dir);
  for (const auto& row : out.summaries) {
    std::printf("s=%g iterations=%zu dofs=%lld stop=%s rate_error=%.4f rate_estimator=%.4f rate_tau=%.4f "
                "effectivity=%.3f (tail %.3f)\n",
                row.s, row.iterations, row.final_dofs, row.stop.c_str(), row.rate_error, row.rate_estimator,
                row.rate_tau, row.effectivity_mean, row.effectivity_tail_mean);
  }
  return exit_code(out.worst_stop);
}

int cmd_rate(const std::string& file, std::size_t window) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file);
  const auto records = read_records(in);
  std::printf("error %.6f\nestimator %.6f\ntau %.6f\n", estimate_rate(records, window, RateQuantity::Error),
              estimate_rate(records, window, RateQuantity::Estimator),
              estimate_rate(records, window, RateQuantity::Tau));
  return 0;
}

int cmd_dump_mesh(const std::string& config_file, int iter, const std::string& out_file) {
  ExperimentSpec spec = read_experiment_config(config_file);
  if (iter < 1) throw std::invalid_argument("--iter must be at least 1");
  spec.max_iterations = iter;
  AfemConfig config = make_config(spec, spec.s_values.front());
  config.reference_error = false;
  const AfemResult result = run_config(spec.experiment, config);
  if (static_cast<int>(result.meshes.size()) < iter)
    throw std::runtime_error("the run stopped after " + std::to_string(result.meshes.size()) + " iterations");
  const auto& mesh = *result.meshes[iter - 1];
  if (out_file.empty()) {
    write_mesh(std::cout, mesh);
  } else {
    std::ofstream out(out_file);
    if (!out) throw std::runtime_error("cannot open " + out_file);
    write_mesh(out, mesh);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive FEM for the spectral fractional Laplacian"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run a predefined experiment");
  std::string name, out_dir, space, gamma;
  std::vector<double> s_list;
  double theta = 0.0;
  long long budget = 0;
  bool enforce = false;
  run_cmd->add_option("--experiment", name, "experiment name")->required();
  run_cmd->add_option("--s", s_list, "fractional orders")->delimiter(',');
  run_cmd->add_option("--theta", theta, "Dorfler parameter in (0,1]");
  run_cmd->add_option("--budget", budget, "degree of freedom budget");
  run_cmd->add_flag("--enforce-mesh-condition", enforce, "grow M until h_Y <= C_T h_z");
  run_cmd->add_option("--space", space, "local space")->check(CLI::IsMember({"bubble", "p2", "q2"}));
  run_cmd->add_option("--gamma-policy", gamma, "grading policy")->check(CLI::IsMember({"default", "strong"}));
  run_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* rate_cmd = app.add_subcommand("rate", "fit the trailing convergence rate of a run log");
  std::string in_file;
  std::size_t window = 8;
  rate_cmd->add_option("--in", in_file, "iteration CSV")->required();
  rate_cmd->add_option("--window", window, "trailing window")->check(CLI::Range(3, 1000000));

  auto* dump_cmd = app.add_subcommand("dump-mesh", "write the base mesh of one iteration");
  std::string config_file, mesh_out;
  int iter = 1;
  dump_cmd->add_option("--config", config_file, "INI experiment description")->required()->check(CLI::ExistingFile);
  dump_cmd->add_option("--iter", iter, "iteration (1-based)")->required();
  dump_cmd->add_option("--out", mesh_out, "output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) {
      ExperimentSpec spec;
      spec.experiment = parse_experiment(name);
      if (!s_list.empty()) spec.s_values = s_list;
      if (run_cmd->count("--theta")) spec.theta = theta;
      if (run_cmd->count("--budget")) spec.dof_budget = budget;
      if (enforce) spec.enforce_mesh_condition = true;
      if (!space.empty()) spec.space = parse_local_space(space);
      if (!gamma.empty()) spec.gamma_policy = parse_gamma_policy(gamma);
      return cmd_run(spec, out_dir);
    }
    if (*rate_cmd) return cmd_rate(in_file, window);
    return cmd_dump_mesh(config_file, iter, mesh_out);
  } catch (const AfemRunError& e) {
    std::fprintf(stderr, "error: %s (after %zu iterations)\n", e.what(), e.partial().size());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
  }
  return 1;
}
