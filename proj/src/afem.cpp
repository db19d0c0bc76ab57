#include "fracafem/afem.hpp"

#include "fracafem/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace fracafem {

GammaPolicy parse_gamma_policy(std::string_view tag) {
  if (tag == "default") return GammaPolicy::Default;
  if (tag == "strong") return GammaPolicy::Strong;
  throw std::invalid_argument("unknown gamma policy: " + std::string(tag));
}

std::string to_string(GammaPolicy policy) {
  return policy == GammaPolicy::Strong ? "strong" : "default";
}

double grading_exponent(double s, GammaPolicy policy) {
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("grading_exponent: s must lie in (0,1)");
  if (policy == GammaPolicy::Strong) return 3.0 / (1.0 - std::abs(1.0 - 2.0 * s)) + 0.1;
  return 3.0 / (2.0 * s) + 0.1;
}

double truncation_height(std::size_t num_elements) {
  if (num_elements == 0) throw std::invalid_argument("truncation_height: empty mesh");
  return 1.0 + std::log(static_cast<double>(num_elements)) / 3.0;
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Converged: return "converged";
    case StopReason::BudgetReached: return "budget";
    case StopReason::IterationCap: return "iteration_cap";
  }
  return "unknown";
}

void AfemConfig::validate() const {
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("s must lie in (0,1)");
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in (0,1]");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be positive");
  if (dof_budget < 1) throw std::invalid_argument("dof_budget must be positive");
  if (!(c_t > 0.0)) throw std::invalid_argument("C_T must be positive");
  if (!(initial_h > 0.0)) throw std::invalid_argument("initial_h must be positive");
  if (!f) throw std::invalid_argument("data function is not set");
  if (domain_dimension(domain) == 2 && space == LocalSpace::Q2)
    throw std::invalid_argument("the Q2 local space needs a tensor-product base mesh");
}

std::vector<int> mark_dorfler(std::span<const double> tau, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("mark_dorfler: theta must lie in (0,1]");
  std::vector<int> order(tau.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return tau[a] > tau[b]; });
  double total = 0.0;
  for (int i : order) total += tau[i] * tau[i];
  std::vector<int> marked;
  if (!(total > 0.0)) return marked;
  const double target = theta * theta * total;
  double sum = 0.0;
  for (int i : order) {
    marked.push_back(i);
    sum += tau[i] * tau[i];
    if (sum >= target) break;
  }
  return marked;
}

std::vector<int> star_elements(const BaseMesh& base, std::span<const int> stars) {
  std::vector<int> out;
  for (int v : stars)
    for (int e : base.elements_of_vertex(v)) out.push_back(e);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

YPartition partition_for(std::shared_ptr<const BaseMesh> base, const AfemConfig& config) {
  const std::size_t ne = base->num_elements();
  const double y = truncation_height(ne);
  const double gamma = grading_exponent(config.s, config.gamma_policy);
  int m = static_cast<int>(std::ceil(std::pow(static_cast<double>(ne), 1.0 / base->dim()) - 1e-9));
  m = std::max(m, 1);
  auto ok = [&](int mm) {
    return check_mesh_condition(CylinderMesh(base, build_graded_partition(mm, y, gamma)), config.c_t).satisfied;
  };
  if (config.enforce_mesh_condition && !ok(m)) {
    // h_Y decreases with M: bracket, then bisect for the smallest admissible M.
    int lo = m, hi = m;
    while (!ok(hi)) {
      lo = hi;
      if (hi > (1 << 24)) throw NumericalError("mesh condition cannot be met");
      hi *= 2;
    }
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      (ok(mid) ? hi : lo) = mid;
    }
    m = hi;
  }
  return build_graded_partition(m, y, gamma);
}

RefinedMesh refine_step(const BaseMesh& base, std::span<const int> marked_stars, const AfemConfig& config) {
  if (marked_stars.empty()) throw std::invalid_argument("refine_step: nothing marked");
  const std::vector<int> elems = star_elements(base, marked_stars);
  RefinedMesh out;
  out.base = std::make_shared<const BaseMesh>(bisect(base, elems));
  out.ypart = partition_for(out.base, config);
  return out;
}

long long dof_count(const BaseMesh& base, int M) {
  return static_cast<long long>(base.num_interior_vertices()) * M;
}

std::shared_ptr<const CylinderMesh> reference_mesh(const CylinderMesh& cyl) {
  auto base = std::make_shared<const BaseMesh>(refine_uniform(cyl.base(), cyl.base().dim() == 2 ? 2 : 1));
  return std::make_shared<const CylinderMesh>(base, refine_uniform(cyl.ypart()));
}

AfemResult run(const AfemConfig& config) {
  config.validate();
  const FractionalParams params = FractionalParams::from_s(config.s);
  EstimatorOptions est_opts;
  est_opts.space = config.space;
  est_opts.flux_oscillation = config.uses_flux_oscillation();
  est_opts.data_degree = config.data_degree;

  AfemResult result;
  std::vector<double> energies;
  std::shared_ptr<const CylinderMesh> last;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    auto base = std::make_shared<const BaseMesh>(build_base_mesh(config.domain, config.initial_h));
    YPartition ypart = partition_for(base, config);
    for (int iter = 1;; ++iter) {
      const auto t0 = std::chrono::steady_clock::now();
      auto cyl = std::make_shared<const CylinderMesh>(base, ypart);
      const AssembledSystem sys = assemble(cyl, params, config.f, config.load_degree);
      SolveInfo info;
      const DiscreteField v = solve(sys, config.solver, &info);
      const IndicatorSet ind = estimate_all(v, config.f, params, est_opts);

      IterationRecord rec;
      rec.iter = iter;
      rec.n_base_elems = static_cast<long long>(base->num_elements());
      rec.n_cyl_cells = static_cast<long long>(cyl->num_cells());
      rec.dofs = sys.dofs.size();
      rec.M = cyl->M();
      rec.Y = cyl->Y();
      rec.estimator = ind.total_estimator;
      rec.oscillation = ind.total_oscillation;
      rec.tau = ind.total_tau;
      if (config.marking == MarkingMode::Elements) {
        double osc = 0.0;
        for (double o : ind.element_oscillation) osc += o * o;
        rec.oscillation = std::sqrt(osc);
        rec.tau = std::sqrt(rec.estimator * rec.estimator + osc);
      }
      rec.error = nan;
      rec.effectivity = nan;
      if (config.u_exact) {
        rec.error = exact_error_identity(v, config.f, config.u_exact, params, config.data_degree);
        if (rec.error > 0.0) rec.effectivity = rec.tau / rec.error;
      }
      rec.aspect_bottom_mean = aspect_ratio_stats(*cyl).bottom_layer_mean;
      rec.mesh_cond_worst = check_mesh_condition(*cyl, config.c_t).worst_ratio;
      rec.solver_iters = info.iterations;
      energies.push_back(energy(v, sys));
      result.meshes.push_back(base);
      last = cyl;

      bool stop = false;
      if (!(ind.total_tau > 0.0)) {
        result.stop = StopReason::Converged;
        stop = true;
      } else if (iter >= config.max_iterations) {
        result.stop = StopReason::IterationCap;
        stop = true;
      } else {
        const std::vector<int> marked =
            config.marking == MarkingMode::Stars
                ? star_elements(*base, mark_dorfler(ind.tau, config.theta))
                : mark_dorfler(ind.element_tau, config.theta);
        auto next = std::make_shared<const BaseMesh>(bisect(*base, marked));
        YPartition next_y = partition_for(next, config);
        if (dof_count(*next, next_y.M()) > config.dof_budget) {
          result.stop = StopReason::BudgetReached;
          stop = true;
        } else {
          base = next;
          ypart = std::move(next_y);
        }
      }
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      result.records.push_back(rec);
      if (stop) break;
    }

    if (!config.u_exact && config.reference_error) {
      auto fine = reference_mesh(*last);
      const AssembledSystem fsys = assemble(fine, params, config.f, config.load_degree);
      const DiscreteField fv = solve(fsys, config.solver);
      result.reference_energy = energy(fv, fsys);
      result.reference_dofs = fsys.dofs.size();
      for (std::size_t i = 0; i < result.records.size(); ++i) {
        auto& rec = result.records[i];
        rec.error = std::sqrt(std::max(0.0, 2.0 * (energies[i] - result.reference_energy)));
        rec.effectivity = rec.error > 0.0 ? rec.tau / rec.error : nan;
      }
    }
  } catch (const std::exception& ex) {
    throw AfemRunError(ex.what(), result.records);
  }
  return result;
}

}  // namespace fracafem
