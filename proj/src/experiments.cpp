#include "fracafem/experiments.hpp"

#include "fracafem/errors.hpp"
#include "fracafem/isotropic.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace fracafem {

namespace {

constexpr std::pair<Experiment, const char*> kNames[] = {
    {Experiment::SmoothCompatible2d, "smooth_compatible_2d"},
    {Experiment::IncompatibleConst2d, "incompatible_const_2d"},
    {Experiment::LShapeCompatible, "lshape_compatible"},
    {Experiment::LShapeIncompatible, "lshape_incompatible"},
    {Experiment::Bessel1d, "bessel_1d"},
    {Experiment::IsotropicBaseline1d, "isotropic_baseline_1d"},
    {Experiment::OscillationVariant, "oscillation_variant"},
};

constexpr const char* kColumns =
    "iter,n_base_elems,n_cyl_cells,dofs,M,Y,error,estimator,oscillation,tau,effectivity,"
    "aspect_bottom_mean,mesh_cond_worst,solver_iters,wall_ms";

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_real(const std::string& field) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) throw std::invalid_argument("malformed number: " + field);
  return v;
}

long long parse_int(const std::string& field) {
  std::size_t used = 0;
  const long long v = std::stoll(field, &used);
  if (used != field.size()) throw std::invalid_argument("malformed integer: " + field);
  return v;
}

double mean_of(std::span<const IterationRecord> records) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : records)
    if (std::isfinite(r.effectivity)) {
      sum += r.effectivity;
      ++n;
    }
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(", "), boost::token_compress_on);
  std::vector<double> out;
  for (auto& p : parts)
    if (!p.empty()) out.push_back(parse_real(p));
  return out;
}

}  // namespace

Experiment parse_experiment(std::string_view name) {
  for (const auto& [e, n] : kNames)
    if (name == n) return e;
  throw std::invalid_argument("unknown experiment: " + std::string(name));
}

std::string to_string(Experiment experiment) {
  for (const auto& [e, n] : kNames)
    if (e == experiment) return n;
  return "unknown";
}

const std::vector<Experiment>& all_experiments() {
  static const std::vector<Experiment> list = [] {
    std::vector<Experiment> v;
    for (const auto& [e, n] : kNames) v.push_back(e);
    return v;
  }();
  return list;
}

AfemConfig make_config(const ExperimentSpec& spec, double s) {
  using std::numbers::pi;
  AfemConfig c;
  c.s = s;
  c.marking = MarkingMode::Elements;
  switch (spec.experiment) {
    case Experiment::SmoothCompatible2d:
      c.domain = Domain::UnitSquare;
      c.f = [](const Point& x) { return std::sin(2 * pi * x[0]) * std::sin(2 * pi * x[1]); };
      c.u_exact = [s](const Point& x) {
        return std::pow(8 * pi * pi, -s) * std::sin(2 * pi * x[0]) * std::sin(2 * pi * x[1]);
      };
      break;
    case Experiment::IncompatibleConst2d:
      c.domain = Domain::UnitSquare;
      c.f = [](const Point&) { return 1.0; };
      break;
    case Experiment::LShapeCompatible:
      c.domain = Domain::LShape;
      c.initial_h = 0.5;
      c.f = [](const Point& x) { return std::sin(2 * pi * x[0]) * std::sin(pi * x[1]); };
      break;
    case Experiment::LShapeIncompatible:
    case Experiment::OscillationVariant:
      c.domain = Domain::LShape;
      c.initial_h = 0.5;
      c.f = [](const Point&) { return 1.0; };
      if (spec.experiment == Experiment::OscillationVariant) c.space = LocalSpace::P2Plain;
      break;
    case Experiment::Bessel1d:
    case Experiment::IsotropicBaseline1d:
      c.domain = Domain::UnitInterval;
      c.f = [s](const Point& x) { return std::pow(pi, 2 * s) * std::sin(pi * x[0]); };
      c.u_exact = [](const Point& x) { return std::sin(pi * x[0]); };
      break;
  }
  if (spec.theta) c.theta = *spec.theta;
  if (spec.dof_budget) c.dof_budget = *spec.dof_budget;
  if (spec.max_iterations) c.max_iterations = *spec.max_iterations;
  if (spec.enforce_mesh_condition) c.enforce_mesh_condition = *spec.enforce_mesh_condition;
  if (spec.space) c.space = *spec.space;
  if (spec.gamma_policy) c.gamma_policy = *spec.gamma_policy;
  if (spec.initial_h) c.initial_h = *spec.initial_h;
  return c;
}

AfemResult run_config(Experiment experiment, const AfemConfig& config) {
  return experiment == Experiment::IsotropicBaseline1d ? run_isotropic(config) : run(config);
}

double estimate_rate(std::span<const IterationRecord> records, std::size_t window, RateQuantity quantity) {
  if (window < 3 || records.size() < 3) throw std::invalid_argument("estimate_rate: need at least 3 records");
  const std::size_t n = std::min(window, records.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = records.size() - n; i < records.size(); ++i) {
    const auto& r = records[i];
    const double q = quantity == RateQuantity::Error       ? r.error
                     : quantity == RateQuantity::Estimator ? r.estimator
                                                           : r.tau;
    if (!(q > 0.0) || !std::isfinite(q) || r.n_cyl_cells <= 0)
      throw std::invalid_argument("estimate_rate: non-positive value in window");
    const double x = std::log(static_cast<double>(r.n_cyl_cells));
    const double y = std::log(q);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  const double den = dn * sxx - sx * sx;
  if (!(den > 0.0)) throw std::invalid_argument("estimate_rate: cell counts do not vary");
  return (dn * sxy - sx * sy) / den;
}

RunSummary summarize(double s, const AfemResult& result) {
  RunSummary row;
  row.s = s;
  const auto& recs = result.records;
  row.iterations = recs.size();
  row.final_dofs = recs.empty() ? 0 : recs.back().dofs;
  row.stop = to_string(result.stop);
  row.reference_dofs = result.reference_dofs;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto rate = [&](RateQuantity q) {
    try {
      return estimate_rate(recs, 8, q);
    } catch (const std::invalid_argument&) {
      return nan;
    }
  };
  row.rate_error = rate(RateQuantity::Error);
  row.rate_estimator = rate(RateQuantity::Estimator);
  row.rate_tau = rate(RateQuantity::Tau);
  row.effectivity_mean = mean_of(recs);
  const std::size_t tail = std::min<std::size_t>(8, recs.size());
  row.effectivity_tail_mean = mean_of(std::span(recs).last(tail));
  return row;
}

void write_records(std::ostream& out, std::span<const IterationRecord> records) {
  out << kColumns << '\n';
  for (const auto& r : records) {
    out << r.iter << ',' << r.n_base_elems << ',' << r.n_cyl_cells << ',' << r.dofs << ',' << r.M << ','
        << real(r.Y) << ',' << real(r.error) << ',' << real(r.estimator) << ',' << real(r.oscillation) << ','
        << real(r.tau) << ',' << real(r.effectivity) << ',' << real(r.aspect_bottom_mean) << ','
        << real(r.mesh_cond_worst) << ',' << r.solver_iters << ',' << real(r.wall_ms) << '\n';
  }
}

std::vector<IterationRecord> read_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV");
  boost::trim_right(line);
  if (line != kColumns) throw std::runtime_error("unexpected CSV header: " + line);
  std::vector<IterationRecord> out;
  while (std::getline(in, line)) {
    boost::trim_right(line);
    if (line.empty()) continue;
    std::vector<std::string> f;
    boost::split(f, line, boost::is_any_of(","));
    if (f.size() != 15) throw std::runtime_error("CSV row has " + std::to_string(f.size()) + " fields");
    IterationRecord r;
    r.iter = static_cast<int>(parse_int(f[0]));
    r.n_base_elems = parse_int(f[1]);
    r.n_cyl_cells = parse_int(f[2]);
    r.dofs = parse_int(f[3]);
    r.M = static_cast<int>(parse_int(f[4]));
    r.Y = parse_real(f[5]);
    r.error = parse_real(f[6]);
    r.estimator = parse_real(f[7]);
    r.oscillation = parse_real(f[8]);
    r.tau = parse_real(f[9]);
    r.effectivity = parse_real(f[10]);
    r.aspect_bottom_mean = parse_real(f[11]);
    r.mesh_cond_worst = parse_real(f[12]);
    r.solver_iters = static_cast<int>(parse_int(f[13]));
    r.wall_ms = parse_real(f[14]);
    out.push_back(r);
  }
  return out;
}

void write_summary(std::ostream& out, std::span<const RunSummary> rows) {
  out << "s,iterations,final_dofs,stop,rate_error,rate_estimator,rate_tau,effectivity_mean,"
         "effectivity_tail_mean,reference_dofs\n";
  for (const auto& r : rows)
    out << real(r.s) << ',' << r.iterations << ',' << r.final_dofs << ',' << r.stop << ',' << real(r.rate_error)
        << ',' << real(r.rate_estimator) << ',' << real(r.rate_tau) << ',' << real(r.effectivity_mean) << ','
        << real(r.effectivity_tail_mean) << ',' << r.reference_dofs << '\n';
}

std::string csv_file_name(Experiment experiment, double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", s);
  return to_string(experiment) + "_s" + buf + ".csv";
}

ExperimentOutput run_experiment(const ExperimentSpec& spec, const std::filesystem::path& dir) {
  if (spec.s_values.empty()) throw std::invalid_argument("no s values given");
  std::filesystem::create_directories(dir);
  ExperimentOutput out;
  auto rank = [](StopReason r) { return r == StopReason::IterationCap ? 2 : r == StopReason::BudgetReached ? 1 : 0; };
  for (double s : spec.s_values) {
    AfemResult result = run_config(spec.experiment, make_config(spec, s));
    const auto path = dir / csv_file_name(spec.experiment, s);
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot open " + path.string());
    write_records(file, result.records);
    if (!file) throw std::runtime_error("write failed: " + path.string());
    out.summaries.push_back(summarize(s, result));
    if (rank(result.stop) > rank(out.worst_stop)) out.worst_stop = result.stop;
    out.results.push_back(std::move(result));
  }
  const auto path = dir / (to_string(spec.experiment) + "_summary.csv");
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open " + path.string());
  write_summary(file, out.summaries);
  if (!file) throw std::runtime_error("write failed: " + path.string());
  return out;
}

ExperimentSpec read_experiment_config(const std::filesystem::path& file) {
  boost::property_tree::ptree tree;
  boost::property_tree::read_ini(file.string(), tree);
  const auto& e = tree.get_child("experiment");
  ExperimentSpec spec;
  spec.experiment = parse_experiment(e.get<std::string>("name"));
  if (auto v = e.get_optional<std::string>("s")) spec.s_values = parse_list(*v);
  if (auto v = e.get_optional<double>("theta")) spec.theta = *v;
  if (auto v = e.get_optional<long long>("budget")) spec.dof_budget = *v;
  if (auto v = e.get_optional<int>("max_iterations")) spec.max_iterations = *v;
  if (auto v = e.get_optional<bool>("enforce_mesh_condition")) spec.enforce_mesh_condition = *v;
  if (auto v = e.get_optional<std::string>("space")) spec.space = parse_local_space(*v);
  if (auto v = e.get_optional<std::string>("gamma_policy")) spec.gamma_policy = parse_gamma_policy(*v);
  if (auto v = e.get_optional<double>("initial_h")) spec.initial_h = *v;
  return spec;
}

}  // namespace fracafem
