#include "fracafem/isotropic.hpp"

#include "fracafem/errors.hpp"
#include "fracafem/parallel.hpp"
#include "fracafem/quadrature.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace fracafem {

namespace {

struct WeightedPoint {
  Point x;
  double w;
};

// Slices the triangle at the middle vertex height; each slice is a trapezoid
// with linear x-limits, integrated by a y^alpha-weighted rule in y and
// Gauss-Legendre in x.
std::vector<WeightedPoint> weighted_triangle_rule(std::array<Point, 3> p, double alpha, int degree) {
  std::sort(p.begin(), p.end(), [](const Point& a, const Point& b) { return a[1] < b[1]; });
  if (p[0][1] < 0.0) throw GeometryError("weighted triangle rule needs y >= 0");
  const quad::Rule1D& gx = quad::gauss_legendre(degree / 2 + 1);
  auto x_at = [](const Point& a, const Point& b, double y) {
    return a[0] + (b[0] - a[0]) * (y - a[1]) / (b[1] - a[1]);
  };
  std::vector<WeightedPoint> out;
  auto slice = [&](double ya, double yb, const Point& l0, const Point& l1, const Point& r0, const Point& r1) {
    if (!(yb > ya)) return;
    const quad::Rule1D gy = weighted_interval_rule(ya, yb, alpha, degree + 1);
    for (std::size_t j = 0; j < gy.points.size(); ++j) {
      const double y = gy.points[j];
      const double xl = x_at(l0, l1, y);
      const double xr = x_at(r0, r1, y);
      const double width = std::abs(xr - xl);
      for (std::size_t i = 0; i < gx.points.size(); ++i)
        out.push_back({{xl + (xr - xl) * gx.points[i], y}, gy.weights[j] * width * gx.weights[i]});
    }
  };
  slice(p[0][1], p[1][1], p[0], p[1], p[0], p[2]);
  slice(p[1][1], p[2][1], p[1], p[2], p[0], p[2]);
  return out;
}

std::array<Point, 3> triangle_points(const BaseMesh& mesh, int e) {
  const auto v = mesh.element_vertices(e);
  return {mesh.vertex(v[0]), mesh.vertex(v[1]), mesh.vertex(v[2])};
}

std::array<double, 3> barycentric_at(const BaseMesh& mesh, int e, const std::array<Point, 3>& g,
                                     const Point& x) {
  const auto tri = triangle_points(mesh, e);
  const Point c{(tri[0][0] + tri[1][0] + tri[2][0]) / 3.0, (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0};
  std::array<double, 3> l{};
  for (int i = 0; i < 3; ++i) l[i] = 1.0 / 3.0 + g[i][0] * (x[0] - c[0]) + g[i][1] * (x[1] - c[1]);
  return l;
}

bool on_bottom(const BaseMesh& mesh, int a, int b) {
  return mesh.vertex(a)[1] == 0.0 && mesh.vertex(b)[1] == 0.0;
}

// Local index of the bottom edge (opposite vertex i) or -1.
int bottom_edge(const BaseMesh& mesh, int e) {
  const auto v = mesh.element_vertices(e);
  for (int i = 0; i < 3; ++i)
    if (on_bottom(mesh, v[(i + 1) % 3], v[(i + 2) % 3])) return i;
  return -1;
}

double edge_length(const BaseMesh& mesh, int a, int b) {
  const Point& p = mesh.vertex(a);
  const Point& q = mesh.vertex(b);
  return std::hypot(q[0] - p[0], q[1] - p[1]);
}

double checked(const ScalarField& f, const Point& x) {
  const double v = f(x);
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "non-finite data value at (" << x[0] << ", " << x[1] << ")";
    throw DataError(msg.str());
  }
  return v;
}

}  // namespace

double weighted_triangle_integral(const std::array<Point, 3>& tri, double alpha, int degree,
                                  const std::function<double(const Point&)>& g) {
  double sum = 0.0;
  for (const auto& q : weighted_triangle_rule(tri, alpha, degree)) sum += q.w * g(q.x);
  return sum;
}

bool isotropic_dirichlet(const Point& p, double Y) {
  return p[0] == 0.0 || p[0] == 1.0 || p[1] == Y;
}

IsotropicSystem assemble_isotropic(std::shared_ptr<const BaseMesh> mesh, double Y,
                                   const FractionalParams& params, const ScalarField& f, int load_degree) {
  IsotropicSystem sys;
  sys.mesh = mesh;
  sys.Y = Y;
  const int nv = static_cast<int>(mesh->num_vertices());
  sys.free_of_vertex.assign(nv, -1);
  int nfree = 0;
  for (int v = 0; v < nv; ++v)
    if (!isotropic_dirichlet(mesh->vertex(v), Y)) sys.free_of_vertex[v] = nfree++;
  std::vector<Eigen::Triplet<double>> trips;
  sys.rhs = Eigen::VectorXd::Zero(nfree);
  const quad::RuleSimplex edge_rule = quad::simplex_rule(1, load_degree);
  for (int e = 0; e < static_cast<int>(mesh->num_elements()); ++e) {
    const auto v = mesh->element_vertices(e);
    const auto g = barycentric_gradients(*mesh, e);
    const double w = weighted_triangle_integral(triangle_points(*mesh, e), params.alpha, 0,
                                                [](const Point&) { return 1.0; });
    for (int a = 0; a < 3; ++a) {
      const int i = sys.free_of_vertex[v[a]];
      if (i < 0) continue;
      for (int b = 0; b < 3; ++b) {
        const int j = sys.free_of_vertex[v[b]];
        if (j >= 0) trips.emplace_back(i, j, w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
      }
    }
    const int be = bottom_edge(*mesh, e);
    if (be < 0) continue;
    const int va = v[(be + 1) % 3];
    const int vb = v[(be + 2) % 3];
    const double len = edge_length(*mesh, va, vb);
    for (std::size_t q = 0; q < edge_rule.weights.size(); ++q) {
      const double t = edge_rule.bary[q][1];
      const Point x{(1.0 - t) * mesh->vertex(va)[0] + t * mesh->vertex(vb)[0], 0.0};
      const double fv = params.d_s * edge_rule.weights[q] * len * checked(f, x);
      if (sys.free_of_vertex[va] >= 0) sys.rhs[sys.free_of_vertex[va]] += fv * (1.0 - t);
      if (sys.free_of_vertex[vb] >= 0) sys.rhs[sys.free_of_vertex[vb]] += fv * t;
    }
  }
  sys.matrix.resize(nfree, nfree);
  sys.matrix.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

std::vector<double> solve_isotropic(const IsotropicSystem& sys) {
  std::vector<double> values(sys.mesh->num_vertices(), 0.0);
  if (sys.rhs.size() == 0) return values;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(sys.matrix);
  if (ldlt.info() != Eigen::Success) throw NumericalError("isotropic system factorization failed");
  const Eigen::VectorXd x = ldlt.solve(sys.rhs);
  for (std::size_t v = 0; v < values.size(); ++v)
    if (sys.free_of_vertex[v] >= 0) values[v] = x[sys.free_of_vertex[v]];
  return values;
}

double isotropic_error(const BaseMesh& mesh, const std::vector<double>& values, const ScalarField& f,
                       const ScalarField& u_exact, const FractionalParams& params, int degree) {
  const quad::RuleSimplex rule = quad::simplex_rule(1, degree);
  double sum = 0.0;
  for (int e = 0; e < static_cast<int>(mesh.num_elements()); ++e) {
    const int be = bottom_edge(mesh, e);
    if (be < 0) continue;
    const auto v = mesh.element_vertices(e);
    const int va = v[(be + 1) % 3];
    const int vb = v[(be + 2) % 3];
    const double len = edge_length(mesh, va, vb);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const double t = rule.bary[q][1];
      const Point x{(1.0 - t) * mesh.vertex(va)[0] + t * mesh.vertex(vb)[0], 0.0};
      const double tr = (1.0 - t) * values[va] + t * values[vb];
      sum += rule.weights[q] * len * checked(f, x) * (checked(u_exact, x) - tr);
    }
  }
  return std::sqrt(std::max(0.0, params.d_s * sum));
}

IsotropicIndicators estimate_isotropic(const BaseMesh& mesh, double Y, const std::vector<double>& values,
                                       const ScalarField& f, const FractionalParams& params, int degree) {
  constexpr int nb = 7;
  const LocalSpace space = LocalSpace::P2Bubble;
  const int ne = static_cast<int>(mesh.num_elements());
  const int nv = static_cast<int>(mesh.num_vertices());
  const quad::RuleSimplex edge_rule = quad::simplex_rule(1, degree);

  // Weighted enriched stiffness and bottom-edge data per element.
  std::vector<Eigen::Matrix<double, nb, nb>> kel(ne);
  std::vector<Eigen::Matrix<double, nb, 1>> fel(ne);
  std::vector<double> dev(ne, 0.0);
  parallel_for(ne, [&](int e) {
    const auto g = barycentric_gradients(mesh, e);
    std::array<Point, nb> grad{};
    Eigen::Matrix<double, nb, nb> k = Eigen::Matrix<double, nb, nb>::Zero();
    for (const auto& q : weighted_triangle_rule(triangle_points(mesh, e), params.alpha, 4)) {
      enriched_basis_gradients(2, space, barycentric_at(mesh, e, g, q.x), g, grad);
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) k(i, j) += q.w * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
    }
    kel[e] = k;
    fel[e].setZero();
    const int be = bottom_edge(mesh, e);
    if (be < 0) return;
    const auto v = mesh.element_vertices(e);
    const int a = (be + 1) % 3;
    const int b = (be + 2) % 3;
    const double len = edge_length(mesh, v[a], v[b]);
    std::vector<double> fv(edge_rule.weights.size());
    double mean = 0.0;
    std::array<double, nb> phi{};
    for (std::size_t q = 0; q < fv.size(); ++q) {
      const double t = edge_rule.bary[q][1];
      std::array<double, 3> l{};
      l[a] = 1.0 - t;
      l[b] = t;
      fv[q] = checked(f, map_to_element(mesh, e, l));
      mean += edge_rule.weights[q] * fv[q];
      enriched_basis_values(2, space, l, phi);
      for (int i = 0; i < nb; ++i) fel[e][i] += params.d_s * edge_rule.weights[q] * len * fv[q] * phi[i];
    }
    for (std::size_t q = 0; q < fv.size(); ++q) dev[e] += edge_rule.weights[q] * len * (fv[q] - mean) * (fv[q] - mean);
  });

  IsotropicIndicators ind;
  ind.estimator.assign(nv, 0.0);
  ind.oscillation.assign(nv, 0.0);
  ind.tau.assign(nv, 0.0);
  parallel_for(nv, [&](int z) {
    const auto elems = mesh.elements_of_vertex(z);
    const bool z_free = !isotropic_dirichlet(mesh.vertex(z), Y);
    std::map<long long, int> ids;
    auto id_of = [&](int kind, int id) {
      const auto [it, inserted] = ids.emplace(static_cast<long long>(kind) * (1LL << 40) + id,
                                              static_cast<int>(ids.size()));
      return it->second;
    };
    std::vector<std::array<int, nb>> maps;
    for (int e : elems) {
      const auto v = mesh.element_vertices(e);
      std::array<int, nb> m;
      m.fill(-1);
      for (int a = 0; a < 3; ++a)
        if (v[a] == z && z_free) m[a] = id_of(0, z);
      for (int i = 0; i < 3; ++i) {
        const int a = v[(i + 1) % 3];
        const int b = v[(i + 2) % 3];
        if (a != z && b != z) continue;
        const int edge = mesh.element_edge(e, i);
        if (mesh.edge_multiplicity(edge) == 2 || on_bottom(mesh, a, b)) m[3 + i] = id_of(1, edge);
      }
      m[6] = id_of(2, e);
      maps.push_back(m);
    }
    const int n = static_cast<int>(ids.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    double d = 0.0;
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < elems.size(); ++s) {
      const int e = elems[s];
      const auto v = mesh.element_vertices(e);
      const auto& m = maps[s];
      h = std::min(h, mesh.diameter(e));
      d += dev[e];
      for (int i = 0; i < nb; ++i) {
        if (m[i] < 0) continue;
        double r = fel[e][i];
        for (int c = 0; c < 3; ++c) r -= kel[e](i, c) * values[v[c]];
        b[m[i]] += r;
        for (int j = 0; j < nb; ++j)
          if (m[j] >= 0) a(m[i], m[j]) += kel[e](i, j);
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw NumericalError("patch problem is not positive definite");
    const Eigen::VectorXd eta = llt.solve(b);
    ind.estimator[z] = std::sqrt(std::max(0.0, eta.dot(b)));
    ind.oscillation[z] = std::sqrt(params.d_s * std::pow(h, 2.0 * params.s) * d);
  });

  double est = 0.0, osc = 0.0;
  for (int z = 0; z < nv; ++z) {
    const double e2 = ind.estimator[z] * ind.estimator[z];
    const double o2 = ind.oscillation[z] * ind.oscillation[z];
    ind.tau[z] = std::sqrt(e2 + o2);
    est += e2;
    osc += o2;
  }
  ind.total_estimator = std::sqrt(est);
  ind.total_oscillation = std::sqrt(osc);
  ind.total_tau = std::sqrt(est + osc);
  ind.element_tau.assign(ne, 0.0);
  for (int e = 0; e < ne; ++e) {
    double t = params.d_s * std::pow(mesh.diameter(e), 2.0 * params.s) * dev[e];
    for (int v : mesh.element_vertices(e))
      t += ind.estimator[v] * ind.estimator[v] / static_cast<double>(mesh.elements_of_vertex(v).size());
    ind.element_tau[e] = std::sqrt(t);
  }
  return ind;
}

AfemResult run_isotropic(const AfemConfig& config) {
  config.validate();
  if (domain_dimension(config.domain) != 1)
    throw std::invalid_argument("the isotropic baseline is implemented for n = 1");
  const FractionalParams params = FractionalParams::from_s(config.s);
  const double Y = truncation_height(static_cast<std::size_t>(config.dof_budget));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  AfemResult result;
  try {
    const int nx = static_cast<int>(std::ceil(1.0 / config.initial_h - 1e-12));
    const int ny = static_cast<int>(std::ceil(Y / config.initial_h - 1e-12));
    auto mesh = std::make_shared<const BaseMesh>(build_rectangle_mesh(1.0, Y, nx, ny));
    for (int iter = 1;; ++iter) {
      const auto t0 = std::chrono::steady_clock::now();
      const IsotropicSystem sys = assemble_isotropic(mesh, Y, params, config.f, config.load_degree);
      const std::vector<double> values = solve_isotropic(sys);
      const IsotropicIndicators ind = estimate_isotropic(*mesh, Y, values, config.f, params, config.data_degree);

      IterationRecord rec;
      rec.iter = iter;
      long long bottom = 0;
      double aspect = 0.0;
      for (int e = 0; e < static_cast<int>(mesh->num_elements()); ++e) {
        if (bottom_edge(*mesh, e) < 0) continue;
        ++bottom;
        double ymax = 0.0;
        for (int v : mesh->element_vertices(e)) ymax = std::max(ymax, mesh->vertex(v)[1]);
        aspect += mesh->diameter(e) / ymax;
      }
      rec.n_base_elems = bottom;
      rec.n_cyl_cells = static_cast<long long>(mesh->num_elements());
      rec.dofs = sys.rhs.size();
      rec.M = 0;
      rec.Y = Y;
      rec.estimator = ind.total_estimator;
      rec.oscillation = ind.total_oscillation;
      rec.tau = ind.total_tau;
      if (config.marking == MarkingMode::Elements) {
        double t = 0.0;
        for (double v : ind.element_tau) t += v * v;
        rec.oscillation = std::sqrt(std::max(0.0, t - rec.estimator * rec.estimator));
        rec.tau = std::sqrt(rec.estimator * rec.estimator + rec.oscillation * rec.oscillation);
      }
      rec.error = config.u_exact ? isotropic_error(*mesh, values, config.f, config.u_exact, params, config.data_degree)
                                 : nan;
      rec.effectivity = rec.error > 0.0 ? rec.tau / rec.error : nan;
      rec.aspect_bottom_mean = bottom > 0 ? aspect / static_cast<double>(bottom) : nan;
      rec.mesh_cond_worst = nan;
      rec.solver_iters = 0;
      result.meshes.push_back(mesh);

      bool stop = false;
      if (!(ind.total_tau > 0.0)) {
        result.stop = StopReason::Converged;
        stop = true;
      } else if (iter >= config.max_iterations) {
        result.stop = StopReason::IterationCap;
        stop = true;
      } else {
        const std::vector<int> marked = config.marking == MarkingMode::Stars
                                            ? star_elements(*mesh, mark_dorfler(ind.tau, config.theta))
                                            : mark_dorfler(ind.element_tau, config.theta);
        auto next = std::make_shared<const BaseMesh>(bisect(*mesh, marked));
        long long free = 0;
        for (const Point& p : next->vertices()) free += isotropic_dirichlet(p, Y) ? 0 : 1;
        if (free > config.dof_budget) {
          result.stop = StopReason::BudgetReached;
          stop = true;
        } else {
          mesh = next;
        }
      }
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      result.records.push_back(rec);
      if (stop) break;
    }
  } catch (const std::exception& ex) {
    throw AfemRunError(ex.what(), result.records);
  }
  return result;
}

}  // namespace fracafem
