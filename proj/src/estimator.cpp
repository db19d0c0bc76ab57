#include "fracafem/estimator.hpp"

#include "fracafem/errors.hpp"
#include "fracafem/parallel.hpp"
#include "fracafem/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fracafem {

void Banded2::apply(const double* x, double* y) const {
  for (int k = 0; k < n; ++k) {
    double v = band[0][k] * x[k];
    if (k + 1 < n) v += band[1][k] * x[k + 1];
    if (k + 2 < n) v += band[2][k] * x[k + 2];
    if (k >= 1) v += band[1][k - 1] * x[k - 1];
    if (k >= 2) v += band[2][k - 2] * x[k - 2];
    y[k] = v;
  }
}

Eigen::MatrixXd Banded2::dense() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int d = 0; d <= 2; ++d)
    for (int k = 0; k + d < n; ++k) {
      a(k, k + d) = band[d][k];
      a(k + d, k) = band[d][k];
    }
  return a;
}

LocalYMatrices local_y_matrices(const YPartition& ypart, double alpha) {
  const int m = ypart.M();
  const int n = 2 * m;
  LocalYMatrices out;
  for (Banded2* b : {&out.mass, &out.stiffness}) {
    b->n = n;
    for (auto& v : b->band) v.assign(n, 0.0);
  }
  out.hat_flux.resize(m);
  out.bubble_flux.resize(m);
  out.bubble_stiffness.resize(m);
  out.interval_mass.resize(m);
  for (int k = 0; k < m; ++k) {
    const IntervalMatrices im = interval_matrices(ypart.nodes[k], ypart.nodes[k + 1], alpha, 2);
    out.hat_flux[k] = im.stiffness(1, 1);
    out.bubble_flux[k] = im.stiffness(2, 1);
    out.bubble_stiffness[k] = im.stiffness(2, 2);
    const auto& mm = im.mass;
    out.interval_mass[k] = {mm(0, 0), mm(0, 1), mm(0, 2), mm(1, 1), mm(1, 2), mm(2, 2)};
    // local basis (left hat, right hat, bubble) -> (2k, 2k+2, 2k+1)
    const int idx[3] = {2 * k, 2 * k + 2, 2 * k + 1};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int i = idx[a];
        const int j = idx[b];
        if (i >= n || j >= n || j < i) continue;
        out.mass.band[j - i][i] += im.mass(a, b);
        out.stiffness.band[j - i][i] += im.stiffness(a, b);
      }
  }
  return out;
}

void LocalYMatrices::apply_stiffness_to_hats(const double* v, double* out) const {
  const int m = static_cast<int>(hat_flux.size());
  std::fill(out, out + 2 * m, 0.0);
  for (int k = 0; k < m; ++k) {
    const double dv = (k + 1 < m ? v[k + 1] : 0.0) - v[k];
    out[2 * k] -= hat_flux[k] * dv;
    out[2 * k + 1] += bubble_flux[k] * dv;
    if (k + 1 < m) out[2 * k + 2] += hat_flux[k] * dv;
  }
}

namespace {

// Solves (lambda * mass + stiffness) x = rhs in place. Bubbles are condensed
// interval by interval; the hat system is factored with pivots written as
// |coupling| + excess, which keeps the nearly floating bottom rows accurate
// on strongly graded partitions.
void condensed_solve(const LocalYMatrices& y, double lambda, double* rhs, std::vector<double>& work) {
  const int m = static_cast<int>(y.hat_flux.size());
  work.assign(5 * static_cast<std::size_t>(m), 0.0);
  double* g = work.data();        // condensed hat load
  double* o = g + m;              // coupling of levels k, k+1
  double* r = o + m;              // excess of level k
  double* d = r + m;              // pivots
  double* den = d + m;            // bubble pivots
  for (int k = 0; k < m; ++k) {
    const auto& mm = y.interval_mass[k];
    const double w = y.hat_flux[k];
    const double c = y.bubble_flux[k];
    den[k] = lambda * mm[5] + y.bubble_stiffness[k];
    const double weff = w - c * c / den[k];
    const double r00 = mm[0] + (2.0 * c * mm[2] - lambda * mm[2] * mm[2]) / den[k];
    const double r11 = mm[3] - (2.0 * c * mm[4] + lambda * mm[4] * mm[4]) / den[k];
    const double r01 = mm[1] - (c * (mm[2] - mm[4]) + lambda * mm[2] * mm[4]) / den[k];
    const double fb = rhs[2 * k + 1];
    g[k] += rhs[2 * k] - (lambda * mm[2] - c) * fb / den[k];
    if (k + 1 == m) {
      r[k] += weff + lambda * r00;
      break;
    }
    g[k + 1] -= (lambda * mm[4] + c) * fb / den[k];
    o[k] = -weff + lambda * r01;
    if (o[k] <= 0.0) {
      r[k] += lambda * (r00 + r01);
      r[k + 1] += lambda * (r11 + r01);
    } else {
      r[k] += 2.0 * weff + lambda * (r00 - r01);
      r[k + 1] += 2.0 * weff + lambda * (r11 - r01);
    }
  }
  double q = 0.0;
  for (int k = 0; k < m; ++k) {
    double qk = r[k];
    if (k > 0) {
      const double c = std::abs(o[k - 1]);
      qk += c * q / (c + q);
    }
    if (!(qk > 0.0)) throw NumericalError("local problem is not positive definite");
    q = qk;
    d[k] = (k + 1 < m ? std::abs(o[k]) : 0.0) + q;
  }
  for (int k = 1; k < m; ++k) g[k] -= o[k - 1] / d[k - 1] * g[k - 1];
  for (int k = 0; k < m; ++k) g[k] /= d[k];
  for (int k = m - 2; k >= 0; --k) g[k] -= o[k] / d[k] * g[k + 1];
  for (int k = 0; k < m; ++k) {
    const auto& mm = y.interval_mass[k];
    const double lo = g[k];
    const double hi = k + 1 < m ? g[k + 1] : 0.0;
    const double coupled = lambda * (mm[2] * lo + mm[4] * hi) + y.bubble_flux[k] * (hi - lo);
    rhs[2 * k + 1] = (rhs[2 * k + 1] - coupled) / den[k];
    rhs[2 * k] = lo;
  }
}

double element_deviation(const BaseMesh& base, int e, const ScalarField& f, int degree) {
  const quad::RuleSimplex rule = quad::simplex_rule(base.dim(), degree);
  std::vector<double> vals(rule.weights.size());
  double mean = 0.0;
  for (std::size_t q = 0; q < vals.size(); ++q) {
    const Point x = map_to_element(base, e, rule.bary[q]);
    vals[q] = f(x);
    if (!std::isfinite(vals[q])) {
      std::ostringstream msg;
      msg << "non-finite data value at (" << x[0] << ", " << x[1] << ")";
      throw DataError(msg.str());
    }
    mean += rule.weights[q] * vals[q];
  }
  double dev = 0.0;
  for (std::size_t q = 0; q < vals.size(); ++q) dev += rule.weights[q] * (vals[q] - mean) * (vals[q] - mean);
  return dev * base.measure(e);
}

double cell_flux_oscillation_sq(const CylinderMesh& cyl, const std::vector<double>& values, int cell,
                                double alpha) {
  const BaseMesh& base = cyl.base();
  const auto [e, k] = cyl.cell_of(cell);
  const auto verts = base.element_vertices(e);
  const int nv = static_cast<int>(verts.size());
  const auto g = barycentric_gradients(base, e);
  const double y0 = cyl.ypart().nodes[k];
  const double y1 = cyl.ypart().nodes[k + 1];
  const double h = y1 - y0;
  const double area = base.measure(e);
  Point a{0.0, 0.0}, b{0.0, 0.0};
  std::array<double, 3> c{0.0, 0.0, 0.0};
  for (int i = 0; i < nv; ++i) {
    const double v0 = values[cyl.node_id(verts[i], k)];
    const double v1 = values[cyl.node_id(verts[i], k + 1)];
    c[i] = v1 - v0;
    for (int d = 0; d < 2; ++d) {
      a[d] += g[i][d] * v0;
      b[d] += g[i][d] * c[i];
    }
  }
  const auto mu = shifted_weighted_moments(y0, y1, alpha, 2);
  const double nu0 = weighted_moment(y0, y1, -alpha, 0);
  const double aa = a[0] * a[0] + a[1] * a[1];
  const double ab = a[0] * b[0] + a[1] * b[1];
  const double bb = b[0] * b[0] + b[1] * b[1];
  double csq = 0.0, cmean = 0.0;
  const double mscale = nv == 2 ? 1.0 / 6.0 : 1.0 / 12.0;
  for (int i = 0; i < nv; ++i) {
    cmean += c[i] / nv;
    for (int j = 0; j < nv; ++j) csq += c[i] * c[j] * mscale * (i == j ? 2.0 : 1.0);
  }
  const double ixx = area * (aa * mu[0] + 2.0 * ab * mu[1] + bb * mu[2]);
  const double iyy = area * csq * mu[0] / (h * h);
  const double vol = area * h;
  const Point sig_x{area * (a[0] * mu[0] + b[0] * mu[1]) / vol, area * (a[1] * mu[0] + b[1] * mu[1]) / vol};
  const double sig_y = mu[0] * area * cmean / h / vol;
  const Point gx{area * h * (a[0] + 0.5 * b[0]), area * h * (a[1] + 0.5 * b[1])};
  const double gy = area * cmean;
  const double sig_sq = sig_x[0] * sig_x[0] + sig_x[1] * sig_x[1] + sig_y * sig_y;
  const double val = ixx + iyy - 2.0 * (sig_x[0] * gx[0] + sig_x[1] * gx[1] + sig_y * gy) + sig_sq * area * nu0;
  // Closed-form cancellation leaves round-off of relative size eps.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * (ixx + iyy);
  return val > floor ? val : 0.0;
}

// Star x-dofs: per star element, enriched local index -> star dof or -1.
struct StarDofs {
  int nx = 0;
  std::vector<std::array<int, 7>> map;
  std::vector<int> verts;                  // every vertex of the star
  std::vector<std::array<int, 3>> vmap;    // element local vertex -> index in verts
};

StarDofs enumerate_star_dofs(const BaseMesh& base, const Star& star, LocalSpace space) {
  const int dim = base.dim();
  const int nb = enriched_basis_size(dim, space);
  const int z = star.center;
  const bool z_free = !base.is_boundary(z);
  StarDofs out;
  std::map<long long, int> ids;
  std::map<int, int> vids;
  auto id_of = [&](int kind, int id) {
    const long long key = static_cast<long long>(kind) * (1LL << 40) + id;
    auto [it, inserted] = ids.emplace(key, out.nx);
    if (inserted) ++out.nx;
    return it->second;
  };
  for (int e : star.elements) {
    const auto verts = base.element_vertices(e);
    std::array<int, 7> m;
    m.fill(-1);
    std::array<int, 3> vm{-1, -1, -1};
    for (int a = 0; a < dim + 1; ++a) {
      auto [it, inserted] = vids.emplace(verts[a], static_cast<int>(out.verts.size()));
      if (inserted) out.verts.push_back(verts[a]);
      vm[a] = it->second;
      if (verts[a] == z && z_free) m[a] = id_of(0, z);
    }
    if (dim == 1) {
      m[2] = id_of(2, e);
    } else {
      for (int i = 0; i < 3; ++i) {
        if (verts[i] == z) continue;  // edge i is opposite vertex i
        const int edge = base.element_edge(e, i);
        if (base.edge_multiplicity(edge) == 2) m[3 + i] = id_of(1, edge);
      }
      if (nb == 7) m[6] = id_of(2, e);
    }
    out.map.push_back(m);
    out.vmap.push_back(vm);
  }
  return out;
}

StarProblem build_and_solve(const Star& star, const DiscreteField& field, const ScalarField& f,
                            const FractionalParams& params, LocalSpace space, int data_degree,
                            std::shared_ptr<const LocalYMatrices> ymats) {
  const CylinderMesh& cyl = *field.mesh;
  const BaseMesh& base = cyl.base();
  const int dim = base.dim();
  const int m = cyl.M();
  const int nb = enriched_basis_size(dim, space);
  const StarDofs dofs = enumerate_star_dofs(base, star, space);
  StarProblem sp;
  sp.star = star;
  sp.space = space;
  sp.nx = dofs.nx;
  sp.ny = 2 * m;
  sp.y = ymats;
  const int nx = sp.nx;
  const int ny = sp.ny;
  const int nverts = static_cast<int>(dofs.verts.size());
  sp.kx = Eigen::MatrixXd::Zero(nx, nx);
  sp.mx = Eigen::MatrixXd::Zero(nx, nx);
  sp.load = Eigen::MatrixXd::Zero(nx, ny);
  sp.eta = Eigen::MatrixXd::Zero(nx, ny);
  if (nx == 0) return sp;

  Eigen::MatrixXd kc = Eigen::MatrixXd::Zero(nx, nverts);
  Eigen::MatrixXd mc = Eigen::MatrixXd::Zero(nx, nverts);
  const quad::RuleSimplex rule = quad::simplex_rule(dim, data_degree);
  std::array<double, 7> phi{};
  for (std::size_t s = 0; s < star.elements.size(); ++s) {
    const int e = star.elements[s];
    const auto& map = dofs.map[s];
    const ElementXMatrices em = enriched_element_matrices(base, e, space);
    for (int i = 0; i < nb; ++i) {
      if (map[i] < 0) continue;
      for (int j = 0; j < nb; ++j) {
        if (map[j] >= 0) {
          sp.kx(map[i], map[j]) += em.stiffness(i, j);
          sp.mx(map[i], map[j]) += em.mass(i, j);
        }
      }
      for (int a = 0; a < dim + 1; ++a) {
        kc(map[i], dofs.vmap[s][a]) += em.stiffness(i, a);
        mc(map[i], dofs.vmap[s][a]) += em.mass(i, a);
      }
    }
    const double area = base.measure(e);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const Point x = map_to_element(base, e, rule.bary[q]);
      const double fv = f(x);
      if (!std::isfinite(fv)) {
        std::ostringstream msg;
        msg << "non-finite data value at (" << x[0] << ", " << x[1] << ")";
        throw DataError(msg.str());
      }
      enriched_basis_values(dim, space, rule.bary[q], std::span<double>(phi.data(), nb));
      for (int i = 0; i < nb; ++i)
        if (map[i] >= 0) sp.load(map[i], 0) += params.d_s * rule.weights[q] * area * fv * phi[i];
    }
  }

  // Subtract a(V, W): V has hat coefficients only, embedded at even y-indices.
  Eigen::MatrixXd vmat(nverts, m);
  for (int a = 0; a < nverts; ++a)
    for (int k = 0; k < m; ++k) vmat(a, k) = field.values[cyl.node_id(dofs.verts[a], k)];
  const Eigen::MatrixXd z1 = kc * vmat;
  const Eigen::MatrixXd z2 = mc * vmat;
  std::vector<double> emb1(ny, 0.0), row2(m), r1(ny), r2(ny);
  for (int i = 0; i < nx; ++i) {
    for (int k = 0; k < m; ++k) {
      emb1[2 * k] = z1(i, k);
      row2[k] = z2(i, k);
    }
    ymats->mass.apply(emb1.data(), r1.data());
    ymats->apply_stiffness_to_hats(row2.data(), r2.data());
    for (int p = 0; p < ny; ++p) sp.load(i, p) -= r1[p] + r2[p];
  }

  // Fast diagonalization: S^T Mx S = I, S^T Kx S = diag(lambda).
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sp.kx, sp.mx);
  if (es.info() != Eigen::Success) throw NumericalError("star eigenproblem failed");
  const Eigen::MatrixXd& s = es.eigenvectors();
  Eigen::MatrixXd modal = s.transpose() * sp.load;
  std::vector<double> rhs(ny), work;
  for (int mode = 0; mode < nx; ++mode) {
    for (int p = 0; p < ny; ++p) rhs[p] = modal(mode, p);
    condensed_solve(*ymats, es.eigenvalues()[mode], rhs.data(), work);
    for (int p = 0; p < ny; ++p) modal(mode, p) = rhs[p];
  }
  sp.eta = s * modal;
  return sp;
}

}  // namespace

Eigen::MatrixXd StarProblem::dense_matrix() const {
  const Eigen::MatrixXd my = y->mass.dense();
  const Eigen::MatrixXd ky = y->stiffness.dense();
  Eigen::MatrixXd a(nx * ny, nx * ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nx; ++j)
      a.block(i * ny, j * ny, ny, ny) = kx(i, j) * my + mx(i, j) * ky;
  return a;
}

Eigen::VectorXd StarProblem::load_vector() const {
  Eigen::VectorXd v(nx * ny);
  for (int i = 0; i < nx; ++i)
    for (int p = 0; p < ny; ++p) v[i * ny + p] = load(i, p);
  return v;
}

Eigen::VectorXd StarProblem::solution_vector() const {
  Eigen::VectorXd v(nx * ny);
  for (int i = 0; i < nx; ++i)
    for (int p = 0; p < ny; ++p) v[i * ny + p] = eta(i, p);
  return v;
}

StarProblem solve_local(const Star& star, const DiscreteField& field, const ScalarField& f,
                        const FractionalParams& params, LocalSpace space, int data_degree) {
  auto ymats = std::make_shared<const LocalYMatrices>(local_y_matrices(field.mesh->ypart(), params.alpha));
  return build_and_solve(star, field, f, params, space, data_degree, ymats);
}

double indicator(const StarProblem& sp) {
  if (sp.nx == 0) return 0.0;
  return std::sqrt(std::max(0.0, sp.eta.cwiseProduct(sp.load).sum()));
}

double oscillation_node(const BaseMesh& base, const Star& star, const ScalarField& f,
                        const FractionalParams& params, int degree) {
  double dev = 0.0;
  for (int e : star.elements) dev += element_deviation(base, e, f, degree);
  return std::sqrt(params.d_s * std::pow(star.h, 2.0 * params.s) * dev);
}

double oscillation_flux(const Star& star, const DiscreteField& field, double alpha) {
  const CylinderMesh& cyl = *field.mesh;
  double sum = 0.0;
  for (int cell : cylindrical_star_cells(cyl, star))
    sum += cell_flux_oscillation_sq(cyl, field.values, cell, alpha);
  return std::sqrt(sum);
}

double IndicatorSet::oscillation(int v) const {
  const double flux = osc_flux.empty() ? 0.0 : osc_flux[v];
  return std::sqrt(osc_data[v] * osc_data[v] + flux * flux);
}

namespace {

void fill_elementwise(IndicatorSet& ind, const BaseMesh& base, const std::vector<double>& dev,
                      const FractionalParams& params) {
  const int ne = static_cast<int>(base.num_elements());
  ind.element_estimator.assign(ne, 0.0);
  ind.element_oscillation.assign(ne, 0.0);
  ind.element_tau.assign(ne, 0.0);
  for (int e = 0; e < ne; ++e) {
    double est = 0.0, flux = 0.0;
    for (int v : base.element_vertices(e)) {
      const double share = 1.0 / static_cast<double>(base.elements_of_vertex(v).size());
      est += ind.estimator[v] * ind.estimator[v] * share;
      if (!ind.osc_flux.empty()) flux += ind.osc_flux[v] * ind.osc_flux[v] * share;
    }
    const double osc = params.d_s * std::pow(base.diameter(e), 2.0 * params.s) * dev[e] + flux;
    ind.element_estimator[e] = std::sqrt(est);
    ind.element_oscillation[e] = std::sqrt(osc);
    ind.element_tau[e] = std::sqrt(est + osc);
  }
}

}  // namespace

IndicatorSet estimate_all(const DiscreteField& field, const ScalarField& f,
                          const FractionalParams& params, const EstimatorOptions& options) {
  const CylinderMesh& cyl = *field.mesh;
  const BaseMesh& base = cyl.base();
  const int nv = static_cast<int>(base.num_vertices());
  const int ne = static_cast<int>(base.num_elements());
  auto ymats = std::make_shared<const LocalYMatrices>(local_y_matrices(cyl.ypart(), params.alpha));

  std::vector<double> dev(ne);
  parallel_for(ne, [&](int e) { dev[e] = element_deviation(base, e, f, options.data_degree); });
  std::vector<double> cell_flux;
  if (options.flux_oscillation) {
    cell_flux.resize(cyl.num_cells());
    parallel_for(static_cast<int>(cyl.num_cells()), [&](int c) {
      cell_flux[c] = cell_flux_oscillation_sq(cyl, field.values, c, params.alpha);
    });
  }

  IndicatorSet ind;
  ind.estimator.assign(nv, 0.0);
  ind.osc_data.assign(nv, 0.0);
  ind.tau.assign(nv, 0.0);
  if (options.flux_oscillation) ind.osc_flux.assign(nv, 0.0);
  parallel_for(nv, [&](int v) {
    const Star st = star(base, v);
    const StarProblem sp = build_and_solve(st, field, f, params, options.space, options.data_degree, ymats);
    ind.estimator[v] = indicator(sp);
    double d = 0.0;
    for (int e : st.elements) d += dev[e];
    ind.osc_data[v] = std::sqrt(params.d_s * std::pow(st.h, 2.0 * params.s) * d);
    if (options.flux_oscillation) {
      double fl = 0.0;
      for (int e : st.elements)
        for (int k = 0; k < cyl.M(); ++k) fl += cell_flux[cyl.cell_id(e, k)];
      ind.osc_flux[v] = std::sqrt(fl);
    }
  });

  double est = 0.0, osc = 0.0;
  for (int v = 0; v < nv; ++v) {
    const double e2 = ind.estimator[v] * ind.estimator[v];
    const double o2 = ind.osc_data[v] * ind.osc_data[v] +
                      (ind.osc_flux.empty() ? 0.0 : ind.osc_flux[v] * ind.osc_flux[v]);
    ind.tau[v] = std::sqrt(e2 + o2);
    est += e2;
    osc += o2;
  }
  ind.total_estimator = std::sqrt(est);
  ind.total_oscillation = std::sqrt(osc);
  ind.total_tau = std::sqrt(est + osc);
  fill_elementwise(ind, base, dev, params);
  return ind;
}

void to_elementwise(IndicatorSet& ind, const BaseMesh& base, const ScalarField& f,
                    const FractionalParams& params, int degree) {
  if (ind.estimator.size() != base.num_vertices())
    throw ContractViolation("indicator set does not match the mesh");
  std::vector<double> dev(base.num_elements());
  for (std::size_t e = 0; e < dev.size(); ++e) dev[e] = element_deviation(base, static_cast<int>(e), f, degree);
  fill_elementwise(ind, base, dev, params);
}

double effectivity(const IndicatorSet& ind, double error) {
  if (!(error > 0.0)) throw std::domain_error("effectivity: error must be positive");
  return ind.total_tau / error;
}

void write_indicators(std::ostream& out, const IndicatorSet& ind) {
  out << "node,estimator,oscillation,tau\n";
  char buf[3][32];
  for (std::size_t v = 0; v < ind.estimator.size(); ++v) {
    std::snprintf(buf[0], sizeof buf[0], "%.17g", ind.estimator[v]);
    std::snprintf(buf[1], sizeof buf[1], "%.17g", ind.oscillation(static_cast<int>(v)));
    std::snprintf(buf[2], sizeof buf[2], "%.17g", ind.tau[v]);
    out << v << ',' << buf[0] << ',' << buf[1] << ',' << buf[2] << '\n';
  }
}

}  // namespace fracafem
