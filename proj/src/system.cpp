#include "fracafem/system.hpp"

#include "fracafem/errors.hpp"
#include "fracafem/quadrature.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fracafem {

double CsrMatrix::at(int i, int j) const {
  const auto first = col.begin() + row_ptr[i];
  const auto last = col.begin() + row_ptr[i + 1];
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return val[it - col.begin()];
}

namespace {

template <class Real, class Out>
void apply_chain(const std::vector<double>& w, const double* x, Out* y, int n) {
  for (int k = 0; k < n; ++k) {
    const Real up = static_cast<Real>(x[k]) - (k + 1 < n ? static_cast<Real>(x[k + 1]) : Real(0));
    Real v = static_cast<Real>(w[k]) * up;
    if (k > 0) v += static_cast<Real>(w[k - 1]) * (static_cast<Real>(x[k]) - static_cast<Real>(x[k - 1]));
    y[k] = static_cast<Out>(v);
  }
}

}  // namespace

void SymTridiagonal::apply_extended(const double* x, long double* y) const {
  using real = long double;
  const int n = size();
  if (!chain.empty()) return apply_chain<real>(chain, x, y, n);
  for (int k = 0; k < n; ++k) {
    real v = static_cast<real>(diag[k]) * x[k];
    if (k > 0) v += static_cast<real>(off[k - 1]) * x[k - 1];
    if (k + 1 < n) v += static_cast<real>(off[k]) * x[k + 1];
    y[k] = v;
  }
}

void SymTridiagonal::apply(std::span<const double> x, std::span<double> y) const {
  const int n = size();
  if (!chain.empty()) return apply_chain<double>(chain, x.data(), y.data(), n);
  for (int k = 0; k < n; ++k) {
    double v = diag[k] * x[k];
    if (k > 0) v += off[k - 1] * x[k - 1];
    if (k + 1 < n) v += off[k] * x[k + 1];
    y[k] = v;
  }
}

DofMap make_dof_map(const CylinderMesh& cyl) {
  DofMap map;
  map.levels = cyl.M();
  const BaseMesh& base = cyl.base();
  map.free_of_vertex.assign(base.num_vertices(), -1);
  for (int v = 0; v < static_cast<int>(base.num_vertices()); ++v) {
    if (base.is_boundary(v)) continue;
    map.free_of_vertex[v] = static_cast<int>(map.vertex_of_free.size());
    map.vertex_of_free.push_back(v);
  }
  return map;
}

void TensorOperator::apply(std::span<const double> x, std::span<double> y) const {
  const int m = my.size();
  const int nx = kx.rows;
  std::vector<double> t1(static_cast<std::size_t>(nx) * m);
  std::vector<double> t2(t1.size());
  for (int j = 0; j < nx; ++j) {
    my.apply(x.subspan(j * m, m), std::span(t1).subspan(j * m, m));
    ky.apply(x.subspan(j * m, m), std::span(t2).subspan(j * m, m));
  }
  for (int i = 0; i < nx; ++i) {
    double* yi = y.data() + static_cast<std::size_t>(i) * m;
    std::fill(yi, yi + m, 0.0);
    for (int p = kx.row_ptr[i]; p < kx.row_ptr[i + 1]; ++p) {
      const int j = kx.col[p];
      const double a = kx.val[p];
      const double b = mx.val[p];
      const double* p1 = t1.data() + static_cast<std::size_t>(j) * m;
      const double* p2 = t2.data() + static_cast<std::size_t>(j) * m;
      for (int k = 0; k < m; ++k) yi[k] += a * p1[k] + b * p2[k];
    }
  }
}

Eigen::VectorXd TensorOperator::residual(const Eigen::VectorXd& b, const Eigen::VectorXd& x) const {
  using real = long double;
  const int m = my.size();
  const int nx = kx.rows;
  std::vector<real> t1(static_cast<std::size_t>(nx) * m), t2(t1.size());
  for (int j = 0; j < nx; ++j) {
    const double* xj = x.data() + static_cast<std::size_t>(j) * m;
    real* u1 = t1.data() + static_cast<std::size_t>(j) * m;
    real* u2 = t2.data() + static_cast<std::size_t>(j) * m;
    my.apply_extended(xj, u1);
    ky.apply_extended(xj, u2);
  }
  Eigen::VectorXd r(size());
  std::vector<real> acc(m);
  for (int i = 0; i < nx; ++i) {
    for (int k = 0; k < m; ++k) acc[k] = b[static_cast<Eigen::Index>(i) * m + k];
    for (int p = kx.row_ptr[i]; p < kx.row_ptr[i + 1]; ++p) {
      const real a = kx.val[p];
      const real c = mx.val[p];
      const real* p1 = t1.data() + static_cast<std::size_t>(kx.col[p]) * m;
      const real* p2 = t2.data() + static_cast<std::size_t>(kx.col[p]) * m;
      for (int k = 0; k < m; ++k) acc[k] -= a * p1[k] + c * p2[k];
    }
    for (int k = 0; k < m; ++k) r[static_cast<Eigen::Index>(i) * m + k] = static_cast<double>(acc[k]);
  }
  return r;
}

namespace {

double tridiag_entry(const SymTridiagonal& t, int k, int l) {
  if (k == l) return t.diag[k];
  if (l == k + 1) return t.off[k];
  if (k == l + 1) return t.off[l];
  return 0.0;
}

}  // namespace

double TensorOperator::entry(int row, int col) const {
  const int m = my.size();
  const int i = row / m, k = row % m;
  const int j = col / m, l = col % m;
  return kx.at(i, j) * tridiag_entry(my, k, l) + mx.at(i, j) * tridiag_entry(ky, k, l);
}

Eigen::MatrixXd TensorOperator::dense() const {
  const int m = my.size();
  const int n = size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < kx.rows; ++i)
    for (int p = kx.row_ptr[i]; p < kx.row_ptr[i + 1]; ++p) {
      const int j = kx.col[p];
      for (int k = 0; k < m; ++k)
        for (int l = std::max(0, k - 1); l <= std::min(m - 1, k + 1); ++l)
          a(i * m + k, j * m + l) =
              kx.val[p] * tridiag_entry(my, k, l) + mx.val[p] * tridiag_entry(ky, k, l);
    }
  return a;
}

AssembledSystem assemble(std::shared_ptr<const CylinderMesh> mesh, const FractionalParams& params,
                         const ScalarField& f, int load_degree) {
  AssembledSystem sys;
  sys.mesh = mesh;
  sys.params = params;
  sys.dofs = make_dof_map(*mesh);
  const BaseMesh& base = mesh->base();
  const DofMap& dofs = sys.dofs;
  const int nx = static_cast<int>(dofs.vertex_of_free.size());
  const int m = mesh->M();

  CsrMatrix& kx = sys.matrix.kx;
  kx.rows = nx;
  kx.row_ptr.assign(nx + 1, 0);
  for (int i = 0; i < nx; ++i) {
    for (int w : base.vertex_neighbors(dofs.vertex_of_free[i]))
      if (dofs.free_of_vertex[w] >= 0) kx.col.push_back(dofs.free_of_vertex[w]);
    kx.row_ptr[i + 1] = static_cast<int>(kx.col.size());
  }
  kx.val.assign(kx.col.size(), 0.0);
  CsrMatrix& mx = sys.matrix.mx;
  mx = kx;

  for (int e = 0; e < static_cast<int>(base.num_elements()); ++e) {
    const ElementXMatrices em = p1_element_matrices(base, e);
    const auto verts = base.element_vertices(e);
    for (std::size_t a = 0; a < verts.size(); ++a) {
      const int i = dofs.free_of_vertex[verts[a]];
      if (i < 0) continue;
      for (std::size_t b = 0; b < verts.size(); ++b) {
        const int j = dofs.free_of_vertex[verts[b]];
        if (j < 0) continue;
        const auto first = kx.col.begin() + kx.row_ptr[i];
        const auto pos = std::lower_bound(first, kx.col.begin() + kx.row_ptr[i + 1], j) - kx.col.begin();
        kx.val[pos] += em.stiffness(a, b);
        mx.val[pos] += em.mass(a, b);
      }
    }
  }

  SymTridiagonal& my = sys.matrix.my;
  SymTridiagonal& ky = sys.matrix.ky;
  my.diag.assign(m, 0.0);
  ky.diag.assign(m, 0.0);
  my.off.assign(std::max(0, m - 1), 0.0);
  ky.off.assign(my.off.size(), 0.0);
  ky.chain.assign(m, 0.0);
  const YPartition& yp = mesh->ypart();
  for (int k = 0; k < m; ++k) {
    const IntervalMatrices im = interval_matrices(yp.nodes[k], yp.nodes[k + 1], params.alpha, 1);
    ky.chain[k] = im.stiffness(0, 0);
    my.diag[k] += im.mass(0, 0);
    ky.diag[k] += im.stiffness(0, 0);
    if (k + 1 < m) {
      my.diag[k + 1] += im.mass(1, 1);
      ky.diag[k + 1] += im.stiffness(1, 1);
      my.off[k] += im.mass(0, 1);
      ky.off[k] += im.stiffness(0, 1);
    }
  }

  sys.rhs = Eigen::VectorXd::Zero(dofs.size());
  for (int e = 0; e < static_cast<int>(base.num_elements()); ++e) {
    const std::vector<double> load = trace_load(base, e, f, params.d_s, load_degree);
    const auto verts = base.element_vertices(e);
    for (std::size_t a = 0; a < verts.size(); ++a) {
      const int i = dofs.free_of_vertex[verts[a]];
      if (i >= 0) sys.rhs[dofs.index(i, 0)] += load[a];
    }
  }
  return sys;
}

Eigen::VectorXd DiscreteField::free_values(const DofMap& dofs) const {
  if (mesh == nullptr || dofs.levels != mesh->M() ||
      dofs.free_of_vertex.size() != mesh->base().num_vertices())
    throw ContractViolation("field does not match the dof map");
  Eigen::VectorXd x(dofs.size());
  const int m = dofs.levels;
  for (std::size_t i = 0; i < dofs.vertex_of_free.size(); ++i)
    for (int k = 0; k < m; ++k)
      x[dofs.index(static_cast<int>(i), k)] = values[mesh->node_id(dofs.vertex_of_free[i], k)];
  return x;
}

std::vector<double> DiscreteField::trace() const {
  std::vector<double> t(mesh->base().num_vertices());
  for (std::size_t v = 0; v < t.size(); ++v) t[v] = values[mesh->node_id(static_cast<int>(v), 0)];
  return t;
}

DiscreteField make_field(std::shared_ptr<const CylinderMesh> mesh, const DofMap& dofs,
                         const Eigen::VectorXd& free_values) {
  if (free_values.size() != dofs.size()) throw ContractViolation("free vector has the wrong length");
  DiscreteField field;
  field.mesh = mesh;
  field.values.assign(mesh->num_nodes(), 0.0);
  field.dirichlet.assign(mesh->num_nodes(), 1);
  const int m = dofs.levels;
  for (std::size_t i = 0; i < dofs.vertex_of_free.size(); ++i)
    for (int k = 0; k < m; ++k) {
      const int node = mesh->node_id(dofs.vertex_of_free[i], k);
      field.values[node] = free_values[dofs.index(static_cast<int>(i), k)];
      field.dirichlet[node] = 0;
    }
  return field;
}

namespace {

// Symmetric block Gauss-Seidel over vertical lines. Diagonal blocks
// kx_ii My + mx_ii Ky are tridiagonal and factored once.
class LinePreconditioner {
 public:
  explicit LinePreconditioner(const TensorOperator& a) : a_(a), m_(a.my.size()), nx_(a.kx.rows) {
    const std::size_t n = static_cast<std::size_t>(nx_) * m_;
    pivot_.resize(n);
    lower_.resize(n);
    diag_pos_.resize(nx_);
    p_.resize(n);
    q_.resize(n);
    t_.resize(m_);
    for (int i = 0; i < nx_; ++i) {
      const auto first = a.kx.col.begin() + a.kx.row_ptr[i];
      diag_pos_[i] = static_cast<int>(std::lower_bound(first, a.kx.col.begin() + a.kx.row_ptr[i + 1], i) -
                                      a.kx.col.begin());
      const double kd = a.kx.val[diag_pos_[i]];
      const double md = a.mx.val[diag_pos_[i]];
      double* d = pivot_.data() + static_cast<std::size_t>(i) * m_;
      double* l = lower_.data() + static_cast<std::size_t>(i) * m_;
      if (!a.ky.chain.empty()) {
        factor_chain(kd, md, d, l);
        continue;
      }
      for (int k = 0; k < m_; ++k) {
        double dk = kd * a.my.diag[k] + md * a.ky.diag[k];
        if (k > 0) {
          const double e = kd * a.my.off[k - 1] + md * a.ky.off[k - 1];
          l[k - 1] = e / d[k - 1];
          dk -= l[k - 1] * e;
        }
        if (!(dk > 0.0)) throw NumericalError("line block is not positive definite");
        d[k] = dk;
      }
    }
  }

  void apply(const double* r, double* z) {
    const auto& kx = a_.kx;
    const auto& mx = a_.mx;
    for (int i = 0; i < nx_; ++i) {
      const std::size_t off = static_cast<std::size_t>(i) * m_;
      std::copy(r + off, r + off + m_, t_.begin());
      for (int p = kx.row_ptr[i]; p < diag_pos_[i]; ++p) subtract(kx.col[p], kx.val[p], mx.val[p]);
      line_solve(i, z + off);
    }
    for (int i = nx_ - 1; i >= 0; --i) {
      const std::size_t off = static_cast<std::size_t>(i) * m_;
      const double kd = kx.val[diag_pos_[i]];
      const double md = mx.val[diag_pos_[i]];
      for (int k = 0; k < m_; ++k) t_[k] = kd * p_[off + k] + md * q_[off + k];
      for (int p = diag_pos_[i] + 1; p < kx.row_ptr[i + 1]; ++p) subtract(kx.col[p], kx.val[p], mx.val[p]);
      line_solve(i, z + off);
    }
  }

 private:
  // Pivots written as |coupling| + excess; the excess recursion has no
  // cancellation when the y-stiffness dominates.
  void factor_chain(double kd, double md, double* d, double* l) const {
    const auto& w = a_.ky.chain;
    const auto& my = a_.my;
    auto coupling = [&](int k) { return kd * my.off[k] - md * w[k]; };
    auto slack = [&](int k) {
      const double mass = kd * my.off[k];
      return mass <= md * w[k] ? mass : 2.0 * md * w[k] - mass;
    };
    double q = 0.0;
    for (int k = 0; k < m_; ++k) {
      double r = kd * my.diag[k] + (k + 1 < m_ ? slack(k) : md * w[k]);
      if (k > 0) {
        r += slack(k - 1);
        const double o = std::abs(coupling(k - 1));
        r += o * q / (o + q);
        l[k - 1] = coupling(k - 1) / d[k - 1];
      }
      q = r;
      d[k] = (k + 1 < m_ ? std::abs(coupling(k)) : 0.0) + q;
      if (!(q > 0.0) || !(d[k] > 0.0)) throw NumericalError("line block is not positive definite");
    }
  }

  void subtract(int j, double kv, double mv) {
    const double* pj = p_.data() + static_cast<std::size_t>(j) * m_;
    const double* qj = q_.data() + static_cast<std::size_t>(j) * m_;
    for (int k = 0; k < m_; ++k) t_[k] -= kv * pj[k] + mv * qj[k];
  }

  // z_i = D_i^{-1} t, then caches My z_i and Ky z_i.
  void line_solve(int i, double* z) {
    const std::size_t off = static_cast<std::size_t>(i) * m_;
    const double* d = pivot_.data() + off;
    const double* l = lower_.data() + off;
    for (int k = 1; k < m_; ++k) t_[k] -= l[k - 1] * t_[k - 1];
    for (int k = 0; k < m_; ++k) t_[k] /= d[k];
    for (int k = m_ - 2; k >= 0; --k) t_[k] -= l[k] * t_[k + 1];
    std::copy(t_.begin(), t_.end(), z);
    a_.my.apply(std::span<const double>(z, m_), std::span<double>(p_.data() + off, m_));
    a_.ky.apply(std::span<const double>(z, m_), std::span<double>(q_.data() + off, m_));
  }

  const TensorOperator& a_;
  int m_;
  int nx_;
  std::vector<double> pivot_, lower_;
  std::vector<int> diag_pos_;
  std::vector<double> p_, q_, t_;
};

}  // namespace

Eigen::VectorXd solve_pcg(const TensorOperator& a, const Eigen::VectorXd& b,
                          const SolverOptions& options, SolveInfo* info) {
  const int n = a.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  SolveInfo local;
  if (bnorm == 0.0) {
    if (info) *info = local;
    return x;
  }
  LinePreconditioner prec(a);
  Eigen::VectorXd r = b, z(n), p(n), q(n);
  int it = 0;
  double rel = 1.0;
  double energy_rel = 1.0;
  prec.apply(b.data(), z.data());
  const double bz = b.dot(z);
  // Restart from the true residual whenever the recursive one has converged.
  // Strong y-grading can put the Euclidean tolerance below what double
  // precision resolves; a stalled preconditioned residual under sqrt(tol) is
  // then accepted.
  for (int restart = 0;; ++restart) {
    prec.apply(r.data(), z.data());
    p = z;
    double rz = r.dot(z);
    while (r.norm() > 0.5 * options.rel_tol * bnorm) {
      if (it >= options.max_iterations) {
        std::ostringstream msg;
        msg << "PCG did not converge in " << it << " iterations (relative residual " << r.norm() / bnorm << ")";
        throw SolverDivergence(msg.str(), r.norm() / bnorm, it);
      }
      a.apply(p, q);
      const double step = rz / p.dot(q);
      x += step * p;
      r -= step * q;
      prec.apply(r.data(), z.data());
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
      ++it;
    }
    r = a.residual(b, x);
    rel = r.norm() / bnorm;
    prec.apply(r.data(), z.data());
    const double previous = energy_rel;
    energy_rel = std::sqrt(std::max(0.0, r.dot(z)) / bz);
    if (rel <= options.rel_tol || energy_rel <= options.rel_tol) break;
    const bool stalled = energy_rel > 0.5 * previous;
    if (stalled && energy_rel <= std::sqrt(options.rel_tol)) break;
    if (stalled || restart >= 20) {
      std::ostringstream msg;
      msg << "PCG stagnated at relative residual " << rel << " (preconditioned " << energy_rel << ")";
      throw SolverDivergence(msg.str(), rel, it);
    }
  }
  local.iterations = it;
  local.relative_residual = rel;
  local.preconditioned_residual = energy_rel;
  if (info) *info = local;
  return x;
}

DiscreteField solve(const AssembledSystem& sys, const SolverOptions& options, SolveInfo* info) {
  const int n = sys.matrix.size();
  Eigen::VectorXd x;
  SolveInfo local;
  if (n == 0) {
    x = Eigen::VectorXd::Zero(0);
  } else if (n < options.dense_threshold) {
    const Eigen::MatrixXd a = sys.matrix.dense();
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw NumericalError("system matrix is not positive definite");
    x = llt.solve(sys.rhs);
    // Refinement against the exactly structured operator.
    for (int step = 0; step < 3; ++step) x += llt.solve(sys.matrix.residual(sys.rhs, x));
    local.direct = true;
    const double bnorm = sys.rhs.norm();
    local.relative_residual = bnorm > 0.0 ? sys.matrix.residual(sys.rhs, x).norm() / bnorm : 0.0;
  } else {
    x = solve_pcg(sys.matrix, sys.rhs, options, &local);
  }
  if (info) *info = local;
  return make_field(sys.mesh, sys.dofs, x);
}

double energy(const DiscreteField& field, const AssembledSystem& sys) {
  if (field.values.size() != sys.mesh->num_nodes())
    throw ContractViolation("energy: field length does not match the system");
  const Eigen::VectorXd x = field.free_values(sys.dofs);
  Eigen::VectorXd ax(x.size());
  sys.matrix.apply(x, ax);
  return 0.5 * x.dot(ax) - sys.rhs.dot(x);
}

namespace {

void require_nested(const BaseMesh& coarse, const BaseMesh& fine) {
  if (coarse.dim() != fine.dim() || coarse.num_vertices() > fine.num_vertices())
    throw ContractViolation("meshes are not nested");
  for (std::size_t v = 0; v < coarse.num_vertices(); ++v)
    if (coarse.vertex(static_cast<int>(v)) != fine.vertex(static_cast<int>(v)))
      throw ContractViolation("meshes are not nested: vertex coordinates differ");
}

}  // namespace

double energy_error(const DiscreteField& coarse, const AssembledSystem& coarse_sys,
                    const DiscreteField& fine, const AssembledSystem& fine_sys) {
  require_nested(coarse.mesh->base(), fine.mesh->base());
  if (coarse.mesh->Y() > fine.mesh->Y() * (1.0 + 1e-12))
    throw ContractViolation("reference cylinder is shorter than the coarse one");
  const double diff = energy(coarse, coarse_sys) - energy(fine, fine_sys);
  return std::sqrt(std::max(0.0, 2.0 * diff));
}

double exact_error_identity(const DiscreteField& field, const ScalarField& f,
                            const ScalarField& u_exact, const FractionalParams& params, int degree) {
  const BaseMesh& base = field.mesh->base();
  const quad::RuleSimplex rule = quad::simplex_rule(base.dim(), degree);
  const std::vector<double> tr = field.trace();
  double sum = 0.0;
  for (int e = 0; e < static_cast<int>(base.num_elements()); ++e) {
    const auto verts = base.element_vertices(e);
    double local = 0.0;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const Point x = map_to_element(base, e, rule.bary[q]);
      double v = 0.0;
      for (std::size_t a = 0; a < verts.size(); ++a) v += rule.bary[q][a] * tr[verts[a]];
      const double fv = f(x);
      const double uv = u_exact(x);
      if (!std::isfinite(fv) || !std::isfinite(uv)) {
        std::ostringstream msg;
        msg << "non-finite data value at (" << x[0] << ", " << x[1] << ")";
        throw DataError(msg.str());
      }
      local += rule.weights[q] * fv * (uv - v);
    }
    sum += local * base.measure(e);
  }
  return std::sqrt(std::max(0.0, params.d_s * sum));
}

DiscreteField prolongate(const DiscreteField& field, std::shared_ptr<const CylinderMesh> fine) {
  const BaseMesh& cb = field.mesh->base();
  const BaseMesh& fb = fine->base();
  require_nested(cb, fb);
  const YPartition& cy = field.mesh->ypart();
  const int mc = cy.M();
  const std::size_t ncv = cb.num_vertices();

  // Base values per coarse level, extended to new vertices through their parents.
  std::vector<double> base_vals(fb.num_vertices() * (mc + 1), 0.0);
  for (std::size_t v = 0; v < fb.num_vertices(); ++v) {
    for (int k = 0; k <= mc; ++k) {
      double val;
      if (v < ncv) {
        val = field.values[field.mesh->node_id(static_cast<int>(v), k)];
      } else {
        const auto par = fb.vertex_parents(static_cast<int>(v));
        if (par[0] < 0) throw ContractViolation("prolongate: vertex without ancestry");
        val = 0.5 * (base_vals[par[0] * (mc + 1) + k] + base_vals[par[1] * (mc + 1) + k]);
      }
      base_vals[v * (mc + 1) + k] = val;
    }
  }

  DiscreteField out;
  out.mesh = fine;
  out.values.assign(fine->num_nodes(), 0.0);
  out.dirichlet.assign(fine->num_nodes(), 0);
  const YPartition& fy = fine->ypart();
  const int mf = fy.M();
  for (int l = 0; l <= mf; ++l) {
    const double y = fy.nodes[l];
    int k = -1;
    double t = 0.0;
    if (y <= cy.Y * (1.0 + 1e-14)) {
      k = static_cast<int>(std::upper_bound(cy.nodes.begin(), cy.nodes.end(), y) - cy.nodes.begin()) - 1;
      k = std::clamp(k, 0, mc - 1);
      t = std::clamp((y - cy.nodes[k]) / cy.h(k), 0.0, 1.0);
    }
    for (std::size_t v = 0; v < fb.num_vertices(); ++v) {
      const int node = fine->node_id(static_cast<int>(v), l);
      if (fb.is_boundary(static_cast<int>(v)) || l == mf) {
        out.dirichlet[node] = 1;
        continue;
      }
      if (k < 0) continue;
      out.values[node] = (1.0 - t) * base_vals[v * (mc + 1) + k] + t * base_vals[v * (mc + 1) + k + 1];
    }
  }
  return out;
}

}  // namespace fracafem
