#include "fracafem/weighted_forms.hpp"

#include "fracafem/errors.hpp"
#include "fracafem/quadrature.hpp"

#include <Eigen/LU>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fracafem {

FractionalParams FractionalParams::from_s(double s) {
  if (!std::isfinite(s) || !(s > 0.0) || !(s < 1.0))
    throw std::invalid_argument("FractionalParams: s must lie in (0,1)");
  FractionalParams p;
  p.s = s;
  p.alpha = 1.0 - 2.0 * s;
  p.d_s = std::pow(2.0, 1.0 - 2.0 * s) * std::tgamma(1.0 - s) / std::tgamma(s);
  return p;
}

double weighted_moment(double a, double b, double alpha, int k) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(alpha))
    throw std::invalid_argument("weighted_moment: non-finite input");
  if (!(alpha > -1.0)) throw std::invalid_argument("weighted_moment: alpha must exceed -1");
  if (k < 0) throw std::invalid_argument("weighted_moment: k must be nonnegative");
  if (!(a >= 0.0) || !(b > a)) throw std::invalid_argument("weighted_moment: need 0 <= a < b");
  const double p = alpha + k + 1.0;
  if (a == 0.0) return std::pow(b, p) / p;
  // b^p - a^p = -b^p expm1(p log(a/b)) keeps full precision for a close to b.
  return -std::pow(b, p) * std::expm1(p * std::log(a / b)) / p;
}

std::vector<double> shifted_weighted_moments(double a, double b, double alpha, int max_power) {
  if (max_power < 0) throw std::invalid_argument("shifted_weighted_moments: negative power");
  if (!(alpha > -1.0)) throw std::invalid_argument("shifted_weighted_moments: alpha must exceed -1");
  if (!(a >= 0.0) || !(b > a)) throw std::invalid_argument("shifted_weighted_moments: need 0 <= a < b");
  const double h = b - a;
  std::vector<double> mu(max_power + 1, 0.0);
  if (a == 0.0) {
    const double base = std::pow(h, alpha + 1.0);
    for (int i = 0; i <= max_power; ++i) mu[i] = base / (alpha + i + 1.0);
    return mu;
  }
  const double eps = h / a;
  if (eps <= 0.8) {
    // (a + h t)^alpha = a^alpha sum_m binom(alpha, m) (eps t)^m
    const double scale = std::pow(a, alpha) * h;
    for (int i = 0; i <= max_power; ++i) {
      double coeff = 1.0;  // binom(alpha, m) eps^m
      double sum = 0.0;
      for (int m = 0; m < 600; ++m) {
        const double term = coeff / (i + m + 1.0);
        sum += term;
        if (m > 2 && std::abs(term) < 1e-18 * std::abs(sum)) break;
        coeff *= (alpha - m) / (m + 1.0) * eps;
      }
      mu[i] = scale * sum;
    }
    return mu;
  }
  // Close to the origin: expand t^i in powers of y; the cancellation factor is
  // bounded by ((a+b)/h)^i.
  std::vector<double> w(max_power + 1);
  for (int j = 0; j <= max_power; ++j) w[j] = weighted_moment(a, b, alpha, j);
  for (int i = 0; i <= max_power; ++i) {
    double sum = 0.0;
    double binom = 1.0;
    for (int j = i; j >= 0; --j) {
      // term: binom(i, j) (-a)^(i-j) w_j
      sum += binom * std::pow(-a, i - j) * w[j];
      binom = binom * j / (i - j + 1.0);
    }
    mu[i] = sum / std::pow(h, i);
  }
  return mu;
}

IntervalMatrices interval_matrices(double a, double b, double alpha, int degree) {
  if (degree != 1 && degree != 2) throw std::invalid_argument("interval_matrices: degree must be 1 or 2");
  const int n = degree + 1;
  // Basis coefficients as polynomials in t; derivatives (times h) in the
  // basis {1, 1 - 2t} so the hat rows cancel exactly.
  static const double basis[3][3] = {{1.0, -1.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 4.0, -4.0}};
  static const double deriv[3][2] = {{-1.0, 0.0}, {1.0, 0.0}, {0.0, 4.0}};
  const std::vector<double> mu = shifted_weighted_moments(a, b, alpha, 4);
  const double h = b - a;
  const double g[2][2] = {{mu[0], mu[0] - 2.0 * mu[1]},
                          {mu[0] - 2.0 * mu[1], mu[0] - 4.0 * mu[1] + 4.0 * mu[2]}};
  IntervalMatrices m;
  m.mass = Eigen::MatrixXd::Zero(n, n);
  m.stiffness = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double mass = 0.0;
      double stiff = 0.0;
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) mass += basis[i][p] * basis[j][q] * mu[p + q];
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) stiff += deriv[i][p] * deriv[j][q] * g[p][q];
      m.mass(i, j) = mass;
      m.stiffness(i, j) = stiff / (h * h);
    }
  }
  return m;
}

LocalSpace parse_local_space(std::string_view tag) {
  if (tag == "bubble" || tag == "P2_bubble") return LocalSpace::P2Bubble;
  if (tag == "p2" || tag == "P2_plain") return LocalSpace::P2Plain;
  if (tag == "q2" || tag == "Q2") return LocalSpace::Q2;
  throw std::invalid_argument("unknown local space: " + std::string(tag));
}

std::string to_string(LocalSpace space) {
  switch (space) {
    case LocalSpace::P2Bubble: return "bubble";
    case LocalSpace::P2Plain: return "p2";
    case LocalSpace::Q2: return "q2";
  }
  return "unknown";
}

std::array<Point, 3> barycentric_gradients(const BaseMesh& mesh, int element) {
  const auto v = mesh.element_vertices(element);
  std::array<Point, 3> g{};
  if (mesh.dim() == 1) {
    const double len = mesh.vertex(v[1])[0] - mesh.vertex(v[0])[0];
    g[0] = {-1.0 / len, 0.0};
    g[1] = {1.0 / len, 0.0};
    return g;
  }
  const Point& p0 = mesh.vertex(v[0]);
  const Point& p1 = mesh.vertex(v[1]);
  const Point& p2 = mesh.vertex(v[2]);
  const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
  g[0] = {(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det};
  g[1] = {(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det};
  g[2] = {(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det};
  return g;
}

namespace {

void check_space(int dim, LocalSpace space) {
  if (dim == 2 && space == LocalSpace::Q2)
    throw std::invalid_argument("Q2 local space requires a tensor-product base element");
}

// Values and gradients of the enriched basis at one barycentric point.
void enriched_eval(int dim, LocalSpace space, const std::array<double, 3>& l,
                   const std::array<Point, 3>& gl, std::span<double> val, std::span<Point> grad) {
  if (dim == 1) {
    val[0] = l[0];
    val[1] = l[1];
    val[2] = 4.0 * l[0] * l[1];
    grad[0] = gl[0];
    grad[1] = gl[1];
    grad[2] = {4.0 * (l[0] * gl[1][0] + l[1] * gl[0][0]), 0.0};
    return;
  }
  for (int i = 0; i < 3; ++i) {
    val[i] = l[i];
    grad[i] = gl[i];
    const int a = (i + 1) % 3;
    const int b = (i + 2) % 3;
    val[3 + i] = 4.0 * l[a] * l[b];
    grad[3 + i] = {4.0 * (l[a] * gl[b][0] + l[b] * gl[a][0]), 4.0 * (l[a] * gl[b][1] + l[b] * gl[a][1])};
  }
  if (space == LocalSpace::P2Bubble) {
    val[6] = 27.0 * l[0] * l[1] * l[2];
    Point g{0.0, 0.0};
    for (int c = 0; c < 2; ++c)
      g[c] = 27.0 * (l[1] * l[2] * gl[0][c] + l[0] * l[2] * gl[1][c] + l[0] * l[1] * gl[2][c]);
    grad[6] = g;
  }
}

}  // namespace

int enriched_basis_size(int dim, LocalSpace space) {
  check_space(dim, space);
  if (dim == 1) return 3;
  return space == LocalSpace::P2Bubble ? 7 : 6;
}

void enriched_basis_values(int dim, LocalSpace space, const std::array<double, 3>& bary,
                           std::span<double> out) {
  std::array<Point, 3> gl{};
  std::array<Point, 7> grad{};
  enriched_eval(dim, space, bary, gl, out, grad);
}

void enriched_basis_gradients(int dim, LocalSpace space, const std::array<double, 3>& bary,
                              const std::array<Point, 3>& bary_grads, std::span<Point> out) {
  std::array<double, 7> val{};
  enriched_eval(dim, space, bary, bary_grads, val, out);
}

quad::Rule1D weighted_interval_rule(double a, double b, double alpha, int degree) {
  const int n = degree + 1;
  const quad::Rule1D gl = quad::gauss_legendre(n);
  const std::vector<double> mu = shifted_weighted_moments(a, b, alpha, degree);
  // Interpolatory weights: solve V^T w = mu with V(j, i) = t_j^i.
  Eigen::MatrixXd vt(n, n);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    rhs[i] = mu[i];
    for (int j = 0; j < n; ++j) vt(i, j) = std::pow(gl.points[j], i);
  }
  const Eigen::VectorXd w = vt.fullPivLu().solve(rhs);
  quad::Rule1D out;
  for (int j = 0; j < n; ++j) {
    out.points.push_back(a + (b - a) * gl.points[j]);
    out.weights.push_back(w[j]);
  }
  return out;
}

Point map_to_element(const BaseMesh& mesh, int element, const std::array<double, 3>& bary) {
  const auto v = mesh.element_vertices(element);
  Point x{0.0, 0.0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    x[0] += bary[i] * mesh.vertex(v[i])[0];
    x[1] += bary[i] * mesh.vertex(v[i])[1];
  }
  return x;
}

ElementXMatrices p1_element_matrices(const BaseMesh& mesh, int element) {
  const int n = mesh.dim() + 1;
  const double area = mesh.measure(element);
  const auto g = barycentric_gradients(mesh, element);
  ElementXMatrices m;
  m.stiffness.resize(n, n);
  m.mass.resize(n, n);
  const double mass_scale = mesh.dim() == 1 ? area / 6.0 : area / 12.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m.stiffness(i, j) = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
      m.mass(i, j) = mass_scale * (i == j ? 2.0 : 1.0);
    }
  return m;
}

ElementXMatrices enriched_element_matrices(const BaseMesh& mesh, int element, LocalSpace space) {
  const int dim = mesh.dim();
  const int n = enriched_basis_size(dim, space);
  const double area = mesh.measure(element);
  const auto g = barycentric_gradients(mesh, element);
  const quad::RuleSimplex rule = quad::simplex_rule(dim, 6);
  ElementXMatrices m;
  m.stiffness = Eigen::MatrixXd::Zero(n, n);
  m.mass = Eigen::MatrixXd::Zero(n, n);
  std::array<double, 7> val{};
  std::array<Point, 7> grad{};
  for (std::size_t q = 0; q < rule.weights.size(); ++q) {
    enriched_eval(dim, space, rule.bary[q], g, val, grad);
    const double w = rule.weights[q] * area;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        m.stiffness(i, j) += w * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
        m.mass(i, j) += w * val[i] * val[j];
      }
  }
  return m;
}

namespace {

ElementMatrix tensor_matrix(const ElementXMatrices& x, const IntervalMatrices& y) {
  const int nx = static_cast<int>(x.mass.rows());
  const int ny = static_cast<int>(y.mass.rows());
  ElementMatrix out;
  out.stiffness.resize(nx * ny, nx * ny);
  out.mass.resize(nx * ny, nx * ny);
  for (int i = 0; i < nx; ++i)
    for (int p = 0; p < ny; ++p)
      for (int j = 0; j < nx; ++j)
        for (int q = 0; q < ny; ++q) {
          out.stiffness(i * ny + p, j * ny + q) =
              x.stiffness(i, j) * y.mass(p, q) + x.mass(i, j) * y.stiffness(p, q);
          out.mass(i * ny + p, j * ny + q) = x.mass(i, j) * y.mass(p, q);
        }
  return out;
}

}  // namespace

ElementMatrix local_stiffness(const CylinderMesh& cyl, int cell, double alpha) {
  const auto [e, k] = cyl.cell_of(cell);
  const auto& yp = cyl.ypart();
  ElementMatrix out = tensor_matrix(p1_element_matrices(cyl.base(), e),
                                    interval_matrices(yp.nodes[k], yp.nodes[k + 1], alpha, 1));
  for (int v : cyl.base().element_vertices(e)) {
    out.dofs.push_back(cyl.node_id(v, k));
    out.dofs.push_back(cyl.node_id(v, k + 1));
  }
  return out;
}

ElementMatrix local_stiffness_enriched(const CylinderMesh& cyl, int cell, double alpha,
                                       LocalSpace space) {
  const auto [e, k] = cyl.cell_of(cell);
  const auto& yp = cyl.ypart();
  return tensor_matrix(enriched_element_matrices(cyl.base(), e, space),
                       interval_matrices(yp.nodes[k], yp.nodes[k + 1], alpha, 2));
}

std::vector<double> trace_load(const BaseMesh& mesh, int element, const ScalarField& f,
                               double d_s, int degree) {
  const int n = mesh.dim() + 1;
  std::vector<double> out(n, 0.0);
  const quad::RuleSimplex rule = quad::simplex_rule(mesh.dim(), degree);
  const double area = mesh.measure(element);
  for (std::size_t q = 0; q < rule.weights.size(); ++q) {
    const Point x = map_to_element(mesh, element, rule.bary[q]);
    const double fv = f(x);
    if (!std::isfinite(fv)) {
      std::ostringstream msg;
      msg << "non-finite data value at (" << x[0] << ", " << x[1] << ") in element " << element;
      throw DataError(msg.str());
    }
    for (int i = 0; i < n; ++i) out[i] += rule.weights[q] * area * fv * rule.bary[q][i];
  }
  for (double& v : out) v *= d_s;
  return out;
}

}  // namespace fracafem
