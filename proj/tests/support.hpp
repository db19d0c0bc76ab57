#pragma once

#include "fracafem/mesh.hpp"

#include <Eigen/Core>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

namespace testing {

using fracafem::BaseMesh;
using fracafem::Point;

// Integral of y^alpha g(y) over [a, b] by double-exponential quadrature.
template <class G>
double weighted_oracle(double a, double b, double alpha, G g) {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto h = [&](double y) { return std::pow(y, alpha) * g(y); };
  return ts.integrate(h, a, b, 1e-15);
}

// Integral of g over a triangle through the collapsed square, Gauss 20 x 20.
template <class G>
double triangle_oracle(const Point& p0, const Point& p1, const Point& p2, G g) {
  using boost::math::quadrature::gauss;
  const double jac = std::abs((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
  auto outer = [&](double u) {
    auto inner = [&](double v) {
      const double l1 = u, l2 = (1.0 - u) * v;
      const Point x{p0[0] + l1 * (p1[0] - p0[0]) + l2 * (p2[0] - p0[0]),
                    p0[1] + l1 * (p1[1] - p0[1]) + l2 * (p2[1] - p0[1])};
      return g(x, 1.0 - l1 - l2, l1, l2) * (1.0 - u);
    };
    return gauss<double, 20>::integrate(inner, 0.0, 1.0);
  };
  return jac * gauss<double, 20>::integrate(outer, 0.0, 1.0);
}

inline double cross(const Point& a, const Point& b, const Point& c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

// Interior edges shared by exactly two elements, no vertex inside another
// element's edge, and the element measures add up to `area`.
inline bool is_conforming(const BaseMesh& mesh, double area) {
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) total += mesh.measure(static_cast<int>(e));
  if (std::abs(total - area) > 1e-12 * std::max(1.0, area)) return false;
  if (mesh.dim() == 1) {
    std::map<int, int> count;
    for (const auto& el : mesh.elements()) {
      ++count[el.v[0]];
      ++count[el.v[1]];
    }
    for (auto [v, c] : count)
      if (c > 2 || (c == 1) != mesh.is_boundary(v)) return false;
    return true;
  }
  std::map<std::pair<int, int>, int> edges;
  for (const auto& el : mesh.elements()) {
    for (int i = 0; i < 3; ++i) {
      int a = el.v[(i + 1) % 3], b = el.v[(i + 2) % 3];
      if (a > b) std::swap(a, b);
      ++edges[{a, b}];
    }
  }
  for (const auto& [key, c] : edges) {
    if (c > 2) return false;
    const Point& a = mesh.vertex(key.first);
    const Point& b = mesh.vertex(key.second);
    const double len2 = (b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1]);
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
      if (static_cast<int>(v) == key.first || static_cast<int>(v) == key.second) continue;
      const Point& p = mesh.vertex(static_cast<int>(v));
      if (std::abs(cross(a, b, p)) > 1e-12) continue;
      const double t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / len2;
      if (t > 1e-12 && t < 1.0 - 1e-12) return false;  // hanging node
    }
  }
  return true;
}

// Interior angles of a triangle, ascending.
inline std::array<double, 3> angles(const BaseMesh& mesh, int e) {
  std::array<double, 3> out{};
  const auto v = mesh.element_vertices(e);
  for (int i = 0; i < 3; ++i) {
    const Point& p = mesh.vertex(v[i]);
    const Point& q = mesh.vertex(v[(i + 1) % 3]);
    const Point& r = mesh.vertex(v[(i + 2) % 3]);
    const double ax = q[0] - p[0], ay = q[1] - p[1], bx = r[0] - p[0], by = r[1] - p[1];
    out[i] = std::acos((ax * bx + ay * by) / (std::hypot(ax, ay) * std::hypot(bx, by)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Criss-cross mesh of the unit square: four triangles around the center vertex 4.
inline BaseMesh criss_cross() {
  std::vector<Point> v{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  std::vector<fracafem::Element> e(4);
  e[0].v = {0, 1, 4};
  e[1].v = {1, 2, 4};
  e[2].v = {2, 3, 4};
  e[3].v = {3, 0, 4};
  for (auto& el : e) el.refedge = 2;
  return BaseMesh(2, std::move(v), std::move(e));
}

inline int vertex_at(const BaseMesh& mesh, double x, double y = 0.0) {
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const Point& p = mesh.vertex(static_cast<int>(v));
    if (std::abs(p[0] - x) < 1e-12 && (mesh.dim() == 1 || std::abs(p[1] - y) < 1e-12)) return static_cast<int>(v);
  }
  return -1;
}


// Local basis in barycentric form: hats, edge bubbles 4 l_a l_b (edge i opposite
// vertex i, the single bubble for intervals), then 27 l0 l1 l2 when `cubic`.
struct OracleBasis {
  std::vector<double> value;
  std::vector<Point> grad;
};

inline OracleBasis oracle_basis(int dim, int degree, bool cubic, const std::array<double, 3>& l,
                                const std::array<Point, 3>& g) {
  OracleBasis b;
  const int nv = dim + 1;
  auto push = [&](double v, Point d) {
    b.value.push_back(v);
    b.grad.push_back(d);
  };
  for (int i = 0; i < nv; ++i) push(l[i], g[i]);
  if (degree == 2) {
    if (dim == 1) {
      push(4 * l[0] * l[1], {4 * (g[0][0] * l[1] + l[0] * g[1][0]), 0.0});
    } else {
      for (int i = 0; i < 3; ++i) {
        const int a = (i + 1) % 3, c = (i + 2) % 3;
        push(4 * l[a] * l[c], {4 * (g[a][0] * l[c] + l[a] * g[c][0]), 4 * (g[a][1] * l[c] + l[a] * g[c][1])});
      }
      if (cubic) {
        Point d{};
        for (int q = 0; q < 2; ++q)
          d[q] = 27 * (g[0][q] * l[1] * l[2] + l[0] * g[1][q] * l[2] + l[0] * l[1] * g[2][q]);
        push(27 * l[0] * l[1] * l[2], d);
      }
    }
  }
  return b;
}

// Unweighted x stiffness and mass of one base element by quadrature.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> oracle_x_matrices(const BaseMesh& mesh, int e, int degree,
                                                                     bool cubic) {
  const auto v = mesh.element_vertices(e);
  std::array<Point, 3> g{};
  const int nv = mesh.dim() + 1;
  if (mesh.dim() == 1) {
    const double x0 = mesh.vertex(v[0])[0], x1 = mesh.vertex(v[1])[0];
    g[0] = {-1.0 / (x1 - x0), 0.0};
    g[1] = {1.0 / (x1 - x0), 0.0};
  } else {
    const Point &p0 = mesh.vertex(v[0]), &p1 = mesh.vertex(v[1]), &p2 = mesh.vertex(v[2]);
    const double det = cross(p0, p1, p2);
    for (int i = 0; i < 3; ++i) {
      const Point& a = mesh.vertex(v[(i + 1) % 3]);
      const Point& b = mesh.vertex(v[(i + 2) % 3]);
      g[i] = {(a[1] - b[1]) / det, (b[0] - a[0]) / det};
    }
  }
  const int n = static_cast<int>(oracle_basis(mesh.dim(), degree, cubic, {1, 0, 0}, g).value.size());
  Eigen::MatrixXd k(n, n), m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      auto kf = [&](const std::array<double, 3>& l) {
        const auto b = oracle_basis(mesh.dim(), degree, cubic, l, g);
        return b.grad[i][0] * b.grad[j][0] + b.grad[i][1] * b.grad[j][1];
      };
      auto mf = [&](const std::array<double, 3>& l) {
        const auto b = oracle_basis(mesh.dim(), degree, cubic, l, g);
        return b.value[i] * b.value[j];
      };
      if (mesh.dim() == 1) {
        using boost::math::quadrature::gauss;
        const double h = mesh.measure(e);
        k(i, j) = h * gauss<double, 20>::integrate([&](double t) { return kf({1 - t, t, 0}); }, 0.0, 1.0);
        m(i, j) = h * gauss<double, 20>::integrate([&](double t) { return mf({1 - t, t, 0}); }, 0.0, 1.0);
      } else {
        const Point &p0 = mesh.vertex(v[0]), &p1 = mesh.vertex(v[1]), &p2 = mesh.vertex(v[2]);
        k(i, j) = triangle_oracle(p0, p1, p2, [&](const Point&, double a, double b, double c) { return kf({a, b, c}); });
        m(i, j) = triangle_oracle(p0, p1, p2, [&](const Point&, double a, double b, double c) { return mf({a, b, c}); });
      }
    }
  (void)nv;
  return {k, m};
}

// Weighted y stiffness and mass on [a, b]: basis 1-t, t and, for degree 2, 4t(1-t).
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> oracle_y_matrices(double a, double b, double alpha, int degree) {
  const int n = degree + 1;
  const double h = b - a;
  auto val = [&](int i, double y) {
    const double t = (y - a) / h;
    return i == 0 ? 1 - t : i == 1 ? t : 4 * t * (1 - t);
  };
  auto der = [&](int i, double y) {
    const double t = (y - a) / h;
    return (i == 0 ? -1.0 : i == 1 ? 1.0 : 4 - 8 * t) / h;
  };
  Eigen::MatrixXd k(n, n), m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      k(i, j) = weighted_oracle(a, b, alpha, [&](double y) { return der(i, y) * der(j, y); });
      m(i, j) = weighted_oracle(a, b, alpha, [&](double y) { return val(i, y) * val(j, y); });
    }
  return {k, m};
}

// Cell stiffness with local index (x basis i, y basis j) -> i * ny + j.
inline Eigen::MatrixXd oracle_cell_stiffness(const BaseMesh& mesh, int e, double a, double b, double alpha,
                                             int degree, bool cubic) {
  const auto [kx, mx] = oracle_x_matrices(mesh, e, degree, cubic);
  const auto [ky, my] = oracle_y_matrices(a, b, alpha, degree);
  const int nx = static_cast<int>(kx.rows()), ny = static_cast<int>(ky.rows());
  Eigen::MatrixXd out(nx * ny, nx * ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nx; ++k)
        for (int l = 0; l < ny; ++l) out(i * ny + j, k * ny + l) = kx(i, k) * my(j, l) + mx(i, k) * ky(j, l);
  return out;
}

inline double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace testing
