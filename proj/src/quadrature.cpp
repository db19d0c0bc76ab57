#include "fracafem/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace fracafem::quad {

namespace {

Rule1D compute_gauss_legendre(int n) {
  Rule1D rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 0 ? 1.0 : (n == 1 ? x : p1);
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double pn = n == 1 ? x : p1;
    const double pnm1 = n == 1 ? 1.0 : p0;
    dp = n * (x * pn - pnm1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

}  // namespace

const Rule1D& gauss_legendre(int n) {
  if (n < 1 || n > 200) throw std::invalid_argument("gauss_legendre: n out of range");
  static std::mutex mutex;
  static std::map<int, Rule1D> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

Rule1D gauss_jacobi(int n, double beta) {
  if (n < 1) throw std::invalid_argument("gauss_jacobi: n must be positive");
  if (!(beta > -1.0)) throw std::invalid_argument("gauss_jacobi: beta must exceed -1");
  // Golub-Welsch for the Jacobi weight (1-x)^0 (1+x)^beta on [-1,1].
  const double a = 0.0;
  const double b = beta;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    jac(k, k) = k == 0 ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    if (k + 1 < n) {
      const double k1 = k + 1.0;
      const double s1 = 2.0 * k1 + a + b;
      const double num = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
      const double den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
      jac(k, k + 1) = jac(k + 1, k) = std::sqrt(num / den);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
  const double mu0 = std::pow(2.0, a + b + 1.0) * std::tgamma(a + 1.0) * std::tgamma(b + 1.0) /
                     std::tgamma(a + b + 2.0);
  Rule1D rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  const double scale = std::pow(2.0, -beta - 1.0);
  for (int i = 0; i < n; ++i) {
    const double x = eig.eigenvalues()(i);
    const double v0 = eig.eigenvectors()(0, i);
    rule.points[i] = 0.5 * (x + 1.0);
    rule.weights[i] = mu0 * v0 * v0 * scale;
  }
  return rule;
}

RuleSimplex interval_rule(int degree) {
  const int n = std::max(1, (degree + 2) / 2);
  const Rule1D& gl = gauss_legendre(n);
  RuleSimplex r;
  for (int i = 0; i < n; ++i) {
    r.bary.push_back({1.0 - gl.points[i], gl.points[i], 0.0});
    r.weights.push_back(gl.weights[i]);
  }
  return r;
}

RuleSimplex triangle_rule(int degree) {
  const int n = std::max(1, (degree + 3) / 2);
  const Rule1D& gl = gauss_legendre(n);
  RuleSimplex r;
  for (int i = 0; i < n; ++i) {
    const double u = gl.points[i];
    for (int j = 0; j < n; ++j) {
      const double v = gl.points[j];
      const double x = u;
      const double y = v * (1.0 - u);
      r.bary.push_back({1.0 - x - y, x, y});
      r.weights.push_back(2.0 * gl.weights[i] * gl.weights[j] * (1.0 - u));
    }
  }
  return r;
}

}  // namespace fracafem::quad
