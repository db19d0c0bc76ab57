#include "fracafem/errors.hpp"
#include "fracafem/weighted_forms.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <random>

using namespace fracafem;

TEST_CASE("fractional parameters") {
  const auto half = FractionalParams::from_s(0.5);
  CHECK(half.alpha == 0.0);
  CHECK(std::abs(half.d_s - 1.0) <= 1e-13);
  for (double s : {0.1, 0.2, 0.4, 0.6, 0.8, 0.95}) {
    const auto p = FractionalParams::from_s(s);
    CHECK(p.alpha + 2 * s == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.d_s > 0.0);
    const double expect = std::pow(2.0, 1 - 2 * s) * std::exp(std::lgamma(1 - s) - std::lgamma(s));
    CHECK(p.d_s == doctest::Approx(expect).epsilon(1e-13));
  }
  CHECK(FractionalParams::from_s(0.2).d_s == doctest::Approx(0.3843829968998866).epsilon(1e-13));
  CHECK_THROWS_AS(FractionalParams::from_s(1.0), std::invalid_argument);
  CHECK_THROWS_AS(FractionalParams::from_s(0.0), std::invalid_argument);
}

TEST_CASE("weighted moments") {
  SUBCASE("closed forms") {
    for (double a : {-0.9, -0.3, 0.0, 0.5})
      CHECK(weighted_moment(0, 1, a, 0) == doctest::Approx(1 / (1 + a)).epsilon(1e-15));
    CHECK(weighted_moment(0, 1, 0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    const double expect = (1 - std::pow(0.25, 2.4)) / 2.4;
    CHECK(weighted_moment(0.25, 1, -0.6, 2) == doctest::Approx(expect).epsilon(1e-14));
    const double oracle = testing::weighted_oracle(0.25, 1, -0.6, [](double y) { return y * y; });
    CHECK(std::abs(weighted_moment(0.25, 1, -0.6, 2) - oracle) <= 1e-12 * oracle);
  }
  SUBCASE("invalid input") {
    CHECK_THROWS_AS(weighted_moment(0, 1, -1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(weighted_moment(0, 1, -1.5, 0), std::invalid_argument);
    CHECK_THROWS_AS(weighted_moment(1, 1, 0.2, 0), std::invalid_argument);
    CHECK_THROWS_AS(weighted_moment(-0.1, 1, 0.2, 0), std::invalid_argument);
  }
  SUBCASE("additivity") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
      const double alpha = -0.99 + 1.98 * u(rng);
      const int k = static_cast<int>(u(rng) * 5);
      const double a = u(rng) < 0.2 ? 0.0 : 3 * u(rng);
      const double b = a + 1e-3 + 2 * u(rng);
      const double c = b + 1e-3 + 2 * u(rng);
      const double whole = weighted_moment(a, c, alpha, k);
      CHECK(std::abs(weighted_moment(a, b, alpha, k) + weighted_moment(b, c, alpha, k) - whole) <= 1e-13 * whole);
    }
  }
  SUBCASE("shifted moments") {
    for (double a : {0.0, 1e-6, 0.3, 50.0}) {
      const double b = a + 0.7;
      const auto mu = shifted_weighted_moments(a, b, -0.4, 4);
      for (int i = 0; i <= 4; ++i) {
        const double oracle =
            testing::weighted_oracle(a, b, -0.4, [&](double y) { return std::pow((y - a) / (b - a), i); });
        CHECK(mu[i] == doctest::Approx(oracle).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("interval matrices") {
  for (double alpha : {-0.8, 0.0, 0.6}) {
    for (auto [a, b] : {std::pair{0.0, 0.1}, std::pair{0.2, 1.7}, std::pair{3.0, 3.001}}) {
      for (int deg : {1, 2}) {
        const auto im = interval_matrices(a, b, alpha, deg);
        const auto [ky, my] = testing::oracle_y_matrices(a, b, alpha, deg);
        CHECK(testing::max_rel_diff(im.stiffness, ky) <= 1e-10);
        CHECK(testing::max_rel_diff(im.mass, my) <= 1e-10);
        CHECK(std::abs(im.stiffness.row(0).head(2).sum()) <= 1e-14 * im.stiffness(0, 0));
      }
    }
  }
  CHECK_THROWS_AS(interval_matrices(0, 1, 0, 3), std::invalid_argument);
}

TEST_CASE("prism stiffness") {
  SUBCASE("unweighted unit square is the bilinear Q1 matrix") {
    const auto line = build_base_mesh(Domain::UnitInterval, 1.0);
    const CylinderMesh cyl = extrude(line, build_graded_partition(1, 1.0, 1.0));
    const auto em = local_stiffness(cyl, 0, 0.0);
    Eigen::MatrixXd q1(4, 4);
    // ordering (x0,y0) (x0,y1) (x1,y0) (x1,y1)
    q1 << 4, -1, -1, -2,  //
        -1, 4, -2, -1,    //
        -1, -2, 4, -1,    //
        -2, -1, -1, 4;
    q1 /= 6.0;
    CHECK(testing::max_rel_diff(em.stiffness, q1) <= 1e-14);
    REQUIRE(em.dofs.size() == 4);
    CHECK(em.dofs[1] == cyl.node_id(line.element(0).v[0], 1));
  }
  SUBCASE("against quadrature oracles") {
    const auto line = bisect(build_base_mesh(Domain::UnitInterval, 0.5), std::vector<int>{1});
    const auto tri = bisect(build_base_mesh(Domain::LShape, 0.5), std::vector<int>{2, 5});
    for (const BaseMesh* mesh : {&line, &tri}) {
      YPartition yp;
      yp.Y = 2.0;
      yp.nodes = {0.0, 0.1, 0.35, 2.0};
      const CylinderMesh cyl = extrude(*mesh, yp);
      for (double alpha : {-0.6, 0.0, 0.6, 0.95}) {
        for (int e = 0; e < static_cast<int>(std::min<std::size_t>(mesh->num_elements(), 4)); ++e) {
          for (int k = 0; k < 3; ++k) {
            const int cell = cyl.cell_id(e, k);
            const auto p1 = local_stiffness(cyl, cell, alpha);
            const auto o1 = testing::oracle_cell_stiffness(*mesh, e, yp.nodes[k], yp.nodes[k + 1], alpha, 1, false);
            CHECK(testing::max_rel_diff(p1.stiffness, o1) <= 1e-10);
            std::vector<LocalSpace> spaces{LocalSpace::P2Bubble, LocalSpace::P2Plain};
            if (mesh->dim() == 1) spaces.push_back(LocalSpace::Q2);
            for (LocalSpace sp : spaces) {
              const auto p2 = local_stiffness_enriched(cyl, cell, alpha, sp);
              const auto o2 = testing::oracle_cell_stiffness(*mesh, e, yp.nodes[k], yp.nodes[k + 1], alpha, 2,
                                                             sp == LocalSpace::P2Bubble);
              CHECK(testing::max_rel_diff(p2.stiffness, o2) <= 1e-10);
            }
          }
        }
      }
    }
  }
  SUBCASE("symmetry, semidefiniteness and constants in the kernel") {
    const auto tri = build_base_mesh(Domain::UnitSquare, 0.5);
    const CylinderMesh cyl = extrude(tri, build_graded_partition(5, 1.4, 7.6));
    for (double alpha : {-0.9, -0.2, 0.5, 0.9}) {
      for (int cell : {0, 4, 17, 39}) {
        for (int kind = 0; kind < 3; ++kind) {
          const Eigen::MatrixXd a =
              kind == 0 ? local_stiffness(cyl, cell, alpha).stiffness
                        : local_stiffness_enriched(cyl, cell, alpha, kind == 1 ? LocalSpace::P2Bubble : LocalSpace::P2Plain)
                              .stiffness;
          const double norm = a.cwiseAbs().maxCoeff();
          CHECK((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-15 * norm);
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
          CHECK(eig.eigenvalues().minCoeff() >= -1e-12 * eig.eigenvalues().maxCoeff());
          // the constant function: hats at every vertex and level
          Eigen::VectorXd one = Eigen::VectorXd::Zero(a.rows());
          const int ny = kind == 0 ? 2 : 3;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 2; ++j) one(i * ny + j) = 1.0;
          CHECK((a * one).cwiseAbs().maxCoeff() <= 1e-12 * norm);
        }
      }
    }
  }
  SUBCASE("continuity at alpha = 0") {
    const auto tri = build_base_mesh(Domain::UnitSquare, 0.5);
    const CylinderMesh cyl = extrude(tri, build_graded_partition(3, 1.0, 3.0));
    for (int cell : {0, 1, 2}) {
      const auto a0 = local_stiffness(cyl, cell, 0.0).stiffness;
      for (double eps : {1e-8, -1e-8}) {
        const auto a = local_stiffness(cyl, cell, eps).stiffness;
        CHECK(testing::max_rel_diff(a, a0) <= 1e-6);
        const auto b0 = local_stiffness_enriched(cyl, cell, 0.0, LocalSpace::P2Bubble).stiffness;
        const auto b = local_stiffness_enriched(cyl, cell, eps, LocalSpace::P2Bubble).stiffness;
        CHECK(testing::max_rel_diff(b, b0) <= 1e-6);
      }
    }
  }
}

TEST_CASE("trace load") {
  SUBCASE("constant data on an interval") {
    const auto line = build_base_mesh(Domain::UnitInterval, 0.25);
    const double ds = FractionalParams::from_s(0.3).d_s;
    const auto b = trace_load(line, 1, [](const Point&) { return 1.0; }, ds);
    CHECK(b[0] == doctest::Approx(ds * 0.125).epsilon(1e-15));
    CHECK(b[1] == doctest::Approx(ds * 0.125).epsilon(1e-15));
    const auto z = trace_load(line, 1, [](const Point&) { return 0.0; }, ds);
    CHECK(z == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("cubic data is integrated exactly") {
    const auto tri = bisect(build_base_mesh(Domain::Square, 1.0), std::vector<int>{0});
    auto f = [](const Point& p) { return 1 + 2 * p[0] - p[1] + p[0] * p[0] * p[1] - 3 * p[1] * p[1] * p[1]; };
    for (int e = 0; e < static_cast<int>(tri.num_elements()); ++e) {
      const auto b = trace_load(tri, e, f, 1.3);
      const auto v = tri.element_vertices(e);
      for (int i = 0; i < 3; ++i) {
        const double o = 1.3 * testing::triangle_oracle(tri.vertex(v[0]), tri.vertex(v[1]), tri.vertex(v[2]),
                                                        [&](const Point& x, double l0, double l1, double l2) {
                                                          const double l[3] = {l0, l1, l2};
                                                          return f(x) * l[i];
                                                        });
        CHECK(b[i] == doctest::Approx(o).epsilon(1e-13).scale(1.0));
      }
    }
  }
  SUBCASE("smooth data against a high order rule") {
    const auto tri = build_base_mesh(Domain::UnitSquare, 0.25);
    auto f = [](const Point& p) { return std::sin(2 * M_PI * p[0]) * std::sin(2 * M_PI * p[1]); };
    for (int e : {0, 5, 13, 30}) {
      const auto b = trace_load(tri, e, f, 1.0, 12);
      const auto v = tri.element_vertices(e);
      for (int i = 0; i < 3; ++i) {
        const double o = testing::triangle_oracle(tri.vertex(v[0]), tri.vertex(v[1]), tri.vertex(v[2]),
                                                  [&](const Point& x, double l0, double l1, double l2) {
                                                    const double l[3] = {l0, l1, l2};
                                                    return f(x) * l[i];
                                                  });
        CHECK(std::abs(b[i] - o) <= 1e-8 * std::abs(o));
      }
    }
  }
  SUBCASE("non-finite data") {
    const auto line = build_base_mesh(Domain::UnitInterval, 0.5);
    CHECK_THROWS_AS(trace_load(line, 0, [](const Point&) { return std::nan(""); }, 1.0), DataError);
  }
}

TEST_CASE("quadrature rules") {
  for (int deg = 1; deg <= 12; ++deg) {
    const auto r = quad::triangle_rule(deg);
    // int over the reference triangle of l1^a l2^b = a! b! / (a+b+2)!, relative to area 1/2
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        double sum = 0.0;
        for (std::size_t q = 0; q < r.weights.size(); ++q)
          sum += r.weights[q] * std::pow(r.bary[q][1], a) * std::pow(r.bary[q][2], b);
        const double exact = 2.0 * std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3);
        CHECK(sum == doctest::Approx(exact).epsilon(1e-13));
      }
  }
  const auto gj = quad::gauss_jacobi(6, -0.7);
  double m = 0.0;
  for (std::size_t q = 0; q < gj.points.size(); ++q) m += gj.weights[q] * std::pow(gj.points[q], 9);
  CHECK(m == doctest::Approx(1.0 / (10 - 0.7)).epsilon(1e-13));
  const auto wr = weighted_interval_rule(0.0, 0.3, 0.4, 5);
  double w = 0.0;
  for (std::size_t q = 0; q < wr.points.size(); ++q) w += wr.weights[q] * std::pow(wr.points[q], 5);
  CHECK(w == doctest::Approx(weighted_moment(0.0, 0.3, 0.4, 5)).epsilon(1e-12));
}
