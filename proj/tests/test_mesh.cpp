#include "fracafem/mesh.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

using namespace fracafem;
using testing::is_conforming;

namespace {

double domain_area(Domain d) {
  switch (d) {
    case Domain::UnitInterval: return 1.0;
    case Domain::UnitSquare: return 1.0;
    case Domain::Square: return 4.0;
    case Domain::LShape: return 3.0;
  }
  return 0.0;
}

bool on_boundary(Domain d, const Point& p) {
  auto near = [](double a, double b) { return std::abs(a - b) < 1e-12; };
  switch (d) {
    case Domain::UnitInterval: return near(p[0], 0) || near(p[0], 1);
    case Domain::UnitSquare: return near(p[0], 0) || near(p[0], 1) || near(p[1], 0) || near(p[1], 1);
    case Domain::Square: return near(std::abs(p[0]), 1) || near(std::abs(p[1]), 1);
    case Domain::LShape:
      return near(std::abs(p[0]), 1) || near(std::abs(p[1]), 1) || (near(p[0], 0) && p[1] <= 0) ||
             (near(p[1], 0) && p[0] >= 0);
  }
  return false;
}

}  // namespace

TEST_CASE("graded partition") {
  SUBCASE("quadratic grading") {
    const auto p = build_graded_partition(2, 1.0, 2.0);
    REQUIRE(p.nodes.size() == 3);
    CHECK(p.nodes[0] == 0.0);
    CHECK(p.nodes[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(p.nodes[2] == 1.0);
  }
  SUBCASE("single interval") {
    const auto p = build_graded_partition(1, 3.0, 7.3);
    CHECK(p.nodes == std::vector<double>{0.0, 3.0});
  }
  SUBCASE("top interval bound") {
    const auto p = build_graded_partition(8, 1.0, 5.0);
    CHECK(p.h_top() == doctest::Approx(1.0 - std::pow(7.0 / 8.0, 5.0)).epsilon(1e-14));
    CHECK(p.h_top() == doctest::Approx(0.487).epsilon(1e-3));
    CHECK(p.h_top() <= 5.0 / 8.0);
  }
  SUBCASE("invalid input") {
    CHECK_THROWS_AS(build_graded_partition(0, 1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(build_graded_partition(2, -1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(build_graded_partition(2, std::nan(""), 2.0), std::invalid_argument);
    CHECK_THROWS_AS(build_graded_partition(2, 1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(build_graded_partition(2, INFINITY, 2.0), std::invalid_argument);
  }
  SUBCASE("convexity and the h_Y bound for random parameters") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> m_dist(1, 200);
    std::uniform_real_distribution<double> g_dist(1.0, 16.0), y_dist(0.1, 5.0);
    for (int t = 0; t < 200; ++t) {
      const int m = m_dist(rng);
      const double g = g_dist(rng), y = y_dist(rng);
      const auto p = build_graded_partition(m, y, g);
      CHECK(p.nodes.front() == 0.0);
      CHECK(p.nodes.back() == y);
      double hmax = 0.0;
      for (int k = 0; k < m; ++k) {
        CHECK(p.h(k) > 0.0);
        hmax = std::max(hmax, p.h(k));
        CHECK(p.nodes[k] == doctest::Approx(std::pow(double(k) / m, g) * y).epsilon(1e-14));
      }
      CHECK(hmax == p.h_top());
      CHECK(p.h_top() <= g * y / m * (1 + 1e-14));
    }
  }
}

TEST_CASE("base meshes") {
  SUBCASE("unit interval") {
    const auto m = build_base_mesh(Domain::UnitInterval, 0.5);
    CHECK(m.num_elements() == 2);
    CHECK(m.num_vertices() == 3);
    CHECK(m.num_interior_vertices() == 1);
  }
  SUBCASE("unit square") {
    const auto m = build_base_mesh(Domain::UnitSquare, 1.0);
    CHECK(m.num_elements() == 2);
    CHECK(m.num_vertices() == 4);
    CHECK(m.measure(0) == doctest::Approx(0.5));
  }
  SUBCASE("l-shape from three squares") {
    const auto m = build_base_mesh(Domain::LShape, 1.0);
    CHECK(m.num_elements() == 6);
    CHECK(m.num_vertices() == 8);
    CHECK(is_conforming(m, 3.0));
  }
  SUBCASE("unknown tag") {
    CHECK_THROWS_AS(parse_domain("disk"), std::invalid_argument);
    CHECK(parse_domain("l_shape") == Domain::LShape);
    CHECK_THROWS_AS(build_base_mesh(Domain::UnitSquare, 0.0), std::invalid_argument);
  }
  SUBCASE("size bound, conformity and boundary flags") {
    for (Domain d : {Domain::UnitInterval, Domain::UnitSquare, Domain::Square, Domain::LShape}) {
      for (double h : {1.0, 0.5, 0.3, 0.125}) {
        const auto m = build_base_mesh(d, h);
        CHECK(is_conforming(m, domain_area(d)));
        for (std::size_t e = 0; e < m.num_elements(); ++e) {
          const double side = m.dim() == 1 ? m.diameter(e) : m.diameter(e) / std::sqrt(2.0);
          CHECK(side <= h + 1e-12);
        }
        for (std::size_t v = 0; v < m.num_vertices(); ++v)
          CHECK(m.is_boundary(static_cast<int>(v)) == on_boundary(d, m.vertex(static_cast<int>(v))));
      }
    }
  }
}

TEST_CASE("bisection") {
  const auto sq = build_base_mesh(Domain::UnitSquare, 1.0);
  SUBCASE("mark both") {
    const std::vector<int> all{0, 1};
    CHECK(bisect(sq, all).num_elements() == 4);
  }
  SUBCASE("mark none") {
    const auto r = bisect(sq, {});
    REQUIRE(r.num_elements() == sq.num_elements());
    for (std::size_t e = 0; e < r.num_elements(); ++e) CHECK(r.element(e).v == sq.element(e).v);
  }
  SUBCASE("mark one") {
    const std::vector<int> one{0};
    const auto r = bisect(sq, one);
    CHECK((r.num_elements() == 3 || r.num_elements() == 4));
    CHECK(is_conforming(r, 1.0));
  }
  SUBCASE("out of range") {
    const std::vector<int> bad{5};
    CHECK_THROWS_AS(bisect(sq, bad), std::invalid_argument);
  }
  SUBCASE("random marking keeps conformity and creates only edge midpoints") {
    std::mt19937 rng(11);
    for (Domain d : {Domain::UnitSquare, Domain::LShape, Domain::UnitInterval}) {
      BaseMesh m = build_base_mesh(d, 0.5);
      for (int step = 0; step < 8; ++step) {
        std::vector<int> marked;
        std::bernoulli_distribution coin(0.2);
        for (std::size_t e = 0; e < m.num_elements(); ++e)
          if (coin(rng)) marked.push_back(static_cast<int>(e));
        BaseMesh r = bisect(m, marked);
        CHECK(is_conforming(r, domain_area(d)));
        CHECK(r.num_elements() >= m.num_elements() + marked.size());
        for (std::size_t v = 0; v < m.num_vertices(); ++v) CHECK(r.vertex(v) == m.vertex(v));
        for (std::size_t v = m.num_vertices(); v < r.num_vertices(); ++v) {
          const auto par = r.vertex_parents(static_cast<int>(v));
          REQUIRE(par[0] >= 0);
          REQUIRE(par[0] < static_cast<int>(m.num_vertices()));
          REQUIRE(par[1] < static_cast<int>(m.num_vertices()));
          const Point& a = m.vertex(par[0]);
          const Point& b = m.vertex(par[1]);
          CHECK(r.vertex(v)[0] == doctest::Approx(0.5 * (a[0] + b[0])));
          CHECK(r.vertex(v)[1] == doctest::Approx(0.5 * (a[1] + b[1])));
        }
        m = std::move(r);
      }
    }
  }
  SUBCASE("uniform refinement keeps finitely many similarity classes") {
    for (Domain d : {Domain::UnitSquare, Domain::LShape, Domain::Square}) {
      const BaseMesh m0 = build_base_mesh(d, 1.0);
      double min0 = M_PI;
      for (std::size_t e = 0; e < m0.num_elements(); ++e) min0 = std::min(min0, testing::angles(m0, e)[0]);
      const BaseMesh m6 = refine_uniform(m0, 6);
      CHECK(m6.num_elements() == m0.num_elements() * 64);
      CHECK(is_conforming(m6, domain_area(d)));
      std::set<std::array<long long, 3>> classes;
      double min6 = M_PI;
      for (std::size_t e = 0; e < m6.num_elements(); ++e) {
        const auto a = testing::angles(m6, e);
        min6 = std::min(min6, a[0]);
        classes.insert({std::llround(a[0] * 1e9), std::llround(a[1] * 1e9), std::llround(a[2] * 1e9)});
      }
      CHECK(min6 >= min0 / 2.0);
      CHECK(classes.size() <= 4 * m0.num_elements());
    }
  }
}

TEST_CASE("extrusion and stars") {
  SUBCASE("cell counts") {
    const auto line = build_base_mesh(Domain::UnitInterval, 0.5);
    CHECK(extrude(line, build_graded_partition(3, 1.0, 1.0)).num_cells() == 6);
    const auto sq = build_base_mesh(Domain::UnitSquare, 1.0);
    CHECK(extrude(sq, build_graded_partition(8, 1.0, 2.0)).num_cells() == 16);
    const auto m49 = build_base_mesh(Domain::UnitInterval, 1.0 / 49);
    CHECK(extrude(m49, build_graded_partition(8, 1.0, 3.0)).num_cells() == 392);
  }
  SUBCASE("node indexing is a bijection") {
    const auto sq = build_base_mesh(Domain::UnitSquare, 0.5);
    const auto cyl = extrude(sq, build_graded_partition(5, 1.5, 2.0));
    std::set<int> ids;
    for (std::size_t v = 0; v < sq.num_vertices(); ++v)
      for (int k = 0; k <= cyl.M(); ++k) {
        const int id = cyl.node_id(v, k);
        ids.insert(id);
        CHECK(cyl.node_of(id) == std::array<int, 2>{int(v), k});
      }
    CHECK(ids.size() == cyl.num_nodes());
    CHECK(*ids.rbegin() == int(cyl.num_nodes()) - 1);
  }
  SUBCASE("interior vertex of an interval mesh") {
    const auto m = build_base_mesh(Domain::UnitInterval, 0.25);
    const auto st = star(m, testing::vertex_at(m, 0.5));
    CHECK(st.elements.size() == 2);
    CHECK(st.h == doctest::Approx(0.25));
  }
  SUBCASE("corner of the two-triangle square") {
    const auto sq = build_base_mesh(Domain::UnitSquare, 1.0);
    const int corner = testing::vertex_at(sq, 1.0, 0.0);
    const int other = testing::vertex_at(sq, 0.0, 0.0);
    CHECK(star(sq, corner).elements.size() + star(sq, other).elements.size() == 3);
  }
  SUBCASE("criss-cross center") {
    const auto cc = testing::criss_cross();
    const auto st = star(cc, 4);
    CHECK(st.elements == std::vector<int>{0, 1, 2, 3});
    CHECK(st.measure == doctest::Approx(1.0));
    CHECK(st.h == doctest::Approx(1.0));
  }
  SUBCASE("star invariants and cylindrical stars") {
    const auto m = bisect(build_base_mesh(Domain::LShape, 0.5), std::vector<int>{0, 3, 7});
    const auto cyl = extrude(m, build_graded_partition(4, 1.2, 3.0));
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
      const auto st = star(m, v);
      for (int e : st.elements) {
        const auto ev = m.element_vertices(e);
        CHECK(std::find(ev.begin(), ev.end(), int(v)) != ev.end());
        CHECK(st.h <= m.diameter(e));
      }
      std::set<int> expect;
      for (int e : st.elements)
        for (int k = 0; k < cyl.M(); ++k) expect.insert(cyl.cell_id(e, k));
      const auto cells = cylindrical_star_cells(cyl, st);
      CHECK(std::set<int>(cells.begin(), cells.end()) == expect);
    }
  }
}

TEST_CASE("mesh diagnostics") {
  const auto m = build_base_mesh(Domain::UnitInterval, 0.25);
  SUBCASE("mesh condition") {
    const auto ok = check_mesh_condition(extrude(m, build_graded_partition(5, 1.0, 1.0)), 1.0);
    CHECK(ok.satisfied);
    CHECK(ok.worst_ratio == doctest::Approx(0.8));
    const auto bad = check_mesh_condition(extrude(m, build_graded_partition(2, 1.0, 1.0)), 1.0);
    CHECK_FALSE(bad.satisfied);
    CHECK(bad.worst_ratio == doctest::Approx(2.0));
    CHECK_THROWS_AS(check_mesh_condition(extrude(m, build_graded_partition(2, 1.0, 1.0)), 0.0),
                    std::invalid_argument);
  }
  SUBCASE("aspect ratios") {
    const auto half = build_base_mesh(Domain::UnitInterval, 0.5);
    CHECK(aspect_ratio_stats(extrude(half, build_graded_partition(2, 1.0, 1.0))).bottom_layer_mean ==
          doctest::Approx(1.0));
    YPartition p;
    p.Y = 1.0;
    p.nodes = {0.0, 0.001, 1.0};
    const auto st = aspect_ratio_stats(extrude(half, p));
    CHECK(st.bottom_layer_mean == doctest::Approx(500.0));
    CHECK(st.max == doctest::Approx(500.0));
  }
  SUBCASE("sigma_y") {
    CHECK(sigma_y(build_graded_partition(4, 1.0, 1.0)) == doctest::Approx(1.0));
    CHECK(sigma_y(build_graded_partition(2, 1.0, 2.0)) == doctest::Approx(3.0));
  }
}

TEST_CASE("mesh text round trip") {
  for (Domain d : {Domain::UnitInterval, Domain::LShape}) {
    const auto m = bisect(build_base_mesh(d, 0.5), std::vector<int>{1});
    std::stringstream ss;
    write_mesh(ss, m);
    const std::string text = ss.str();
    CHECK(text.rfind("DIM " + std::to_string(m.dim()), 0) == 0);
    const auto r = read_mesh(ss);
    REQUIRE(r.num_vertices() == m.num_vertices());
    REQUIRE(r.num_elements() == m.num_elements());
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
      CHECK(r.vertex(v) == m.vertex(v));
      CHECK(r.is_boundary(v) == m.is_boundary(v));
    }
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
      CHECK(r.element(e).v == m.element(e).v);
      CHECK(r.element(e).refedge == m.element(e).refedge);
    }
  }
  std::stringstream bad("DIM 3 NV 0 NE 0");
  CHECK_THROWS_AS(read_mesh(bad), std::invalid_argument);
}
