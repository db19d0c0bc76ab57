#include "fracafem/mesh.hpp"

#include "fracafem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace fracafem {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double distance(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

}  // namespace

Domain parse_domain(std::string_view tag) {
  if (tag == "unit_interval") return Domain::UnitInterval;
  if (tag == "unit_square") return Domain::UnitSquare;
  if (tag == "square" || tag == "square(-1,1)^2") return Domain::Square;
  if (tag == "l_shape") return Domain::LShape;
  throw std::invalid_argument("unknown domain tag: " + std::string(tag));
}

std::string to_string(Domain domain) {
  switch (domain) {
    case Domain::UnitInterval: return "unit_interval";
    case Domain::UnitSquare: return "unit_square";
    case Domain::Square: return "square";
    case Domain::LShape: return "l_shape";
  }
  return "unknown";
}

int domain_dimension(Domain domain) { return domain == Domain::UnitInterval ? 1 : 2; }

BaseMesh::BaseMesh(int dim, std::vector<Point> vertices, std::vector<Element> elements)
    : dim_(dim), vertices_(std::move(vertices)), elements_(std::move(elements)) {
  vertex_parents_.assign(vertices_.size(), {-1, -1});
  build_derived();
}

BaseMesh::BaseMesh(int dim, std::vector<Point> vertices, std::vector<Element> elements,
                   std::vector<std::uint8_t> boundary,
                   std::vector<std::array<int, 2>> vertex_parents)
    : dim_(dim),
      vertices_(std::move(vertices)),
      elements_(std::move(elements)),
      boundary_(std::move(boundary)),
      vertex_parents_(std::move(vertex_parents)) {
  if (boundary_.size() != vertices_.size() || vertex_parents_.size() != vertices_.size())
    throw std::invalid_argument("BaseMesh: per-vertex arrays have inconsistent sizes");
  build_derived();
}

void BaseMesh::build_derived() {
  if (dim_ != 1 && dim_ != 2) throw std::invalid_argument("BaseMesh: dimension must be 1 or 2");
  const int nv = static_cast<int>(vertices_.size());
  const int ne = static_cast<int>(elements_.size());
  const int nvpe = dim_ + 1;

  diameter_.resize(ne);
  measure_.resize(ne);
  for (int e = 0; e < ne; ++e) {
    const auto& el = elements_[e];
    for (int i = 0; i < nvpe; ++i)
      if (el.v[i] < 0 || el.v[i] >= nv) throw std::invalid_argument("BaseMesh: vertex index out of range");
    if (dim_ == 1) {
      const double len = std::abs(vertices_[el.v[1]][0] - vertices_[el.v[0]][0]);
      diameter_[e] = measure_[e] = len;
    } else {
      const Point& a = vertices_[el.v[0]];
      const Point& b = vertices_[el.v[1]];
      const Point& c = vertices_[el.v[2]];
      measure_[e] = 0.5 * std::abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
      diameter_[e] = std::max({distance(a, b), distance(b, c), distance(c, a)});
    }
    if (!(measure_[e] > 1e-300)) throw GeometryError("BaseMesh: degenerate element " + std::to_string(e));
  }

  // vertex -> elements
  vertex_element_offsets_.assign(nv + 1, 0);
  for (const auto& el : elements_)
    for (int i = 0; i < nvpe; ++i) ++vertex_element_offsets_[el.v[i] + 1];
  std::partial_sum(vertex_element_offsets_.begin(), vertex_element_offsets_.end(),
                   vertex_element_offsets_.begin());
  vertex_elements_.assign(vertex_element_offsets_.back(), 0);
  {
    std::vector<int> fill(vertex_element_offsets_.begin(), vertex_element_offsets_.end() - 1);
    for (int e = 0; e < ne; ++e)
      for (int i = 0; i < nvpe; ++i) vertex_elements_[fill[elements_[e].v[i]]++] = e;
  }

  // edges
  edges_.clear();
  element_edges_.assign(dim_ == 2 ? ne : 0, {-1, -1, -1});
  edge_multiplicity_.clear();
  if (dim_ == 2) {
    std::unordered_map<std::uint64_t, int> ids;
    ids.reserve(3 * ne);
    for (int e = 0; e < ne; ++e) {
      const auto& v = elements_[e].v;
      for (int i = 0; i < 3; ++i) {
        const int a = v[(i + 1) % 3];
        const int b = v[(i + 2) % 3];
        auto [it, inserted] = ids.try_emplace(edge_key(a, b), static_cast<int>(edges_.size()));
        if (inserted) {
          edges_.push_back({std::min(a, b), std::max(a, b)});
          edge_multiplicity_.push_back(0);
        }
        element_edges_[e][i] = it->second;
        ++edge_multiplicity_[it->second];
      }
    }
    for (int m : edge_multiplicity_)
      if (m > 2) throw GeometryError("BaseMesh: edge shared by more than two elements");
  }

  if (boundary_.empty()) {
    boundary_.assign(nv, 0);
    if (dim_ == 1) {
      for (int v = 0; v < nv; ++v)
        if (vertex_element_offsets_[v + 1] - vertex_element_offsets_[v] == 1) boundary_[v] = 1;
    } else {
      for (std::size_t id = 0; id < edges_.size(); ++id)
        if (edge_multiplicity_[id] == 1) boundary_[edges_[id][0]] = boundary_[edges_[id][1]] = 1;
    }
  }
  num_interior_ = static_cast<std::size_t>(std::count(boundary_.begin(), boundary_.end(), 0));

  // vertex neighbors, including self
  neighbor_offsets_.assign(nv + 1, 0);
  std::vector<std::vector<int>> nb(nv);
  for (int v = 0; v < nv; ++v) {
    nb[v].push_back(v);
    for (int e : elements_of_vertex(v))
      for (int i = 0; i < nvpe; ++i) nb[v].push_back(elements_[e].v[i]);
    std::sort(nb[v].begin(), nb[v].end());
    nb[v].erase(std::unique(nb[v].begin(), nb[v].end()), nb[v].end());
    neighbor_offsets_[v + 1] = neighbor_offsets_[v] + static_cast<int>(nb[v].size());
  }
  neighbors_.clear();
  neighbors_.reserve(neighbor_offsets_.back());
  for (auto& list : nb) neighbors_.insert(neighbors_.end(), list.begin(), list.end());
}

namespace {

// Splits a square (given by grid corner ids) into two triangles along either
// diagonal. The diagonal is the refinement edge of both halves.
void split_square(std::vector<Element>& out, int p00, int p10, int p11, int p01, bool slash) {
  if (slash) {
    out.push_back({{p00, p10, p11}, 1, -1});
    out.push_back({{p00, p11, p01}, 2, -1});
  } else {
    out.push_back({{p10, p11, p01}, 1, -1});
    out.push_back({{p10, p01, p00}, 2, -1});
  }
}

}  // namespace

BaseMesh build_base_mesh(Domain domain, double initial_h) {
  if (!(initial_h > 0.0) || !std::isfinite(initial_h))
    throw std::invalid_argument("build_base_mesh: initial_h must be positive");
  const int m = std::max(1, static_cast<int>(std::ceil(1.0 / initial_h - 1e-12)));

  if (domain == Domain::UnitInterval) {
    std::vector<Point> verts(m + 1);
    std::vector<Element> elems(m);
    for (int i = 0; i <= m; ++i) verts[i] = {static_cast<double>(i) / m, 0.0};
    for (int i = 0; i < m; ++i) elems[i] = Element{{i, i + 1, -1}, 0, -1};
    return BaseMesh(1, std::move(verts), std::move(elems));
  }

  // Square cells indexed by integer lower-left corners in units of 1/m.
  struct Cell {
    int i, j;
    bool slash;
  };
  std::vector<Cell> cells;
  auto add_block = [&](int i0, int j0, int ni, int nj, bool slash) {
    for (int j = j0; j < j0 + nj; ++j)
      for (int i = i0; i < i0 + ni; ++i) cells.push_back({i, j, slash});
  };
  switch (domain) {
    case Domain::UnitSquare: add_block(0, 0, m, m, true); break;
    case Domain::Square: add_block(-m, -m, 2 * m, 2 * m, true); break;
    case Domain::LShape:
      // Diagonals of the three unit squares meet at the reentrant corner.
      add_block(-m, -m, m, m, true);  // lower-left
      add_block(-m, 0, m, m, false);  // upper-left
      add_block(0, 0, m, m, true);    // upper-right
      break;
    default: break;
  }

  std::map<std::pair<int, int>, int> ids;
  std::vector<Point> verts;
  auto vid = [&](int i, int j) {
    auto [it, inserted] = ids.try_emplace({j, i}, static_cast<int>(verts.size()));
    if (inserted) verts.push_back({static_cast<double>(i) / m, static_cast<double>(j) / m});
    return it->second;
  };
  // Number vertices row by row for a readable dump.
  {
    std::vector<std::pair<int, int>> corners;
    for (const auto& c : cells)
      for (int dj = 0; dj <= 1; ++dj)
        for (int di = 0; di <= 1; ++di) corners.emplace_back(c.j + dj, c.i + di);
    std::sort(corners.begin(), corners.end());
    corners.erase(std::unique(corners.begin(), corners.end()), corners.end());
    for (auto [j, i] : corners) vid(i, j);
  }
  std::vector<Element> elems;
  for (const auto& c : cells)
    split_square(elems, vid(c.i, c.j), vid(c.i + 1, c.j), vid(c.i + 1, c.j + 1), vid(c.i, c.j + 1),
                 c.slash);
  return BaseMesh(2, std::move(verts), std::move(elems));
}

BaseMesh build_rectangle_mesh(double width, double height, int nx, int ny) {
  if (!(width > 0.0) || !(height > 0.0) || nx < 1 || ny < 1)
    throw std::invalid_argument("build_rectangle_mesh: invalid size");
  std::vector<Point> verts;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) verts.push_back({width * i / nx, height * j / ny});
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Element> elems;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      split_square(elems, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), true);
  // Exact coordinates on the outer boundary.
  for (int j = 0; j <= ny; ++j) verts[id(nx, j)][0] = width;
  for (int i = 0; i <= nx; ++i) verts[id(i, ny)][1] = height;
  return BaseMesh(2, std::move(verts), std::move(elems));
}

BaseMesh bisect(const BaseMesh& mesh, std::span<const int> marked) {
  const int ne = static_cast<int>(mesh.num_elements());
  for (int e : marked)
    if (e < 0 || e >= ne) throw std::invalid_argument("bisect: element id out of range");
  if (marked.empty()) return mesh;

  std::vector<Point> verts(mesh.vertices().begin(), mesh.vertices().end());
  std::vector<std::uint8_t> boundary(verts.size());
  std::vector<std::array<int, 2>> parents(verts.size());
  for (std::size_t v = 0; v < verts.size(); ++v) {
    boundary[v] = mesh.is_boundary(static_cast<int>(v)) ? 1 : 0;
    parents[v] = mesh.vertex_parents(static_cast<int>(v));
  }
  std::vector<Element> out;

  if (mesh.dim() == 1) {
    std::vector<char> flag(ne, 0);
    for (int e : marked) flag[e] = 1;
    for (int e = 0; e < ne; ++e) {
      const Element& el = mesh.element(e);
      if (!flag[e]) {
        out.push_back({el.v, 0, e});
        continue;
      }
      const int a = el.v[0];
      const int b = el.v[1];
      const int mid = static_cast<int>(verts.size());
      verts.push_back({0.5 * (verts[a][0] + verts[b][0]), 0.0});
      boundary.push_back(0);
      parents.push_back({a, b});
      out.push_back({{a, mid, -1}, 0, e});
      out.push_back({{mid, b, -1}, 0, e});
    }
    return BaseMesh(1, std::move(verts), std::move(out), std::move(boundary), std::move(parents));
  }

  // Edge marking with closure: an element with any marked edge must have its
  // refinement edge marked.
  const int nedges = static_cast<int>(mesh.num_edges());
  std::vector<std::vector<int>> edge_elems(nedges);
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i < 3; ++i) edge_elems[mesh.element_edge(e, i)].push_back(e);
  std::vector<char> edge_marked(nedges, 0);
  std::vector<int> work;
  auto mark_edge = [&](int id) {
    if (!edge_marked[id]) {
      edge_marked[id] = 1;
      work.push_back(id);
    }
  };
  for (int e : marked) mark_edge(mesh.element_edge(e, mesh.element(e).refedge));
  while (!work.empty()) {
    const int id = work.back();
    work.pop_back();
    for (int e : edge_elems[id]) mark_edge(mesh.element_edge(e, mesh.element(e).refedge));
  }

  std::unordered_map<std::uint64_t, int> midpoint;
  for (int id = 0; id < nedges; ++id) {
    if (!edge_marked[id]) continue;
    const auto [a, b] = mesh.edge(id);
    const int mid = static_cast<int>(verts.size());
    verts.push_back({0.5 * (verts[a][0] + verts[b][0]), 0.5 * (verts[a][1] + verts[b][1])});
    boundary.push_back(mesh.edge_multiplicity(id) == 1 ? 1 : 0);
    parents.push_back({a, b});
    midpoint.emplace(edge_key(a, b), mid);
  }

  std::vector<Element> stack;
  for (int e = 0; e < ne; ++e) {
    const Element& root = mesh.element(e);
    stack.push_back({root.v, root.refedge, e});
    while (!stack.empty()) {
      Element el = stack.back();
      stack.pop_back();
      const int r = el.refedge;
      const int peak = el.v[r];
      const int b = el.v[(r + 1) % 3];
      const int c = el.v[(r + 2) % 3];
      auto it = midpoint.find(edge_key(b, c));
      if (it == midpoint.end()) {
        out.push_back(el);
        continue;
      }
      const int m = it->second;
      // Children keep orientation; their refinement edge is opposite the new vertex.
      stack.push_back({{m, c, peak}, 0, e});
      stack.push_back({{m, peak, b}, 0, e});
    }
  }
  return BaseMesh(2, std::move(verts), std::move(out), std::move(boundary), std::move(parents));
}

BaseMesh refine_uniform(const BaseMesh& mesh, int times) {
  BaseMesh current = mesh;
  for (int t = 0; t < times; ++t) {
    std::vector<int> all(current.num_elements());
    std::iota(all.begin(), all.end(), 0);
    current = bisect(current, all);
  }
  return current;
}

YPartition build_graded_partition(int M, double Y, double gamma) {
  if (M < 1) throw std::invalid_argument("build_graded_partition: M must be >= 1");
  if (!std::isfinite(Y) || !(Y > 0.0)) throw std::invalid_argument("build_graded_partition: Y must be positive");
  if (!std::isfinite(gamma) || !(gamma >= 1.0))
    throw std::invalid_argument("build_graded_partition: gamma must be >= 1");
  YPartition p;
  p.Y = Y;
  p.gamma = gamma;
  p.nodes.resize(M + 1);
  for (int k = 0; k <= M; ++k) p.nodes[k] = std::pow(static_cast<double>(k) / M, gamma) * Y;
  p.nodes[0] = 0.0;
  p.nodes[M] = Y;
  return p;
}

YPartition refine_uniform(const YPartition& ypart) {
  YPartition p;
  p.Y = ypart.Y;
  p.gamma = ypart.gamma;
  p.nodes.reserve(2 * ypart.nodes.size() - 1);
  for (int k = 0; k < ypart.M(); ++k) {
    p.nodes.push_back(ypart.nodes[k]);
    p.nodes.push_back(0.5 * (ypart.nodes[k] + ypart.nodes[k + 1]));
  }
  p.nodes.push_back(ypart.Y);
  return p;
}

double sigma_y(const YPartition& ypart) {
  double sigma = 1.0;
  for (int k = 0; k + 1 < ypart.M(); ++k) {
    const double r = ypart.h(k + 1) / ypart.h(k);
    sigma = std::max({sigma, r, 1.0 / r});
  }
  return sigma;
}

CylinderMesh::CylinderMesh(std::shared_ptr<const BaseMesh> base, YPartition ypart)
    : base_(std::move(base)), ypart_(std::move(ypart)) {
  if (!base_) throw std::invalid_argument("CylinderMesh: null base mesh");
  if (ypart_.M() < 1) throw std::invalid_argument("CylinderMesh: empty partition");
  for (int k = 0; k < ypart_.M(); ++k)
    if (!(ypart_.h(k) > 0.0)) throw GeometryError("CylinderMesh: partition not strictly increasing");
}

CylinderMesh extrude(const BaseMesh& base, const YPartition& ypart) {
  return CylinderMesh(std::make_shared<const BaseMesh>(base), ypart);
}

Star star(const BaseMesh& base, int vertex) {
  if (vertex < 0 || vertex >= static_cast<int>(base.num_vertices()))
    throw std::invalid_argument("star: vertex out of range");
  Star s;
  s.center = vertex;
  const auto elems = base.elements_of_vertex(vertex);
  s.elements.assign(elems.begin(), elems.end());
  s.h = std::numeric_limits<double>::infinity();
  for (int e : s.elements) {
    s.h = std::min(s.h, base.diameter(e));
    s.measure += base.measure(e);
  }
  return s;
}

std::vector<int> cylindrical_star_cells(const CylinderMesh& cyl, const Star& st) {
  std::vector<int> cells;
  cells.reserve(st.elements.size() * cyl.M());
  for (int e : st.elements)
    for (int k = 0; k < cyl.M(); ++k) cells.push_back(cyl.cell_id(e, k));
  std::sort(cells.begin(), cells.end());
  return cells;
}

std::vector<int> cylindrical_patch_cells(const CylinderMesh& cyl, const Star& st) {
  std::vector<int> elems;
  for (int e : st.elements)
    for (int v : cyl.base().element_vertices(e))
      for (int e2 : cyl.base().elements_of_vertex(v)) elems.push_back(e2);
  std::sort(elems.begin(), elems.end());
  elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
  std::vector<int> cells;
  for (int e : elems)
    for (int k = 0; k < cyl.M(); ++k) cells.push_back(cyl.cell_id(e, k));
  return cells;
}

MeshConditionReport check_mesh_condition(const CylinderMesh& cyl, double c_t) {
  if (!(c_t > 0.0)) throw std::invalid_argument("check_mesh_condition: C_T must be positive");
  MeshConditionReport report;
  const BaseMesh& base = cyl.base();
  const double h_y = cyl.ypart().h_top();
  for (int v = 0; v < static_cast<int>(base.num_vertices()); ++v) {
    if (base.is_boundary(v)) continue;
    double hz = std::numeric_limits<double>::infinity();
    for (int e : base.elements_of_vertex(v)) hz = std::min(hz, base.diameter(e));
    const double ratio = h_y / (c_t * hz);
    if (ratio > report.worst_ratio) {
      report.worst_ratio = ratio;
      report.worst_node = v;
    }
  }
  report.satisfied = report.worst_ratio <= 1.0;
  return report;
}

AspectRatioStats aspect_ratio_stats(const CylinderMesh& cyl) {
  AspectRatioStats stats;
  const BaseMesh& base = cyl.base();
  const double h1 = cyl.ypart().h(0);
  double hmin_y = h1;
  for (int k = 0; k < cyl.M(); ++k) hmin_y = std::min(hmin_y, cyl.ypart().h(k));
  double sum = 0.0;
  double hk_max = 0.0;
  for (int e = 0; e < static_cast<int>(base.num_elements()); ++e) {
    sum += base.diameter(e) / h1;
    hk_max = std::max(hk_max, base.diameter(e));
  }
  stats.bottom_layer_mean = sum / static_cast<double>(base.num_elements());
  stats.max = hk_max / hmin_y;
  return stats;
}

void write_mesh(std::ostream& out, const BaseMesh& mesh) {
  const int n = mesh.dim();
  std::ostringstream buf;
  buf.precision(17);
  buf << "DIM " << n << " NV " << mesh.num_vertices() << " NE " << mesh.num_elements() << '\n';
  for (int v = 0; v < static_cast<int>(mesh.num_vertices()); ++v) {
    buf << "v " << mesh.vertex(v)[0];
    if (n == 2) buf << ' ' << mesh.vertex(v)[1];
    buf << ' ' << (mesh.is_boundary(v) ? 1 : 0) << '\n';
  }
  for (int e = 0; e < static_cast<int>(mesh.num_elements()); ++e) {
    const Element& el = mesh.element(e);
    buf << "e " << el.v[0] << ' ' << el.v[1];
    if (n == 2) buf << ' ' << el.v[2];
    buf << ' ' << el.refedge << '\n';
  }
  out << buf.str();
}

BaseMesh read_mesh(std::istream& in) {
  std::string tag;
  int n = 0;
  std::size_t nv = 0;
  std::size_t ne = 0;
  std::string t1, t2;
  if (!(in >> tag >> n >> t1 >> nv >> t2 >> ne) || tag != "DIM" || t1 != "NV" || t2 != "NE")
    throw std::invalid_argument("read_mesh: malformed header");
  if (n != 1 && n != 2) throw std::invalid_argument("read_mesh: bad dimension");
  std::vector<Point> verts(nv);
  std::vector<std::uint8_t> boundary(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    int flag = 0;
    if (!(in >> tag) || tag != "v") throw std::invalid_argument("read_mesh: expected vertex line");
    in >> verts[v][0];
    if (n == 2) in >> verts[v][1];
    in >> flag;
    boundary[v] = static_cast<std::uint8_t>(flag != 0);
  }
  std::vector<Element> elems(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    if (!(in >> tag) || tag != "e") throw std::invalid_argument("read_mesh: expected element line");
    in >> elems[e].v[0] >> elems[e].v[1];
    if (n == 2) in >> elems[e].v[2];
    in >> elems[e].refedge;
  }
  if (!in) throw std::invalid_argument("read_mesh: truncated input");
  std::vector<std::array<int, 2>> parents(nv, {-1, -1});
  return BaseMesh(n, std::move(verts), std::move(elems), std::move(boundary), std::move(parents));
}

}  // namespace fracafem
