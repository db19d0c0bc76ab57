#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fracafem {

/// Point of the base domain. For n = 1 only the first coordinate is used.
using Point = std::array<double, 2>;

enum class Domain { UnitInterval, UnitSquare, Square, LShape };

/// Accepts unit_interval, unit_square, square (the (-1,1)^2 box) and l_shape.
Domain parse_domain(std::string_view tag);
std::string to_string(Domain domain);
int domain_dimension(Domain domain);

/// A simplex of the base mesh. For intervals v[2] is -1.
/// For triangles, `refedge` is the local index of the vertex opposite the
/// refinement edge (newest-vertex bisection state).
struct Element {
  std::array<int, 3> v{-1, -1, -1};
  int refedge = 0;
  int parent = -1;
};

/// Conforming simplicial mesh of a domain in R^1 or R^2.
///
/// Vertex numbering is stable under refinement: a refined mesh keeps every
/// vertex of its parent at the same index and appends the new midpoints.
class BaseMesh {
 public:
  BaseMesh() = default;

  /// Boundary flags are derived from the topology (vertices on edges with a
  /// single adjacent element, or interval endpoints with one neighbor).
  BaseMesh(int dim, std::vector<Point> vertices, std::vector<Element> elements);

  /// Explicit boundary flags and ancestry of vertices.
  BaseMesh(int dim, std::vector<Point> vertices, std::vector<Element> elements,
           std::vector<std::uint8_t> boundary, std::vector<std::array<int, 2>> vertex_parents);

  int dim() const noexcept { return dim_; }
  int vertices_per_element() const noexcept { return dim_ + 1; }
  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_elements() const noexcept { return elements_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  const Point& vertex(int v) const { return vertices_[v]; }
  std::span<const Point> vertices() const noexcept { return vertices_; }
  const Element& element(int e) const { return elements_[e]; }
  std::span<const Element> elements() const noexcept { return elements_; }
  std::span<const int> element_vertices(int e) const {
    return {elements_[e].v.data(), static_cast<std::size_t>(dim_ + 1)};
  }

  bool is_boundary(int v) const { return boundary_[v] != 0; }
  std::size_t num_interior_vertices() const noexcept { return num_interior_; }

  double diameter(int e) const { return diameter_[e]; }
  double measure(int e) const { return measure_[e]; }

  /// Elements containing vertex v, in increasing id order.
  std::span<const int> elements_of_vertex(int v) const {
    return {vertex_elements_.data() + vertex_element_offsets_[v],
            static_cast<std::size_t>(vertex_element_offsets_[v + 1] - vertex_element_offsets_[v])};
  }

  /// Edges (triangles only). Edge i of element e is opposite local vertex i.
  const std::array<int, 2>& edge(int id) const { return edges_[id]; }
  int element_edge(int e, int local) const { return element_edges_[e][local]; }
  /// Number of elements sharing an edge (1 on the boundary, 2 inside).
  int edge_multiplicity(int id) const { return edge_multiplicity_[id]; }

  /// Endpoints of the parent edge for vertices created by bisection, or {-1,-1}.
  const std::array<int, 2>& vertex_parents(int v) const { return vertex_parents_[v]; }

  /// Vertex-to-vertex adjacency (including the vertex itself), sorted.
  std::span<const int> vertex_neighbors(int v) const {
    return {neighbors_.data() + neighbor_offsets_[v],
            static_cast<std::size_t>(neighbor_offsets_[v + 1] - neighbor_offsets_[v])};
  }

 private:
  void build_derived();

  int dim_ = 1;
  std::vector<Point> vertices_;
  std::vector<Element> elements_;
  std::vector<std::uint8_t> boundary_;
  std::vector<std::array<int, 2>> vertex_parents_;
  std::size_t num_interior_ = 0;

  std::vector<double> diameter_;
  std::vector<double> measure_;
  std::vector<int> vertex_element_offsets_;
  std::vector<int> vertex_elements_;
  std::vector<int> neighbor_offsets_;
  std::vector<int> neighbors_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> element_edges_;
  std::vector<int> edge_multiplicity_;
};

/// Uniform mesh of a named domain. `initial_h` bounds the side of the square
/// (or interval) macro cells; every square is split along one diagonal, which
/// is the refinement edge of both halves.
BaseMesh build_base_mesh(Domain domain, double initial_h);

/// Rectangle (0,width) x (0,height) split into nx*ny squares, two triangles each.
BaseMesh build_rectangle_mesh(double width, double height, int nx, int ny);

/// Newest-vertex bisection of the marked elements with conformity closure.
BaseMesh bisect(const BaseMesh& mesh, std::span<const int> marked);

/// Bisects every element `times` times.
BaseMesh refine_uniform(const BaseMesh& mesh, int times = 1);

/// Graded partition y_k = (k/M)^gamma * Y of [0, Y].
struct YPartition {
  double Y = 1.0;
  double gamma = 1.0;
  std::vector<double> nodes;

  int M() const noexcept { return static_cast<int>(nodes.size()) - 1; }
  double h(int k) const { return nodes[k + 1] - nodes[k]; }
  /// Largest interval, y_M - y_{M-1} for a graded partition.
  double h_top() const { return nodes[nodes.size() - 1] - nodes[nodes.size() - 2]; }
};

YPartition build_graded_partition(int M, double Y, double gamma);

/// Splits every interval in half.
YPartition refine_uniform(const YPartition& ypart);

/// Max ratio h_I1/h_I2 over touching intervals (the weak shape-regularity constant).
double sigma_y(const YPartition& ypart);

/// Tensor product of a base mesh and a partition of [0, Y].
///
/// Cell (e, k) = K_e x [y_k, y_{k+1}] has id e*M + k. Tensor node (v, k) has id
/// v*(M+1) + k.
class CylinderMesh {
 public:
  CylinderMesh(std::shared_ptr<const BaseMesh> base, YPartition ypart);

  const BaseMesh& base() const noexcept { return *base_; }
  std::shared_ptr<const BaseMesh> base_ptr() const noexcept { return base_; }
  const YPartition& ypart() const noexcept { return ypart_; }
  int M() const noexcept { return ypart_.M(); }
  double Y() const noexcept { return ypart_.Y; }

  std::size_t num_cells() const noexcept { return base_->num_elements() * M(); }
  std::size_t num_nodes() const noexcept { return base_->num_vertices() * (M() + 1); }

  int cell_id(int element, int layer) const { return element * M() + layer; }
  std::array<int, 2> cell_of(int id) const { return {id / M(), id % M()}; }
  int node_id(int vertex, int level) const { return vertex * (M() + 1) + level; }
  std::array<int, 2> node_of(int id) const { return {id / (M() + 1), id % (M() + 1)}; }

 private:
  std::shared_ptr<const BaseMesh> base_;
  YPartition ypart_;
};

CylinderMesh extrude(const BaseMesh& base, const YPartition& ypart);

/// Element patch around a base vertex.
struct Star {
  int center = -1;
  std::vector<int> elements;
  double h = 0.0;  ///< min diameter over the patch
  double measure = 0.0;
};

Star star(const BaseMesh& base, int vertex);

/// Cells of the cylindrical star S_z x (0, Y).
std::vector<int> cylindrical_star_cells(const CylinderMesh& cyl, const Star& st);

/// Cells of the cylindrical patch: union of cylindrical stars of the vertices of S_z.
std::vector<int> cylindrical_patch_cells(const CylinderMesh& cyl, const Star& st);

struct MeshConditionReport {
  bool satisfied = true;
  int worst_node = -1;
  double worst_ratio = 0.0;  ///< max over interior nodes of h_Y / (C_T h_z)
};

/// Checks h_Y <= C_T h_z for all interior base vertices.
MeshConditionReport check_mesh_condition(const CylinderMesh& cyl, double c_t);

struct AspectRatioStats {
  double bottom_layer_mean = 0.0;
  double max = 0.0;
};

/// h_K / h_I: mean over the bottom layer and maximum over all cells.
AspectRatioStats aspect_ratio_stats(const CylinderMesh& cyl);

/// Plain-text dump: `DIM n NV nv NE ne`, then `v x [y] flag` and `e v0 v1 [v2] refedge`.
void write_mesh(std::ostream& out, const BaseMesh& mesh);
BaseMesh read_mesh(std::istream& in);

}  // namespace fracafem
