#pragma once

// Structured simplicial meshes of the unit square / unit cube together with
// the patch families used by the projection and corrector constructions.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <vector>

namespace curlod {

using Point = Eigen::Vector3d;  // 2D points carry z = 0

/// Sentinel layer count meaning "grow until the whole mesh is covered".
inline constexpr int kWholeDomain = std::numeric_limits<int>::max();

/// Uniform simplicial mesh of [0,1]^dim.
///
/// Every square is split into two triangles along the (0,0)-(1,1) diagonal;
/// every cube is split into the six Kuhn tetrahedra sharing the main
/// diagonal. Cell vertex lists are sorted ascending, so each local edge
/// (i, j) with i < j carries the global orientation from the smaller to the
/// larger vertex index. Both splits are nested under dyadic refinement.
class Mesh {
 public:
  int dim() const { return dim_; }
  int subdivisions() const { return n_; }
  /// Maximum cell diameter sqrt(dim)/n.
  double mesh_size() const;

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()) / (dim_ + 1); }
  int num_facets() const { return dim_ == 2 ? num_edges() : num_faces(); }

  const Point& vertex(int v) const { return vertices_[v]; }
  const std::array<int, 3>& grid_index(int v) const { return grid_[v]; }

  std::span<const int> cell(int c) const {
    return {cells_.data() + static_cast<std::size_t>(c) * (dim_ + 1),
            static_cast<std::size_t>(dim_ + 1)};
  }
  /// Local edge order: (0,1),(0,2),(1,2) in 2D; (0,1),(0,2),(0,3),(1,2),(1,3),(2,3) in 3D.
  std::span<const int> cell_edges(int c) const {
    const std::size_t k = edges_per_cell();
    return {cell_edges_.data() + static_cast<std::size_t>(c) * k, k};
  }
  /// 3D only. Local face i is opposite local vertex i.
  std::span<const int> cell_faces(int c) const {
    return {cell_faces_.data() + static_cast<std::size_t>(c) * 4, 4};
  }
  /// Codimension-one entities of a cell (edges in 2D, faces in 3D), local
  /// facet i opposite local vertex i.
  std::vector<int> cell_facets(int c) const;
  std::vector<int> facet_vertices(int f) const;

  /// Sorted endpoints (y2, y1): y2 is the smaller global index.
  const std::array<int, 2>& edge(int e) const { return edges_[e]; }
  int edge_y1(int e) const { return edges_[e][1]; }
  int edge_y2(int e) const { return edges_[e][0]; }
  const std::array<int, 3>& face(int f) const { return faces_[f]; }

  /// Unit tangent t_E = (y1 - y2)/|E|.
  Point edge_tangent(int e) const;
  double edge_length(int e) const;
  double cell_volume(int c) const;
  Point cell_barycenter(int c) const;

  bool vertex_on_boundary(int v) const;
  bool edge_on_boundary(int e) const { return edge_bnd_[e] != 0; }
  bool face_on_boundary(int f) const { return face_bnd_[f] != 0; }
  bool facet_on_boundary(int f) const {
    return dim_ == 2 ? edge_on_boundary(f) : face_on_boundary(f);
  }

  std::span<const int> vertex_cells(int v) const {
    return {vc_idx_.data() + vc_ptr_[v],
            static_cast<std::size_t>(vc_ptr_[v + 1] - vc_ptr_[v])};
  }
  std::span<const int> vertex_edges(int v) const {
    return {ve_idx_.data() + ve_ptr_[v],
            static_cast<std::size_t>(ve_ptr_[v + 1] - ve_ptr_[v])};
  }
  std::span<const int> edge_cells(int e) const {
    return {ec_idx_.data() + ec_ptr_[e],
            static_cast<std::size_t>(ec_ptr_[e + 1] - ec_ptr_[e])};
  }

  /// Global edge index of {a, b}, or -1.
  int find_edge(int a, int b) const;
  /// Global face index of {a, b, c}, or -1 (3D only).
  int find_face(int a, int b, int c) const;
  int find_vertex(const std::array<int, 3>& grid) const;

  /// Cell containing x; points on shared boundaries resolve to one of the
  /// adjacent cells deterministically.
  int locate(const Point& x) const;
  /// Barycentric coordinates of x with respect to cell c.
  std::array<double, 4> barycentric(int c, const Point& x) const;

  const Mesh* parent() const { return parent_.get(); }
  std::shared_ptr<const Mesh> parent_ptr() const { return parent_; }
  const std::vector<int>& cell_parent() const { return cell_parent_; }

  int edges_per_cell() const { return dim_ == 2 ? 3 : 6; }

  /// Plain-text dump: one line per entity family, index-sorted.
  void dump(std::ostream& os) const;

 private:
  friend Mesh build_structured_mesh(int dim, int n);
  friend Mesh uniform_refine(const Mesh& mesh);
  void build_entities();

  int dim_ = 0;
  int n_ = 0;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> grid_;
  std::vector<int> cells_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<int> cell_edges_;
  std::vector<int> cell_faces_;
  std::vector<std::uint8_t> edge_bnd_, face_bnd_;
  std::vector<int> vc_ptr_, vc_idx_, ve_ptr_, ve_idx_, ec_ptr_, ec_idx_;
  std::shared_ptr<const Mesh> parent_;
  std::vector<int> cell_parent_;
};

/// Uniform mesh of [0,1]^dim with n subdivisions per side.
Mesh build_structured_mesh(int dim, int n);

/// Mesh with n doubled; parent points to a copy of the input and every fine
/// cell records the coarse cell containing it.
Mesh uniform_refine(const Mesh& mesh);

/// For each fine cell the coarse cell containing it. Throws if the meshes are
/// not nested.
std::vector<int> ancestor_map(const Mesh& coarse, const Mesh& fine);

/// Coarse/fine pair with the cell ancestry precomputed.
class MeshPair {
 public:
  MeshPair(std::shared_ptr<const Mesh> coarse, std::shared_ptr<const Mesh> fine);

  const Mesh& coarse() const { return *coarse_; }
  const Mesh& fine() const { return *fine_; }
  std::shared_ptr<const Mesh> coarse_ptr() const { return coarse_; }
  std::shared_ptr<const Mesh> fine_ptr() const { return fine_; }

  int coarse_cell(int fine_cell) const { return f2c_[fine_cell]; }
  const std::vector<int>& fine_to_coarse() const { return f2c_; }
  std::span<const int> children(int coarse_cell) const {
    return {child_idx_.data() + child_ptr_[coarse_cell],
            static_cast<std::size_t>(child_ptr_[coarse_cell + 1] - child_ptr_[coarse_cell])};
  }
  /// Sorted fine cells covering the given coarse cells.
  std::vector<int> fine_cells(std::span<const int> coarse_cells) const;

 private:
  std::shared_ptr<const Mesh> coarse_, fine_;
  std::vector<int> f2c_;
  std::vector<int> child_ptr_, child_idx_;
};

enum class PatchKind { nodal, extended_edge, layer, refined };

/// Position of a patch entity relative to the patch boundary.
enum class EntityLocation : std::uint8_t {
  interior,        ///< not on the patch boundary
  boundary_gamma,  ///< on the patch boundary, only on facets lying on Gamma
  boundary_inner,  ///< on at least one patch-boundary facet interior to the domain
};

/// Sorted global entity ids of a patch closure with their classification.
struct EntitySet {
  std::vector<int> ids;
  std::vector<EntityLocation> where;

  int size() const { return static_cast<int>(ids.size()); }
  /// Local position of a global id, or -1.
  int local(int global) const;
  bool on_patch_boundary(int i) const { return where[i] != EntityLocation::interior; }
};

/// Sorted set of cells together with the entity classification.
struct Patch {
  PatchKind kind = PatchKind::layer;
  int anchor = -1;
  int layers = 0;
  std::vector<int> cells;
  EntitySet vertices, edges, faces;

  bool contains_cell(int c) const;
};

/// Builds the classification for an arbitrary sorted cell set.
Patch make_patch(const Mesh& mesh, std::vector<int> cells, PatchKind kind, int anchor,
                 int layers = 0);

/// All cells containing vertex y.
Patch nodal_patch(const Mesh& mesh, int y);
/// Union of the nodal patches of both endpoints of edge e.
Patch extended_edge_patch(const Mesh& mesh, int e);
/// m-layer vertex-adjacency neighborhood of cell t; saturates at the full mesh.
Patch layer_patch(const Mesh& mesh, int t, int m);
/// Cells of `mesh` sharing at least a vertex with the given cells.
std::vector<int> vertex_neighbourhood(const Mesh& mesh, std::span<const int> cells);

/// Fine patch covering a coarse cell set.
Patch refine_patch(const MeshPair& pair, const Patch& coarse_patch);

}  // namespace curlod
