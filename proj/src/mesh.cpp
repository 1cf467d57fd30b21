#include "curlod/mesh.hpp"

#include "curlod/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <tuple>

namespace curlod {

namespace {

constexpr std::array<std::array<int, 2>, 3> kEdges2 = {{{0, 1}, {0, 2}, {1, 2}}};
constexpr std::array<std::array<int, 2>, 6> kEdges3 = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
constexpr std::array<std::array<int, 3>, 6> kPerms = {
    {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

// CSR inversion of an entity -> vertex-like incidence list.
void invert(int num_targets, const std::vector<std::pair<int, int>>& pairs,
            std::vector<int>& ptr, std::vector<int>& idx) {
  ptr.assign(num_targets + 1, 0);
  for (const auto& [t, s] : pairs) ++ptr[t + 1];
  std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
  idx.assign(pairs.size(), 0);
  std::vector<int> fill(ptr.begin(), ptr.end() - 1);
  for (const auto& [t, s] : pairs) idx[fill[t]++] = s;
  for (int t = 0; t < num_targets; ++t) std::sort(idx.begin() + ptr[t], idx.begin() + ptr[t + 1]);
}

}  // namespace

double Mesh::mesh_size() const { return std::sqrt(static_cast<double>(dim_)) / n_; }

std::vector<int> Mesh::cell_facets(int c) const {
  if (dim_ == 3) {
    auto f = cell_faces(c);
    return {f.begin(), f.end()};
  }
  // facet opposite local vertex i: edges (1,2),(0,2),(0,1)
  auto e = cell_edges(c);
  return {e[2], e[1], e[0]};
}

std::vector<int> Mesh::facet_vertices(int f) const {
  if (dim_ == 2) return {edges_[f][0], edges_[f][1]};
  return {faces_[f][0], faces_[f][1], faces_[f][2]};
}

Point Mesh::edge_tangent(int e) const {
  const Point d = vertices_[edges_[e][1]] - vertices_[edges_[e][0]];
  return d / d.norm();
}

double Mesh::edge_length(int e) const {
  return (vertices_[edges_[e][1]] - vertices_[edges_[e][0]]).norm();
}

double Mesh::cell_volume(int c) const {
  auto v = cell(c);
  if (dim_ == 2) {
    const Point a = vertices_[v[1]] - vertices_[v[0]];
    const Point b = vertices_[v[2]] - vertices_[v[0]];
    return 0.5 * std::abs(a.x() * b.y() - a.y() * b.x());
  }
  const Point a = vertices_[v[1]] - vertices_[v[0]];
  const Point b = vertices_[v[2]] - vertices_[v[0]];
  const Point d = vertices_[v[3]] - vertices_[v[0]];
  return std::abs(a.dot(b.cross(d))) / 6.0;
}

Point Mesh::cell_barycenter(int c) const {
  Point x = Point::Zero();
  for (int v : cell(c)) x += vertices_[v];
  return x / (dim_ + 1);
}

bool Mesh::vertex_on_boundary(int v) const {
  for (int d = 0; d < dim_; ++d)
    if (grid_[v][d] == 0 || grid_[v][d] == n_) return true;
  return false;
}

int Mesh::find_edge(int a, int b) const {
  if (a > b) std::swap(a, b);
  const std::array<int, 2> key{a, b};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) return -1;
  return static_cast<int>(it - edges_.begin());
}

int Mesh::find_face(int a, int b, int c) const {
  std::array<int, 3> key{a, b, c};
  std::sort(key.begin(), key.end());
  auto it = std::lower_bound(faces_.begin(), faces_.end(), key);
  if (it == faces_.end() || *it != key) return -1;
  return static_cast<int>(it - faces_.begin());
}

int Mesh::find_vertex(const std::array<int, 3>& g) const {
  const int s = n_ + 1;
  for (int d = 0; d < dim_; ++d)
    if (g[d] < 0 || g[d] > n_) return -1;
  return dim_ == 2 ? g[0] + g[1] * s : g[0] + g[1] * s + g[2] * s * s;
}

int Mesh::locate(const Point& x) const {
  std::array<int, 3> i{0, 0, 0};
  std::array<double, 3> xi{0, 0, 0};
  for (int d = 0; d < dim_; ++d) {
    const double t = x[d] * n_;
    i[d] = std::clamp(static_cast<int>(std::floor(t)), 0, n_ - 1);
    xi[d] = t - i[d];
  }
  if (dim_ == 2) {
    const int cube = i[0] + i[1] * n_;
    return 2 * cube + (xi[0] >= xi[1] ? 0 : 1);
  }
  const int cube = i[0] + i[1] * n_ + i[2] * n_ * n_;
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return xi[a] > xi[b]; });
  const auto it = std::find(kPerms.begin(), kPerms.end(), order);
  return 6 * cube + static_cast<int>(it - kPerms.begin());
}

std::array<double, 4> Mesh::barycentric(int c, const Point& x) const {
  auto v = cell(c);
  std::array<double, 4> lam{0, 0, 0, 0};
  if (dim_ == 2) {
    Eigen::Matrix2d J;
    J.col(0) = (vertices_[v[1]] - vertices_[v[0]]).head<2>();
    J.col(1) = (vertices_[v[2]] - vertices_[v[0]]).head<2>();
    const Eigen::Vector2d l = J.inverse() * (x - vertices_[v[0]]).head<2>();
    lam = {1.0 - l[0] - l[1], l[0], l[1], 0.0};
  } else {
    Eigen::Matrix3d J;
    for (int k = 0; k < 3; ++k) J.col(k) = vertices_[v[k + 1]] - vertices_[v[0]];
    const Eigen::Vector3d l = J.inverse() * (x - vertices_[v[0]]);
    lam = {1.0 - l.sum(), l[0], l[1], l[2]};
  }
  return lam;
}

void Mesh::dump(std::ostream& os) const {
  os.precision(17);
  os << "mesh dim " << dim_ << " n " << n_ << '\n';
  os << "vertices";
  for (const auto& p : vertices_)
    for (int d = 0; d < dim_; ++d) os << ' ' << p[d];
  os << "\nedges";
  for (const auto& e : edges_) os << ' ' << e[0] << ' ' << e[1];
  if (dim_ == 3) {
    os << "\nfaces";
    for (const auto& f : faces_) os << ' ' << f[0] << ' ' << f[1] << ' ' << f[2];
  }
  os << "\ncells";
  for (int v : cells_) os << ' ' << v;
  os << '\n';
}

void Mesh::build_entities() {
  const int nc = num_cells();
  const int nv = num_vertices();
  const int nloc = dim_ + 1;

  std::vector<std::pair<int, int>> vc;
  vc.reserve(cells_.size());
  for (int c = 0; c < nc; ++c)
    for (int v : cell(c)) vc.emplace_back(v, c);
  invert(nv, vc, vc_ptr_, vc_idx_);

  // edges
  const int ne_loc = edges_per_cell();
  std::vector<std::tuple<std::array<int, 2>, int>> ekeys;
  ekeys.reserve(static_cast<std::size_t>(nc) * ne_loc);
  for (int c = 0; c < nc; ++c) {
    auto v = cell(c);
    for (int k = 0; k < ne_loc; ++k) {
      const auto& le = dim_ == 2 ? kEdges2[k] : kEdges3[k];
      ekeys.emplace_back(std::array<int, 2>{v[le[0]], v[le[1]]}, c * ne_loc + k);
    }
  }
  std::sort(ekeys.begin(), ekeys.end());
  cell_edges_.assign(ekeys.size(), -1);
  edges_.clear();
  for (const auto& [key, slot] : ekeys) {
    if (edges_.empty() || edges_.back() != key) edges_.push_back(key);
    cell_edges_[slot] = static_cast<int>(edges_.size()) - 1;
  }

  auto shares_boundary_plane = [&](std::span<const int> verts) {
    for (int d = 0; d < dim_; ++d) {
      const int g = grid_[verts[0]][d];
      if (g != 0 && g != n_) continue;
      bool all = true;
      for (int v : verts) all = all && grid_[v][d] == g;
      if (all) return true;
    }
    return false;
  };

  edge_bnd_.assign(edges_.size(), 0);
  for (std::size_t e = 0; e < edges_.size(); ++e)
    edge_bnd_[e] = shares_boundary_plane(edges_[e]) ? 1 : 0;

  if (dim_ == 3) {
    std::vector<std::tuple<std::array<int, 3>, int>> fkeys;
    fkeys.reserve(static_cast<std::size_t>(nc) * 4);
    for (int c = 0; c < nc; ++c) {
      auto v = cell(c);
      for (int k = 0; k < 4; ++k) {
        std::array<int, 3> key{};
        int m = 0;
        for (int j = 0; j < 4; ++j)
          if (j != k) key[m++] = v[j];
        fkeys.emplace_back(key, c * 4 + k);
      }
    }
    std::sort(fkeys.begin(), fkeys.end());
    cell_faces_.assign(fkeys.size(), -1);
    faces_.clear();
    for (const auto& [key, slot] : fkeys) {
      if (faces_.empty() || faces_.back() != key) faces_.push_back(key);
      cell_faces_[slot] = static_cast<int>(faces_.size()) - 1;
    }
    face_bnd_.assign(faces_.size(), 0);
    for (std::size_t f = 0; f < faces_.size(); ++f)
      face_bnd_[f] = shares_boundary_plane(faces_[f]) ? 1 : 0;
  }

  std::vector<std::pair<int, int>> ve;
  for (int e = 0; e < num_edges(); ++e) {
    ve.emplace_back(edges_[e][0], e);
    ve.emplace_back(edges_[e][1], e);
  }
  invert(nv, ve, ve_ptr_, ve_idx_);

  std::vector<std::pair<int, int>> ec;
  for (int c = 0; c < nc; ++c)
    for (int e : cell_edges(c)) ec.emplace_back(e, c);
  invert(num_edges(), ec, ec_ptr_, ec_idx_);
  (void)nloc;
}

Mesh build_structured_mesh(int dim, int n) {
  CURLOD_REQUIRE(dim == 2 || dim == 3, "dim must be 2 or 3, got " + std::to_string(dim));
  CURLOD_REQUIRE(n >= 1, "n must be at least 1");
  Mesh m;
  m.dim_ = dim;
  m.n_ = n;
  const int s = n + 1;
  const int nz = dim == 3 ? s : 1;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < s; ++j)
      for (int i = 0; i < s; ++i) {
        m.grid_.push_back({i, j, k});
        m.vertices_.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n,
                                 dim == 3 ? static_cast<double>(k) / n : 0.0);
      }
  auto vid = [&](int i, int j, int k) { return i + j * s + k * s * s; };
  if (dim == 2) {
    m.cells_.reserve(static_cast<std::size_t>(n) * n * 6);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int v0 = vid(i, j, 0), v1 = vid(i + 1, j, 0), v2 = vid(i, j + 1, 0),
                  v3 = vid(i + 1, j + 1, 0);
        m.cells_.insert(m.cells_.end(), {v0, v1, v3});
        m.cells_.insert(m.cells_.end(), {v0, v2, v3});
      }
  } else {
    m.cells_.reserve(static_cast<std::size_t>(n) * n * n * 24);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          for (const auto& perm : kPerms) {
            std::array<int, 3> g{i, j, k};
            m.cells_.push_back(vid(g[0], g[1], g[2]));
            for (int a : perm) {
              ++g[a];
              m.cells_.push_back(vid(g[0], g[1], g[2]));
            }
          }
  }
  m.build_entities();
  return m;
}

Mesh uniform_refine(const Mesh& mesh) {
  Mesh fine = build_structured_mesh(mesh.dim(), 2 * mesh.subdivisions());
  fine.parent_ = std::make_shared<const Mesh>(mesh);
  fine.cell_parent_ = ancestor_map(mesh, fine);
  return fine;
}

std::vector<int> ancestor_map(const Mesh& coarse, const Mesh& fine) {
  CURLOD_REQUIRE(coarse.dim() == fine.dim(), "dimension mismatch");
  if (fine.subdivisions() % coarse.subdivisions() != 0)
    throw Error("ancestor_map: meshes not nested (n_fine=" +
                std::to_string(fine.subdivisions()) +
                ", n_coarse=" + std::to_string(coarse.subdivisions()) + ")");
  std::vector<int> map(fine.num_cells());
  for (int c = 0; c < fine.num_cells(); ++c) {
    const int p = coarse.locate(fine.cell_barycenter(c));
    for (int v : fine.cell(c)) {
      const auto lam = coarse.barycentric(p, fine.vertex(v));
      for (int k = 0; k <= coarse.dim(); ++k)
        if (lam[k] < -1e-12)
          throw Error("ancestor_map: fine cell " + std::to_string(c) +
                      " is not contained in a coarse cell");
    }
    map[c] = p;
  }
  return map;
}

MeshPair::MeshPair(std::shared_ptr<const Mesh> coarse, std::shared_ptr<const Mesh> fine)
    : coarse_(std::move(coarse)), fine_(std::move(fine)) {
  if (coarse_.get() == fine_.get() ||
      coarse_->subdivisions() == fine_->subdivisions()) {
    f2c_.resize(fine_->num_cells());
    std::iota(f2c_.begin(), f2c_.end(), 0);
  } else {
    f2c_ = ancestor_map(*coarse_, *fine_);
  }
  std::vector<std::pair<int, int>> pc;
  pc.reserve(f2c_.size());
  for (int c = 0; c < static_cast<int>(f2c_.size()); ++c) pc.emplace_back(f2c_[c], c);
  invert(coarse_->num_cells(), pc, child_ptr_, child_idx_);
}

std::vector<int> MeshPair::fine_cells(std::span<const int> coarse_cells) const {
  std::vector<int> out;
  for (int c : coarse_cells) {
    auto ch = children(c);
    out.insert(out.end(), ch.begin(), ch.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

int EntitySet::local(int global) const {
  auto it = std::lower_bound(ids.begin(), ids.end(), global);
  if (it == ids.end() || *it != global) return -1;
  return static_cast<int>(it - ids.begin());
}

bool Patch::contains_cell(int c) const {
  return std::binary_search(cells.begin(), cells.end(), c);
}

Patch make_patch(const Mesh& mesh, std::vector<int> cells, PatchKind kind, int anchor,
                 int layers) {
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  CURLOD_REQUIRE(!cells.empty(), "empty patch");
  Patch p;
  p.kind = kind;
  p.anchor = anchor;
  p.layers = layers;
  p.cells = std::move(cells);

  std::vector<int> verts, edges, faces, facets;
  for (int c : p.cells) {
    auto v = mesh.cell(c);
    verts.insert(verts.end(), v.begin(), v.end());
    auto e = mesh.cell_edges(c);
    edges.insert(edges.end(), e.begin(), e.end());
    if (mesh.dim() == 3) {
      auto f = mesh.cell_faces(c);
      faces.insert(faces.end(), f.begin(), f.end());
    }
    auto fc = mesh.cell_facets(c);
    facets.insert(facets.end(), fc.begin(), fc.end());
  }
  auto uniq = [](std::vector<int>& x) {
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
  };
  uniq(verts);
  uniq(edges);
  uniq(faces);
  std::sort(facets.begin(), facets.end());

  p.vertices.ids = verts;
  p.vertices.where.assign(verts.size(), EntityLocation::interior);
  p.edges.ids = edges;
  p.edges.where.assign(edges.size(), EntityLocation::interior);
  p.faces.ids = faces;
  p.faces.where.assign(faces.size(), EntityLocation::interior);

  auto mark = [](EntitySet& s, int id, EntityLocation loc) {
    const int i = s.local(id);
    if (i >= 0 && loc > s.where[i]) s.where[i] = loc;
  };

  for (std::size_t i = 0; i < facets.size();) {
    std::size_t j = i;
    while (j < facets.size() && facets[j] == facets[i]) ++j;
    if (j - i == 1) {
      const int f = facets[i];
      const auto loc = mesh.facet_on_boundary(f) ? EntityLocation::boundary_gamma
                                                 : EntityLocation::boundary_inner;
      const auto fv = mesh.facet_vertices(f);
      for (int v : fv) mark(p.vertices, v, loc);
      if (mesh.dim() == 2) {
        mark(p.edges, f, loc);
      } else {
        mark(p.faces, f, loc);
        mark(p.edges, mesh.find_edge(fv[0], fv[1]), loc);
        mark(p.edges, mesh.find_edge(fv[0], fv[2]), loc);
        mark(p.edges, mesh.find_edge(fv[1], fv[2]), loc);
      }
    }
    i = j;
  }
  return p;
}

Patch nodal_patch(const Mesh& mesh, int y) {
  CURLOD_REQUIRE(y >= 0 && y < mesh.num_vertices(), "invalid vertex " + std::to_string(y));
  auto c = mesh.vertex_cells(y);
  return make_patch(mesh, {c.begin(), c.end()}, PatchKind::nodal, y);
}

Patch extended_edge_patch(const Mesh& mesh, int e) {
  CURLOD_REQUIRE(e >= 0 && e < mesh.num_edges(), "invalid edge " + std::to_string(e));
  auto a = mesh.vertex_cells(mesh.edge_y1(e));
  auto b = mesh.vertex_cells(mesh.edge_y2(e));
  std::vector<int> cells(a.begin(), a.end());
  cells.insert(cells.end(), b.begin(), b.end());
  return make_patch(mesh, std::move(cells), PatchKind::extended_edge, e);
}

std::vector<int> vertex_neighbourhood(const Mesh& mesh, std::span<const int> cells) {
  std::vector<int> verts;
  for (int c : cells) {
    auto v = mesh.cell(c);
    verts.insert(verts.end(), v.begin(), v.end());
  }
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  std::vector<int> out;
  for (int v : verts) {
    auto vc = mesh.vertex_cells(v);
    out.insert(out.end(), vc.begin(), vc.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Patch layer_patch(const Mesh& mesh, int t, int m) {
  CURLOD_REQUIRE(t >= 0 && t < mesh.num_cells(), "invalid cell " + std::to_string(t));
  CURLOD_REQUIRE(m >= 0, "layer count must be non-negative");
  std::vector<int> cells{t};
  for (int k = 0; k < m; ++k) {
    auto next = vertex_neighbourhood(mesh, cells);
    if (next.size() == cells.size()) break;
    cells = std::move(next);
  }
  return make_patch(mesh, std::move(cells), PatchKind::layer, t, m);
}

Patch refine_patch(const MeshPair& pair, const Patch& coarse_patch) {
  return make_patch(pair.fine(), pair.fine_cells(coarse_patch.cells), PatchKind::refined,
                    coarse_patch.anchor, coarse_patch.layers);
}

}  // namespace curlod
