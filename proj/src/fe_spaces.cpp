#include "curlod/fe_spaces.hpp"

#include "curlod/error.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace curlod {

namespace {

constexpr std::array<std::array<int, 2>, 3> kEdges2 = {{{0, 1}, {0, 2}, {1, 2}}};
constexpr std::array<std::array<int, 2>, 6> kEdges3 = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

const std::array<int, 2>& local_edge(int dim, int k) {
  return dim == 2 ? kEdges2[k] : kEdges3[k];
}

// Clockwise rotation used to identify 2D Raviart-Thomas with Nedelec.
Point rotate(const Point& v) { return {v.y(), -v.x(), 0.0}; }

double snap(double v) { return std::abs(v) < 1e-13 ? 0.0 : v; }

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::lagrange: return "S";
    case Family::nedelec: return "N";
    case Family::raviart_thomas: return "RT";
    case Family::piecewise_constant: return "P0";
  }
  return "?";
}

std::string to_string(const SpaceTag& t) {
  return to_string(t.family) + "(" + std::to_string(t.dim) + "D,n=" + std::to_string(t.level) +
         ")";
}

SparseOperator::SparseOperator(SpaceTag rows, SpaceTag cols, Matrix m)
    : rows_(rows), cols_(cols), m_(std::move(m)) {
  m_.makeCompressed();
}

Eigen::VectorXd SparseOperator::apply(const Eigen::VectorXd& x) const {
  if (x.size() != m_.cols())
    throw Error("SparseOperator::apply: vector of size " + std::to_string(x.size()) +
                " applied to " + to_string(rows_) + " <- " + to_string(cols_) + " with " +
                std::to_string(m_.cols()) + " columns");
  return m_ * x;
}

SparseOperator SparseOperator::transpose() const {
  return SparseOperator(cols_, rows_, Matrix(m_.transpose()));
}

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) {
  if (!(a.col_space() == b.row_space()) || a.cols() != b.rows())
    throw Error("SparseOperator product: space mismatch " + to_string(a.col_space()) + " vs " +
                to_string(b.row_space()));
  return SparseOperator(a.row_space(), b.col_space(),
                        SparseOperator::Matrix(a.matrix() * b.matrix()));
}

DofMap dof_map(std::shared_ptr<const Mesh> mesh, Family family) {
  DofMap d;
  d.family = family;
  d.mesh = mesh;
  const Mesh& m = *mesh;
  switch (family) {
    case Family::lagrange:
      d.count = m.num_vertices();
      d.is_boundary.resize(d.count);
      for (int v = 0; v < d.count; ++v) d.is_boundary[v] = m.vertex_on_boundary(v);
      break;
    case Family::nedelec:
      d.count = m.num_edges();
      d.is_boundary.resize(d.count);
      for (int e = 0; e < d.count; ++e) d.is_boundary[e] = m.edge_on_boundary(e);
      break;
    case Family::raviart_thomas:
      d.count = m.num_facets();
      d.is_boundary.resize(d.count);
      for (int f = 0; f < d.count; ++f) d.is_boundary[f] = m.facet_on_boundary(f);
      break;
    case Family::piecewise_constant:
      d.count = m.num_cells();
      d.is_boundary.assign(d.count, 0);
      break;
  }
  for (int i = 0; i < d.count; ++i)
    if (d.is_boundary[i]) d.boundary.push_back(i);
  return d;
}

std::array<double, 4> CellGeometry::lambda(const Point& p) const {
  std::array<double, 4> l{0, 0, 0, 0};
  for (int k = 0; k <= dim; ++k) l[k] = 1.0 + grad[k].dot(p - x[k]);
  return l;
}

Point CellGeometry::point(const std::array<double, 4>& lam) const {
  Point p = Point::Zero();
  for (int k = 0; k <= dim; ++k) p += lam[k] * x[k];
  return p;
}

CellGeometry cell_geometry(const Mesh& mesh, int c) {
  CellGeometry g;
  g.dim = mesh.dim();
  auto v = mesh.cell(c);
  for (int k = 0; k <= g.dim; ++k) g.x[k] = mesh.vertex(v[k]);
  if (g.dim == 2) {
    Eigen::Matrix2d J;
    J.col(0) = (g.x[1] - g.x[0]).head<2>();
    J.col(1) = (g.x[2] - g.x[0]).head<2>();
    const double det = J.determinant();
    const Eigen::Matrix2d Ji = J.inverse();
    g.grad[1] = Point(Ji(0, 0), Ji(0, 1), 0);
    g.grad[2] = Point(Ji(1, 0), Ji(1, 1), 0);
    g.grad[0] = -g.grad[1] - g.grad[2];
    g.volume = 0.5 * std::abs(det);
    g.orientation = det > 0 ? 1 : -1;
  } else {
    Eigen::Matrix3d J;
    for (int k = 0; k < 3; ++k) J.col(k) = g.x[k + 1] - g.x[0];
    const double det = J.determinant();
    const Eigen::Matrix3d Ji = J.inverse();
    for (int k = 0; k < 3; ++k) g.grad[k + 1] = Ji.row(k).transpose();
    g.grad[0] = -g.grad[1] - g.grad[2] - g.grad[3];
    g.volume = std::abs(det) / 6.0;
    g.orientation = det > 0 ? 1 : -1;
  }
  return g;
}

int local_dof_count(int dim, Family f) {
  switch (f) {
    case Family::lagrange: return dim + 1;
    case Family::nedelec: return dim == 2 ? 3 : 6;
    case Family::raviart_thomas: return dim + 1;
    case Family::piecewise_constant: return 1;
  }
  return 0;
}

std::array<int, 6> local_dofs(const Mesh& mesh, int c, Family f) {
  std::array<int, 6> d{};
  switch (f) {
    case Family::lagrange: {
      auto v = mesh.cell(c);
      std::copy(v.begin(), v.end(), d.begin());
      break;
    }
    case Family::nedelec: {
      auto e = mesh.cell_edges(c);
      std::copy(e.begin(), e.end(), d.begin());
      break;
    }
    case Family::raviart_thomas: {
      if (mesh.dim() == 2) {
        auto e = mesh.cell_edges(c);
        std::copy(e.begin(), e.end(), d.begin());
      } else {
        auto fc = mesh.cell_faces(c);
        std::copy(fc.begin(), fc.end(), d.begin());
      }
      break;
    }
    case Family::piecewise_constant: d[0] = c; break;
  }
  return d;
}

void evaluate_basis(const Mesh& mesh, int c, const CellGeometry& g, Family f,
                    const std::array<double, 4>& lam, LocalBasis& out) {
  const int dim = g.dim;
  out.count = local_dof_count(dim, f);
  out.dof = local_dofs(mesh, c, f);
  switch (f) {
    case Family::lagrange:
      for (int k = 0; k <= dim; ++k) {
        out.value[k] = Point(lam[k], 0, 0);
        out.deriv[k] = g.grad[k];
      }
      break;
    case Family::nedelec:
      for (int k = 0; k < out.count; ++k) {
        const auto& [a, b] = local_edge(dim, k);
        out.value[k] = lam[a] * g.grad[b] - lam[b] * g.grad[a];
        out.deriv[k] = 2.0 * g.grad[a].cross(g.grad[b]);
      }
      break;
    case Family::raviart_thomas:
      if (dim == 2) {
        for (int k = 0; k < 3; ++k) {
          const auto& [a, b] = local_edge(2, k);
          out.value[k] = rotate(lam[a] * g.grad[b] - lam[b] * g.grad[a]);
          out.deriv[k] = Point(2.0 * g.grad[a].cross(g.grad[b]).z(), 0, 0);
        }
      } else {
        for (int k = 0; k < 4; ++k) {
          std::array<int, 3> fv{};
          int m = 0;
          for (int j = 0; j < 4; ++j)
            if (j != k) fv[m++] = j;
          const auto [i, j, l] = fv;
          out.value[k] = 2.0 * (lam[i] * g.grad[j].cross(g.grad[l]) +
                                lam[j] * g.grad[l].cross(g.grad[i]) +
                                lam[l] * g.grad[i].cross(g.grad[j]));
          out.deriv[k] = Point(6.0 * g.grad[i].dot(g.grad[j].cross(g.grad[l])), 0, 0);
        }
      }
      break;
    case Family::piecewise_constant:
      out.value[0] = Point(1, 0, 0);
      out.deriv[0] = Point::Zero();
      break;
  }
}

Eigen::SparseMatrix<int> gradient_signs(const Mesh& mesh) {
  std::vector<Eigen::Triplet<int>> t;
  t.reserve(2 * static_cast<std::size_t>(mesh.num_edges()));
  for (int e = 0; e < mesh.num_edges(); ++e) {
    t.emplace_back(e, mesh.edge_y1(e), 1);
    t.emplace_back(e, mesh.edge_y2(e), -1);
  }
  Eigen::SparseMatrix<int> G(mesh.num_edges(), mesh.num_vertices());
  G.setFromTriplets(t.begin(), t.end());
  return G;
}

Eigen::SparseMatrix<int> curl_signs(const Mesh& mesh) {
  std::vector<Eigen::Triplet<int>> t;
  if (mesh.dim() == 3) {
    // boundary of [a,b,c] = [b,c] - [a,c] + [a,b]
    for (int f = 0; f < mesh.num_faces(); ++f) {
      const auto [a, b, c] = mesh.face(f);
      t.emplace_back(f, mesh.find_edge(b, c), 1);
      t.emplace_back(f, mesh.find_edge(a, c), -1);
      t.emplace_back(f, mesh.find_edge(a, b), 1);
    }
    Eigen::SparseMatrix<int> C(mesh.num_faces(), mesh.num_edges());
    C.setFromTriplets(t.begin(), t.end());
    return C;
  }
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const int o = cell_geometry(mesh, c).orientation;
    auto e = mesh.cell_edges(c);  // (0,1),(0,2),(1,2)
    t.emplace_back(c, e[0], o);
    t.emplace_back(c, e[1], -o);
    t.emplace_back(c, e[2], o);
  }
  Eigen::SparseMatrix<int> C(mesh.num_cells(), mesh.num_edges());
  C.setFromTriplets(t.begin(), t.end());
  return C;
}

Eigen::SparseMatrix<int> divergence_signs(const Mesh& mesh) {
  CURLOD_REQUIRE(mesh.dim() == 3, "divergence incidence is defined in 3D");
  std::vector<Eigen::Triplet<int>> t;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const int o = cell_geometry(mesh, c).orientation;
    auto f = mesh.cell_faces(c);
    for (int k = 0; k < 4; ++k) t.emplace_back(c, f[k], (k % 2 == 0 ? 1 : -1) * o);
  }
  Eigen::SparseMatrix<int> D(mesh.num_cells(), mesh.num_faces());
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

SparseOperator gradient_incidence(const Mesh& mesh) {
  const int d = mesh.dim(), n = mesh.subdivisions();
  return SparseOperator({Family::nedelec, d, n}, {Family::lagrange, d, n},
                        gradient_signs(mesh).cast<double>());
}

SparseOperator curl_incidence(const Mesh& mesh) {
  const int d = mesh.dim(), n = mesh.subdivisions();
  SparseOperator::Matrix C = curl_signs(mesh).cast<double>();
  if (d == 2) {
    Eigen::VectorXd s(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) s[c] = 1.0 / mesh.cell_volume(c);
    C = s.asDiagonal() * C;
    return SparseOperator({Family::piecewise_constant, d, n}, {Family::nedelec, d, n}, C);
  }
  return SparseOperator({Family::raviart_thomas, d, n}, {Family::nedelec, d, n}, C);
}

SparseOperator divergence_incidence(const Mesh& mesh) {
  const int d = mesh.dim(), n = mesh.subdivisions();
  SparseOperator::Matrix D = divergence_signs(mesh).cast<double>();
  Eigen::VectorXd s(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) s[c] = 1.0 / mesh.cell_volume(c);
  D = s.asDiagonal() * D;
  return SparseOperator({Family::piecewise_constant, d, n}, {Family::raviart_thomas, d, n}, D);
}

Eigen::VectorXd interpolate_nedelec(const Mesh& mesh,
                                    const std::function<Point(const Point&)>& field) {
  static const double r = std::sqrt(0.6);
  static const std::array<double, 3> s{0.5 * (1 - r), 0.5, 0.5 * (1 + r)};
  static const std::array<double, 3> w{5.0 / 18, 8.0 / 18, 5.0 / 18};
  Eigen::VectorXd u(mesh.num_edges());
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Point a = mesh.vertex(mesh.edge_y2(e)), b = mesh.vertex(mesh.edge_y1(e));
    const Point d = b - a;  // |E| t_E
    double acc = 0;
    for (int q = 0; q < 3; ++q) acc += w[q] * field(a + s[q] * d).dot(d);
    u[e] = acc;
  }
  return u;
}

SparseOperator coarse_to_fine_embedding(const MeshPair& pair, Family family) {
  const Mesh& cm = pair.coarse();
  const Mesh& fm = pair.fine();
  const int dim = cm.dim();
  std::vector<Eigen::Triplet<double>> t;
  LocalBasis basis;
  int rows = 0, cols = 0;

  auto coarse_basis_at = [&](int fine_cell, const Point& x) {
    const int c = pair.coarse_cell(fine_cell);
    const CellGeometry g = cell_geometry(cm, c);
    evaluate_basis(cm, c, g, family, g.lambda(x), basis);
  };

  switch (family) {
    case Family::lagrange: {
      rows = fm.num_vertices();
      cols = cm.num_vertices();
      for (int v = 0; v < rows; ++v) {
        coarse_basis_at(fm.vertex_cells(v)[0], fm.vertex(v));
        for (int k = 0; k < basis.count; ++k)
          if (double val = snap(basis.value[k].x()); val != 0) t.emplace_back(v, basis.dof[k], val);
      }
      break;
    }
    case Family::nedelec: {
      rows = fm.num_edges();
      cols = cm.num_edges();
      for (int e = 0; e < rows; ++e) {
        const Point a = fm.vertex(fm.edge_y2(e)), b = fm.vertex(fm.edge_y1(e));
        coarse_basis_at(fm.edge_cells(e)[0], 0.5 * (a + b));
        for (int k = 0; k < basis.count; ++k)
          if (double val = snap(basis.value[k].dot(b - a)); val != 0)
            t.emplace_back(e, basis.dof[k], val);
      }
      break;
    }
    case Family::raviart_thomas: {
      rows = fm.num_facets();
      cols = cm.num_facets();
      for (int f = 0; f < rows; ++f) {
        const auto fv = fm.facet_vertices(f);
        Point centroid = Point::Zero();
        for (int v : fv) centroid += fm.vertex(v);
        centroid /= static_cast<double>(fv.size());
        Point area_normal;
        if (dim == 2) {
          area_normal = rotate(fm.vertex(fv[1]) - fm.vertex(fv[0]));
        } else {
          area_normal =
              0.5 * (fm.vertex(fv[1]) - fm.vertex(fv[0])).cross(fm.vertex(fv[2]) - fm.vertex(fv[0]));
        }
        // a fine cell containing the facet
        int fc = -1;
        if (dim == 2) {
          fc = fm.edge_cells(f)[0];
        } else {
          for (int c : fm.vertex_cells(fv[0])) {
            auto cf = fm.cell_faces(c);
            if (std::find(cf.begin(), cf.end(), f) != cf.end()) {
              fc = c;
              break;
            }
          }
        }
        coarse_basis_at(fc, centroid);
        for (int k = 0; k < basis.count; ++k)
          if (double val = snap(basis.value[k].dot(area_normal)); val != 0)
            t.emplace_back(f, basis.dof[k], val);
      }
      break;
    }
    case Family::piecewise_constant: {
      rows = fm.num_cells();
      cols = cm.num_cells();
      for (int c = 0; c < rows; ++c) t.emplace_back(c, pair.coarse_cell(c), 1.0);
      break;
    }
  }
  SparseOperator::Matrix E(rows, cols);
  E.setFromTriplets(t.begin(), t.end());
  return SparseOperator({family, dim, fm.subdivisions()}, {family, dim, cm.subdivisions()},
                        std::move(E));
}

SparseOperator coarse_to_fine_embedding(const DofMap& coarse, const DofMap& fine) {
  CURLOD_REQUIRE(coarse.family == fine.family, "families differ");
  MeshPair pair(coarse.mesh, fine.mesh);
  return coarse_to_fine_embedding(pair, coarse.family);
}

}  // namespace curlod
