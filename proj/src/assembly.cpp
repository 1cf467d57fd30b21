#include "curlod/assembly.hpp"

#include "curlod/error.hpp"
#include "curlod/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace curlod {

double checkerboard_eval(const Checkerboard& c, const Point& x) {
  if (c.is_constant()) return c.value_black;
  int parity = 0;
  for (int i = 0; i < 3; ++i) {
    const int k = std::clamp(static_cast<int>(std::floor(x[i] * c.block_count)), 0,
                             c.block_count - 1);
    parity += k;
  }
  return parity % 2 == 0 ? c.value_black : c.value_white;
}

void require_aligned(const Checkerboard& c, const Mesh& mesh) {
  if (c.is_constant()) return;
  if (mesh.subdivisions() % c.block_count != 0)
    throw Error("checkerboard with " + std::to_string(c.block_count) +
                " blocks per side is not resolved by a mesh with " +
                std::to_string(mesh.subdivisions()) + " subdivisions");
}

NedelecElement nedelec_element(const Mesh& mesh, int c) {
  NedelecElement el;
  const CellGeometry g = cell_geometry(mesh, c);
  const QuadratureRule& q = simplex_rule(mesh.dim(), 2);
  LocalBasis b;
  el.curl.setZero();
  el.mass.setZero();
  for (int p = 0; p < q.size(); ++p) {
    evaluate_basis(mesh, c, g, Family::nedelec, q.lambda[p], b);
    const double w = q.weight[p] * g.volume;
    for (int i = 0; i < b.count; ++i)
      for (int j = 0; j < b.count; ++j) el.mass(i, j) += w * b.value[i].dot(b.value[j]);
    if (p == 0)
      for (int i = 0; i < b.count; ++i)
        for (int j = 0; j < b.count; ++j) el.curl(i, j) = g.volume * b.deriv[i].dot(b.deriv[j]);
  }
  el.count = b.count;
  return el;
}

CellCoefficients sample_coefficients(const Mesh& mesh, const Checkerboard& mu,
                                     const Checkerboard& kappa) {
  require_aligned(mu, mesh);
  require_aligned(kappa, mesh);
  CellCoefficients cc;
  cc.mu.resize(mesh.num_cells());
  cc.kappa.resize(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Point x = mesh.cell_barycenter(c);
    cc.mu[c] = checkerboard_eval(mu, x);
    cc.kappa[c] = checkerboard_eval(kappa, x);
  }
  return cc;
}

Eigen::Matrix<double, 6, 6> element_matrix(const Mesh& mesh, const CellCoefficients& coef, int c) {
  const NedelecElement el = nedelec_element(mesh, c);
  return coef.mu[c] * el.curl + coef.kappa[c] * el.mass;
}

SparseOperator assemble_B(const Mesh& mesh, const CellCoefficients& coef) {
  const int k = mesh.edges_per_cell();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(mesh.num_cells()) * k * k);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto A = element_matrix(mesh, coef, c);
    auto e = mesh.cell_edges(c);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) t.emplace_back(e[i], e[j], A(i, j));
  }
  SparseOperator::Matrix B(mesh.num_edges(), mesh.num_edges());
  B.setFromTriplets(t.begin(), t.end());
  const SpaceTag tag{Family::nedelec, mesh.dim(), mesh.subdivisions()};
  return SparseOperator(tag, tag, std::move(B));
}

SparseOperator assemble_B(const Mesh& mesh, const Checkerboard& mu, const Checkerboard& kappa) {
  return assemble_B(mesh, sample_coefficients(mesh, mu, kappa));
}

SparseOperator assemble_B_T(const Mesh& mesh, const Checkerboard& mu, const Checkerboard& kappa,
                            int cell) {
  CURLOD_REQUIRE(cell >= 0 && cell < mesh.num_cells(), "invalid cell " + std::to_string(cell));
  require_aligned(mu, mesh);
  require_aligned(kappa, mesh);
  const Point x = mesh.cell_barycenter(cell);
  const NedelecElement el = nedelec_element(mesh, cell);
  const Eigen::Matrix<double, 6, 6> A =
      checkerboard_eval(mu, x) * el.curl + checkerboard_eval(kappa, x) * el.mass;
  auto e = mesh.cell_edges(cell);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < el.count; ++i)
    for (int j = 0; j < el.count; ++j) t.emplace_back(e[i], e[j], A(i, j));
  SparseOperator::Matrix B(mesh.num_edges(), mesh.num_edges());
  B.setFromTriplets(t.begin(), t.end());
  const SpaceTag tag{Family::nedelec, mesh.dim(), mesh.subdivisions()};
  return SparseOperator(tag, tag, std::move(B));
}

SparseOperator assemble_B_composite(const MeshPair& pair, const SparseOperator& B_fine) {
  const SparseOperator E = coarse_to_fine_embedding(pair, Family::nedelec);
  return E.transpose() * (B_fine * E);
}

Eigen::Matrix<double, 6, 1> element_load(const Mesh& mesh, int c, const LoadSpec& f) {
  const CellGeometry g = cell_geometry(mesh, c);
  const QuadratureRule& q = simplex_rule(mesh.dim(), 4);
  LocalBasis b;
  Eigen::Matrix<double, 6, 1> r = Eigen::Matrix<double, 6, 1>::Zero();
  for (int p = 0; p < q.size(); ++p) {
    evaluate_basis(mesh, c, g, Family::nedelec, q.lambda[p], b);
    const Point fx = f.f(g.point(q.lambda[p]));
    const double w = q.weight[p] * g.volume;
    for (int i = 0; i < b.count; ++i) r[i] += w * fx.dot(b.value[i]);
  }
  return r;
}

Eigen::VectorXd assemble_load(const Mesh& mesh, const LoadSpec& f) {
  CURLOD_REQUIRE(f.dim == mesh.dim(), "load dimension does not match the mesh");
  Eigen::VectorXd F = Eigen::VectorXd::Zero(mesh.num_edges());
  if (!f.f) return F;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto r = element_load(mesh, c, f);
    auto e = mesh.cell_edges(c);
    for (int i = 0; i < mesh.edges_per_cell(); ++i) F[e[i]] += r[i];
  }
  return F;
}

std::pair<FieldRef, FieldRef> coupling_fields(CouplingKind kind) {
  using F = Family;
  switch (kind) {
    case CouplingKind::grad_grad: return {{F::lagrange, true, true}, {F::lagrange, true, true}};
    case CouplingKind::grad_edge: return {{F::lagrange, true, true}, {F::nedelec, false, false}};
    case CouplingKind::mean:
      return {{F::lagrange, true, false}, {F::piecewise_constant, true, false}};
    case CouplingKind::curl_curl: return {{F::nedelec, true, true}, {F::nedelec, true, true}};
    case CouplingKind::edge_grad: return {{F::nedelec, true, false}, {F::lagrange, true, true}};
    case CouplingKind::cross_curl_curl:
      return {{F::nedelec, true, true}, {F::nedelec, false, true}};
    case CouplingKind::cross_edge_grad:
      return {{F::nedelec, false, false}, {F::lagrange, true, true}};
    case CouplingKind::cross_grad_grad:
      return {{F::lagrange, true, true}, {F::lagrange, false, true}};
  }
  throw Error("unknown coupling kind");
}

namespace {

struct FieldEval {
  const Mesh* mesh = nullptr;
  int cell = -1;
  CellGeometry g;
};

void setup(const MeshPair& pair, int fine_cell, const FieldRef& f, FieldEval& e) {
  const int c = f.coarse ? pair.coarse_cell(fine_cell) : fine_cell;
  const Mesh& m = f.coarse ? pair.coarse() : pair.fine();
  if (e.mesh != &m || e.cell != c) {
    e.mesh = &m;
    e.cell = c;
    e.g = cell_geometry(m, c);
  }
}

}  // namespace

void pair_on_cell(const MeshPair& pair, int fine_cell, const FieldRef& row, const FieldRef& col,
                  LocalPairing& out) {
  const Mesh& fm = pair.fine();
  const CellGeometry gf = cell_geometry(fm, fine_cell);
  FieldEval er, ec;
  setup(pair, fine_cell, row, er);
  setup(pair, fine_cell, col, ec);
  const QuadratureRule& q = simplex_rule(fm.dim(), 2);
  LocalBasis br, bc;
  out.m.setZero();
  for (int p = 0; p < q.size(); ++p) {
    const Point x = gf.point(q.lambda[p]);
    evaluate_basis(*er.mesh, er.cell, er.g, row.family, er.g.lambda(x), br);
    evaluate_basis(*ec.mesh, ec.cell, ec.g, col.family, ec.g.lambda(x), bc);
    const double w = q.weight[p] * gf.volume;
    for (int i = 0; i < br.count; ++i) {
      const Point& u = row.derivative ? br.deriv[i] : br.value[i];
      for (int j = 0; j < bc.count; ++j)
        out.m(i, j) += w * u.dot(col.derivative ? bc.deriv[j] : bc.value[j]);
    }
  }
  out.rows = br.count;
  out.cols = bc.count;
  out.row_dof = br.dof;
  out.col_dof = bc.dof;
}

SparseOperator assemble_coupling(const MeshPair& pair, std::span<const int> fine_cells,
                                 const FieldRef& row, const FieldRef& col) {
  const auto count = [&](const FieldRef& f) {
    return dof_map(f.coarse ? pair.coarse_ptr() : pair.fine_ptr(), f.family).count;
  };
  const auto tag = [&](const FieldRef& f) {
    const Mesh& m = f.coarse ? pair.coarse() : pair.fine();
    return SpaceTag{f.family, m.dim(), m.subdivisions()};
  };
  std::vector<int> all;
  if (fine_cells.empty()) {
    all.resize(pair.fine().num_cells());
    for (int c = 0; c < pair.fine().num_cells(); ++c) all[c] = c;
    fine_cells = all;
  }
  std::vector<Eigen::Triplet<double>> t;
  LocalPairing lp;
  for (int c : fine_cells) {
    pair_on_cell(pair, c, row, col, lp);
    for (int i = 0; i < lp.rows; ++i)
      for (int j = 0; j < lp.cols; ++j)
        if (lp.m(i, j) != 0.0) t.emplace_back(lp.row_dof[i], lp.col_dof[j], lp.m(i, j));
  }
  SparseOperator::Matrix M(count(row), count(col));
  M.setFromTriplets(t.begin(), t.end());
  return SparseOperator(tag(row), tag(col), std::move(M));
}

SparseOperator assemble_coupling(const MeshPair& pair, std::span<const int> fine_cells,
                                 CouplingKind kind) {
  const auto [r, c] = coupling_fields(kind);
  return assemble_coupling(pair, fine_cells, r, c);
}

}  // namespace curlod
