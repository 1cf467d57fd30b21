#include "curlod/falk_winther.hpp"

#include "curlod/assembly.hpp"
#include "curlod/error.hpp"
#include "curlod/linsolve.hpp"
#include "curlod/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <tuple>

namespace curlod {

namespace {

int find_sorted(const std::vector<int>& v, int x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  return (it == v.end() || *it != x) ? -1 : static_cast<int>(it - v.begin());
}

std::vector<int> interior_ids(const EntitySet& s) {
  std::vector<int> out;
  for (int i = 0; i < s.size(); ++i)
    if (!s.on_patch_boundary(i)) out.push_back(s.ids[i]);
  return out;
}

std::vector<int> fine_entities(const Mesh& fine, const std::vector<int>& cells, Family f) {
  std::vector<int> out;
  for (int c : cells) {
    if (f == Family::nedelec) {
      auto e = fine.cell_edges(c);
      out.insert(out.end(), e.begin(), e.end());
    } else {
      auto v = fine.cell(c);
      out.insert(out.end(), v.begin(), v.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct Field {
  Family family;
  bool derivative;
};

// Pairing of two fields of one mesh over `cells`, restricted to the dof
// lists `rows` and `cols` (sorted global ids); other dofs are ignored.
Eigen::MatrixXd same_mesh_pairing(const Mesh& m, const std::vector<int>& cells, Field rf,
                                  const std::vector<int>& rows, Field cf,
                                  const std::vector<int>& cols) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows.size(), cols.size());
  const QuadratureRule& q = simplex_rule(m.dim(), 2);
  LocalBasis br, bc;
  for (int c : cells) {
    const CellGeometry g = cell_geometry(m, c);
    std::array<int, 6> rl{}, cl{};
    for (int p = 0; p < q.size(); ++p) {
      evaluate_basis(m, c, g, rf.family, q.lambda[p], br);
      evaluate_basis(m, c, g, cf.family, q.lambda[p], bc);
      if (p == 0) {
        for (int i = 0; i < br.count; ++i) rl[i] = find_sorted(rows, br.dof[i]);
        for (int j = 0; j < bc.count; ++j) cl[j] = find_sorted(cols, bc.dof[j]);
      }
      const double w = q.weight[p] * g.volume;
      for (int i = 0; i < br.count; ++i) {
        if (rl[i] < 0) continue;
        const Point& u = rf.derivative ? br.deriv[i] : br.value[i];
        for (int j = 0; j < bc.count; ++j)
          if (cl[j] >= 0) out(rl[i], cl[j]) += w * u.dot(cf.derivative ? bc.deriv[j] : bc.value[j]);
      }
    }
  }
  return out;
}

// Pairing of a coarse field (rows) with a fine field (cols) over fine cells.
Eigen::MatrixXd cross_pairing(const MeshPair& pair, const std::vector<int>& fine_cells,
                              const FieldRef& rf, const std::vector<int>& rows, const FieldRef& cf,
                              const std::vector<int>& cols) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows.size(), cols.size());
  LocalPairing lp;
  for (int c : fine_cells) {
    pair_on_cell(pair, c, rf, cf, lp);
    std::array<int, 6> rl{}, cl{};
    for (int i = 0; i < lp.rows; ++i) rl[i] = find_sorted(rows, lp.row_dof[i]);
    for (int j = 0; j < lp.cols; ++j) cl[j] = find_sorted(cols, lp.col_dof[j]);
    for (int i = 0; i < lp.rows; ++i) {
      if (rl[i] < 0) continue;
      for (int j = 0; j < lp.cols; ++j)
        if (cl[j] >= 0) out(rl[i], cl[j]) += lp.m(i, j);
    }
  }
  return out;
}

SparseRow dense_to_row(const std::vector<int>& ids, const Eigen::RowVectorXd& v) {
  SparseRow r;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (v[i] != 0.0) {
      r.index.push_back(ids[i]);
      r.value.push_back(v[i]);
    }
  return r;
}

// a + s*b for sorted sparse rows
SparseRow axpy(const SparseRow& a, double s, const SparseRow& b) {
  SparseRow r;
  std::size_t i = 0, j = 0;
  while (i < a.index.size() || j < b.index.size()) {
    if (j == b.index.size() || (i < a.index.size() && a.index[i] < b.index[j])) {
      r.index.push_back(a.index[i]);
      r.value.push_back(a.value[i++]);
    } else if (i == a.index.size() || b.index[j] < a.index[i]) {
      r.index.push_back(b.index[j]);
      r.value.push_back(s * b.value[j++]);
    } else {
      r.index.push_back(a.index[i]);
      r.value.push_back(a.value[i++] + s * b.value[j++]);
    }
  }
  return r;
}

SparseOperator rows_to_operator(const std::vector<SparseRow>& rows, SpaceTag rt, SpaceTag ct,
                                int ncols) {
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t k = 0; k < rows[r].index.size(); ++k)
      if (rows[r].value[k] != 0.0)
        t.emplace_back(static_cast<int>(r), rows[r].index[k], rows[r].value[k]);
  SparseOperator::Matrix M(static_cast<Eigen::Index>(rows.size()), ncols);
  M.setFromTriplets(t.begin(), t.end());
  return SparseOperator(rt, ct, std::move(M));
}

SpaceTag tag_of(const Mesh& m, Family f) { return {f, m.dim(), m.subdivisions()}; }

NodalBlock nodal_block(const MeshPair& pair, int y, bool nodal) {
  const Mesh& cm = pair.coarse();
  const Patch patch = nodal_patch(cm, y);
  const std::vector<int> fcells = pair.fine_cells(patch.cells);
  NodalBlock b;
  b.vertex = y;
  b.coarse_vertices = patch.vertices.ids;
  const Family ff = nodal ? Family::lagrange : Family::nedelec;
  b.fine_dofs = fine_entities(pair.fine(), fcells, ff);
  const auto& cv = b.coarse_vertices;
  const Eigen::MatrixXd A =
      same_mesh_pairing(cm, patch.cells, {Family::lagrange, true}, cv, {Family::lagrange, true}, cv);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(1, cv.size());
  for (int c : patch.cells)
    for (int v : cm.cell(c)) C(0, find_sorted(cv, v)) += cm.cell_volume(c) / (cm.dim() + 1);
  const Eigen::MatrixXd B = cross_pairing(pair, fcells, {Family::lagrange, true, true}, cv,
                                          {ff, false, nodal}, b.fine_dofs);
  const auto sol = solve_saddle_dense(A, C, B, Eigen::MatrixXd::Zero(1, B.cols()));
  b.Q = sol.x;
  return b;
}

}  // namespace

SparseRow NodalBlock::anchor_row() const {
  const int i = find_sorted(coarse_vertices, vertex);
  return dense_to_row(fine_dofs, Q.row(i));
}

Eigen::VectorXd compute_z0(const Mesh& coarse, int y) {
  const Patch p = nodal_patch(coarse, y);
  double area = 0;
  for (int c : p.cells) area += coarse.cell_volume(c);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(coarse.num_cells());
  for (int c : p.cells) z[c] = 1.0 / area;
  return z;
}

Eigen::VectorXd delta_z0(const Mesh& coarse, int edge) {
  CURLOD_REQUIRE(edge >= 0 && edge < coarse.num_edges(), "invalid edge " + std::to_string(edge));
  return compute_z0(coarse, coarse.edge_y1(edge)) - compute_z0(coarse, coarse.edge_y2(edge));
}

Z1Solution compute_z1_E(const Mesh& cm, int edge) {
  const Patch patch = extended_edge_patch(cm, edge);
  const int dim = cm.dim();
  Z1Solution z;
  z.edge = edge;
  z.facets = interior_ids(dim == 2 ? patch.edges : patch.faces);
  z.multiplier_dofs = interior_ids(dim == 2 ? patch.vertices : patch.edges);
  const Eigen::VectorXd dz = delta_z0(cm, edge);

  const Field flux{Family::raviart_thomas, false};
  const Field div{Family::raviart_thomas, true};
  const Eigen::MatrixXd A = same_mesh_pairing(cm, patch.cells, div, z.facets, div, z.facets);
  // (w, curl tau); in 2D (R psi, R grad tau) = (psi, grad tau) with psi the
  // Nedelec function of the same edge.
  const Eigen::MatrixXd Bc =
      dim == 3 ? same_mesh_pairing(cm, patch.cells, {Family::nedelec, true}, z.multiplier_dofs,
                                   flux, z.facets)
               : same_mesh_pairing(cm, patch.cells, {Family::lagrange, true}, z.multiplier_dofs,
                                   {Family::nedelec, false}, z.facets);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(z.facets.size());
  LocalBasis b;
  for (int c : patch.cells) {
    const CellGeometry g = cell_geometry(cm, c);
    evaluate_basis(cm, c, g, Family::raviart_thomas, {0.25, 0.25, 0.25, 0.25}, b);
    for (int i = 0; i < b.count; ++i) {
      const int k = find_sorted(z.facets, b.dof[i]);
      if (k >= 0) f[k] -= dz[c] * b.deriv[i].x() * g.volume;
    }
  }
  DenseSaddleResult sol;
  try {
    sol = solve_saddle_dense(A, Bc, f, Eigen::MatrixXd::Zero(Bc.rows(), 1), {}, dim == 3);
  } catch (const SolverError& e) {
    throw SolverError("compute_z1_E: edge " + std::to_string(edge) + ": " + e.what());
  }
  z.flux = sol.x.col(0);
  z.multiplier = sol.lambda.col(0);

  for (int c : patch.cells) {
    const CellGeometry g = cell_geometry(cm, c);
    evaluate_basis(cm, c, g, Family::raviart_thomas, {0.25, 0.25, 0.25, 0.25}, b);
    double d = dz[c];
    for (int i = 0; i < b.count; ++i) {
      const int k = find_sorted(z.facets, b.dof[i]);
      if (k >= 0) d += z.flux[k] * b.deriv[i].x();
    }
    z.divergence_residual = std::max(z.divergence_residual, std::abs(d));
  }
  if (Bc.rows() > 0) z.orthogonality_residual = (Bc * z.flux).cwiseAbs().maxCoeff();
  return z;
}

NodalBlock assemble_Q1y(const MeshPair& pair, int y) {
  CURLOD_REQUIRE(y >= 0 && y < pair.coarse().num_vertices(), "invalid vertex " + std::to_string(y));
  return nodal_block(pair, y, false);
}

NodalBlock assemble_Q0y(const MeshPair& pair, int y) {
  CURLOD_REQUIRE(y >= 0 && y < pair.coarse().num_vertices(), "invalid vertex " + std::to_string(y));
  return nodal_block(pair, y, true);
}

EdgeBlock assemble_Q1E(const MeshPair& pair, int edge) {
  const Mesh& cm = pair.coarse();
  CURLOD_REQUIRE(edge >= 0 && edge < cm.num_edges(), "invalid edge " + std::to_string(edge));
  const Patch patch = extended_edge_patch(cm, edge);
  const std::vector<int> fcells = pair.fine_cells(patch.cells);
  EdgeBlock b;
  b.edge = edge;
  b.coarse_edges = patch.edges.ids;
  b.coarse_vertices = patch.vertices.ids;
  b.fine_edges = fine_entities(pair.fine(), fcells, Family::nedelec);
  const auto& ce = b.coarse_edges;
  const auto& cv = b.coarse_vertices;
  const Eigen::MatrixXd A =
      same_mesh_pairing(cm, patch.cells, {Family::nedelec, true}, ce, {Family::nedelec, true}, ce);
  const Eigen::MatrixXd B = same_mesh_pairing(cm, patch.cells, {Family::lagrange, true}, cv,
                                              {Family::nedelec, false}, ce);
  const Eigen::MatrixXd C = cross_pairing(pair, fcells, {Family::nedelec, true, true}, ce,
                                          {Family::nedelec, false, true}, b.fine_edges);
  const Eigen::MatrixXd D = cross_pairing(pair, fcells, {Family::lagrange, true, true}, cv,
                                          {Family::nedelec, false, false}, b.fine_edges);
  DenseSaddleResult sol;
  try {
    sol = solve_saddle_dense(A, B, C, D, {0});
  } catch (const SolverError& e) {
    throw SolverError("assemble_Q1E: edge " + std::to_string(edge) + ": " + e.what());
  }
  b.Q = sol.x;
  b.V = sol.lambda;
  b.residual = sol.residual;
  return b;
}

namespace {

SparseRow m1_row(const MeshPair& pair, const Z1Solution& z) {
  const Patch patch = extended_edge_patch(pair.coarse(), z.edge);
  const std::vector<int> fcells = pair.fine_cells(patch.cells);
  const std::vector<int> fe = fine_entities(pair.fine(), fcells, Family::nedelec);
  const Eigen::MatrixXd W = cross_pairing(pair, fcells, {Family::raviart_thomas, true, false},
                                          z.facets, {Family::nedelec, false, false}, fe);
  return dense_to_row(fe, z.flux.transpose() * W);
}

}  // namespace

SparseOperator assemble_M1(const MeshPair& pair) {
  const Mesh& cm = pair.coarse();
  std::vector<SparseRow> rows(cm.num_edges());
  for (int e = 0; e < cm.num_edges(); ++e) rows[e] = m1_row(pair, compute_z1_E(cm, e));
  return rows_to_operator(rows, tag_of(cm, Family::nedelec), tag_of(pair.fine(), Family::nedelec),
                          pair.fine().num_edges());
}

SparseOperator assemble_S1(const MeshPair& pair) {
  const Mesh& cm = pair.coarse();
  std::vector<SparseRow> q(cm.num_vertices());
  for (int y = 0; y < cm.num_vertices(); ++y) q[y] = assemble_Q1y(pair, y).anchor_row();
  std::vector<SparseRow> rows(cm.num_edges());
  for (int e = 0; e < cm.num_edges(); ++e) {
    const SparseRow m = m1_row(pair, compute_z1_E(cm, e));
    rows[e] = axpy(axpy(m, 1.0, q[cm.edge_y1(e)]), -1.0, q[cm.edge_y2(e)]);
  }
  return rows_to_operator(rows, tag_of(cm, Family::nedelec), tag_of(pair.fine(), Family::nedelec),
                          pair.fine().num_edges());
}

SparseOperator assemble_PiV(const MeshPair& pair) {
  const Mesh& cm = pair.coarse();
  const Mesh& fm = pair.fine();
  std::vector<SparseRow> rows(cm.num_vertices());
  for (int y = 0; y < cm.num_vertices(); ++y) {
    const Patch patch = nodal_patch(cm, y);
    const std::vector<int> fcells = pair.fine_cells(patch.cells);
    double area = 0;
    for (int c : patch.cells) area += cm.cell_volume(c);
    const std::vector<int> fv = fine_entities(fm, fcells, Family::lagrange);
    Eigen::RowVectorXd m0 = Eigen::RowVectorXd::Zero(fv.size());
    for (int c : fcells)
      for (int v : fm.cell(c)) m0[find_sorted(fv, v)] += fm.cell_volume(c) / (fm.dim() + 1) / area;
    rows[y] = axpy(dense_to_row(fv, m0), 1.0, assemble_Q0y(pair, y).anchor_row());
  }
  return rows_to_operator(rows, tag_of(cm, Family::lagrange), tag_of(fm, Family::lagrange),
                          fm.num_vertices());
}

ProjectionSet assemble_PiE(const MeshPair& pair, const ProjectionOptions& opt) {
  const Mesh& cm = pair.coarse();
  const Mesh& fm = pair.fine();
  ProjectionSet ps;
  ps.variant = ProjectionVariant::standard;

  std::vector<SparseRow> q(cm.num_vertices());
  for (int y = 0; y < cm.num_vertices(); ++y) q[y] = assemble_Q1y(pair, y).anchor_row();

  const Eigen::SparseMatrix<double, Eigen::RowMajor> embed =
      coarse_to_fine_embedding(pair, Family::nedelec).matrix();

  std::vector<SparseRow> srows(cm.num_edges()), prows(cm.num_edges());
  ps.z1.resize(cm.num_edges());
  for (int e = 0; e < cm.num_edges(); ++e) {
    Z1Solution z = compute_z1_E(cm, e);
    ps.max_z1_divergence_residual = std::max(ps.max_z1_divergence_residual, z.divergence_residual);
    ps.max_z1_orthogonality_residual =
        std::max(ps.max_z1_orthogonality_residual, z.orthogonality_residual);
    const SparseRow s = axpy(axpy(m1_row(pair, z), 1.0, q[cm.edge_y1(e)]), -1.0, q[cm.edge_y2(e)]);
    srows[e] = s;
    ps.z1[e] = std::move(z);

    EdgeBlock blk = assemble_Q1E(pair, e);
    const auto& fe = blk.fine_edges;
    const auto& ce = blk.coarse_edges;
    Eigen::RowVectorXd sd = Eigen::RowVectorXd::Zero(fe.size());
    for (std::size_t k = 0; k < s.index.size(); ++k) {
      const int i = find_sorted(fe, s.index[k]);
      if (i < 0)
        throw Error("assemble_PiE: S row of edge " + std::to_string(e) +
                    " leaves the extended edge patch at fine edge " + std::to_string(s.index[k]));
      sd[i] = s.value[k];
    }
    // S_E applied to the fine representation of the local coarse functions
    Eigen::RowVectorXd se = Eigen::RowVectorXd::Zero(ce.size());
    for (std::size_t i = 0; i < fe.size(); ++i) {
      if (sd[i] == 0.0) continue;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(embed, fe[i]); it; ++it) {
        const int j = find_sorted(ce, static_cast<int>(it.col()));
        if (j < 0)
          throw Error("assemble_PiE: fine edge " + std::to_string(fe[i]) +
                      " depends on a coarse edge outside the patch of " + std::to_string(e));
        se[j] += sd[i] * it.value();
      }
    }
    const int el = find_sorted(ce, e);
    const Eigen::RowVectorXd p = sd + blk.Q.row(el) - se * blk.Q;
    prows[e] = dense_to_row(fe, p);
    if (opt.keep_blocks) ps.blocks.push_back(std::move(blk));
  }
  const SpaceTag ct = tag_of(cm, Family::nedelec), ft = tag_of(fm, Family::nedelec);
  ps.S1 = rows_to_operator(srows, ct, ft, fm.num_edges());
  ps.P = rows_to_operator(prows, ct, ft, fm.num_edges());
  if (opt.with_nodal) ps.PV = assemble_PiV(pair);
  return ps;
}

ProjectionSet zero_boundary_rows(const ProjectionSet& ps, const Mesh& coarse) {
  CURLOD_REQUIRE(ps.P.rows() == coarse.num_edges(), "projection does not match the coarse mesh");
  ProjectionSet out = ps;
  SparseOperator::Matrix P = ps.P.matrix();
  P.prune([&](Eigen::Index r, Eigen::Index, double) {
    return !coarse.edge_on_boundary(static_cast<int>(r));
  });
  out.P = SparseOperator(ps.P.row_space(), ps.P.col_space(), std::move(P));
  out.variant = ProjectionVariant::boundary_zeroed;
  return out;
}

void write_triplets(const SparseOperator& op, std::ostream& os) {
  std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> t;
  const auto& M = op.matrix();
  for (Eigen::Index k = 0; k < M.outerSize(); ++k)
    for (SparseOperator::Matrix::InnerIterator it(M, k); it; ++it)
      t.emplace_back(it.row(), it.col(), it.value());
  std::sort(t.begin(), t.end());
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  for (const auto& [r, c, v] : t) os << r << ' ' << c << ' ' << v << '\n';
  os.flags(flags);
  os.precision(prec);
}

}  // namespace curlod
