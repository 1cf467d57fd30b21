#include "curlod/lod.hpp"

#include "curlod/error.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace curlod {

std::string to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::natural ? "natural" : "essential";
}

std::string to_string(SourceCorrection s) {
  switch (s) {
    case SourceCorrection::none: return "none";
    case SourceCorrection::boundary: return "boundary";
    case SourceCorrection::all: return "all";
  }
  return "?";
}

LodForms make_forms(std::shared_ptr<const MeshPair> pair, const Checkerboard& mu,
                    const Checkerboard& kappa, const SparseOperator& P) {
  CURLOD_REQUIRE(pair, "null mesh pair");
  const Mesh& fine = pair->fine();
  require_aligned(mu, fine);
  require_aligned(kappa, fine);
  LodForms f;
  f.pair = pair;
  f.mu = mu;
  f.kappa = kappa;
  f.coef = sample_coefficients(fine, mu, kappa);
  f.B = assemble_B(fine, f.coef);
  f.embed = coarse_to_fine_embedding(*pair, Family::nedelec);
  CURLOD_REQUIRE(P.rows() == pair->coarse().num_edges() && P.cols() == fine.num_edges(),
                 "projection does not match the mesh pair");
  f.P = P;
  return f;
}

DetailConstraints detail_constraints(const Patch& fine_patch, const SparseOperator& P,
                                     BoundaryCondition bc) {
  DetailConstraints dc;
  const EntitySet& edges = fine_patch.edges;
  for (int i = 0; i < edges.size(); ++i) {
    const EntityLocation w = edges.where[i];
    if (w == EntityLocation::boundary_inner) continue;
    if (w == EntityLocation::boundary_gamma && bc == BoundaryCondition::essential) continue;
    dc.free.push_back(edges.ids[i]);
  }
  if (dc.free.empty()) throw Error("detail_constraints: patch has no free fine dofs");

  const SpMat& Pm = P.matrix();
  std::map<int, int> row_pos;
  for (int j : dc.free)
    for (SpMat::InnerIterator it(Pm, j); it; ++it)
      if (it.value() != 0.0) row_pos.emplace(static_cast<int>(it.row()), 0);
  int k = 0;
  for (auto& [r, pos] : row_pos) {
    pos = k++;
    dc.rows.push_back(r);
  }
  dc.C = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(dc.free.size()));
  for (std::size_t a = 0; a < dc.free.size(); ++a)
    for (SpMat::InnerIterator it(Pm, dc.free[a]); it; ++it)
      if (it.value() != 0.0) dc.C(row_pos[static_cast<int>(it.row())], a) = it.value();
  return dc;
}

std::vector<int> select_source_cells(const Mesh& coarse, SourceCorrection selection,
                                     int boundary_layers) {
  std::vector<int> cells;
  if (selection == SourceCorrection::none) return cells;
  for (int t = 0; t < coarse.num_cells(); ++t) {
    if (selection == SourceCorrection::all) {
      cells.push_back(t);
      continue;
    }
    const Patch p = layer_patch(coarse, t, boundary_layers);
    for (int v : p.vertices.ids)
      if (coarse.vertex_on_boundary(v)) {
        cells.push_back(t);
        break;
      }
  }
  return cells;
}

namespace {

// Fine-edge support of a right-hand side living on the children of a
// coarse cell: ascending fine edges and one row of values per edge.
struct LocalRhs {
  std::vector<int> dofs;
  Eigen::MatrixXd values;
};

LocalRhs corrector_rhs_local(const LodForms& forms, int cell) {
  const MeshPair& pair = *forms.pair;
  const Mesh& fine = pair.fine();
  const auto coarse_edges = pair.coarse().cell_edges(cell);
  const int ne = static_cast<int>(coarse_edges.size());
  const int nl = fine.edges_per_cell();
  const SpMat& E = forms.embed.matrix();

  std::map<int, Eigen::VectorXd> acc;
  for (int c : pair.children(cell)) {
    const auto dofs = local_dofs(fine, c, Family::nedelec);
    const Eigen::Matrix<double, 6, 6> Bc = element_matrix(fine, forms.coef, c);
    Eigen::MatrixXd u(nl, ne);
    for (int a = 0; a < nl; ++a)
      for (int k = 0; k < ne; ++k) u(a, k) = E.coeff(dofs[a], coarse_edges[k]);
    const Eigen::MatrixXd r = -Bc.topLeftCorner(nl, nl) * u;
    for (int a = 0; a < nl; ++a) {
      auto [it, fresh] = acc.try_emplace(dofs[a], Eigen::VectorXd::Zero(ne));
      it->second += r.row(a).transpose();
    }
  }
  LocalRhs out;
  out.values.resize(static_cast<Eigen::Index>(acc.size()), ne);
  int i = 0;
  for (auto& [d, v] : acc) {
    out.dofs.push_back(d);
    out.values.row(i++) = v.transpose();
  }
  return out;
}

LocalRhs source_rhs_local(const LodForms& forms, int cell, const LoadSpec& f) {
  const MeshPair& pair = *forms.pair;
  const Mesh& fine = pair.fine();
  const int nl = fine.edges_per_cell();
  std::map<int, double> acc;
  for (int c : pair.children(cell)) {
    const auto dofs = local_dofs(fine, c, Family::nedelec);
    const auto l = element_load(fine, c, f);
    for (int a = 0; a < nl; ++a) acc[dofs[a]] += l[a];
  }
  LocalRhs out;
  out.values.resize(static_cast<Eigen::Index>(acc.size()), 1);
  int i = 0;
  for (auto& [d, v] : acc) {
    out.dofs.push_back(d);
    out.values(i++, 0) = v;
  }
  return out;
}

SpMat submatrix(const SpMat& B, const std::vector<int>& dofs, std::vector<int>& g2l) {
  for (std::size_t a = 0; a < dofs.size(); ++a) g2l[dofs[a]] = static_cast<int>(a);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t a = 0; a < dofs.size(); ++a)
    for (SpMat::InnerIterator it(B, dofs[a]); it; ++it) {
      const int r = g2l[it.row()];
      if (r >= 0) trip.emplace_back(r, static_cast<int>(a), it.value());
    }
  SpMat A(static_cast<Eigen::Index>(dofs.size()), static_cast<Eigen::Index>(dofs.size()));
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

// Scatters a local right-hand side into columns [col, col + cols) of R; g2l
// maps global fine edges to free positions (-1 outside).
void scatter(const LocalRhs& r, const std::vector<int>& g2l, Eigen::MatrixXd& R, int col) {
  for (std::size_t i = 0; i < r.dofs.size(); ++i) {
    const int l = g2l[r.dofs[i]];
    if (l < 0) continue;
    R.block(l, col, 1, r.values.cols()) += r.values.row(static_cast<Eigen::Index>(i));
  }
}

struct Group {
  std::vector<int> patch_cells;
  std::vector<int> cells;
};

}  // namespace

Eigen::MatrixXd corrector_rhs(const LodForms& forms, int cell) {
  const LocalRhs r = corrector_rhs_local(forms, cell);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(forms.pair->fine().num_edges(), r.values.cols());
  for (std::size_t i = 0; i < r.dofs.size(); ++i)
    out.row(r.dofs[i]) = r.values.row(static_cast<Eigen::Index>(i));
  return out;
}

Eigen::VectorXd source_rhs(const LodForms& forms, int cell, const LoadSpec& f) {
  const LocalRhs r = source_rhs_local(forms, cell, f);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(forms.pair->fine().num_edges());
  for (std::size_t i = 0; i < r.dofs.size(); ++i) out[r.dofs[i]] = r.values(i, 0);
  return out;
}

CorrectorResult compute_correctors(const LodForms& forms, const CorrectorRequest& req) {
  const MeshPair& pair = *forms.pair;
  const Mesh& coarse = pair.coarse();
  const Mesh& fine = pair.fine();
  CURLOD_REQUIRE(req.m >= 1, "layer count must be at least 1");
  CURLOD_REQUIRE(req.source == SourceCorrection::none || req.load,
                 "source correctors need a load");

  CorrectorResult res;
  res.basis.m = req.m;
  res.basis.bc = req.bc;
  res.basis.cells.resize(coarse.num_cells());
  res.sources.m = req.m;
  res.sources.selection = req.source;

  const std::vector<int> src_cells = select_source_cells(coarse, req.source, req.boundary_layers);
  std::vector<int> src_pos(coarse.num_cells(), -1);
  for (std::size_t i = 0; i < src_cells.size(); ++i) src_pos[src_cells[i]] = static_cast<int>(i);
  res.sources.cells.resize(src_cells.size());

  std::vector<Group> groups;
  std::map<std::vector<int>, int> group_of;
  for (int t = 0; t < coarse.num_cells(); ++t) {
    Patch p = layer_patch(coarse, t, req.m);
    auto [it, fresh] = group_of.try_emplace(p.cells, static_cast<int>(groups.size()));
    if (fresh) groups.push_back({std::move(p.cells), {}});
    groups[it->second].cells.push_back(t);
  }

  const int ne = coarse.edges_per_cell();
  std::vector<int> g2l(fine.num_edges(), -1);
  for (const Group& g : groups) {
    Patch cp = make_patch(coarse, g.patch_cells, PatchKind::layer, g.cells.front(), req.m);
    const Patch fp = refine_patch(pair, cp);
    const DetailConstraints dc = detail_constraints(fp, forms.P, req.bc);
    const SpMat A = submatrix(forms.B.matrix(), dc.free, g2l);

    int ncols = 0;
    std::vector<int> first_col;
    for (int t : g.cells) {
      first_col.push_back(ncols);
      ncols += ne + (src_pos[t] >= 0 ? 1 : 0);
    }
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dc.free.size()), ncols);
    for (std::size_t i = 0; i < g.cells.size(); ++i) {
      const int t = g.cells[i];
      scatter(corrector_rhs_local(forms, t), g2l, R, first_col[i]);
      if (src_pos[t] >= 0) scatter(source_rhs_local(forms, t, *req.load), g2l, R, first_col[i] + ne);
    }

    Eigen::MatrixXd X;
    try {
      SaddleSolver solver(A, dc.C, RedundancyPolicy::drop);
      X = solver.solve_block(R, 1e-9);
    } catch (const SolverError& e) {
      throw SolverError("corrector solve failed on the patch of cell " +
                        std::to_string(g.cells.front()) + ": " + e.what());
    }
    ++res.factorizations;

    for (std::size_t i = 0; i < g.cells.size(); ++i) {
      const int t = g.cells[i];
      CellCorrector cc;
      cc.cell = t;
      cc.patch_cells = g.patch_cells;
      cc.dofs = dc.free;
      cc.values = X.middleCols(first_col[i], ne);
      cc.constraint_residual = dc.C.rows() ? (dc.C * cc.values).cwiseAbs().maxCoeff() : 0.0;
      if (src_pos[t] >= 0) {
        CellCorrector sc;
        sc.cell = t;
        sc.patch_cells = g.patch_cells;
        sc.dofs = dc.free;
        sc.values = X.middleCols(first_col[i] + ne, 1);
        sc.constraint_residual = dc.C.rows() ? (dc.C * sc.values).cwiseAbs().maxCoeff() : 0.0;
        res.sources.cells[src_pos[t]] = std::move(sc);
      }
      res.basis.cells[t] = std::move(cc);
    }
    for (int d : dc.free) g2l[d] = -1;
  }
  return res;
}

CellCorrector element_corrector(const LodForms& forms, int cell, int m, BoundaryCondition bc) {
  const MeshPair& pair = *forms.pair;
  const Patch cp = layer_patch(pair.coarse(), cell, m);
  const Patch fp = refine_patch(pair, cp);
  const DetailConstraints dc = detail_constraints(fp, forms.P, bc);
  std::vector<int> g2l(pair.fine().num_edges(), -1);
  const SpMat A = submatrix(forms.B.matrix(), dc.free, g2l);
  const LocalRhs r = corrector_rhs_local(forms, cell);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dc.free.size()),
                                            r.values.cols());
  scatter(r, g2l, R, 0);
  SaddleSolver solver(A, dc.C, RedundancyPolicy::drop);
  CellCorrector cc;
  cc.cell = cell;
  cc.patch_cells = cp.cells;
  cc.dofs = dc.free;
  cc.values = solver.solve_block(R, 1e-9);
  cc.constraint_residual = dc.C.rows() ? (dc.C * cc.values).cwiseAbs().maxCoeff() : 0.0;
  return cc;
}

SparseOperator assemble_global_corrector(const LodForms& forms, const CorrectorBasis& basis) {
  const Mesh& coarse = forms.pair->coarse();
  const Mesh& fine = forms.pair->fine();
  CURLOD_REQUIRE(static_cast<int>(basis.cells.size()) == coarse.num_cells(),
                 "corrector basis does not cover the coarse mesh");
  std::vector<Eigen::Triplet<double>> trip;
  for (int t = 0; t < coarse.num_cells(); ++t) {
    const CellCorrector& cc = basis.cells[t];
    if (cc.cell != t) throw Error("assemble_global_corrector: missing cell " + std::to_string(t));
    const auto edges = coarse.cell_edges(t);
    for (std::size_t k = 0; k < edges.size(); ++k)
      for (std::size_t i = 0; i < cc.dofs.size(); ++i) {
        const double v = cc.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        if (v != 0.0) trip.emplace_back(cc.dofs[i], edges[k], v);
      }
  }
  SpMat K(fine.num_edges(), coarse.num_edges());
  K.setFromTriplets(trip.begin(), trip.end());
  return SparseOperator(forms.embed.row_space(), forms.embed.col_space(), std::move(K));
}

Eigen::VectorXd assemble_source_corrector(const LodForms& forms, const SourceCorrectorSet& set) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(forms.pair->fine().num_edges());
  for (const CellCorrector& cc : set.cells)
    for (std::size_t i = 0; i < cc.dofs.size(); ++i)
      g[cc.dofs[i]] += cc.values(static_cast<Eigen::Index>(i), 0);
  return g;
}

std::vector<int> coarse_trial_dofs(const Mesh& coarse, BoundaryCondition bc) {
  std::vector<int> dofs;
  for (int e = 0; e < coarse.num_edges(); ++e)
    if (bc == BoundaryCondition::natural || !coarse.edge_on_boundary(e)) dofs.push_back(e);
  return dofs;
}

namespace {

SpMat select_columns(const SpMat& M, const std::vector<int>& cols) {
  SpMat out(M.rows(), static_cast<Eigen::Index>(cols.size()));
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (SpMat::InnerIterator it(M, cols[j]); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(j), it.value());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

// Phi^T B Phi, through dense products when Phi is dense enough and small
// enough to hold twice in memory.
SpMat galerkin_product(const SpMat& B, const SpMat& Phi) {
  const double entries = static_cast<double>(Phi.rows()) * static_cast<double>(Phi.cols());
  const double density = static_cast<double>(Phi.nonZeros()) / std::max(entries, 1.0);
  if (density > 0.05 && entries <= 4e7) {
    const Eigen::MatrixXd D = Eigen::MatrixXd(Phi);
    const Eigen::MatrixXd BD = B * D;
    Eigen::MatrixXd A = D.transpose() * BD;
    A = 0.5 * (A + A.transpose()).eval();
    return A.sparseView(0.0, 0.0);
  }
  const SpMat BPhi = B * Phi;
  SpMat A = Phi.transpose() * BPhi;
  const SpMat At = A.transpose();
  A = 0.5 * (A + At);
  return A;
}

}  // namespace

MultiscaleSolution solve_lod(const LodForms& forms, const CorrectorResult& correctors,
                             const Eigen::VectorXd& F) {
  const Mesh& coarse = forms.pair->coarse();
  const Mesh& fine = forms.pair->fine();
  CURLOD_REQUIRE(F.size() == fine.num_edges(), "load vector does not match the fine mesh");
  MultiscaleSolution sol;
  sol.bc = correctors.basis.bc;
  sol.m = correctors.basis.m;
  sol.source = correctors.sources.selection;
  sol.coarse_dofs = coarse_trial_dofs(coarse, sol.bc);
  sol.K = assemble_global_corrector(forms, correctors.basis);
  sol.source_part = assemble_source_corrector(forms, correctors.sources);

  const SpMat& B = forms.B.matrix();
  const SpMat Phi = select_columns(SpMat(forms.embed.matrix() + sol.K.matrix()), sol.coarse_dofs);
  sol.coarse_matrix = galerkin_product(B, Phi);
  const Eigen::VectorXd r = F - B * sol.source_part;
  sol.coarse_rhs = Phi.transpose() * r;
  Eigen::VectorXd u;
  try {
    u = SpdSolver(sol.coarse_matrix).solve(sol.coarse_rhs);
  } catch (const SolverError& e) {
    throw SolverError(std::string("LOD coarse system: ") + e.what());
  }
  sol.u_H = Eigen::VectorXd::Zero(coarse.num_edges());
  for (std::size_t i = 0; i < sol.coarse_dofs.size(); ++i) sol.u_H[sol.coarse_dofs[i]] = u[i];
  sol.fine = reconstruct(forms, sol);
  return sol;
}

Eigen::VectorXd reconstruct(const LodForms& forms, const MultiscaleSolution& sol) {
  Eigen::VectorXd x = forms.embed.apply(sol.u_H);
  if (sol.K.rows() > 0) x += sol.K.apply(sol.u_H);
  if (sol.source_part.size() > 0) x += sol.source_part;
  return x;
}

Eigen::VectorXd coarse_fem(const LodForms& forms, const Eigen::VectorXd& F, BoundaryCondition bc) {
  const Mesh& coarse = forms.pair->coarse();
  const std::vector<int> dofs = coarse_trial_dofs(coarse, bc);
  const SpMat E = select_columns(forms.embed.matrix(), dofs);
  const SpMat BE = forms.B.matrix() * E;
  const SpMat A = E.transpose() * BE;
  const Eigen::VectorXd u = SpdSolver(A).solve(E.transpose() * F);
  return E * u;
}

Eigen::VectorXd fine_solve(const LodForms& forms, const Eigen::VectorXd& F, BoundaryCondition bc) {
  const Mesh& fine = forms.pair->fine();
  CURLOD_REQUIRE(F.size() == fine.num_edges(), "load vector does not match the fine mesh");
  if (bc == BoundaryCondition::natural) return SpdSolver(forms.B.matrix()).solve(F);
  std::vector<int> dofs;
  for (int e = 0; e < fine.num_edges(); ++e)
    if (!fine.edge_on_boundary(e)) dofs.push_back(e);
  std::vector<int> g2l(fine.num_edges(), -1);
  const SpMat A = submatrix(forms.B.matrix(), dofs, g2l);
  Eigen::VectorXd f(static_cast<Eigen::Index>(dofs.size()));
  for (std::size_t i = 0; i < dofs.size(); ++i) f[i] = F[dofs[i]];
  const Eigen::VectorXd x = SpdSolver(A).solve(f);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(fine.num_edges());
  for (std::size_t i = 0; i < dofs.size(); ++i) u[dofs[i]] = x[i];
  return u;
}

// ---------------------------------------------------------------------------
// Corrector cache

namespace {

constexpr std::uint32_t kCacheMagic = 0x4b4c4f44;  // "KLOD"
constexpr std::uint32_t kCacheVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
bool get(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}
void put_ints(std::ostream& os, const std::vector<int>& v) {
  put(os, static_cast<std::int64_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(int)));
}
bool get_ints(std::istream& is, std::vector<int>& v) {
  std::int64_t n = 0;
  if (!get(is, n) || n < 0) return false;
  v.resize(static_cast<std::size_t>(n));
  return static_cast<bool>(
      is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(int))));
}

std::string coefficient_string(const Checkerboard& c) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d:%.17g:%.17g", c.block_count, c.value_black, c.value_white);
  return buf;
}

}  // namespace

std::string corrector_cache_key(const LodForms& forms, int m, BoundaryCondition bc,
                                ProjectionVariant variant) {
  const Mesh& coarse = forms.pair->coarse();
  const Mesh& fine = forms.pair->fine();
  const std::string coef = coefficient_string(forms.mu) + "|" + coefficient_string(forms.kappa);
  char buf[160];
  std::snprintf(buf, sizeof buf, "K_d%d_H%d_h%d_m%s_%s_%s_%016zx.bin", coarse.dim(),
                coarse.subdivisions(), fine.subdivisions(),
                m == kWholeDomain ? "inf" : std::to_string(m).c_str(), to_string(bc).c_str(),
                variant == ProjectionVariant::standard ? "std" : "zeroed",
                std::hash<std::string>{}(coef));
  return buf;
}

void save_corrector_basis(const std::string& path, const CorrectorBasis& basis) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error("cannot write corrector cache " + tmp);
    put(os, kCacheMagic);
    put(os, kCacheVersion);
    put(os, static_cast<std::int32_t>(basis.m));
    put(os, static_cast<std::int32_t>(basis.bc));
    put(os, static_cast<std::int64_t>(basis.cells.size()));
    for (const CellCorrector& cc : basis.cells) {
      put(os, static_cast<std::int32_t>(cc.cell));
      put_ints(os, cc.patch_cells);
      put_ints(os, cc.dofs);
      put(os, static_cast<std::int64_t>(cc.values.cols()));
      os.write(reinterpret_cast<const char*>(cc.values.data()),
               static_cast<std::streamsize>(cc.values.size() * sizeof(double)));
      put(os, cc.constraint_residual);
    }
    if (!os) throw Error("failed writing corrector cache " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error("cannot move corrector cache into place: " + path);
}

bool load_corrector_basis(const std::string& path, CorrectorBasis& basis) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return false;
  std::uint32_t magic = 0, version = 0;
  std::int32_t m = 0, bc = 0;
  std::int64_t n = 0;
  if (!get(is, magic) || magic != kCacheMagic || !get(is, version) || version != kCacheVersion)
    return false;
  if (!get(is, m) || !get(is, bc) || !get(is, n) || n < 0) return false;
  CorrectorBasis b;
  b.m = m;
  b.bc = static_cast<BoundaryCondition>(bc);
  b.cells.resize(static_cast<std::size_t>(n));
  for (CellCorrector& cc : b.cells) {
    std::int32_t cell = 0;
    std::int64_t cols = 0;
    if (!get(is, cell) || !get_ints(is, cc.patch_cells) || !get_ints(is, cc.dofs) ||
        !get(is, cols) || cols < 0)
      return false;
    cc.cell = cell;
    cc.values.resize(static_cast<Eigen::Index>(cc.dofs.size()), cols);
    if (!is.read(reinterpret_cast<char*>(cc.values.data()),
                 static_cast<std::streamsize>(cc.values.size() * sizeof(double))))
      return false;
    if (!get(is, cc.constraint_residual)) return false;
  }
  basis = std::move(b);
  return true;
}

}  // namespace curlod
