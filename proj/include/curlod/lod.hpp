#pragma once

// Localized orthogonal decomposition for the curl-curl problem.
//
// Element correctors K_{T,m} psi_E live in the detail space of the patch
// N^m(T): fine Nedelec functions supported in the patch whose Falk-Winther
// projection vanishes. They solve
//   B(K_{T,m} psi_E, w) = -B_T(psi_E, w)   for all detail functions w,
// and source correctors G_{T,m} solve B(G_{T,m}, w) = (f, w)_T. The coarse
// system is assembled through the fine matrix:
//   (E + K)^T B_h (E + K) u = (E + K)^T (F - B_h G).

#include "curlod/assembly.hpp"
#include "curlod/falk_winther.hpp"
#include "curlod/fe_spaces.hpp"
#include "curlod/linsolve.hpp"
#include "curlod/mesh.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace curlod {

enum class BoundaryCondition { natural, essential };
enum class SourceCorrection { none, boundary, all };

std::string to_string(BoundaryCondition bc);
std::string to_string(SourceCorrection s);

/// Fine-scale data shared by all local problems of one mesh pair.
struct LodForms {
  std::shared_ptr<const MeshPair> pair;
  CellCoefficients coef;  ///< on the fine mesh
  SparseOperator B;       ///< fine N x fine N
  SparseOperator embed;   ///< coarse N -> fine N
  SparseOperator P;       ///< fine N -> coarse N
  Checkerboard mu, kappa;
};

LodForms make_forms(std::shared_ptr<const MeshPair> pair, const Checkerboard& mu,
                    const Checkerboard& kappa, const SparseOperator& P);

/// Free fine dofs of a fine patch and the projection rows acting on them.
struct DetailConstraints {
  std::vector<int> free;    ///< global fine edges, ascending
  std::vector<int> rows;    ///< coarse edges whose restricted row is nonzero
  Eigen::MatrixXd C;        ///< rows.size() x free.size()
};

DetailConstraints detail_constraints(const Patch& fine_patch, const SparseOperator& P,
                                     BoundaryCondition bc);

/// Correctors of one coarse cell on one patch. Column k of `values` belongs
/// to the k-th local coarse edge of the cell (source correctors: one column).
struct CellCorrector {
  int cell = -1;
  std::vector<int> patch_cells;  ///< coarse cells of N^m(T)
  std::vector<int> dofs;         ///< fine edges carrying the values
  Eigen::MatrixXd values;
  double constraint_residual = 0;  ///< max |P w| over the columns
};

struct CorrectorBasis {
  int m = 1;
  BoundaryCondition bc = BoundaryCondition::natural;
  std::vector<CellCorrector> cells;  ///< indexed by coarse cell
};

struct SourceCorrectorSet {
  int m = 1;
  SourceCorrection selection = SourceCorrection::none;
  std::vector<CellCorrector> cells;  ///< selected cells, ascending
};

/// Coarse cells receiving source correctors. In boundary mode a cell is
/// selected when its `boundary_layers`-layer patch touches Gamma.
std::vector<int> select_source_cells(const Mesh& coarse, SourceCorrection selection,
                                     int boundary_layers);

/// Right-hand side -B_T Embed psi_E over the fine edges, one column per local
/// coarse edge of T (dense, fine size).
Eigen::MatrixXd corrector_rhs(const LodForms& forms, int cell);
/// (f, psi_e)_T over the fine edges (dense, fine size).
Eigen::VectorXd source_rhs(const LodForms& forms, int cell, const LoadSpec& f);

/// Element correctors for a single cell.
CellCorrector element_corrector(const LodForms& forms, int cell, int m, BoundaryCondition bc);

struct CorrectorRequest {
  int m = 1;  ///< kWholeDomain for the ideal correctors
  BoundaryCondition bc = BoundaryCondition::natural;
  SourceCorrection source = SourceCorrection::none;
  int boundary_layers = 0;
  const LoadSpec* load = nullptr;  ///< required unless source == none
};

struct CorrectorResult {
  CorrectorBasis basis;
  SourceCorrectorSet sources;
  int factorizations = 0;  ///< distinct patches solved
};

/// All element correctors, and the requested source correctors. Cells with
/// identical patches share one saddle factorization; solves run in cell
/// order so the result is deterministic.
CorrectorResult compute_correctors(const LodForms& forms, const CorrectorRequest& req);

/// K_m as an operator coarse N -> fine N; cell contributions are summed in
/// ascending cell order.
SparseOperator assemble_global_corrector(const LodForms& forms, const CorrectorBasis& basis);
/// Sum of the source correctors as a fine vector.
Eigen::VectorXd assemble_source_corrector(const LodForms& forms, const SourceCorrectorSet& set);

struct MultiscaleSolution {
  BoundaryCondition bc = BoundaryCondition::natural;
  int m = 1;
  SourceCorrection source = SourceCorrection::none;
  std::vector<int> coarse_dofs;  ///< coarse edges of the trial space
  Eigen::VectorXd u_H;           ///< coarse coefficients (all coarse edges)
  Eigen::VectorXd source_part;   ///< sum of source correctors (fine)
  SparseOperator K;              ///< global corrector
  SpMat coarse_matrix;           ///< on coarse_dofs
  Eigen::VectorXd coarse_rhs;
  Eigen::VectorXd fine;          ///< reconstruction
};

/// Trial/test coarse edges: all of them, or the interior ones for essential
/// boundary conditions.
std::vector<int> coarse_trial_dofs(const Mesh& coarse, BoundaryCondition bc);

/// Coarse Galerkin system and reconstruction for given correctors. `F` is
/// the fine load vector.
MultiscaleSolution solve_lod(const LodForms& forms, const CorrectorResult& correctors,
                             const Eigen::VectorXd& F);

/// Embed u_H + K u_H + sum G_T.
Eigen::VectorXd reconstruct(const LodForms& forms, const MultiscaleSolution& sol);

/// Plain coarse FEM on the trial dofs with the composite matrix E^T B_h E,
/// returned embedded in the fine space.
Eigen::VectorXd coarse_fem(const LodForms& forms, const Eigen::VectorXd& F, BoundaryCondition bc);

/// Fine Galerkin solution; Gamma tangential dofs are fixed to zero for
/// essential boundary conditions.
Eigen::VectorXd fine_solve(const LodForms& forms, const Eigen::VectorXd& F, BoundaryCondition bc);

/// Binary corrector cache. Files live in `dir` and are named by `key`.
std::string corrector_cache_key(const LodForms& forms, int m, BoundaryCondition bc,
                                ProjectionVariant variant);
bool load_corrector_basis(const std::string& path, CorrectorBasis& basis);
void save_corrector_basis(const std::string& path, const CorrectorBasis& basis);

}  // namespace curlod
