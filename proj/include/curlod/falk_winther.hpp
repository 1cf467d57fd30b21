#pragma once

// Matrix representation of the edge-based Falk-Winther projection
//   pi^E u = S^1 u + sum_E [((I - S^1) Q^1_E u)]_E psi_E
// from the fine Nedelec space onto the coarse one, together with the nodal
// projection pi^V used to validate the commuting diagram
//   pi^E grad = grad pi^V.
// Everything is assembled row by row: row E only involves the extended edge
// patch of E and the nodal patches of its endpoints.

#include "curlod/fe_spaces.hpp"
#include "curlod/mesh.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace curlod {

/// Piecewise constant z0_y = 1/|omega_y| on omega_y (coarse cell values).
Eigen::VectorXd compute_z0(const Mesh& coarse, int y);
/// (delta z0)_E = z0_{y1} - z0_{y2}.
Eigen::VectorXd delta_z0(const Mesh& coarse, int edge);

/// Flux z1_E on the extended edge patch with zero normal trace:
///   div z1 = -(delta z0)_E,  (z1, curl tau) = 0 for tau with zero trace,
/// where in 2D the test space is scalar Lagrange and curl tau = R grad tau.
struct Z1Solution {
  int edge = -1;
  std::vector<int> facets;          ///< coarse facets interior to the patch
  Eigen::VectorXd flux;             ///< coefficients on `facets`
  std::vector<int> multiplier_dofs; ///< interior coarse edges (3D) / vertices (2D)
  Eigen::VectorXd multiplier;
  double divergence_residual = 0;   ///< max_T |div z1 + (delta z0)_E|
  double orthogonality_residual = 0;///< max_tau |(z1, curl tau)|
};

Z1Solution compute_z1_E(const Mesh& coarse, int edge);

/// Sparse row vector over global fine dofs, indices ascending.
struct SparseRow {
  std::vector<int> index;
  std::vector<double> value;
};

/// Q^1_{y,-} (or Q^0_y when `nodal` is set) on omega_y: rows are the coarse
/// patch vertices, columns the fine edges (fine vertices) of the patch.
struct NodalBlock {
  int vertex = -1;
  std::vector<int> coarse_vertices;
  std::vector<int> fine_dofs;
  Eigen::MatrixXd Q;
  /// Row of Q at the anchor vertex as a sparse fine row.
  SparseRow anchor_row() const;
};

NodalBlock assemble_Q1y(const MeshPair& pair, int y);
NodalBlock assemble_Q0y(const MeshPair& pair, int y);

/// Q^1_E on omega_E^ext: rows are the coarse patch edges, columns the fine
/// patch edges. One gradient multiplier is pinned to remove the constant.
struct EdgeBlock {
  int edge = -1;
  std::vector<int> coarse_edges;
  std::vector<int> coarse_vertices;
  std::vector<int> fine_edges;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd V;
  double residual = 0;
};

EdgeBlock assemble_Q1E(const MeshPair& pair, int edge);

/// M^1: row E holds (z1_E, psi_e) over the fine patch edges.
SparseOperator assemble_M1(const MeshPair& pair);
/// S^1 = M^1 + Q^1_{y1,-}(y1) - Q^1_{y2,-}(y2).
SparseOperator assemble_S1(const MeshPair& pair);
/// pi^V: fine Lagrange -> coarse Lagrange.
SparseOperator assemble_PiV(const MeshPair& pair);

enum class ProjectionVariant { standard, boundary_zeroed };

struct ProjectionSet {
  SparseOperator P;   ///< fine N -> coarse N
  SparseOperator PV;  ///< fine S -> coarse S (empty unless requested)
  SparseOperator S1;  ///< fine N -> coarse N
  ProjectionVariant variant = ProjectionVariant::standard;
  std::vector<Z1Solution> z1;     ///< per coarse edge
  std::vector<EdgeBlock> blocks;  ///< per coarse edge, when kept
  double max_z1_divergence_residual = 0;
  double max_z1_orthogonality_residual = 0;
};

struct ProjectionOptions {
  bool with_nodal = true;   ///< also assemble PV
  bool keep_blocks = false; ///< keep every Q_E block
};

ProjectionSet assemble_PiE(const MeshPair& pair, const ProjectionOptions& opt = {});

/// pi^{0,E}: rows of coarse edges on Gamma set to zero.
ProjectionSet zero_boundary_rows(const ProjectionSet& ps, const Mesh& coarse);

/// Triplet dump "row col value" with 17 significant digits, sorted.
void write_triplets(const SparseOperator& op, std::ostream& os);

}  // namespace curlod
