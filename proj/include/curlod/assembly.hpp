#pragma once

// Bilinear forms and load vectors on the Nedelec space, plus the unweighted
// pairings between coarse and fine finite element functions used by the
// local problems of the projection.

#include "curlod/fe_spaces.hpp"
#include "curlod/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <span>
#include <vector>

namespace curlod {

/// Piecewise constant coefficient on block_count^dim cubes of [0,1]^dim.
/// Block (i_1, ..., i_d) takes value_black when i_1 + ... + i_d is even.
struct Checkerboard {
  int block_count = 1;
  double value_black = 1.0;
  double value_white = 0.001;

  static Checkerboard constant(double v) { return {1, v, v}; }
  bool is_constant() const { return block_count == 1 || value_black == value_white; }
};

/// Coefficient value at x; block indices are clamped at the upper boundary.
double checkerboard_eval(const Checkerboard& c, const Point& x);

/// Throws unless every cell of `mesh` lies inside a single block.
void require_aligned(const Checkerboard& c, const Mesh& mesh);

struct LoadSpec {
  int dim = 2;
  std::function<Point(const Point&)> f;
};

/// Local matrix of B_T on one cell in the local Nedelec order of the cell,
/// split into its curl-curl and mass parts (unit coefficients).
struct NedelecElement {
  int count = 0;
  Eigen::Matrix<double, 6, 6> curl;
  Eigen::Matrix<double, 6, 6> mass;
};

NedelecElement nedelec_element(const Mesh& mesh, int c);

/// Per-cell coefficients sampled at the barycenters.
struct CellCoefficients {
  std::vector<double> mu, kappa;
};

CellCoefficients sample_coefficients(const Mesh& mesh, const Checkerboard& mu,
                                     const Checkerboard& kappa);

/// B(u, v) = (mu curl u, curl v) + (kappa u, v) on the Nedelec space of
/// `mesh`. Coefficients must be resolved by the mesh.
SparseOperator assemble_B(const Mesh& mesh, const Checkerboard& mu, const Checkerboard& kappa);
SparseOperator assemble_B(const Mesh& mesh, const CellCoefficients& coef);

/// Single-cell restriction B_T as a global-size operator.
SparseOperator assemble_B_T(const Mesh& mesh, const Checkerboard& mu, const Checkerboard& kappa,
                            int cell);

/// Local matrix mu_T curl + kappa_T mass of cell c.
Eigen::Matrix<double, 6, 6> element_matrix(const Mesh& mesh, const CellCoefficients& coef, int c);

/// B on the coarse Nedelec space with the coefficients integrated on the
/// fine mesh: Embed^T B_h Embed.
SparseOperator assemble_B_composite(const MeshPair& pair, const SparseOperator& B_fine);

/// Load (f, psi_E) with a degree-4 rule.
Eigen::VectorXd assemble_load(const Mesh& mesh, const LoadSpec& f);
/// Local load of cell c in the local Nedelec order.
Eigen::Matrix<double, 6, 1> element_load(const Mesh& mesh, int c, const LoadSpec& f);

/// Which field of a pairing: a family on the coarse or the fine mesh of a
/// pair, evaluated either as value or as exterior derivative.
struct FieldRef {
  Family family = Family::nedelec;
  bool coarse = false;
  bool derivative = false;
};

/// Named pairings. Rows are the first factor.
///   grad_grad        (grad lambda_z, grad lambda_w)   coarse S x coarse S
///   grad_edge        (grad lambda_z, psi_e)           coarse S x fine N
///   mean             (lambda_z, 1_K)                  coarse S x coarse P0
///   curl_curl        (curl psi_E, curl psi_F)         coarse N x coarse N
///   edge_grad        (psi_E, grad lambda_z)           coarse N x coarse S
///   cross_curl_curl  (curl psi_E, curl psi_e)         coarse N x fine N
///   cross_edge_grad  (psi_e, grad lambda_z)           fine N x coarse S
///   cross_grad_grad  (grad lambda_z, grad phi_w)      coarse S x fine S
enum class CouplingKind {
  grad_grad,
  grad_edge,
  mean,
  curl_curl,
  edge_grad,
  cross_curl_curl,
  cross_edge_grad,
  cross_grad_grad,
};

std::pair<FieldRef, FieldRef> coupling_fields(CouplingKind kind);

/// Local pairing matrix on one fine cell.
struct LocalPairing {
  int rows = 0, cols = 0;
  std::array<int, 6> row_dof{}, col_dof{};
  Eigen::Matrix<double, 6, 6> m;
};

void pair_on_cell(const MeshPair& pair, int fine_cell, const FieldRef& row, const FieldRef& col,
                  LocalPairing& out);

/// Pairing integrated over the given fine cells (all cells if empty), as a
/// global-size operator.
SparseOperator assemble_coupling(const MeshPair& pair, std::span<const int> fine_cells,
                                 const FieldRef& row, const FieldRef& col);
SparseOperator assemble_coupling(const MeshPair& pair, std::span<const int> fine_cells,
                                 CouplingKind kind);

}  // namespace curlod
