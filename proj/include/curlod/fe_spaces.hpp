#pragma once

// Lowest-order finite element families of the discrete de Rham complex
//   S --grad--> N --curl--> RT --div--> P0
// on the structured meshes, their incidence matrices and the exact
// coarse-to-fine embeddings.
//
// Nedelec functions use the Whitney basis psi_E = lambda_a grad lambda_b -
// lambda_b grad lambda_a for the edge a < b, so that the tangential moment
// along t_E = (y1 - y2)/|E| equals one. Raviart-Thomas functions in 3D are
// the Whitney 2-forms (unit flux along (xb - xa) x (xc - xa) for a < b < c);
// in 2D they are the clockwise rotation R(v) = (v_y, -v_x) of the Nedelec
// basis, with unit flux along R t_E. Piecewise constants are stored by their
// cell values.

#include "curlod/mesh.hpp"

#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace curlod {

enum class Family { lagrange, nedelec, raviart_thomas, piecewise_constant };

std::string to_string(Family f);

/// Row/column tag of a SparseOperator: which family on which mesh.
struct SpaceTag {
  Family family = Family::nedelec;
  int dim = 0;
  int level = 0;  ///< subdivisions per side of the owning mesh
  bool operator==(const SpaceTag&) const = default;
};

std::string to_string(const SpaceTag& t);

/// Sparse real matrix whose rows and columns carry space tags. Products and
/// applications check the tags and sizes and throw on mismatch.
class SparseOperator {
 public:
  using Matrix = Eigen::SparseMatrix<double>;

  SparseOperator() = default;
  SparseOperator(SpaceTag rows, SpaceTag cols, Matrix m);

  const SpaceTag& row_space() const { return rows_; }
  const SpaceTag& col_space() const { return cols_; }
  const Matrix& matrix() const { return m_; }
  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index cols() const { return m_.cols(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  SparseOperator transpose() const;

 private:
  SpaceTag rows_, cols_;
  Matrix m_;
};

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b);

/// Entity <-> degree-of-freedom numbering of one family on one mesh. Dofs
/// are numbered like the owning entities.
struct DofMap {
  Family family = Family::nedelec;
  std::shared_ptr<const Mesh> mesh;
  int count = 0;
  /// Trace dofs on Gamma: boundary vertices (S), tangential traces (N),
  /// normal traces (RT); empty for P0.
  std::vector<int> boundary;
  std::vector<std::uint8_t> is_boundary;

  SpaceTag tag() const { return {family, mesh->dim(), mesh->subdivisions()}; }
};

DofMap dof_map(std::shared_ptr<const Mesh> mesh, Family family);

/// Affine data of one simplex.
struct CellGeometry {
  int dim = 0;
  std::array<Point, 4> x;
  std::array<Point, 4> grad;  ///< gradients of the barycentric coordinates
  double volume = 0;
  /// Sign of det[x1-x0, ...]: +1 for positively oriented vertex order.
  int orientation = 1;

  std::array<double, 4> lambda(const Point& p) const;
  Point point(const std::array<double, 4>& lam) const;
};

CellGeometry cell_geometry(const Mesh& mesh, int c);

/// Basis functions of one family on one cell evaluated at one point.
/// Scalars are stored in the x-component. `deriv` is grad (S), curl (N; the
/// scalar 2D curl sits in the z-component), div (RT) and zero (P0).
struct LocalBasis {
  int count = 0;
  std::array<int, 6> dof{};
  std::array<Point, 6> value;
  std::array<Point, 6> deriv;
};

int local_dof_count(int dim, Family f);
/// Global dof ids of the local basis functions of cell c.
std::array<int, 6> local_dofs(const Mesh& mesh, int c, Family f);
void evaluate_basis(const Mesh& mesh, int c, const CellGeometry& g, Family f,
                    const std::array<double, 4>& lambda, LocalBasis& out);

/// Integer signed incidence matrices.
Eigen::SparseMatrix<int> gradient_signs(const Mesh& mesh);  ///< edges x vertices
Eigen::SparseMatrix<int> curl_signs(const Mesh& mesh);      ///< faces x edges (3D), cells x edges (2D)
Eigen::SparseMatrix<int> divergence_signs(const Mesh& mesh);  ///< cells x faces (3D)

/// G: S -> N.
SparseOperator gradient_incidence(const Mesh& mesh);
/// C: N -> RT (3D) or N -> P0 (2D, entries scaled by 1/|T|).
SparseOperator curl_incidence(const Mesh& mesh);
/// D: RT -> P0 (3D), entries scaled by 1/|T|.
SparseOperator divergence_incidence(const Mesh& mesh);

/// Canonical Nedelec interpolant: tangential moments along every edge,
/// computed with a 3-point Gauss rule (exact for quintic traces).
Eigen::VectorXd interpolate_nedelec(const Mesh& mesh,
                                    const std::function<Point(const Point&)>& field);

/// Exact representation of every coarse basis function in the fine space.
SparseOperator coarse_to_fine_embedding(const MeshPair& pair, Family family);
SparseOperator coarse_to_fine_embedding(const DofMap& coarse, const DofMap& fine);

}  // namespace curlod
