#pragma once

// Direct solvers: sparse SPD, and saddle-point systems
//   [A  C^T] [x]   [f]
//   [C  0  ] [l] = [g]
// with A SPD, solved through the Schur complement C A^{-1} C^T.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace curlod {

using SpMat = Eigen::SparseMatrix<double>;

/// Sparse LDL^T factorization with pivot and residual checks.
class SpdSolver {
 public:
  SpdSolver() = default;
  explicit SpdSolver(const SpMat& A);

  /// Solution of A x = b; throws SolverError if the normwise backward error
  /// |b - A x| / (|b| + |A| |x|) exceeds `tol` after iterative refinement.
  Eigen::VectorXd solve(const Eigen::VectorXd& b, double tol = 1e-10) const;
  /// Columnwise solve without residual checks.
  /// One refinement step unless `refine` is false.
  Eigen::MatrixXd solve_many(const Eigen::MatrixXd& B, bool refine = true) const;

  Eigen::Index size() const { return A_.rows(); }
  const SpMat& matrix() const { return A_; }
  /// Max column sum of |A|.
  double norm() const { return norm_; }

 private:
  SpMat A_;
  double norm_ = 0;
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
};

Eigen::VectorXd solve_spd(const SpMat& A, const Eigen::VectorXd& b);

struct SaddleSystem {
  SpMat A;                  ///< n x n, symmetric positive definite
  Eigen::MatrixXd C;        ///< k x n constraint rows (may be empty)
  Eigen::VectorXd rhs_primal;
  Eigen::VectorXd rhs_multiplier;
};

enum class RedundancyPolicy {
  reject,  ///< throw naming the linearly dependent rows
  drop,    ///< discard them (their right-hand sides must be consistent)
};

struct SaddleSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;  ///< zero for dropped rows
  std::vector<int> dropped_rows;
  double residual_primal = 0;
  double residual_constraint = 0;
};

/// Reusable factorization of one saddle operator. Solves for many right-hand
/// sides share the sparse factor and the Schur complement.
class SaddleSolver {
 public:
  SaddleSolver(const SpMat& A, const Eigen::MatrixXd& C, RedundancyPolicy policy,
               double rank_tol = 1e-10);

  SaddleSolution solve(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;
  /// Right-hand side g = 0.
  SaddleSolution solve(const Eigen::VectorXd& f) const;
  /// Columnwise primal solutions for g = 0. Each column is refined and its
  /// normwise backward error checked against `tol`; the largest constraint
  /// residual max|C x| is returned through `constraint_max`.
  Eigen::MatrixXd solve_block(const Eigen::MatrixXd& F, double tol = 1e-9,
                              double* constraint_max = nullptr) const;

  const std::vector<int>& dropped_rows() const { return dropped_; }
  Eigen::Index primal_size() const { return spd_.size(); }
  Eigen::Index constraint_count() const { return C_.rows(); }

 private:
  SpdSolver spd_;
  Eigen::MatrixXd C_;         // all rows
  std::vector<int> kept_, dropped_;
  Eigen::MatrixXd Q_;         // orthonormal basis of the kept rows
  Eigen::MatrixXd R_;         // C_kept^T = Q_ R_
  Eigen::MatrixXd Y_;         // A^{-1} Q_
  Eigen::MatrixXd L_;         // Cholesky factor of Q_^T Y_
  Eigen::MatrixXd schur_solve(const Eigen::MatrixXd& b) const;
  void refine(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H, Eigen::MatrixXd& X,
              Eigen::MatrixXd& Mu) const;
};

SaddleSolution solve_saddle(const SaddleSystem& sys,
                            RedundancyPolicy policy = RedundancyPolicy::reject);

/// Dense solve of a small symmetric saddle system whose leading block may be
/// singular. `pinned` multiplier indices are fixed to zero; the remaining
/// system is solved in the least-squares minimum-norm sense when
/// `min_norm` is set and by LU otherwise. Residuals are checked.
struct DenseSaddleResult {
  Eigen::MatrixXd x;
  Eigen::MatrixXd lambda;
  double residual = 0;
};

DenseSaddleResult solve_saddle_dense(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                     const Eigen::MatrixXd& F, const Eigen::MatrixXd& G,
                                     const std::vector<int>& pinned = {}, bool min_norm = false,
                                     double tol = 1e-10);

}  // namespace curlod
