#include "curlod/linsolve.hpp"

#include "curlod/error.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace curlod {

SpdSolver::SpdSolver(const SpMat& A) : A_(A), ldlt_(std::make_shared<Eigen::SimplicialLDLT<SpMat>>()) {
  if (A.rows() != A.cols())
    throw SolverError("SpdSolver: matrix is " + std::to_string(A.rows()) + "x" +
                      std::to_string(A.cols()));
  A_.makeCompressed();
  if (A_.rows() == 0) return;
  for (Eigen::Index k = 0; k < A_.outerSize(); ++k) {
    double col = 0;
    for (SpMat::InnerIterator it(A_, k); it; ++it) col += std::abs(it.value());
    norm_ = std::max(norm_, col);
  }
  ldlt_->compute(A_);
  if (ldlt_->info() != Eigen::Success)
    throw SolverError("SpdSolver: symbolic/numeric factorization failed for n=" +
                      std::to_string(A_.rows()));
  const Eigen::VectorXd d = ldlt_->vectorD();
  const double scale = d.cwiseAbs().maxCoeff();
  const auto pinv = ldlt_->permutationPinv().indices();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (!(d[i] > 1e-14 * scale))
      throw SolverError("SpdSolver: non-positive pivot " + std::to_string(d[i]) + " at row " +
                        std::to_string(pinv[i]) + " (elimination step " + std::to_string(i) +
                        ")");
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& b, double tol) const {
  if (b.size() != A_.rows())
    throw SolverError("SpdSolver::solve: rhs size " + std::to_string(b.size()) +
                      " != " + std::to_string(A_.rows()));
  if (A_.rows() == 0) return b;
  const double nb = b.norm();
  if (nb == 0.0) return Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd x = ldlt_->solve(b);
  Eigen::VectorXd r = b - A_ * x;
  for (int it = 0; it < 3 && r.norm() > tol * nb; ++it) {
    x += ldlt_->solve(r);
    r = b - A_ * x;
  }
  // Normwise backward error; equals the relative residual up to the factor
  // 1 + |A| |x| / |b| that conditioning imposes.
  const double berr = r.norm() / (nb + norm_ * x.norm());
  if (!(berr <= tol)) {
    std::ostringstream msg;
    msg << "SpdSolver::solve: backward error " << std::scientific << berr << " exceeds " << tol;
    throw SolverError(msg.str());
  }
  return x;
}

Eigen::MatrixXd SpdSolver::solve_many(const Eigen::MatrixXd& B, bool refine) const {
  if (A_.rows() == 0) return B;
  Eigen::MatrixXd X = ldlt_->solve(B);
  if (!refine) return X;
  const Eigen::MatrixXd R = B - A_ * X;
  X += ldlt_->solve(R);
  return X;
}

Eigen::VectorXd solve_spd(const SpMat& A, const Eigen::VectorXd& b) {
  return SpdSolver(A).solve(b);
}

SaddleSolver::SaddleSolver(const SpMat& A, const Eigen::MatrixXd& C, RedundancyPolicy policy,
                           double rank_tol)
    : spd_(A), C_(C) {
  if (C.rows() > 0 && C.cols() != A.rows())
    throw SolverError("SaddleSolver: constraint block has " + std::to_string(C.cols()) +
                      " columns, expected " + std::to_string(A.rows()));
  const Eigen::Index k = C.rows();
  if (k == 0) return;

  // Unpivoted QR of C^T in row order: |R_ii| is the distance of row i from
  // the span of the preceding rows. Rows with a negligible remainder relative
  // to their own norm are dropped.
  const Eigen::Index n = C.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(C.transpose());
  const Eigen::Index d = std::min(k, n);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double cn = C.row(i).norm();
    const double ri = i < d ? std::abs(qr.matrixQR()(i, i)) : 0.0;
    if (cn > 0 && ri > rank_tol * cn)
      kept_.push_back(static_cast<int>(i));
    else
      dropped_.push_back(static_cast<int>(i));
  }
  if (!dropped_.empty() && policy == RedundancyPolicy::reject) {
    std::string rows;
    for (std::size_t i = 0; i < dropped_.size() && i < 20; ++i)
      rows += (i ? "," : "") + std::to_string(dropped_[i]);
    if (dropped_.size() > 20) rows += ",...";
    throw SolverError("solve_saddle: rank-deficient constraints, redundant rows {" + rows + "}");
  }
  const Eigen::Index r = static_cast<Eigen::Index>(kept_.size());
  if (!dropped_.empty()) {
    Eigen::MatrixXd Ckt(n, r);
    for (Eigen::Index a = 0; a < r; ++a) Ckt.col(a) = C.row(kept_[a]).transpose();
    qr.compute(Ckt);
  }
  Q_ = qr.householderQ() * Eigen::MatrixXd::Identity(n, r);
  R_ = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  if (r == 0) return;

  Y_ = spd_.solve_many(Q_, false);
  Eigen::MatrixXd S = Q_.transpose() * Y_;
  S = 0.5 * (S + S.transpose()).eval();
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw SolverError("SaddleSolver: Schur complement factorization failed");
  L_ = llt.matrixL();
}

Eigen::MatrixXd SaddleSolver::schur_solve(const Eigen::MatrixXd& b) const {
  const auto Lt = L_.triangularView<Eigen::Lower>();
  Eigen::MatrixXd y = Lt.solve(b);
  return Lt.transpose().solve(y);
}

void SaddleSolver::refine(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H, Eigen::MatrixXd& X,
                          Eigen::MatrixXd& Mu) const {
  const SpMat& A = spd_.matrix();
  const bool constrained = Q_.cols() > 0;
  // One step solves A x + Q mu = rf, Q^T x = rh.
  auto step = [&](const Eigen::MatrixXd& rf, const Eigen::MatrixXd& rh, Eigen::MatrixXd& dmu) {
    Eigen::MatrixXd X0 = spd_.solve_many(rf);
    if (!constrained) return X0;
    dmu = schur_solve(Q_.transpose() * X0 - rh);
    return Eigen::MatrixXd(X0 - Y_ * dmu);
  };
  X = step(F, H, Mu);
  for (int it = 0; it < 2; ++it) {
    Eigen::MatrixXd rf = F - A * X;
    Eigen::MatrixXd rh;
    if (constrained) {
      rf -= Q_ * Mu;
      rh = H - Q_.transpose() * X;
    }
    Eigen::MatrixXd dmu;
    X += step(rf, rh, dmu);
    if (constrained) Mu += dmu;
  }
}

SaddleSolution SaddleSolver::solve(const Eigen::VectorXd& f) const {
  return solve(f, Eigen::VectorXd::Zero(C_.rows()));
}

SaddleSolution SaddleSolver::solve(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
  if (g.size() != C_.rows())
    throw SolverError("SaddleSolver::solve: multiplier rhs has size " + std::to_string(g.size()));
  const SpMat& A = spd_.matrix();
  SaddleSolution s;
  s.dropped_rows = dropped_;
  s.lambda = Eigen::VectorXd::Zero(C_.rows());
  const Eigen::Index r = Q_.cols();
  // C_kept x = g_kept  <=>  Q^T x = R^{-T} g_kept
  Eigen::VectorXd gk(r);
  for (Eigen::Index a = 0; a < r; ++a) gk[a] = g[kept_[a]];
  Eigen::MatrixXd H = R_.triangularView<Eigen::Upper>().transpose().solve(gk);
  Eigen::MatrixXd X, Mu;
  refine(f, H, X, Mu);
  s.x = X.col(0);
  if (r > 0) {
    const Eigen::VectorXd lam = R_.triangularView<Eigen::Upper>().solve(Mu.col(0));
    for (Eigen::Index a = 0; a < r; ++a) s.lambda[kept_[a]] = lam[a];
  }
  const Eigen::VectorXd rp = f - A * s.x - C_.transpose() * s.lambda;
  const double fn = f.norm();
  s.residual_primal = fn > 0 ? rp.norm() / fn : rp.norm();
  if (C_.rows() > 0) {
    const Eigen::VectorXd rc = g - C_ * s.x;
    const double ref = std::max(g.norm(), C_.norm() * s.x.norm());
    s.residual_constraint = ref > 0 ? rc.norm() / ref : rc.norm();
  }
  if (!(s.residual_primal <= 1e-6) || !(s.residual_constraint <= 1e-6))
    throw SolverError("solve_saddle: residuals " + std::to_string(s.residual_primal) + ", " +
                      std::to_string(s.residual_constraint) + " after refinement");
  return s;
}

Eigen::MatrixXd SaddleSolver::solve_block(const Eigen::MatrixXd& F, double tol,
                                          double* constraint_max) const {
  const SpMat& A = spd_.matrix();
  if (F.rows() != A.rows())
    throw SolverError("SaddleSolver::solve_block: rhs has " + std::to_string(F.rows()) + " rows");
  const bool constrained = Q_.cols() > 0;
  Eigen::MatrixXd X, Mu;
  refine(F, Eigen::MatrixXd::Zero(Q_.cols(), F.cols()), X, Mu);
  // Normwise backward error of the orthonormalized saddle system.
  Eigen::MatrixXd R = F - A * X;
  if (constrained) R -= Q_ * Mu;
  for (Eigen::Index j = 0; j < F.cols(); ++j) {
    const double fn = F.col(j).norm();
    if (fn == 0.0) continue;
    const double mu = constrained ? Mu.col(j).norm() : 0.0;
    const double rp = R.col(j).norm() / (fn + spd_.norm() * X.col(j).norm() + mu);
    if (!(rp <= tol)) {
      std::ostringstream msg;
      msg << "SaddleSolver::solve_block: column " << j << " backward error " << std::scientific
          << rp;
      throw SolverError(msg.str());
    }
  }
  if (constraint_max) *constraint_max = C_.rows() > 0 ? (C_ * X).cwiseAbs().maxCoeff() : 0.0;
  return X;
}

SaddleSolution solve_saddle(const SaddleSystem& sys, RedundancyPolicy policy) {
  SaddleSolver solver(sys.A, sys.C, policy);
  const Eigen::VectorXd g =
      sys.rhs_multiplier.size() ? sys.rhs_multiplier : Eigen::VectorXd::Zero(sys.C.rows());
  return solver.solve(sys.rhs_primal, g);
}

DenseSaddleResult solve_saddle_dense(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                     const Eigen::MatrixXd& F, const Eigen::MatrixXd& G,
                                     const std::vector<int>& pinned, bool min_norm, double tol) {
  const Eigen::Index n = A.rows(), k = C.rows(), p = F.cols();
  CURLOD_REQUIRE(A.cols() == n && (k == 0 || C.cols() == n) && F.rows() == n &&
                     G.rows() == k && (k == 0 || G.cols() == p),
                 "inconsistent block sizes");
  std::vector<char> pin(k, 0);
  for (int i : pinned) {
    CURLOD_REQUIRE(i >= 0 && i < k, "pinned multiplier out of range");
    pin[i] = 1;
  }
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < k; ++i)
    if (!pin[i]) free.push_back(i);
  const Eigen::Index m = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
  Eigen::MatrixXd R(n + m, p);
  K.topLeftCorner(n, n) = A;
  R.topRows(n) = F;
  for (Eigen::Index a = 0; a < m; ++a) {
    K.block(n + a, 0, 1, n) = C.row(free[a]);
    K.block(0, n + a, n, 1) = C.row(free[a]).transpose();
    R.row(n + a) = G.row(free[a]);
  }
  Eigen::MatrixXd sol;
  if (min_norm) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(K);
    cod.setThreshold(1e-12);
    sol = cod.solve(R);
  } else {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
    sol = lu.solve(R);
  }
  DenseSaddleResult out;
  const double rn = std::max(R.norm(), 1e-300);
  out.residual = (K * sol - R).norm() / rn;
  if (R.norm() == 0.0) out.residual = 0.0;
  if (!(out.residual <= tol)) {
    // one refinement step
    Eigen::MatrixXd d;
    if (min_norm) {
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(K);
      cod.setThreshold(1e-12);
      d = cod.solve(R - K * sol);
    } else {
      d = Eigen::PartialPivLU<Eigen::MatrixXd>(K).solve(R - K * sol);
    }
    sol += d;
    out.residual = (K * sol - R).norm() / rn;
    if (!(out.residual <= tol))
      throw SolverError("solve_saddle_dense: relative residual " + std::to_string(out.residual) +
                        " exceeds " + std::to_string(tol) + " (n=" + std::to_string(n) +
                        ", constraints=" + std::to_string(k) + ")");
  }
  out.x = sol.topRows(n);
  out.lambda = Eigen::MatrixXd::Zero(k, p);
  for (Eigen::Index a = 0; a < m; ++a) out.lambda.row(free[a]) = sol.row(n + a);
  return out;
}

}  // namespace curlod
