#include "mpct/linalg.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <string>

namespace mpct::linalg {

Index cholesky_lower_in_place(MatrixXd& a) {
  const Index n = a.rows();
  double max_diag = 0.0;
  for (Index i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
  const double tol = kPivotRelTol * max_diag;
  for (Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Index k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > tol)) return j;
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Index k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / ljj;
    }
  }
  for (Index j = 1; j < n; ++j) a.col(j).head(j).setZero();
  return -1;
}

BlockDiagonal::BlockDiagonal(std::vector<MatrixXd> blocks) : blocks_(std::move(blocks)) {
  offsets_.reserve(blocks_.size());
  for (size_t b = 0; b < blocks_.size(); ++b) {
    if (blocks_[b].rows() != blocks_[b].cols()) {
      throw Error(ErrorCode::DimensionMismatch, "block " + std::to_string(b) + " is not square",
                  static_cast<long>(b));
    }
    offsets_.push_back(dim_);
    dim_ += blocks_[b].rows();
  }
}

void BlockDiagonal::factor() {
  factors_.clear();
  factors_.reserve(blocks_.size());
  for (size_t b = 0; b < blocks_.size(); ++b) {
    const MatrixXd& blk = blocks_[b];
    if (blk.size() > 0 &&
        (blk - blk.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + blk.cwiseAbs().maxCoeff())) {
      throw Error(ErrorCode::NotPositiveDefinite, "block " + std::to_string(b) + " is not symmetric",
                  static_cast<long>(b));
    }
    MatrixXd l = blk;
    if (cholesky_lower_in_place(l) >= 0) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "block " + std::to_string(b) + " has a non-positive Cholesky pivot", static_cast<long>(b));
    }
    factors_.push_back(std::move(l));
  }
  factored_ = true;
}

void BlockDiagonal::require_factored() const {
  if (!factored_) throw Error(ErrorCode::InvalidParameters, "block diagonal used before factor()");
}

void BlockDiagonal::solve_in_place(Eigen::Ref<VectorXd> x) const {
  require_factored();
  if (x.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "rhs length does not match block diagonal");
  for (size_t b = 0; b < factors_.size(); ++b) {
    const MatrixXd& l = factors_[b];
    auto seg = x.segment(offsets_[b], l.rows());
    l.triangularView<Eigen::Lower>().solveInPlace(seg);
    l.transpose().triangularView<Eigen::Upper>().solveInPlace(seg);
  }
}

void BlockDiagonal::solve_columns_in_place(Eigen::Ref<MatrixXd> x) const {
  require_factored();
  if (x.rows() != dim_) throw Error(ErrorCode::DimensionMismatch, "rhs rows do not match block diagonal");
  for (size_t b = 0; b < factors_.size(); ++b) {
    const MatrixXd& l = factors_[b];
    auto rows = x.middleRows(offsets_[b], l.rows());
    l.triangularView<Eigen::Lower>().solveInPlace(rows);
    l.transpose().triangularView<Eigen::Upper>().solveInPlace(rows);
  }
}

VectorXd BlockDiagonal::solve(const VectorXd& rhs) const {
  VectorXd x = rhs;
  solve_in_place(Eigen::Ref<VectorXd>(x));
  return x;
}

MatrixXd BlockDiagonal::solve(const MatrixXd& rhs) const {
  MatrixXd x = rhs;
  solve_columns_in_place(x);
  return x;
}

VectorXd BlockDiagonal::multiply(const VectorXd& x) const {
  if (x.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "vector length does not match block diagonal");
  VectorXd y(dim_);
  for (size_t b = 0; b < blocks_.size(); ++b) {
    const Index k = blocks_[b].rows();
    y.segment(offsets_[b], k).noalias() = blocks_[b] * x.segment(offsets_[b], k);
  }
  return y;
}

MatrixXd BlockDiagonal::dense() const {
  MatrixXd d = MatrixXd::Zero(dim_, dim_);
  for (size_t b = 0; b < blocks_.size(); ++b) {
    const Index k = blocks_[b].rows();
    d.block(offsets_[b], offsets_[b], k, k) = blocks_[b];
  }
  return d;
}

BlockDiagonal factor_block_diagonal(BlockDiagonal y) {
  y.factor();
  return y;
}

BandedCholesky BandedCholesky::factor(const MatrixXd& spd, Index bandwidth) {
  const Index n = spd.rows();
  if (spd.cols() != n) throw Error(ErrorCode::DimensionMismatch, "banded factor needs a square matrix");
  if (bandwidth < 0) throw Error(ErrorCode::DimensionMismatch, "negative bandwidth");
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + bandwidth + 1; i < n; ++i) {
      if (spd(i, j) != 0.0 || spd(j, i) != 0.0) {
        throw Error(ErrorCode::DimensionMismatch, "matrix has entries outside the declared bandwidth");
      }
    }
  }
  BandedCholesky f;
  f.n_ = n;
  f.bw_ = bandwidth;
  f.band_.assign(static_cast<size_t>(n * (bandwidth + 1)), 0.0);
  double max_diag = 0.0;
  for (Index i = 0; i < n; ++i) max_diag = std::max(max_diag, spd(i, i));
  const double tol = kPivotRelTol * max_diag;

  for (Index i = 0; i < n; ++i) {
    const Index j0 = std::max<Index>(0, i - bandwidth);
    for (Index j = j0; j <= i; ++j) {
      double s = spd(i, j);
      const Index k0 = std::max(j0, j - bandwidth);
      for (Index k = k0; k < j; ++k) s -= f.at(i, k) * f.at(j, k);
      if (i == j) {
        if (!(s > tol)) {
          throw Error(ErrorCode::NotPositiveDefinite,
                      "banded Cholesky pivot " + std::to_string(i) + " is not positive", static_cast<long>(i));
        }
        f.at(i, i) = std::sqrt(s);
      } else {
        f.at(i, j) = s / f.at(j, j);
      }
    }
  }
  return f;
}

double BandedCholesky::lower_at(Index i, Index j) const {
  if (j > i || j < i - bw_ || i < 0 || i >= n_ || j < 0) return 0.0;
  return at(i, j);
}

MatrixXd BandedCholesky::lower() const {
  MatrixXd l = MatrixXd::Zero(n_, n_);
  for (Index i = 0; i < n_; ++i) {
    for (Index j = std::max<Index>(0, i - bw_); j <= i; ++j) l(i, j) = at(i, j);
  }
  return l;
}

void BandedCholesky::solve_in_place(Eigen::Ref<VectorXd> x) const {
  if (x.size() != n_) throw Error(ErrorCode::DimensionMismatch, "rhs length does not match banded factor");
  // L y = b
  for (Index i = 0; i < n_; ++i) {
    double s = x[i];
    for (Index k = std::max<Index>(0, i - bw_); k < i; ++k) s -= at(i, k) * x[k];
    x[i] = s / at(i, i);
  }
  // L^T x = y
  for (Index i = n_ - 1; i >= 0; --i) {
    double s = x[i];
    const Index kmax = std::min(n_ - 1, i + bw_);
    for (Index k = i + 1; k <= kmax; ++k) s -= at(k, i) * x[k];
    x[i] = s / at(i, i);
  }
}

void BandedCholesky::solve_columns_in_place(Eigen::Ref<MatrixXd> x) const {
  if (x.rows() != n_) throw Error(ErrorCode::DimensionMismatch, "rhs rows do not match banded factor");
  for (Index j = 0; j < x.cols(); ++j) {
    VectorXd col = x.col(j);
    solve_in_place(Eigen::Ref<VectorXd>(col));
    x.col(j) = col;
  }
}

VectorXd BandedCholesky::solve(const VectorXd& rhs) const {
  VectorXd x = rhs;
  solve_in_place(Eigen::Ref<VectorXd>(x));
  return x;
}

MatrixXd BandedCholesky::solve(const MatrixXd& rhs) const {
  MatrixXd x = rhs;
  solve_columns_in_place(x);
  return x;
}

VectorXd banded_cholesky_solve(const BandedCholesky& factor, const VectorXd& rhs) { return factor.solve(rhs); }

VectorXd woodbury_solve(const BlockDiagonal& y, const LowRankCorrection& lr, const VectorXd& rhs) {
  if (rhs.size() != y.dimension()) throw Error(ErrorCode::DimensionMismatch, "rhs length does not match Y");
  return Woodbury<BlockDiagonal>(y, lr).solve(rhs);
}

}  // namespace mpct::linalg
