#pragma once

// Structure-exploiting solvers for the semi-banded systems of the ADMM
// z-update: block-diagonal Cholesky, banded Cholesky and a Woodbury layer
// that adds a low-rank correction on top of either of them.

#include <Eigen/Core>
#include <Eigen/LU>
#include <vector>

#include "mpct/errors.hpp"

namespace mpct::linalg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A Cholesky pivot is rejected when it is <= kPivotRelTol * max(diag(A)).
inline constexpr double kPivotRelTol = 1e-12;

/// In-place dense Cholesky (lower triangle). Returns the failing column, or
/// -1 on success. The strict upper triangle is zeroed.
Index cholesky_lower_in_place(MatrixXd& a);

class BlockDiagonal {
 public:
  BlockDiagonal() = default;
  explicit BlockDiagonal(std::vector<MatrixXd> blocks);

  Index dimension() const { return dim_; }
  Index block_count() const { return static_cast<Index>(blocks_.size()); }
  Index block_offset(Index b) const { return offsets_[static_cast<size_t>(b)]; }
  const MatrixXd& block(Index b) const { return blocks_[static_cast<size_t>(b)]; }
  const MatrixXd& factor_of(Index b) const { return factors_[static_cast<size_t>(b)]; }
  bool factored() const { return factored_; }

  /// Caches per-block Cholesky factors. Throws NotPositiveDefinite carrying
  /// the block index.
  void factor();

  void solve_in_place(Eigen::Ref<VectorXd> x) const;
  void solve_columns_in_place(Eigen::Ref<MatrixXd> x) const;
  VectorXd solve(const VectorXd& rhs) const;
  MatrixXd solve(const MatrixXd& rhs) const;

  VectorXd multiply(const VectorXd& x) const;
  MatrixXd dense() const;

 private:
  void require_factored() const;

  std::vector<MatrixXd> blocks_;
  std::vector<MatrixXd> factors_;
  std::vector<Index> offsets_;
  Index dim_ = 0;
  bool factored_ = false;
};

/// Returns a copy of `y` with cached factors.
BlockDiagonal factor_block_diagonal(BlockDiagonal y);

/// Lower Cholesky factor of a symmetric banded matrix. Row i of the band
/// holds L(i, i-bw) .. L(i, i) contiguously (row-major by diagonals);
/// entries that fall before column 0 are stored as zero.
class BandedCholesky {
 public:
  BandedCholesky() = default;

  /// Factors the lower band of `spd`. Entries outside the declared band must
  /// be exactly zero.
  static BandedCholesky factor(const MatrixXd& spd, Index bandwidth);

  Index dimension() const { return n_; }
  Index bandwidth() const { return bw_; }

  /// L(i, j) for i - bw <= j <= i, zero elsewhere.
  double lower_at(Index i, Index j) const;
  MatrixXd lower() const;
  const std::vector<double>& band() const { return band_; }

  void solve_in_place(Eigen::Ref<VectorXd> x) const;
  void solve_columns_in_place(Eigen::Ref<MatrixXd> x) const;
  VectorXd solve(const VectorXd& rhs) const;
  MatrixXd solve(const MatrixXd& rhs) const;

 private:
  double& at(Index i, Index j) { return band_[static_cast<size_t>(i * (bw_ + 1) + (j - i + bw_))]; }
  double at(Index i, Index j) const { return band_[static_cast<size_t>(i * (bw_ + 1) + (j - i + bw_))]; }

  Index n_ = 0;
  Index bw_ = 0;
  std::vector<double> band_;
};

VectorXd banded_cholesky_solve(const BandedCholesky& factor, const VectorXd& rhs);

/// U V^T with U, V both dim x rank.
struct LowRankCorrection {
  MatrixXd U;
  MatrixXd V;
  Index rank() const { return U.cols(); }
};

/// Solver for (Base + U V^T) s = rhs via the Woodbury identity. `Base` must
/// already be factored and provide dimension(), solve_in_place(Ref<VectorXd>)
/// and solve(MatrixXd).
template <class Base>
class Woodbury {
 public:
  Woodbury() = default;
  Woodbury(Base base, LowRankCorrection lr) : base_(std::move(base)), lr_(std::move(lr)) {
    const Index dim = base_.dimension();
    if (lr_.U.rows() != dim || lr_.V.rows() != dim || lr_.U.cols() != lr_.V.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "low-rank factors do not match the base dimension");
    }
    const Index k = lr_.rank();
    base_inv_u_ = base_.solve(lr_.U);
    MatrixXd cap = MatrixXd::Identity(k, k);
    if (k > 0) cap.noalias() += lr_.V.transpose() * base_inv_u_;
    capacitance_ = cap;
    if (k > 0) {
      lu_.compute(cap);
      const double rc = lu_.rcond();
      if (!(rc > 1e-14)) {
        throw Error(ErrorCode::SingularCapacitance, "capacitance matrix is numerically singular");
      }
    }
  }

  Index dimension() const { return base_.dimension(); }
  const Base& base() const { return base_; }
  const LowRankCorrection& correction() const { return lr_; }
  const MatrixXd& base_inverse_times_u() const { return base_inv_u_; }
  const MatrixXd& capacitance() const { return capacitance_; }

  /// s = B^-1 r - B^-1 U (I + V^T B^-1 U)^-1 V^T B^-1 r
  void solve_in_place(Eigen::Ref<VectorXd> x) const {
    if (x.size() != dimension()) {
      throw Error(ErrorCode::DimensionMismatch, "rhs length does not match the system dimension");
    }
    base_.solve_in_place(x);
    if (lr_.rank() == 0) return;
    VectorXd w = lr_.V.transpose() * x;
    w = lu_.solve(w);
    x.noalias() -= base_inv_u_ * w;
  }

  VectorXd solve(const VectorXd& rhs) const {
    VectorXd x = rhs;
    solve_in_place(Eigen::Ref<VectorXd>(x));
    return x;
  }

  MatrixXd solve(const MatrixXd& rhs) const {
    MatrixXd x = rhs;
    for (Index j = 0; j < x.cols(); ++j) {
      VectorXd col = x.col(j);
      solve_in_place(Eigen::Ref<VectorXd>(col));
      x.col(j) = col;
    }
    return x;
  }

 private:
  Base base_;
  LowRankCorrection lr_;
  MatrixXd base_inv_u_;
  MatrixXd capacitance_;
  Eigen::PartialPivLU<MatrixXd> lu_;
};

/// Convenience form of the Woodbury solve against a factored block diagonal.
VectorXd woodbury_solve(const BlockDiagonal& y, const LowRankCorrection& lr, const VectorXd& rhs);

}  // namespace mpct::linalg
