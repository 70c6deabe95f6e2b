#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "npspec/chebcore.hpp"

namespace npspec::qc {

using cheb::ChebSeries;
using cheb::Interval;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Column quasimatrix: m >= 1 functions sharing one interval.
class QMatrix {
 public:
  QMatrix(Interval interval, std::vector<ChebSeries> columns);

  const Interval& interval() const noexcept { return interval_; }
  std::size_t cols() const noexcept { return columns_.size(); }
  const ChebSeries& col(std::size_t j) const { return columns_.at(j); }
  std::span<const ChebSeries> columns() const noexcept { return columns_; }
  std::size_t max_degree() const noexcept;

  /// The row Q(y, :).
  Vector row(double y) const;
  /// Columns first..first+count-1.
  QMatrix slice(std::size_t first, std::size_t count) const;

 private:
  Interval interval_;
  std::vector<ChebSeries> columns_;
};

/// Q^T P, entry (i, j) = <Q_i, P_j>.
Matrix gram(const QMatrix& Q, const QMatrix& P);

/// Q F: column j is sum_i F(i, j) Q_i.
QMatrix qmat_mul(const QMatrix& Q, const Matrix& F);

struct QR {
  QMatrix Q;  // orthonormal columns
  Matrix R;   // upper triangular; a zero diagonal marks a dependent column
};

/// Modified Gram-Schmidt with one reorthogonalization pass. Dependent
/// columns get an orthonormal completion and a zero diagonal entry in R.
QR qmat_qr(const QMatrix& Q);

struct QmatSVD {
  QMatrix U;     // orthonormal columns
  Vector sigma;  // non-increasing, non-negative
  Matrix V;      // m x m orthogonal

  /// Count of singular values above rel_tol * sigma_1.
  std::size_t numerical_rank(double rel_tol = 1e-12) const;
};

QmatSVD qmat_svd(const QMatrix& Q);

inline constexpr double kDefaultRankTol = 1e-10;

/// Factored pseudoinverse Q^+ = V diag(inv_sigma) U^T of an [a,b] x m
/// quasimatrix, truncated to singular values above rank_tol * sigma_1.
struct QmatPinv {
  Matrix V;          // m x r
  Vector inv_sigma;  // length r
  QMatrix U;         // r orthonormal columns

  std::size_t rank() const noexcept {
    return static_cast<std::size_t>(inv_sigma.size());
  }
  /// Q^+ f, an m-vector.
  Vector apply(const ChebSeries& f) const;
  /// Q^+ P, an m x n matrix.
  Matrix apply(const QMatrix& P) const;
  /// (Q^+)^T = U diag(inv_sigma) V^T as an [a,b] x m quasimatrix.
  QMatrix transposed() const;
};

/// Throws ZeroMatrix when every singular value is below 1e-300.
QmatPinv qmat_pinv(const QMatrix& Q, double rank_tol = kDefaultRankTol);

/// Low-rank continuous matrix C(y, x) = sum_k w_k r_k(y) c_k(x), w_k > 0.
/// When orthonormalized, the r_k and c_k are orthonormal and the w_k are
/// the singular values in non-increasing order.
class CMatrix {
 public:
  CMatrix(Interval row_interval, Interval col_interval, Vector weights,
          std::vector<ChebSeries> row_funs, std::vector<ChebSeries> col_funs,
          bool orthonormalized);

  static CMatrix zero(Interval row_interval, Interval col_interval);

  const Interval& row_interval() const noexcept { return row_interval_; }
  const Interval& col_interval() const noexcept { return col_interval_; }
  std::size_t rank() const noexcept {
    return static_cast<std::size_t>(weights_.size());
  }
  const Vector& weights() const noexcept { return weights_; }
  std::span<const ChebSeries> row_funs() const noexcept { return row_funs_; }
  std::span<const ChebSeries> col_funs() const noexcept { return col_funs_; }
  bool orthonormalized() const noexcept { return orthonormalized_; }

  /// Row/column factors as quasimatrices; requires rank() >= 1.
  QMatrix row_qmatrix() const;
  QMatrix col_qmatrix() const;

  double operator()(double y, double x) const;

 private:
  Interval row_interval_;
  Interval col_interval_;
  Vector weights_;
  std::vector<ChebSeries> row_funs_;
  std::vector<ChebSeries> col_funs_;
  bool orthonormalized_;
};

/// sum_k weights(k) rows_k(y) cols_k(x). Signs of negative weights move
/// into the row factor; zero weights are dropped.
CMatrix cmat_from_separable(const Vector& weights, const QMatrix& rows,
                            const QMatrix& cols);

/// Orthonormalized form: QR of both factors, dense SVD of the small core.
CMatrix cmat_svd(const CMatrix& C);

/// C^+ = V diag(1/sigma) U^T over singular values above rank_tol * sigma_1.
CMatrix cmat_pinv(const CMatrix& C, double rank_tol = kDefaultRankTol);

CMatrix transpose(const CMatrix& C);
/// A + beta * B.
CMatrix cmat_add(const CMatrix& A, const CMatrix& B, double beta = 1.0);
CMatrix cmat_scale(const CMatrix& C, double alpha);
/// A B, contracting A's column interval against B's row interval.
CMatrix cmat_mul(const CMatrix& A, const CMatrix& B);

/// C R for R on C's column interval: an [a,b] x m quasimatrix.
QMatrix cmat_apply_right(const CMatrix& C, const QMatrix& R);

/// Row quasimatrix coef * basis^T (m rows indexed by the column interval).
struct RowQMatrix {
  Matrix coef;                     // m x k
  std::vector<ChebSeries> basis;   // k functions
  Interval interval;

  /// Transpose as an [c,d] x m column quasimatrix.
  QMatrix transposed() const;
};

/// Q^T C for Q on C's row interval.
RowQMatrix cmat_apply_left(const QMatrix& Q, const CMatrix& C);

struct Norms {
  double op2;
  double frobenius;
};

Norms norms(const QMatrix& Q);
Norms norms(const CMatrix& C);

// Cross approximation -------------------------------------------------------

/// Samples a bivariate function on the tensor grid ys x xs; result(i, j) is
/// f(ys[i], xs[j]).
using GridSampler = std::function<Matrix(std::span<const double> ys,
                                         std::span<const double> xs)>;
using BivariateFunction = std::function<double(double y, double x)>;

inline constexpr std::size_t kMaxCrossRank = 200;
inline constexpr int kMaxCrossLog2Points = 11;
inline constexpr std::size_t kCrossVerifyPoints = 33;

struct CrossStats {
  std::size_t grid_points = 0;  // per dimension, final grid
  std::size_t rank = 0;
  std::size_t samples = 0;      // total function samples drawn
  double verify_error = 0.0;    // max abs error on the verification grid
  double verify_scale = 0.0;    // max |f| seen
};

/// Gaussian elimination with complete pivoting on Chebyshev tensor grids of
/// 2^k+1 points (k = 4, 5, ...), stopping when the pivot falls below
/// tol * first pivot. The grid is refined until the sampled function is
/// resolved in both directions and the result passes a 33 x 33 check.
/// Throws NonResolved past rank 200 or the largest grid.
CMatrix cmat_build_cross(const GridSampler& f, const Interval& rows,
                         const Interval& cols, double tol,
                         CrossStats* stats = nullptr);
CMatrix cmat_build_cross(const BivariateFunction& f, const Interval& rows,
                         const Interval& cols, double tol,
                         CrossStats* stats = nullptr);

}  // namespace npspec::qc
