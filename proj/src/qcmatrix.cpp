#include "npspec/qcmatrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "npspec/errors.hpp"
#include "qgrid.hpp"

namespace npspec::qc {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Dependent-column threshold for Gram-Schmidt, relative to the column norm.
constexpr double kDependentRel = 1e-13;

void require_same(const Interval& a, const Interval& b, const char* op) {
  if (!(a == b)) {
    std::ostringstream msg;
    msg << op << ": interval [" << a.lo() << ", " << a.hi() << "] vs ["
        << b.lo() << ", " << b.hi() << "]";
    raise(ErrorKind::DomainMismatch, msg.str());
  }
}

// Weighted Chebyshev polynomial T_j on the grid, for orthonormal completion.
Vector weighted_basis(std::size_t j, std::span<const double> t_unit,
                      const Vector& sqrt_w) {
  Vector v(sqrt_w.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double t = std::clamp(t_unit[i], -1.0, 1.0);
    v(i) = sqrt_w(i) * std::cos(static_cast<double>(j) * std::acos(t));
  }
  return v;
}

void orthogonalize(Vector& v, const Matrix& Qy, Eigen::Index count,
                   Eigen::Ref<Vector> coeffs) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < count; ++j) {
      const double r = Qy.col(j).dot(v);
      v -= r * Qy.col(j);
      coeffs(j) += r;
    }
  }
}

}  // namespace

namespace detail {

Matrix grid_values(std::span<const ChebSeries> cols, std::size_t n_points) {
  Matrix V(static_cast<Eigen::Index>(n_points),
           static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const auto v = cheb::values_on_grid(cols[j], n_points);
    V.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return V;
}

std::vector<ChebSeries> from_grid(const Matrix& V, const Interval& interval,
                                  std::size_t max_degree) {
  std::vector<ChebSeries> out;
  out.reserve(static_cast<std::size_t>(V.cols()));
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    std::vector<double> vals(V.col(j).data(), V.col(j).data() + V.rows());
    auto c = cheb::coeffs_from_values(vals);
    if (c.size() > max_degree + 1) c.resize(max_degree + 1);
    double cmax = 0.0;
    for (double x : c) cmax = std::max(cmax, std::abs(x));
    std::size_t keep = c.size();
    while (keep > 1 && std::abs(c[keep - 1]) <= 4.0 * kEps * cmax) --keep;
    c.resize(keep);
    out.emplace_back(interval, std::move(c));
  }
  return out;
}

}  // namespace detail

// QMatrix -------------------------------------------------------------------

QMatrix::QMatrix(Interval interval, std::vector<ChebSeries> columns)
    : interval_(interval), columns_(std::move(columns)) {
  if (columns_.empty()) raise(ErrorKind::EmptyInput, "qmatrix needs a column");
  for (const auto& c : columns_) require_same(interval_, c.interval(), "qmatrix");
}

std::size_t QMatrix::max_degree() const noexcept {
  std::size_t d = 0;
  for (const auto& c : columns_) d = std::max(d, c.degree());
  return d;
}

Vector QMatrix::row(double y) const {
  Vector r(static_cast<Eigen::Index>(cols()));
  for (std::size_t j = 0; j < cols(); ++j) {
    r(static_cast<Eigen::Index>(j)) = cheb::eval(columns_[j], y);
  }
  return r;
}

QMatrix QMatrix::slice(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > cols()) {
    raise(ErrorKind::ShapeMismatch, "qmatrix slice out of range");
  }
  return QMatrix(interval_, std::vector<ChebSeries>(
                                columns_.begin() + static_cast<long>(first),
                                columns_.begin() + static_cast<long>(first + count)));
}

Matrix gram(const QMatrix& Q, const QMatrix& P) {
  require_same(Q.interval(), P.interval(), "gram");
  const std::size_t np = Q.max_degree() + P.max_degree() + 1;
  const auto w = cheb::cc_weights(np, Q.interval());
  const Eigen::Map<const Vector> wv(w.data(), static_cast<Eigen::Index>(np));
  const Matrix VQ = detail::grid_values(Q.columns(), np);
  const Matrix VP = detail::grid_values(P.columns(), np);
  return VQ.transpose() * wv.asDiagonal() * VP;
}

QMatrix qmat_mul(const QMatrix& Q, const Matrix& F) {
  if (static_cast<std::size_t>(F.rows()) != Q.cols() || F.cols() < 1) {
    std::ostringstream msg;
    msg << "qmat_mul: " << Q.cols() << " columns vs " << F.rows() << "x"
        << F.cols() << " matrix";
    raise(ErrorKind::ShapeMismatch, msg.str());
  }
  std::vector<ChebSeries> out;
  out.reserve(static_cast<std::size_t>(F.cols()));
  std::vector<double> a(Q.cols());
  for (Eigen::Index j = 0; j < F.cols(); ++j) {
    for (std::size_t i = 0; i < Q.cols(); ++i) {
      a[i] = F(static_cast<Eigen::Index>(i), j);
    }
    out.push_back(cheb::combine(a, Q.columns()));
  }
  return QMatrix(Q.interval(), std::move(out));
}

QR qmat_qr(const QMatrix& Q) {
  const auto m = static_cast<Eigen::Index>(Q.cols());
  const std::size_t deg = std::max(Q.max_degree(), Q.cols() - 1);
  // Products of two columns have degree <= 2*deg; the grid integrates them
  // exactly, so Euclidean MGS on weighted samples is exact function-space MGS.
  const std::size_t np = 2 * deg + 2;
  const auto w = cheb::cc_weights(np, Q.interval());
  Vector sqrt_w(static_cast<Eigen::Index>(np));
  for (std::size_t i = 0; i < np; ++i) sqrt_w(static_cast<Eigen::Index>(i)) = std::sqrt(w[i]);
  const auto x = cheb::points(np, Q.interval());
  std::vector<double> t_unit(np);
  for (std::size_t i = 0; i < np; ++i) t_unit[i] = Q.interval().to_unit(x[i]);

  const Matrix Y = sqrt_w.asDiagonal() * detail::grid_values(Q.columns(), np);
  Matrix Qy = Matrix::Zero(Y.rows(), m);
  Matrix R = Matrix::Zero(m, m);

  for (Eigen::Index k = 0; k < m; ++k) {
    Vector v = Y.col(k);
    const double norm0 = v.norm();
    orthogonalize(v, Qy, k, R.col(k));
    const double nv = v.norm();
    if (nv > kDependentRel * norm0 && nv > 0.0) {
      Qy.col(k) = v / nv;
      R(k, k) = nv;
      continue;
    }
    // Dependent column: R(k, k) stays zero, pick an orthonormal completion.
    R(k, k) = 0.0;
    Vector best;
    double best_ratio = -1.0;
    Vector scratch = Vector::Zero(m);
    for (std::size_t j = 0; j <= deg; ++j) {
      Vector cand = weighted_basis(j, t_unit, sqrt_w);
      const double n0 = cand.norm();
      scratch.setZero();
      orthogonalize(cand, Qy, k, scratch);
      const double ratio = cand.norm() / n0;
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = cand;
      }
      if (ratio > 0.5) break;
    }
    Qy.col(k) = best / best.norm();
  }

  const Matrix values = sqrt_w.cwiseInverse().asDiagonal() * Qy;
  return QR{QMatrix(Q.interval(), detail::from_grid(values, Q.interval(), deg)),
            R};
}

std::size_t QmatSVD::numerical_rank(double rel_tol) const {
  if (sigma.size() == 0 || sigma(0) == 0.0) return 0;
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > rel_tol * sigma(0)) ++r;
  }
  return r;
}

QmatSVD qmat_svd(const QMatrix& Q) {
  auto qr = qmat_qr(Q);
  Eigen::JacobiSVD<Matrix> svd(qr.R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return QmatSVD{qmat_mul(qr.Q, svd.matrixU()), svd.singularValues(),
                 svd.matrixV()};
}

Vector QmatPinv::apply(const ChebSeries& f) const {
  const QMatrix F(f.interval(), {f});
  return (V * inv_sigma.asDiagonal() * gram(U, F)).col(0);
}

Matrix QmatPinv::apply(const QMatrix& P) const {
  return V * inv_sigma.asDiagonal() * gram(U, P);
}

QMatrix QmatPinv::transposed() const {
  return qmat_mul(U, inv_sigma.asDiagonal() * V.transpose());
}

QmatPinv qmat_pinv(const QMatrix& Q, double rank_tol) {
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) {
    raise(ErrorKind::Validation, "rank_tol must lie in (0, 1)");
  }
  const auto svd = qmat_svd(Q);
  const double s1 = svd.sigma(0);
  if (!(s1 > 1e-300)) raise(ErrorKind::ZeroMatrix, "qmatrix is numerically zero");
  Eigen::Index r = 0;
  while (r < svd.sigma.size() && svd.sigma(r) > rank_tol * s1) ++r;
  return QmatPinv{svd.V.leftCols(r), svd.sigma.head(r).cwiseInverse(),
                  svd.U.slice(0, static_cast<std::size_t>(r))};
}

// CMatrix -------------------------------------------------------------------

CMatrix::CMatrix(Interval row_interval, Interval col_interval, Vector weights,
                 std::vector<ChebSeries> row_funs,
                 std::vector<ChebSeries> col_funs, bool orthonormalized)
    : row_interval_(row_interval),
      col_interval_(col_interval),
      weights_(std::move(weights)),
      row_funs_(std::move(row_funs)),
      col_funs_(std::move(col_funs)),
      orthonormalized_(orthonormalized) {
  const auto k = static_cast<std::size_t>(weights_.size());
  if (row_funs_.size() != k || col_funs_.size() != k) {
    raise(ErrorKind::ShapeMismatch, "cmatrix factor counts differ");
  }
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!(weights_(i) > 0.0) || !std::isfinite(weights_(i))) {
      raise(ErrorKind::Validation, "cmatrix weights must be positive");
    }
  }
  for (const auto& f : row_funs_) require_same(row_interval_, f.interval(), "cmatrix rows");
  for (const auto& f : col_funs_) require_same(col_interval_, f.interval(), "cmatrix cols");
}

CMatrix CMatrix::zero(Interval row_interval, Interval col_interval) {
  return CMatrix(row_interval, col_interval, Vector(0), {}, {}, true);
}

QMatrix CMatrix::row_qmatrix() const { return QMatrix(row_interval_, row_funs_); }
QMatrix CMatrix::col_qmatrix() const { return QMatrix(col_interval_, col_funs_); }

double CMatrix::operator()(double y, double x) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < rank(); ++k) {
    acc += weights_(static_cast<Eigen::Index>(k)) * cheb::eval(row_funs_[k], y) *
           cheb::eval(col_funs_[k], x);
  }
  return acc;
}

CMatrix cmat_from_separable(const Vector& weights, const QMatrix& rows,
                            const QMatrix& cols) {
  const auto k = static_cast<std::size_t>(weights.size());
  if (rows.cols() != k || cols.cols() != k) {
    raise(ErrorKind::ShapeMismatch, "cmat_from_separable: counts differ");
  }
  std::vector<double> w;
  std::vector<ChebSeries> r, c;
  for (std::size_t i = 0; i < k; ++i) {
    const double wi = weights(static_cast<Eigen::Index>(i));
    if (!std::isfinite(wi)) raise(ErrorKind::Validation, "non-finite weight");
    if (wi == 0.0) continue;
    const double sign = wi < 0.0 ? -1.0 : 1.0;
    w.push_back(std::abs(wi));
    const double s[1] = {sign};
    r.push_back(sign > 0 ? rows.col(i) : cheb::combine(s, rows.columns().subspan(i, 1)));
    c.push_back(cols.col(i));
  }
  return CMatrix(rows.interval(), cols.interval(),
                 Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())),
                 std::move(r), std::move(c), false);
}

CMatrix cmat_svd(const CMatrix& C) {
  if (C.rank() == 0) return CMatrix::zero(C.row_interval(), C.col_interval());
  // Normalize factors so dependence tests are scale free.
  std::vector<ChebSeries> rows, cols;
  std::vector<double> w;
  for (std::size_t k = 0; k < C.rank(); ++k) {
    const double nr = std::sqrt(cheb::inner(C.row_funs()[k], C.row_funs()[k]));
    const double nc = std::sqrt(cheb::inner(C.col_funs()[k], C.col_funs()[k]));
    const double wk = C.weights()(static_cast<Eigen::Index>(k)) * nr * nc;
    if (!(wk > 0.0)) continue;
    const double sr[1] = {1.0 / nr};
    const double sc[1] = {1.0 / nc};
    rows.push_back(cheb::combine(sr, C.row_funs().subspan(k, 1)));
    cols.push_back(cheb::combine(sc, C.col_funs().subspan(k, 1)));
    w.push_back(wk);
  }
  if (w.empty()) return CMatrix::zero(C.row_interval(), C.col_interval());

  const auto qr_r = qmat_qr(QMatrix(C.row_interval(), std::move(rows)));
  const auto qr_c = qmat_qr(QMatrix(C.col_interval(), std::move(cols)));
  const Eigen::Map<const Vector> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  const Matrix core = qr_r.R * wv.asDiagonal() * qr_c.R.transpose();
  Eigen::JacobiSVD<Matrix> svd(core, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();

  const double drop = 4.0 * kEps * static_cast<double>(w.size()) * s(0);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > drop && s(r) > 0.0) ++r;
  if (r == 0) return CMatrix::zero(C.row_interval(), C.col_interval());

  const QMatrix U = qmat_mul(qr_r.Q, svd.matrixU().leftCols(r));
  const QMatrix V = qmat_mul(qr_c.Q, svd.matrixV().leftCols(r));
  return CMatrix(C.row_interval(), C.col_interval(), s.head(r),
                 std::vector<ChebSeries>(U.columns().begin(), U.columns().end()),
                 std::vector<ChebSeries>(V.columns().begin(), V.columns().end()),
                 true);
}

CMatrix cmat_pinv(const CMatrix& C, double rank_tol) {
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) {
    raise(ErrorKind::Validation, "rank_tol must lie in (0, 1)");
  }
  const CMatrix S = C.orthonormalized() ? C : cmat_svd(C);
  if (S.rank() == 0 || !(S.weights()(0) > 1e-300)) {
    raise(ErrorKind::ZeroMatrix, "cmatrix is numerically zero");
  }
  const double s1 = S.weights()(0);
  std::size_t r = 0;
  while (r < S.rank() && S.weights()(static_cast<Eigen::Index>(r)) > rank_tol * s1) ++r;
  // Reverse so the inverted weights stay non-increasing.
  Vector w(static_cast<Eigen::Index>(r));
  std::vector<ChebSeries> rows, cols;
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t k = r - 1 - i;
    w(static_cast<Eigen::Index>(i)) = 1.0 / S.weights()(static_cast<Eigen::Index>(k));
    rows.push_back(S.col_funs()[k]);
    cols.push_back(S.row_funs()[k]);
  }
  return CMatrix(S.col_interval(), S.row_interval(), w, std::move(rows),
                 std::move(cols), true);
}

CMatrix transpose(const CMatrix& C) {
  return CMatrix(C.col_interval(), C.row_interval(), C.weights(),
                 std::vector<ChebSeries>(C.col_funs().begin(), C.col_funs().end()),
                 std::vector<ChebSeries>(C.row_funs().begin(), C.row_funs().end()),
                 C.orthonormalized());
}

CMatrix cmat_scale(const CMatrix& C, double alpha) {
  if (alpha == 0.0 || C.rank() == 0) {
    return CMatrix::zero(C.row_interval(), C.col_interval());
  }
  std::vector<ChebSeries> rows(C.row_funs().begin(), C.row_funs().end());
  if (alpha < 0.0) {
    const double neg[1] = {-1.0};
    for (auto& r : rows) r = cheb::combine(neg, std::span<const ChebSeries>(&r, 1));
  }
  return CMatrix(C.row_interval(), C.col_interval(), C.weights() * std::abs(alpha),
                 std::move(rows),
                 std::vector<ChebSeries>(C.col_funs().begin(), C.col_funs().end()),
                 C.orthonormalized() && alpha > 0.0);
}

CMatrix cmat_add(const CMatrix& A, const CMatrix& B, double beta) {
  require_same(A.row_interval(), B.row_interval(), "cmat_add rows");
  require_same(A.col_interval(), B.col_interval(), "cmat_add cols");
  const CMatrix Bs = cmat_scale(B, beta);
  Vector w(static_cast<Eigen::Index>(A.rank() + Bs.rank()));
  w << A.weights(), Bs.weights();
  std::vector<ChebSeries> rows(A.row_funs().begin(), A.row_funs().end());
  std::vector<ChebSeries> cols(A.col_funs().begin(), A.col_funs().end());
  rows.insert(rows.end(), Bs.row_funs().begin(), Bs.row_funs().end());
  cols.insert(cols.end(), Bs.col_funs().begin(), Bs.col_funs().end());
  return CMatrix(A.row_interval(), A.col_interval(), w, std::move(rows),
                 std::move(cols), Bs.rank() == 0 && A.orthonormalized());
}

CMatrix cmat_mul(const CMatrix& A, const CMatrix& B) {
  require_same(A.col_interval(), B.row_interval(), "cmat_mul");
  if (A.rank() == 0 || B.rank() == 0) {
    return CMatrix::zero(A.row_interval(), B.col_interval());
  }
  const Matrix core = A.weights().asDiagonal() *
                      gram(A.col_qmatrix(), B.row_qmatrix()) *
                      B.weights().asDiagonal();
  const QMatrix rows = qmat_mul(A.row_qmatrix(), core);
  return cmat_from_separable(Vector::Ones(static_cast<Eigen::Index>(B.rank())),
                             rows, B.col_qmatrix());
}

QMatrix cmat_apply_right(const CMatrix& C, const QMatrix& R) {
  require_same(C.col_interval(), R.interval(), "cmat_apply_right");
  if (C.rank() == 0) {
    return QMatrix(C.row_interval(),
                   std::vector<ChebSeries>(R.cols(), ChebSeries::zero(C.row_interval())));
  }
  const Matrix M = C.weights().asDiagonal() * gram(C.col_qmatrix(), R);
  return qmat_mul(C.row_qmatrix(), M);
}

QMatrix RowQMatrix::transposed() const {
  const auto m = static_cast<std::size_t>(coef.rows());
  if (basis.empty()) {
    return QMatrix(interval, std::vector<ChebSeries>(m, ChebSeries::zero(interval)));
  }
  return qmat_mul(QMatrix(interval, basis), coef.transpose());
}

RowQMatrix cmat_apply_left(const QMatrix& Q, const CMatrix& C) {
  require_same(Q.interval(), C.row_interval(), "cmat_apply_left");
  if (C.rank() == 0) {
    return RowQMatrix{Matrix::Zero(static_cast<Eigen::Index>(Q.cols()), 0), {},
                      C.col_interval()};
  }
  return RowQMatrix{gram(Q, C.row_qmatrix()) * C.weights().asDiagonal(),
                    std::vector<ChebSeries>(C.col_funs().begin(), C.col_funs().end()),
                    C.col_interval()};
}

Norms norms(const QMatrix& Q) {
  const auto svd = qmat_svd(Q);
  return Norms{svd.sigma(0), svd.sigma.norm()};
}

Norms norms(const CMatrix& C) {
  const CMatrix S = C.orthonormalized() ? C : cmat_svd(C);
  if (S.rank() == 0) return Norms{0.0, 0.0};
  return Norms{S.weights()(0), S.weights().norm()};
}

}  // namespace npspec::qc
