#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "npspec/errors.hpp"
#include "npspec/qcmatrix.hpp"

namespace npspec::qc {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kFactorChopTol = 1e-15;

// Chebyshev coefficients of the tensor interpolant: columns first, then rows.
Matrix coeffs_2d(const Matrix& F) {
  Matrix C(F.rows(), F.cols());
  std::vector<double> buf(static_cast<std::size_t>(F.rows()));
  for (Eigen::Index j = 0; j < F.cols(); ++j) {
    for (Eigen::Index i = 0; i < F.rows(); ++i) buf[static_cast<std::size_t>(i)] = F(i, j);
    const auto c = cheb::coeffs_from_values(buf);
    for (Eigen::Index i = 0; i < F.rows(); ++i) C(i, j) = c[static_cast<std::size_t>(i)];
  }
  buf.resize(static_cast<std::size_t>(F.cols()));
  for (Eigen::Index i = 0; i < C.rows(); ++i) {
    for (Eigen::Index j = 0; j < C.cols(); ++j) buf[static_cast<std::size_t>(j)] = C(i, j);
    const auto c = cheb::coeffs_from_values(buf);
    for (Eigen::Index j = 0; j < C.cols(); ++j) C(i, j) = c[static_cast<std::size_t>(j)];
  }
  return C;
}

// Tail test: the last quarter of coefficients in each direction is small.
bool resolved(const Matrix& F, double tol, double scale) {
  const Matrix C = coeffs_2d(F);
  const double cmax = C.cwiseAbs().maxCoeff();
  const double thr = std::max(tol * cmax, 16.0 * kEps * scale);
  const Eigen::Index n = C.rows();
  const Eigen::Index start = n - std::max<Eigen::Index>(n / 4, 1);
  const double tail_rows = C.bottomRows(n - start).cwiseAbs().maxCoeff();
  const double tail_cols = C.rightCols(n - start).cwiseAbs().maxCoeff();
  return tail_rows <= thr && tail_cols <= thr;
}

std::vector<double> uniform(std::size_t n, const Interval& I) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = I.lo() + I.width() * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  x.back() = I.hi();
  return x;
}

Matrix sample(const GridSampler& f, std::span<const double> ys,
              std::span<const double> xs) {
  Matrix F = f(ys, xs);
  if (F.rows() != static_cast<Eigen::Index>(ys.size()) ||
      F.cols() != static_cast<Eigen::Index>(xs.size())) {
    raise(ErrorKind::ShapeMismatch, "grid sampler returned wrong shape");
  }
  if (!F.allFinite()) raise(ErrorKind::Validation, "function not finite on the rectangle");
  return F;
}

struct Cross {
  std::vector<ChebSeries> rows, cols;
  std::vector<double> weights;
};

Cross eliminate(Matrix E, const Interval& row_iv, const Interval& col_iv,
                double tol) {
  Cross out;
  double first = 0.0;
  for (;;) {
    Eigen::Index pi = 0, pj = 0;
    const double p_abs = E.cwiseAbs().maxCoeff(&pi, &pj);
    if (out.weights.empty()) first = p_abs;
    if (p_abs == 0.0 || p_abs < tol * first) break;
    if (out.weights.size() >= kMaxCrossRank) {
      std::ostringstream msg;
      msg << "cross approximation exceeded rank " << kMaxCrossRank;
      raise(ErrorKind::NonResolved, msg.str());
    }
    const double p = E(pi, pj);
    const Vector col = E.col(pj);
    const Vector row = E.row(pi).transpose();
    E.noalias() -= col * (row.transpose() / p);

    const double sign = p < 0.0 ? -1.0 : 1.0;
    std::vector<double> cv(static_cast<std::size_t>(col.size()));
    for (Eigen::Index i = 0; i < col.size(); ++i) cv[static_cast<std::size_t>(i)] = sign * col(i);
    std::vector<double> rv(row.data(), row.data() + row.size());
    out.rows.push_back(cheb::from_values(cv, row_iv, kFactorChopTol));
    out.cols.push_back(cheb::from_values(rv, col_iv, kFactorChopTol));
    out.weights.push_back(1.0 / std::abs(p));
  }
  return out;
}

}  // namespace

CMatrix cmat_build_cross(const GridSampler& f, const Interval& rows,
                         const Interval& cols, double tol, CrossStats* stats) {
  if (!(tol > 0.0 && tol <= 1e-3)) {
    raise(ErrorKind::Validation, "cross tolerance must lie in (0, 1e-3]");
  }
  CrossStats st;
  const auto yv = uniform(kCrossVerifyPoints, rows);
  const auto xv = uniform(kCrossVerifyPoints, cols);
  const Matrix Fv = sample(f, yv, xv);
  st.samples += static_cast<std::size_t>(Fv.size());
  const double scale_v = Fv.cwiseAbs().maxCoeff();

  for (int k = cheb::kMinLog2Points; k <= kMaxCrossLog2Points; ++k) {
    const std::size_t n = (std::size_t{1} << k) + 1;
    const auto ys = cheb::points(n, rows);
    const auto xs = cheb::points(n, cols);
    Matrix F = sample(f, ys, xs);
    st.samples += static_cast<std::size_t>(F.size());
    st.grid_points = n;
    const double scale = std::max(scale_v, F.cwiseAbs().maxCoeff());
    st.verify_scale = scale;
    if (scale == 0.0) {
      if (stats) *stats = st;
      return CMatrix::zero(rows, cols);
    }
    if (k < kMaxCrossLog2Points && !resolved(F, tol, scale)) continue;

    Cross cr = eliminate(std::move(F), rows, cols, tol);
    const auto r = static_cast<Eigen::Index>(cr.weights.size());
    const Vector w = Eigen::Map<const Vector>(cr.weights.data(), r);
    CMatrix C(rows, cols, w, std::move(cr.rows), std::move(cr.cols), false);

    Matrix Rv(yv.size(), r), Cv(xv.size(), r);
    for (Eigen::Index q = 0; q < r; ++q) {
      for (std::size_t i = 0; i < yv.size(); ++i) {
        Rv(static_cast<Eigen::Index>(i), q) = cheb::eval(C.row_funs()[q], yv[i]);
      }
      for (std::size_t i = 0; i < xv.size(); ++i) {
        Cv(static_cast<Eigen::Index>(i), q) = cheb::eval(C.col_funs()[q], xv[i]);
      }
    }
    const Matrix approx = Rv * w.asDiagonal() * Cv.transpose();
    st.rank = static_cast<std::size_t>(r);
    st.verify_error = (Fv - approx).cwiseAbs().maxCoeff();
    if (st.verify_error <= 10.0 * tol * scale) {
      if (stats) *stats = st;
      return C;
    }
  }
  if (stats) *stats = st;
  std::ostringstream msg;
  msg << "cross approximation unresolved on " << st.grid_points
      << "^2 grid (verify error " << st.verify_error << ")";
  raise(ErrorKind::NonResolved, msg.str());
}

CMatrix cmat_build_cross(const BivariateFunction& f, const Interval& rows,
                         const Interval& cols, double tol, CrossStats* stats) {
  GridSampler g = [&f](std::span<const double> ys, std::span<const double> xs) {
    Matrix F(ys.size(), xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) {
      for (std::size_t i = 0; i < ys.size(); ++i) {
        F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f(ys[i], xs[j]);
      }
    }
    return F;
  };
  return cmat_build_cross(g, rows, cols, tol, stats);
}

}  // namespace npspec::qc
