#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dense_grid.hpp"
#include "npspec/errors.hpp"
#include "npspec/qcmatrix.hpp"

using namespace npspec;
using namespace npspec::qc;

namespace {

const Interval kUnit(0.0, 1.0);

ChebSeries one() { return ChebSeries::constant(kUnit, 1.0); }
ChebSeries ident() { return ChebSeries::identity(kUnit); }

ChebSeries scaled(const ChebSeries& f, double a) {
  const double c[1] = {a};
  return cheb::combine(c, std::span<const ChebSeries>(&f, 1));
}

ChebSeries normalized(const ChebSeries& f) {
  return scaled(f, 1.0 / std::sqrt(cheb::inner(f, f)));
}

ChebSeries random_smooth(std::mt19937_64& rng, const Interval& I,
                         std::size_t degree = 20) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<double> c(degree + 1);
  for (std::size_t k = 0; k <= degree; ++k) c[k] = N(rng) * std::pow(0.6, k);
  return ChebSeries(I, c);
}

std::vector<ChebSeries> random_columns(std::mt19937_64& rng, std::size_t m,
                                       const Interval& I = kUnit) {
  std::vector<ChebSeries> out;
  for (std::size_t j = 0; j < m; ++j) out.push_back(random_smooth(rng, I));
  return out;
}

double frobenius_diff(const QMatrix& A, const QMatrix& B) {
  double acc = 0.0;
  for (std::size_t j = 0; j < A.cols(); ++j) {
    const double c[2] = {1.0, -1.0};
    const ChebSeries pair[2] = {A.col(j), B.col(j)};
    const auto d = cheb::combine(c, pair);
    acc += cheb::inner(d, d);
  }
  return std::sqrt(acc);
}

// Quadrature estimate of ||A - B||_F on a 96 x 96 Chebyshev grid.
double frobenius_diff(const CMatrix& A, const CMatrix& B) {
  const std::size_t n = 96;
  const auto y = cheb::points(n, A.row_interval());
  const auto x = cheb::points(n, A.col_interval());
  const auto wy = cheb::cc_weights(n, A.row_interval());
  const auto wx = cheb::cc_weights(n, A.col_interval());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = A(y[i], x[j]) - B(y[i], x[j]);
      acc += wy[i] * wx[j] * d * d;
    }
  }
  return std::sqrt(std::max(acc, 0.0));
}

double max_gram_deviation(const QMatrix& Q) {
  const Matrix G = gram(Q, Q);
  return (G - Matrix::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

CMatrix random_separable(std::mt19937_64& rng, std::size_t k,
                         const Interval& rows = kUnit,
                         const Interval& cols = kUnit) {
  std::uniform_real_distribution<double> U(0.5, 3.0);
  Vector w(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = U(rng);
  return cmat_from_separable(w, QMatrix(rows, random_columns(rng, k, rows)),
                             QMatrix(cols, random_columns(rng, k, cols)));
}

}  // namespace

// ---------------------------------------------------------------------------
// QMatrix basics
// ---------------------------------------------------------------------------

TEST(QMatrix, RejectsEmptyAndMixedIntervals) {
  EXPECT_THROW(QMatrix(kUnit, {}), Error);
  try {
    QMatrix(kUnit, {one(), ChebSeries::constant(Interval(0.0, 2.0), 1.0)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainMismatch);
  }
}

TEST(Gram, ConstantOnUnit) {
  const QMatrix Q(kUnit, {one()});
  EXPECT_NEAR(gram(Q, Q)(0, 0), 1.0, 1e-15);
}

TEST(Gram, MonomialsAnalytic) {
  const QMatrix Q(kUnit, {one(), ident()});
  const Matrix G = gram(Q, Q);
  EXPECT_NEAR(G(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(G(0, 1), 0.5, 1e-14);
  EXPECT_NEAR(G(1, 0), 0.5, 1e-14);
  EXPECT_NEAR(G(1, 1), 1.0 / 3.0, 1e-14);
}

TEST(Gram, OrthonormalIsIdentity) {
  std::mt19937_64 rng(3);
  const auto qr = qmat_qr(QMatrix(kUnit, random_columns(rng, 5)));
  EXPECT_LE(max_gram_deviation(qr.Q), 1e-12);
}

TEST(Gram, DomainMismatch) {
  const QMatrix A(kUnit, {one()});
  const QMatrix B(Interval(-1.0, 1.0), {ChebSeries::constant(Interval(-1.0, 1.0), 1.0)});
  try {
    gram(A, B);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainMismatch);
  }
}

TEST(Gram, MatchesPairwiseInner) {
  std::mt19937_64 rng(11);
  const QMatrix A(kUnit, random_columns(rng, 3));
  const QMatrix B(kUnit, random_columns(rng, 4));
  const Matrix G = gram(A, B);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_NEAR(G(i, j), cheb::inner(A.col(i), B.col(j)), 1e-12);
    }
  }
}

TEST(QmatMul, IdentityAndSums) {
  std::mt19937_64 rng(5);
  const QMatrix Q(kUnit, random_columns(rng, 2));
  EXPECT_LE(frobenius_diff(qmat_mul(Q, Matrix::Identity(2, 2)), Q), 1e-14);

  Matrix s(2, 1);
  s << 1.0, 1.0;
  const auto S = qmat_mul(Q, s);
  ASSERT_EQ(S.cols(), 1u);
  for (double x : {0.0, 0.3, 0.9}) {
    EXPECT_NEAR(cheb::eval(S.col(0), x),
                cheb::eval(Q.col(0), x) + cheb::eval(Q.col(1), x), 1e-13);
  }

  const QMatrix F(kUnit, {Q.col(0)});
  Matrix two(1, 1);
  two << 2.0;
  const auto D = qmat_mul(F, two);
  EXPECT_NEAR(cheb::eval(D.col(0), 0.4), 2.0 * cheb::eval(Q.col(0), 0.4), 1e-13);
}

TEST(QmatMul, ShapeMismatch) {
  const QMatrix Q(kUnit, {one(), ident()});
  try {
    qmat_mul(Q, Matrix::Identity(3, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

// ---------------------------------------------------------------------------
// QR
// ---------------------------------------------------------------------------

TEST(QmatQR, OrthonormalInputGivesIdentityR) {
  std::mt19937_64 rng(17);
  const auto Q0 = qmat_qr(QMatrix(kUnit, random_columns(rng, 4))).Q;
  const auto qr = qmat_qr(Q0);
  Matrix Rabs = qr.R;
  for (Eigen::Index i = 0; i < Rabs.rows(); ++i) Rabs(i, i) = std::abs(Rabs(i, i));
  EXPECT_LE((Rabs - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(QmatQR, DuplicateColumnHasOneZeroDiagonal) {
  const auto qr = qmat_qr(QMatrix(kUnit, {one(), one()}));
  int zeros = 0;
  for (int i = 0; i < 2; ++i) zeros += std::abs(qr.R(i, i)) <= 1e-10 ? 1 : 0;
  EXPECT_EQ(zeros, 1);
  EXPECT_LE(max_gram_deviation(qr.Q), 1e-10);
  EXPECT_LE(frobenius_diff(qmat_mul(qr.Q, qr.R), QMatrix(kUnit, {one(), one()})),
            1e-10);
}

TEST(QmatQR, HandGramSchmidtOnMonomials) {
  const auto qr = qmat_qr(QMatrix(kUnit, {one(), ident()}));
  EXPECT_NEAR(qr.R(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(qr.R(0, 1), 0.5, 1e-12);
  EXPECT_NEAR(qr.R(1, 1), 1.0 / std::sqrt(12.0), 1e-12);
  EXPECT_NEAR(qr.R(1, 0), 0.0, 0.0);
}

TEST(QmatQR, PropertyReconstructionAndOrthonormality) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + trial % 8;
    const QMatrix Q(kUnit, random_columns(rng, m));
    const auto qr = qmat_qr(Q);
    EXPECT_LE(max_gram_deviation(qr.Q), 1e-10);
    EXPECT_LE(frobenius_diff(qmat_mul(qr.Q, qr.R), Q), 1e-10);
    for (Eigen::Index i = 0; i < qr.R.rows(); ++i) {
      for (Eigen::Index j = 0; j < i; ++j) EXPECT_EQ(qr.R(i, j), 0.0);
    }
  }
}

TEST(QmatQR, RankDeficientMiddleColumn) {
  std::mt19937_64 rng(29);
  auto cols = random_columns(rng, 3);
  const double c[2] = {2.0, -1.0};
  const ChebSeries pair[2] = {cols[0], cols[2]};
  cols.insert(cols.begin() + 1, cheb::combine(c, pair));
  const QMatrix Q(kUnit, cols);
  cols.erase(cols.begin() + 1);
  const auto qr = qmat_qr(Q);
  EXPECT_LE(max_gram_deviation(qr.Q), 1e-10);
  EXPECT_LE(frobenius_diff(qmat_mul(qr.Q, qr.R), Q), 1e-10);
  int zeros = 0;
  for (int i = 0; i < 4; ++i) zeros += std::abs(qr.R(i, i)) <= 1e-10 ? 1 : 0;
  EXPECT_EQ(zeros, 1);
}

TEST(QmatQR, NonUnitInterval) {
  const Interval I(-2.0, 5.0);
  std::mt19937_64 rng(31);
  const QMatrix Q(I, random_columns(rng, 5, I));
  const auto qr = qmat_qr(Q);
  EXPECT_LE(max_gram_deviation(qr.Q), 1e-10);
  EXPECT_LE(frobenius_diff(qmat_mul(qr.Q, qr.R), Q), 1e-10);
}

// ---------------------------------------------------------------------------
// SVD and pseudoinverse
// ---------------------------------------------------------------------------

TEST(QmatSVD, SingleUnitColumn) {
  const auto svd = qmat_svd(QMatrix(kUnit, {one()}));
  ASSERT_EQ(svd.sigma.size(), 1);
  EXPECT_NEAR(svd.sigma(0), 1.0, 1e-14);
}

TEST(QmatSVD, DuplicatedUnitColumn) {
  const auto f = normalized(ident());
  const auto svd = qmat_svd(QMatrix(kUnit, {f, f}));
  EXPECT_NEAR(svd.sigma(0), std::sqrt(2.0), 1e-10);
  EXPECT_NEAR(svd.sigma(1), 0.0, 1e-10);
  EXPECT_EQ(svd.numerical_rank(), 1u);
}

TEST(QmatSVD, OrthonormalThreeColumns) {
  std::mt19937_64 rng(37);
  const auto Q = qmat_qr(QMatrix(kUnit, random_columns(rng, 3))).Q;
  const auto svd = qmat_svd(Q);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(svd.sigma(i), 1.0, 1e-12);
}

TEST(QmatSVD, PropertyReconstructionSortedOrthonormal) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 16; ++trial) {
    const std::size_t m = 1 + trial % 8;
    const QMatrix Q(kUnit, random_columns(rng, m));
    const auto svd = qmat_svd(Q);
    EXPECT_LE(max_gram_deviation(svd.U), 1e-10);
    for (Eigen::Index i = 1; i < svd.sigma.size(); ++i) {
      EXPECT_LE(svd.sigma(i), svd.sigma(i - 1));
    }
    EXPECT_GE(svd.sigma.minCoeff(), 0.0);
    EXPECT_LE((svd.V.transpose() * svd.V - Matrix::Identity(m, m)).cwiseAbs().maxCoeff(),
              1e-12);
    const auto rec = qmat_mul(svd.U, svd.sigma.asDiagonal() * svd.V.transpose());
    EXPECT_LE(frobenius_diff(rec, Q), 1e-10 * svd.sigma(0));
  }
}

TEST(QmatSVD, MatchesDenseGridOracle) {
  std::mt19937_64 rng(43);
  const auto cols = random_columns(rng, 6);
  std::vector<std::function<double(double)>> fs;
  for (const auto& c : cols) fs.push_back([c](double x) { return cheb::eval(c, x); });
  const auto ref = oracle::dense_grid_singular_values(fs, kUnit);
  const auto svd = qmat_svd(QMatrix(kUnit, cols));
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(svd.sigma(i), ref(i), 1e-10 * ref(0));
  }
}

TEST(QmatPinv, UnitColumn) {
  const auto f = normalized(ident());
  const QMatrix Q(kUnit, {f});
  const auto p = qmat_pinv(Q);
  EXPECT_NEAR(p.apply(Q)(0, 0), 1.0, 1e-12);
  const auto g = cheb::build([](double x) { return std::sin(3 * x); }, kUnit);
  EXPECT_NEAR(p.apply(g)(0), cheb::inner(f, g), 1e-12);
}

TEST(QmatPinv, ScaledColumnInvertsSigma) {
  const QMatrix Q(kUnit, {ChebSeries::constant(kUnit, 2.0)});
  const auto p = qmat_pinv(Q);
  ASSERT_EQ(p.rank(), 1u);
  EXPECT_NEAR(p.inv_sigma(0), 0.5, 1e-14);
}

TEST(QmatPinv, RankOneProjector) {
  const auto f = normalized(ident());
  const QMatrix Q(kUnit, {f, f});
  const auto p = qmat_pinv(Q);
  EXPECT_EQ(p.rank(), 1u);
  const Matrix P = p.apply(Q);
  EXPECT_LE((P - Matrix::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(QmatPinv, ZeroMatrixAndBadTolerance) {
  const QMatrix Z(kUnit, {ChebSeries::zero(kUnit)});
  try {
    qmat_pinv(Z);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroMatrix);
  }
  EXPECT_THROW(qmat_pinv(QMatrix(kUnit, {one()}), 0.0), Error);
  EXPECT_THROW(qmat_pinv(QMatrix(kUnit, {one()}), 1.0), Error);
}

TEST(QmatPinv, PropertyLeftInverseAndTranspose) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t m = 1 + trial % 6;
    const QMatrix Q(kUnit, random_columns(rng, m));
    const auto p = qmat_pinv(Q);
    ASSERT_EQ(p.rank(), m);
    EXPECT_LE((p.apply(Q) - Matrix::Identity(m, m)).cwiseAbs().maxCoeff(), 1e-8);
    // (Q^+)^T as a quasimatrix: gram((Q^+)^T, Q) = Q^+ Q.
    const auto Pt = p.transposed();
    EXPECT_LE((gram(Pt, Q) - Matrix::Identity(m, m)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

// ---------------------------------------------------------------------------
// CMatrix
// ---------------------------------------------------------------------------

TEST(CMatrix, SeparableSingleTerm) {
  const auto u = cheb::build([](double y) { return std::cos(y); }, kUnit);
  const auto v = cheb::build([](double x) { return 1.0 + x * x; }, kUnit);
  Vector w(1);
  w << 1.0;
  const auto C = cmat_from_separable(w, QMatrix(kUnit, {u}), QMatrix(kUnit, {v}));
  EXPECT_FALSE(C.orthonormalized());
  EXPECT_NEAR(C(0.3, 0.7), std::cos(0.3) * (1.0 + 0.49), 1e-13);
}

TEST(CMatrix, EmptyTermListIsZero) {
  const auto Z = CMatrix::zero(kUnit, kUnit);
  EXPECT_EQ(Z.rank(), 0u);
  EXPECT_EQ(Z(0.2, 0.4), 0.0);
  const auto n = norms(Z);
  EXPECT_EQ(n.op2, 0.0);
  EXPECT_EQ(n.frobenius, 0.0);
}

TEST(CMatrix, TwoEqualTermsDouble) {
  const auto u = normalized(ident());
  Vector w(2);
  w << 1.0, 1.0;
  const auto C = cmat_from_separable(w, QMatrix(kUnit, {u, u}), QMatrix(kUnit, {u, u}));
  EXPECT_NEAR(C(0.5, 0.8), 2.0 * cheb::eval(u, 0.5) * cheb::eval(u, 0.8), 1e-13);
  const auto S = cmat_svd(C);
  ASSERT_EQ(S.rank(), 1u);
  EXPECT_NEAR(S.weights()(0), 2.0, 1e-12);
}

TEST(CMatrix, NegativeWeightsMoveIntoRows) {
  const auto u = ident();
  Vector w(2);
  w << -2.0, 0.0;
  const auto C = cmat_from_separable(w, QMatrix(kUnit, {u, u}), QMatrix(kUnit, {one(), one()}));
  ASSERT_EQ(C.rank(), 1u);
  EXPECT_GT(C.weights()(0), 0.0);
  EXPECT_NEAR(C(0.25, 0.9), -0.5, 1e-14);
}

TEST(CMatrix, SeparableShapeMismatch) {
  Vector w(2);
  w << 1.0, 1.0;
  try {
    cmat_from_separable(w, QMatrix(kUnit, {one()}), QMatrix(kUnit, {one(), one()}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(CmatSVD, UnitRankOne) {
  const auto u = normalized(ident());
  const auto v = normalized(ChebSeries(kUnit, {0.3, 0.0, 1.0}));
  Vector w(1);
  w << 1.0;
  const auto S = cmat_svd(cmat_from_separable(w, QMatrix(kUnit, {u}), QMatrix(kUnit, {v})));
  ASSERT_EQ(S.rank(), 1u);
  EXPECT_TRUE(S.orthonormalized());
  EXPECT_NEAR(S.weights()(0), 1.0, 1e-13);
  const auto n = norms(S);
  EXPECT_NEAR(n.op2, 1.0, 1e-13);
  EXPECT_NEAR(n.frobenius, 1.0, 1e-13);
}

TEST(CmatSVD, RandomRankThreeMatchesDenseGrid) {
  std::mt19937_64 rng(53);
  const auto C = random_separable(rng, 3);
  const auto S = cmat_svd(C);
  ASSERT_EQ(S.rank(), 3u);
  const auto ref = oracle::dense_grid_singular_values(
      [&C](double y, double x) { return C(y, x); }, kUnit, kUnit);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(S.weights()(i), ref(i), 1e-6 * ref(i));
  }
  EXPECT_LE(ref(3), 1e-10 * ref(0));
}

TEST(CmatSVD, PropertyDenseGridUpToRankTen) {
  std::mt19937_64 rng(59);
  for (std::size_t k : {1u, 4u, 7u, 10u}) {
    const Interval rows(-1.0, 2.0), cols(0.0, 0.5);
    const auto C = random_separable(rng, k, rows, cols);
    const auto S = cmat_svd(C);
    ASSERT_EQ(S.rank(), k);
    const auto ref = oracle::dense_grid_singular_values(
        [&C](double y, double x) { return C(y, x); }, rows, cols);
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_NEAR(S.weights()(i), ref(i), 1e-6 * ref(i)) << "k=" << k;
    }
    EXPECT_LE(max_gram_deviation(S.row_qmatrix()), 1e-10);
    EXPECT_LE(max_gram_deviation(S.col_qmatrix()), 1e-10);
    for (std::size_t i = 1; i < k; ++i) {
      EXPECT_LE(S.weights()(i), S.weights()(i - 1));
    }
    EXPECT_LE(frobenius_diff(S, C), 1e-10 * S.weights()(0));
  }
}

TEST(CmatPinv, RankOneInvertsAndSwaps) {
  const auto u = normalized(ident());
  const auto v = normalized(one());
  Vector w(1);
  w << 2.0;
  const Interval rows(0.0, 2.0);
  const auto ur = normalized(ChebSeries::identity(rows));
  const auto C = cmat_svd(cmat_from_separable(w, QMatrix(rows, {ur}), QMatrix(kUnit, {v})));
  const auto P = cmat_pinv(C);
  ASSERT_EQ(P.rank(), 1u);
  EXPECT_NEAR(P.weights()(0), 0.5, 1e-13);
  EXPECT_EQ(P.row_interval(), kUnit);
  EXPECT_EQ(P.col_interval(), rows);
  EXPECT_NEAR(P(0.3, 1.2), 0.5 * cheb::eval(v, 0.3) * cheb::eval(ur, 1.2), 1e-12);
  (void)u;
}

TEST(CmatPinv, ZeroThrows) {
  try {
    cmat_pinv(CMatrix::zero(kUnit, kUnit));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroMatrix);
  }
}

TEST(CmatPinv, PropertyMoorePenrose) {
  std::mt19937_64 rng(61);
  for (std::size_t k : {1u, 2u, 3u, 5u}) {
    const auto C = random_separable(rng, k);
    const auto P = cmat_pinv(C);
    ASSERT_EQ(P.rank(), k);
    const auto CPC = cmat_mul(cmat_mul(C, P), C);
    const auto PCP = cmat_mul(cmat_mul(P, C), P);
    EXPECT_LE(frobenius_diff(CPC, C), 1e-8) << "k=" << k;
    EXPECT_LE(frobenius_diff(PCP, P), 1e-8) << "k=" << k;
  }
}

TEST(CmatOps, TransposeAddScale) {
  std::mt19937_64 rng(67);
  const auto A = random_separable(rng, 2);
  const auto B = random_separable(rng, 3);
  const auto T = transpose(A);
  EXPECT_NEAR(T(0.2, 0.7), A(0.7, 0.2), 1e-14);
  const auto S = cmat_add(A, B, -0.5);
  EXPECT_NEAR(S(0.4, 0.6), A(0.4, 0.6) - 0.5 * B(0.4, 0.6), 1e-12);
  const auto N = cmat_scale(A, -3.0);
  EXPECT_NEAR(N(0.1, 0.9), -3.0 * A(0.1, 0.9), 1e-12);
  EXPECT_EQ(cmat_scale(A, 0.0).rank(), 0u);
}

TEST(CmatOps, MulMatchesQuadrature) {
  std::mt19937_64 rng(71);
  const auto A = random_separable(rng, 2);
  const auto B = random_separable(rng, 3);
  const auto AB = cmat_mul(A, B);
  const std::size_t n = 64;
  const auto z = cheb::points(n, kUnit);
  const auto wz = cheb::cc_weights(n, kUnit);
  for (double y : {0.1, 0.55}) {
    for (double x : {0.0, 0.8}) {
      double ref = 0.0;
      for (std::size_t i = 0; i < n; ++i) ref += wz[i] * A(y, z[i]) * B(z[i], x);
      EXPECT_NEAR(AB(y, x), ref, 1e-10 * (1.0 + std::abs(ref)));
    }
  }
}

TEST(CmatApply, LeftFactorGivesSigmaTimesV) {
  std::mt19937_64 rng(73);
  const auto S = cmat_svd(random_separable(rng, 3));
  const auto L = cmat_apply_left(S.row_qmatrix(), S);
  const Matrix expected = Matrix(S.weights().asDiagonal());
  EXPECT_LE((L.coef - expected).cwiseAbs().maxCoeff(), 1e-10);
  const auto Lt = L.transposed();
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(cheb::eval(Lt.col(j), 0.37),
                S.weights()(j) * cheb::eval(S.col_funs()[j], 0.37), 1e-10);
  }
}

TEST(CmatApply, RankOneRight) {
  const auto u = normalized(ChebSeries(kUnit, {0.2, 1.0, 0.5}));
  const auto v = normalized(ident());
  Vector w(1);
  w << 1.0;
  const auto C = cmat_from_separable(w, QMatrix(kUnit, {u}), QMatrix(kUnit, {v}));
  const auto R = cmat_apply_right(C, QMatrix(kUnit, {v}));
  ASSERT_EQ(R.cols(), 1u);
  EXPECT_LE(frobenius_diff(R, QMatrix(kUnit, {u})), 1e-13);
}

TEST(CmatApply, ZeroGivesZeroColumns) {
  const auto Z = CMatrix::zero(kUnit, kUnit);
  const auto R = cmat_apply_right(Z, QMatrix(kUnit, {one(), ident()}));
  ASSERT_EQ(R.cols(), 2u);
  EXPECT_TRUE(R.col(0).is_zero());
  EXPECT_TRUE(R.col(1).is_zero());
  const auto L = cmat_apply_left(QMatrix(kUnit, {one()}), Z);
  EXPECT_EQ(L.coef.size(), 0);
  EXPECT_TRUE(L.transposed().col(0).is_zero());
}

TEST(CmatApply, DomainMismatch) {
  const auto Z = CMatrix::zero(kUnit, Interval(0.0, 2.0));
  try {
    cmat_apply_right(Z, QMatrix(kUnit, {one()}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainMismatch);
  }
}

TEST(Norms, ThreeFourFive) {
  const auto f = normalized(one());
  const auto g = normalized(ChebSeries(kUnit, {0.0, 1.0}));
  Vector w(2);
  w << 3.0, 4.0;
  const auto C = cmat_from_separable(w, QMatrix(kUnit, {f, g}), QMatrix(kUnit, {f, g}));
  const auto n = norms(C);
  EXPECT_NEAR(n.op2, 4.0, 1e-12);
  EXPECT_NEAR(n.frobenius, 5.0, 1e-12);
  const auto q = norms(QMatrix(kUnit, {scaled(f, 3.0), scaled(g, 4.0)}));
  EXPECT_NEAR(q.frobenius, 5.0, 1e-12);
}

// ---------------------------------------------------------------------------
// Cross approximation
// ---------------------------------------------------------------------------

TEST(Cross, ConstantIsRankOneUnitWeight) {
  const auto C = cmat_build_cross(BivariateFunction([](double, double) { return 1.0; }),
                                  kUnit, kUnit, 1e-12);
  const auto S = cmat_svd(C);
  ASSERT_EQ(S.rank(), 1u);
  EXPECT_NEAR(S.weights()(0), 1.0, 1e-12);
}

TEST(Cross, ProductIsRankOne) {
  const auto C = cmat_build_cross(BivariateFunction([](double y, double x) { return y * x; }),
                                  kUnit, kUnit, 1e-12);
  EXPECT_EQ(C.rank(), 1u);
  EXPECT_NEAR(C(0.3, 0.7), 0.21, 1e-14);
}

TEST(Cross, ExpProductLowRankAccurate) {
  auto f = [](double y, double x) { return std::exp(y * x); };
  CrossStats st;
  const auto C = cmat_build_cross(BivariateFunction(f), kUnit, kUnit, 1e-10, &st);
  const auto S = cmat_svd(C);
  std::size_t numerical = 0;
  for (std::size_t i = 0; i < S.rank(); ++i) {
    numerical += S.weights()(i) > 1e-10 * S.weights()(0) ? 1 : 0;
  }
  EXPECT_LE(numerical, 8u);
  double err = 0.0;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const double y = i / 100.0, x = (j + 0.37) / 101.0;
      err = std::max(err, std::abs(C(y, x) - f(y, x)));
    }
  }
  EXPECT_LT(err, 1e-8);
  EXPECT_LE(st.verify_error, 10.0 * 1e-10 * st.verify_scale);
  // Singular values agree with the dense-grid oracle.
  const auto ref = oracle::dense_grid_singular_values(f, kUnit, kUnit);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(S.weights()(i), ref(i), 1e-6 * ref(0));
}

TEST(Cross, SharpGaussianRefinesGrid) {
  auto f = [](double y, double x) {
    const double d = (y - x) / 0.03;
    return std::exp(-0.5 * d * d);
  };
  CrossStats st;
  const auto C = cmat_build_cross(BivariateFunction(f), kUnit, kUnit, 1e-9, &st);
  EXPECT_GT(st.grid_points, 65u);
  EXPECT_LE(st.verify_error, 10.0 * 1e-9 * st.verify_scale);
  EXPECT_NEAR(C(0.41, 0.43), f(0.41, 0.43), 1e-7);
}

TEST(Cross, GridSamplerAndZeroFunction) {
  GridSampler zero = [](std::span<const double> ys, std::span<const double> xs) {
    return Matrix(Matrix::Zero(ys.size(), xs.size()));
  };
  EXPECT_EQ(cmat_build_cross(zero, kUnit, kUnit, 1e-10).rank(), 0u);
}

TEST(Cross, RejectsBadToleranceAndNonFinite) {
  auto f = BivariateFunction([](double, double) { return 1.0; });
  EXPECT_THROW(cmat_build_cross(f, kUnit, kUnit, 0.0), Error);
  EXPECT_THROW(cmat_build_cross(f, kUnit, kUnit, 1e-2), Error);
  auto bad = BivariateFunction([](double y, double) { return 1.0 / (y - 0.5); });
  EXPECT_THROW(cmat_build_cross(bad, kUnit, kUnit, 1e-8), Error);
}

TEST(Cross, RankCapThrowsNonResolved) {
  // Nearly white noise cannot be compressed below rank 200.
  GridSampler noise = [](std::span<const double> ys, std::span<const double> xs) {
    Matrix F(ys.size(), xs.size());
    for (std::size_t i = 0; i < ys.size(); ++i) {
      for (std::size_t j = 0; j < xs.size(); ++j) {
        F(i, j) = std::sin(1e4 * ys[i] * ys[i] + 7e3 * xs[j] * (1.0 + ys[i]));
      }
    }
    return F;
  };
  try {
    cmat_build_cross(noise, kUnit, kUnit, 1e-10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonResolved);
  }
}
