#include "npspec/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "npspec/errors.hpp"
#include "npspec/parallel.hpp"

namespace npspec::perturbation {
namespace {

const cheb::Interval kUnit(0.0, 1.0);
constexpr double kScales[] = {1e-3, 1e-2, 1e-1};
constexpr std::size_t kMaxRank = 6;
constexpr std::size_t kRandomDirections = 20;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Seed for item `i` of stream `salt`.
std::uint64_t derive(std::uint64_t seed, std::uint64_t salt, std::uint64_t i) {
  return splitmix64(splitmix64(seed ^ (salt * 0xD1B54A32D192ED03ull)) + i);
}

double symmetric01(std::mt19937_64& rng) {
  return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

Vector leading(const CMatrix& S, std::size_t n) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
  const auto k = std::min(n, S.rank());
  out.head(static_cast<Eigen::Index>(k)) = S.weights().head(static_cast<Eigen::Index>(k));
  return out;
}

void require_same_domain(const CMatrix& A, const CMatrix& E) {
  if (!(A.row_interval() == E.row_interval()) || !(A.col_interval() == E.col_interval())) {
    raise(ErrorKind::DomainMismatch, "A and E live on different domains");
  }
}

double sigma_min(const CMatrix& S, std::size_t m) {
  return S.weights()(static_cast<Eigen::Index>(m) - 1);
}

std::size_t rank_of(std::size_t i) { return 1 + i % kMaxRank; }
double scale_of(std::size_t i) { return kScales[(i / kMaxRank) % 3]; }

CMatrixInstance cmatrix_instance(std::size_t i, std::uint64_t seed, std::uint64_t salt,
                                 bool frobenius) {
  const std::size_t r = rank_of(i);
  const double scale = scale_of(i);
  const CMatrix A = random_cmatrix(r, derive(seed, salt, 2 * i));
  const CMatrix E0 = random_cmatrix(1 + i % 3, derive(seed, salt, 2 * i + 1));
  const auto nE = qc::norms(E0);
  const double target = scale * sigma_min(A, r);
  const CMatrix E = qc::cmat_scale(E0, target / (frobenius ? nE.frobenius : nE.op2));
  return CMatrixInstance{r, scale, A, E};
}

}  // namespace

PerturbationReport make_report(double lhs, double rhs) {
  PerturbationReport r;
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.passed = r.slack >= -kSlackTol * std::max(1.0, rhs);
  return r;
}

PerturbationReport weyl_check(const CMatrix& A, const CMatrix& E) {
  require_same_domain(A, E);
  const CMatrix SA = qc::cmat_svd(A);
  const CMatrix ST = qc::cmat_svd(qc::cmat_add(A, E));
  const std::size_t n = std::max(SA.rank(), ST.rank());
  double lhs = 0.0;
  if (n > 0) lhs = (leading(SA, n) - leading(ST, n)).cwiseAbs().maxCoeff();
  return make_report(lhs, qc::norms(E).op2);
}

PerturbationReport wedin_check(const CMatrix& A, const CMatrix& E, std::size_t m,
                               const Vector& x) {
  require_same_domain(A, E);
  if (m < 1) raise(ErrorKind::Validation, "m must be >= 1");
  if (x.size() != static_cast<Eigen::Index>(m)) {
    raise(ErrorKind::ShapeMismatch, "x must have length m");
  }
  const CMatrix SA = qc::cmat_svd(A);
  const CMatrix ST = qc::cmat_svd(qc::cmat_add(A, E));
  for (const CMatrix* S : {&SA, &ST}) {
    if (S->rank() < m || !(sigma_min(*S, m) > 1e-12 * S->weights()(0))) {
      raise(ErrorKind::RankDeficient, "fewer than m singular values");
    }
  }
  const QMatrix U = SA.row_qmatrix().slice(0, m);
  const QMatrix Ut = ST.row_qmatrix().slice(0, m);
  const double measured = (qc::gram(Ut, U) * x).norm();
  const double eL2 = qc::norms(E).frobenius;
  const double st = sigma_min(ST, m);
  const double radicand = 1.0 - 2.0 * eL2 * eL2 / (st * st);
  if (radicand < 0.0) return make_report(0.0, 0.0);
  return make_report(x.norm() * std::sqrt(radicand), measured);
}

PerturbationReport pinv_check(const QMatrix& A, const QMatrix& E) {
  if (!(A.interval() == E.interval()) || A.cols() != E.cols()) {
    raise(ErrorKind::DomainMismatch, "A and E differ in shape");
  }
  std::vector<cheb::ChebSeries> sum;
  for (std::size_t j = 0; j < A.cols(); ++j) {
    const std::vector<cheb::ChebSeries> pair{A.col(j), E.col(j)};
    const double ones[] = {1.0, 1.0};
    sum.push_back(cheb::combine(ones, pair));
  }
  const QMatrix At(A.interval(), std::move(sum));
  const auto PA = qc::qmat_pinv(A);
  const auto PT = qc::qmat_pinv(At);

  // Both pseudoinverses in one orthonormal basis of span(U_A, U_At).
  std::vector<cheb::ChebSeries> joint(PA.U.columns().begin(), PA.U.columns().end());
  joint.insert(joint.end(), PT.U.columns().begin(), PT.U.columns().end());
  const QMatrix Q = qc::qmat_qr(QMatrix(A.interval(), std::move(joint))).Q;
  const Matrix D = PA.V * PA.inv_sigma.asDiagonal() * qc::gram(Q, PA.U).transpose() -
                   PT.V * PT.inv_sigma.asDiagonal() * qc::gram(Q, PT.U).transpose();
  const double lhs = Eigen::JacobiSVD<Matrix>(D).singularValues()(0);
  const double a = PA.inv_sigma.maxCoeff(), at = PT.inv_sigma.maxCoeff();
  const double rhs = 3.0 * std::max(a * a, at * at) * qc::norms(E).op2;
  return make_report(lhs, rhs);
}

cheb::ChebSeries random_function(std::uint64_t seed, std::size_t degree) {
  std::mt19937_64 rng(splitmix64(seed));
  std::vector<double> c(degree + 1);
  for (std::size_t k = 0; k <= degree; ++k) c[k] = symmetric01(rng) * std::pow(0.8, k);
  return cheb::ChebSeries(kUnit, std::move(c));
}

CMatrix random_cmatrix(std::size_t rank, std::uint64_t seed) {
  if (rank < 1) raise(ErrorKind::Validation, "rank must be >= 1");
  std::mt19937_64 rng(splitmix64(seed));
  std::vector<cheb::ChebSeries> rows, cols;
  Vector w(static_cast<Eigen::Index>(rank));
  for (std::size_t k = 0; k < rank; ++k) {
    rows.push_back(random_function(rng()));
    cols.push_back(random_function(rng()));
    w(static_cast<Eigen::Index>(k)) = std::ldexp(1.0 + 0.25 * symmetric01(rng), -static_cast<int>(k));
  }
  return qc::cmat_svd(qc::cmat_from_separable(w, QMatrix(kUnit, rows), QMatrix(kUnit, cols)));
}

QMatrix random_qmatrix(std::size_t cols, std::uint64_t seed) {
  if (cols < 1) raise(ErrorKind::Validation, "column count must be >= 1");
  std::mt19937_64 rng(splitmix64(seed));
  std::vector<cheb::ChebSeries> out;
  for (std::size_t k = 0; k < cols; ++k) out.push_back(random_function(rng()));
  return QMatrix(kUnit, std::move(out));
}

CMatrixInstance weyl_instance(std::size_t i, std::uint64_t seed) {
  return cmatrix_instance(i, seed, 1, false);
}

CMatrixInstance wedin_instance(std::size_t i, std::uint64_t seed) {
  return cmatrix_instance(i, seed, 2, true);
}

QMatrixInstance pinv_instance(std::size_t i, std::uint64_t seed) {
  const std::size_t r = rank_of(i);
  const double scale = scale_of(i);
  const QMatrix A = random_qmatrix(r, derive(seed, 3, 2 * i));
  const QMatrix E0 = random_qmatrix(r, derive(seed, 3, 2 * i + 1));
  const double smin = qc::qmat_svd(A).sigma(static_cast<Eigen::Index>(r) - 1);
  const double f = scale * smin / qc::norms(E0).op2;
  return QMatrixInstance{r, scale, A, qc::qmat_mul(E0, Matrix::Identity(r, r) * f)};
}

std::vector<Vector> wedin_directions(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  const auto n = static_cast<Eigen::Index>(m);
  std::vector<Vector> out;
  for (std::size_t k = 0; k < kRandomDirections; ++k) {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = symmetric01(rng);
    out.push_back(x);
  }
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(Vector::Unit(n, i));
  return out;
}

std::string to_string(Lemma lemma) {
  switch (lemma) {
    case Lemma::Weyl: return "weyl";
    case Lemma::Wedin: return "wedin";
    case Lemma::Pinv: return "pinv";
  }
  return "?";
}

std::size_t SuiteResult::violations() const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [](const SuiteEntry& e) { return !e.report.passed; }));
}

SuiteResult run_suite(Lemma lemma, std::size_t n, std::uint64_t seed) {
  SuiteResult out{lemma, std::vector<SuiteEntry>(n)};
  parallel_for(n, [&](std::size_t i) {
    SuiteEntry& e = out.entries[i];
    e.index = i;
    switch (lemma) {
      case Lemma::Weyl: {
        const auto inst = weyl_instance(i, seed);
        e.rank = inst.rank;
        e.scale = inst.scale;
        e.report = weyl_check(inst.A, inst.E);
        break;
      }
      case Lemma::Wedin: {
        const auto inst = wedin_instance(i, seed);
        e.rank = inst.rank;
        e.scale = inst.scale;
        bool first = true;
        for (const auto& x : wedin_directions(inst.rank, derive(seed, 4, i))) {
          const auto r = wedin_check(inst.A, inst.E, inst.rank, x);
          if (first || r.slack < e.report.slack) e.report = r;
          first = false;
        }
        break;
      }
      case Lemma::Pinv: {
        const auto inst = pinv_instance(i, seed);
        e.rank = inst.rank;
        e.scale = inst.scale;
        e.report = pinv_check(inst.A, inst.E);
        break;
      }
    }
  });
  return out;
}

}  // namespace npspec::perturbation
