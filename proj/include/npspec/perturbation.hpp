#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "npspec/qcmatrix.hpp"

namespace npspec::perturbation {

using qc::CMatrix;
using qc::Matrix;
using qc::QMatrix;
using qc::Vector;

/// One inequality instance lhs <= rhs.
struct PerturbationReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool passed = true;
};

inline constexpr double kSlackTol = 1e-8;

/// passed iff slack >= -1e-8 * max(1, rhs).
PerturbationReport make_report(double lhs, double rhs);

/// max_i |sigma_i(A) - sigma_i(A + E)| against ||E||_2.
PerturbationReport weyl_check(const CMatrix& A, const CMatrix& E);

/// Sine bound for the leading m left singular functions U of A and U~ of
/// A + E, for one coefficient vector x:
///   ||U~^T U x|| >= ||x|| sqrt(1 - 2 ||E||_L2^2 / sigma_m(A + E)^2),
/// with ||E||_L2 the L2 (Frobenius) norm of E. Reported as lhs = the bound,
/// rhs = the measured norm, so slack >= 0 iff the inequality holds. A
/// negative radicand gives the trivial report lhs = rhs = 0.
PerturbationReport wedin_check(const CMatrix& A, const CMatrix& E, std::size_t m,
                               const Vector& x);

/// sigma_1(A^+ - (A + E)^+) against
/// 3 max(sigma_1(A^+)^2, sigma_1((A + E)^+)^2) sigma_1(E).
PerturbationReport pinv_check(const QMatrix& A, const QMatrix& E);

// Randomized suites ----------------------------------------------------------

/// Smooth random series on [0, 1] with decaying Chebyshev coefficients.
cheb::ChebSeries random_function(std::uint64_t seed, std::size_t degree = 16);
/// Random rank-r cmatrix on [0,1] x [0,1] with weights near 2^-k.
CMatrix random_cmatrix(std::size_t rank, std::uint64_t seed);
QMatrix random_qmatrix(std::size_t cols, std::uint64_t seed);

struct CMatrixInstance {
  std::size_t rank;  // rank of A; also m for the sine check
  double scale;      // perturbation size relative to sigma_m(A)
  CMatrix A;
  CMatrix E;
};

struct QMatrixInstance {
  std::size_t rank;
  double scale;
  QMatrix A;
  QMatrix E;
};

/// Instance i cycles rank through 1..6 and scale through {1e-3, 1e-2, 1e-1}.
/// The Weyl instance scales ||E||_2, the sine instance ||E||_L2.
CMatrixInstance weyl_instance(std::size_t i, std::uint64_t seed);
CMatrixInstance wedin_instance(std::size_t i, std::uint64_t seed);
/// Full column rank A; sigma_1(E) = scale * sigma_min(A).
QMatrixInstance pinv_instance(std::size_t i, std::uint64_t seed);

/// 20 random unit-free vectors followed by the m canonical directions.
std::vector<Vector> wedin_directions(std::size_t m, std::uint64_t seed);

enum class Lemma { Weyl, Wedin, Pinv };

std::string to_string(Lemma lemma);

struct SuiteEntry {
  std::size_t index;
  std::size_t rank;
  double scale;
  PerturbationReport report;  // for the sine check, the direction with least slack
};

struct SuiteResult {
  Lemma lemma;
  std::vector<SuiteEntry> entries;
  std::size_t violations() const;
};

/// Runs n instances of one lemma; entries are in index order.
SuiteResult run_suite(Lemma lemma, std::size_t n, std::uint64_t seed);

}  // namespace npspec::perturbation
