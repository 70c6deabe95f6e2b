#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "npspec/chebcore.hpp"
#include "npspec/qcmatrix.hpp"
#include "npspec/spectral.hpp"

namespace npspec::hmm {

using cheb::ChebSeries;
using qc::Matrix;
using qc::Vector;

/// Discrete-state HMM with emission densities on [0, 1].
///   T(i, j) = P(h_{t+1} = i | h_t = j),  pi_i = P(h_1 = i),
///   emissions column j = p(x_t | h_t = j).
struct HMMModel {
  std::size_t m = 0;
  Vector pi;
  Matrix T;
  qc::QMatrix emissions;

  /// Throws Validation when a stochasticity, normalization or rank
  /// requirement fails.
  void validate() const;
};

/// pi replaced by the stationary vector of T (lazy power iteration).
HMMModel make_stationary(const HMMModel& model);

struct SamplePaths {
  std::vector<std::vector<double>> observations;
  std::vector<std::vector<std::size_t>> states;
};

/// n_seqs sequences of length seq_len. Sequence i draws from its own
/// mt19937_64 seeded with splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15),
/// so the output is independent of the thread count.
SamplePaths sample_paths(const HMMModel& model, std::size_t seq_len, std::size_t n_seqs,
                         std::uint64_t seed);
std::vector<std::vector<double>> sample(const HMMModel& model, std::size_t seq_len,
                                        std::size_t n_seqs, std::uint64_t seed);

/// Inverse CDF of one emission density: u in [0, 1] -> x in [0, 1].
class InverseCdf {
 public:
  explicit InverseCdf(const ChebSeries& density);
  double operator()(double u) const;

 private:
  ChebSeries density_;
  ChebSeries cdf_;  // normalized so cdf(1) = 1
};

/// log p(x_1, ..., x_t) by the scaled forward pass; -inf when zero.
double forward_log_joint(const HMMModel& model, std::span<const double> seq);
double forward_joint(const HMMModel& model, std::span<const double> seq);

/// Predictive state distribution P(h_{t+1} | x_{1:t}); pi for an empty
/// history. Throws ZeroProbabilityHistory when log p(history) < -700.
Vector predictive_state(const HMMModel& model, std::span<const double> history);
/// p(x_{t+1} = x | x_{1:t}).
double forward_conditional(const HMMModel& model, std::span<const double> history, double x);
/// The same conditional as a series on [0, 1].
ChebSeries conditional_series(const HMMModel& model, std::span<const double> history);

/// Population moments of the observation process:
///   P1 = O pi,  P21 = O T diag(pi) O^T,  P3x1 = O T diag(O(x)) T diag(pi) O^T.
struct ExactMoments {
  ChebSeries P1;
  qc::CMatrix P21;
  qc::QMatrix O;
  Matrix T;
  Vector pi;

  qc::CMatrix P3x1_at(double x) const;
  /// P321(r, x, t) = sum_{abc} core(a, b, c) O_a(r) O_b(x) O_c(t).
  double P321_core(std::size_t a, std::size_t b, std::size_t c) const;
};

ExactMoments exact_moments(const HMMModel& model);

/// Observable representation from exact moments. B(x) is stored in factored
/// form with d(x) = O(x):
///   B_left = (U^T O) T,  B_right = T diag(pi) O^T W,  W = ((U^T P21)^+)^T.
/// Throws RankDeficient when P21 has fewer than m directions.
spectral::ObservableRep exact_rep(const HMMModel& model);

/// (U^T O) T diag(O(x)) (U^T O)^{-1} with U taken from rep.
Matrix similarity_b_matrix(const HMMModel& model, const spectral::ObservableRep& rep, double x);

enum class SuiteKind { M1, M2, M4, M8 };

SuiteKind parse_suite(const std::string& name);
std::string to_string(SuiteKind kind);
std::size_t state_count(SuiteKind kind);

/// Random model: T with U(0,1) entries and normalized columns, positive pi,
/// emissions as mixtures of polynomial Beta bumps with distinct main modes.
/// Redraws failing candidates; ConstructionFailed after 100 attempts.
HMMModel synthetic_suite(SuiteKind kind, std::uint64_t seed);

void save(std::ostream& os, const HMMModel& model);
HMMModel load_model(std::istream& is);

}  // namespace npspec::hmm
