#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "npspec/chebcore.hpp"
#include "npspec/kde.hpp"
#include "npspec/qcmatrix.hpp"

namespace npspec::spectral {

using cheb::ChebSeries;
using qc::Matrix;
using qc::Vector;

/// Observation triples (x1, x2, x3), stored row-major.
struct TripleSet {
  std::vector<double> rows;

  std::size_t size() const noexcept { return rows.size() / 3; }
  double at(std::size_t j, int coord) const { return rows[3 * j + static_cast<std::size_t>(coord)]; }
};

/// Sliding window of length 3 over each sequence, concatenated.
/// Throws TooShort for any sequence shorter than 3.
TripleSet make_triples(const std::vector<std::vector<double>>& sequences);

/// Parameters b1, binf and a factored B(x):
///
///   B(x) = scale * B_left * diag(d(x)) * B_right
///
/// For a learned representation d_j(x) = K((x - centers[j]) / h) over the
/// distinct training triples. An oracle representation built from a known
/// model stores its emission quasimatrix instead and uses d(x) = O(x).
struct ObservableRep {
  std::size_t m = 0;
  Vector b1;
  Vector binf;
  Matrix B_left;   // m x K
  Matrix B_right;  // K x m
  std::vector<double> centers;
  kde::KernelSpec kernel;
  double scale = 1.0;
  std::optional<qc::QMatrix> emissions;
  std::vector<ChebSeries> U;  // leading left singular functions of P21

  // Diagnostics recorded at build time.
  std::size_t n_triples = 0;
  Vector sigma;          // leading m singular values of P21
  double h1 = 0.0, h21 = 0.0, h321 = 0.0;
  double mass = 0.0;     // binf^T b1

  /// d(x), length K. Throws OutOfDomain outside [0, 1].
  Vector diagonal(double x) const;
  qc::QMatrix u_matrix() const { return qc::QMatrix(cheb::unit_interval(), U); }
};

struct LearnConfig {
  /// Fixed bandwidths; unset entries are chosen by cross-validation.
  std::optional<double> h1, h21, h321;
  /// Cross-validation grids; empty means the default geometric grid.
  std::vector<double> grid1, grid21, grid321;
  int folds = kde::kDefaultFolds;
  /// Cross approximation tolerance for P21.
  double tol = 1e-10;
  kde::KernelSpec kernel = kde::KernelSpec::gaussian(1.0);
};

/// Learns the representation from triples with m hidden states.
ObservableRep learn(const TripleSet& data, std::size_t m, const LearnConfig& cfg = {});

/// B(x) v in O(mK).
Vector b_apply(const ObservableRep& rep, double x, const Vector& v);
/// Dense m x m B(x).
Matrix b_matrix(const ObservableRep& rep, double x);

/// binf^T B(x_t) ... B(x_1) b1, truncated at 0.
double joint_density(const ObservableRep& rep, std::span<const double> seq);

struct InternalState {
  Vector b;
  std::size_t t = 1;
};

InternalState init_state(const ObservableRep& rep);
/// Normalized update. Throws DegenerateState when |binf^T B(x) b| <= 1e-300.
InternalState update_state(const ObservableRep& rep, const InternalState& s, double x);
/// The normalizer binf^T B(x) b of the update above.
double update_normalizer(const ObservableRep& rep, const InternalState& s, double x);

/// max(0, binf^T B(x) b).
double conditional_density(const ObservableRep& rep, const InternalState& s, double x);

/// x -> binf^T B(x) b as a series on [0,1], before truncation.
ChebSeries conditional_series(const ObservableRep& rep, const InternalState& s);

enum class PredictMethod { Mean, Mode };

/// Mean or mode of the one-step conditional after filtering `history`,
/// with the conditional truncated at 0 and renormalized on [0,1].
double predict_next(const ObservableRep& rep, std::span<const double> history,
                    PredictMethod method = PredictMethod::Mean);

/// Builds one-step conditionals for many states of one representation.
/// For kernel representations the bump values on a fixed Chebyshev grid
/// are computed once, so each conditional costs one matrix-vector product.
class Predictor {
 public:
  explicit Predictor(const ObservableRep& rep);

  /// x -> binf^T B(x) b on [0,1], before truncation.
  ChebSeries conditional(const InternalState& s) const;
  double predict(const InternalState& s, PredictMethod method) const;

 private:
  const ObservableRep* rep_;
  Vector row_;       // scale * binf^T B_left
  std::size_t grid_ = 0;
  Matrix bumps_;     // grid_ x K, empty when too large to cache
};

/// Mean of max(0, g) / integral of max(0, g) over g's interval.
double truncated_mean(const ChebSeries& g);
/// g truncated at 0 and renormalized, evaluated at the 257-point
/// Clenshaw-Curtis grid of [0, 1].
std::vector<double> truncated_density_on_grid(const ChebSeries& g, std::size_t n = 257);

// Serialization: versioned text, 17 significant digits, bit-exact round trip.
void save(std::ostream& os, const ObservableRep& rep);
ObservableRep load_rep(std::istream& is);

}  // namespace npspec::spectral
