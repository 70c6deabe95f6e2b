#include "npspec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "npspec/errors.hpp"

namespace npspec::spectral {
namespace {

const cheb::Interval kUnit(0.0, 1.0);
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
// Learned representations keep exactly m directions; anything below this
// fraction of sigma_1 counts as rank deficient.
constexpr double kRankFloor = 1e-10;
constexpr double kStateFloor = 1e-300;
// Largest cached bump table, in entries.
constexpr std::size_t kMaxBumpCache = std::size_t{1} << 23;
// Quadrature grid for conditionals that dip below zero.
constexpr std::size_t kTruncatedGrid = 4097;

double check_unit(double x) {
  if (!(x >= -cheb::kClampWindow && x <= 1.0 + cheb::kClampWindow)) {
    std::ostringstream msg;
    msg << "observation " << x << " outside [0, 1]";
    raise(ErrorKind::OutOfDomain, msg.str());
  }
  return std::clamp(x, 0.0, 1.0);
}

std::vector<double> column(const TripleSet& d, int coord) {
  std::vector<double> out(d.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = d.at(j, coord);
  return out;
}

double choose(const std::optional<double>& fixed, std::span<const double> samples,
              int dim, const std::vector<double>& grid, std::size_t n,
              const LearnConfig& cfg) {
  if (fixed) {
    if (!(*fixed > 0.0)) raise(ErrorKind::Validation, "bandwidth must be positive");
    return *fixed;
  }
  const auto g = grid.empty() ? kde::default_bandwidth_grid(n, dim) : grid;
  return kde::select_bandwidth(samples, dim, g, cfg.folds, cfg.kernel);
}

}  // namespace

TripleSet make_triples(const std::vector<std::vector<double>>& sequences) {
  TripleSet out;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& s = sequences[i];
    if (s.size() < 3) {
      std::ostringstream msg;
      msg << "sequence " << i + 1 << " has length " << s.size() << " < 3";
      raise(ErrorKind::TooShort, msg.str());
    }
    for (std::size_t t = 0; t + 2 < s.size(); ++t) {
      out.rows.insert(out.rows.end(), {s[t], s[t + 1], s[t + 2]});
    }
  }
  return out;
}

Vector ObservableRep::diagonal(double x) const {
  x = check_unit(x);
  if (emissions) return emissions->row(x);
  Vector d(static_cast<Eigen::Index>(centers.size()));
  const double h = kernel.bandwidth;
  if (kernel.kind == kde::KernelKind::Gaussian) {
    const double inv2h2 = 0.5 / (h * h);
    for (std::size_t j = 0; j < centers.size(); ++j) {
      const double t = x - centers[j];
      d(static_cast<Eigen::Index>(j)) = kInvSqrt2Pi * std::exp(-t * t * inv2h2);
    }
  } else {
    for (std::size_t j = 0; j < centers.size(); ++j) {
      d(static_cast<Eigen::Index>(j)) = kde::kernel_eval(kernel, (x - centers[j]) / h);
    }
  }
  return d;
}

ObservableRep learn(const TripleSet& data, std::size_t m, const LearnConfig& cfg) {
  if (m < 1) raise(ErrorKind::Validation, "m must be >= 1");
  const std::size_t n = data.size();
  if (n == 0) raise(ErrorKind::EmptyInput, "no triples");
  if (n < m) {
    std::ostringstream msg;
    msg << n << " triples for m = " << m << " states";
    raise(ErrorKind::Validation, msg.str());
  }
  if (cfg.kernel.kind != kde::KernelKind::Gaussian) {
    raise(ErrorKind::Validation, "learning needs the Gaussian kernel");
  }
  if (!(cfg.tol > 0.0 && cfg.tol <= 1e-3)) raise(ErrorKind::Validation, "tol must lie in (0, 1e-3]");

  const auto x1 = column(data, 0);
  std::vector<double> pairs(2 * n);
  for (std::size_t j = 0; j < n; ++j) {
    pairs[2 * j] = data.at(j, 1);
    pairs[2 * j + 1] = data.at(j, 0);
  }

  ObservableRep rep;
  rep.m = m;
  rep.n_triples = n;
  rep.h1 = choose(cfg.h1, x1, 1, cfg.grid1, n, cfg);
  rep.h21 = choose(cfg.h21, pairs, 2, cfg.grid21, n, cfg);
  rep.h321 = choose(cfg.h321, data.rows, 3, cfg.grid321, n, cfg);

  const auto P1 = kde::kde1_to_fun(kde::KDEEstimate(1, x1, cfg.kernel.with_bandwidth(rep.h1)));
  const auto P21 = qc::cmat_svd(kde::kde2_to_cmatrix(
      kde::KDEEstimate(2, pairs, cfg.kernel.with_bandwidth(rep.h21)), cfg.tol));

  const auto r = static_cast<Eigen::Index>(m);
  if (P21.rank() < m || !(P21.weights()(r - 1) > kRankFloor * P21.weights()(0))) {
    std::ostringstream msg;
    msg << "P21 has numerical rank " << P21.rank() << " below m = " << m;
    if (P21.rank() >= m) msg << " (sigma_m / sigma_1 = " << P21.weights()(r - 1) / P21.weights()(0) << ")";
    raise(ErrorKind::RankDeficient, msg.str());
  }
  rep.sigma = P21.weights().head(r);
  rep.U.assign(P21.row_funs().begin(), P21.row_funs().begin() + r);
  const qc::QMatrix U = rep.u_matrix();

  rep.b1 = qc::gram(U, qc::QMatrix(kUnit, {P1})).col(0);
  // (P21^T U) as an m-column quasimatrix; its pseudoinverse keeps m directions.
  const qc::QMatrix Q = qc::cmat_apply_left(U, P21).transposed();
  const auto pinv = qc::qmat_pinv(Q, 0.5 * kRankFloor);
  if (pinv.rank() != m) raise(ErrorKind::RankDeficient, "U^T P21 lost rank");
  rep.binf = pinv.apply(P1);
  const qc::QMatrix W = pinv.transposed();

  const kde::KDEEstimate e3(3, data.rows, cfg.kernel.with_bandwidth(rep.h321));
  rep.B_left = kde::kde_partial_inner(e3, U.columns(), 3).transpose();
  rep.B_right = kde::kde_partial_inner(e3, W.columns(), 1);
  const auto counts = e3.counts();
  for (std::size_t j = 0; j < counts.size(); ++j) {
    rep.B_right.row(static_cast<Eigen::Index>(j)) *= counts[j];
  }
  rep.centers = e3.center_coords(1);
  rep.kernel = e3.kernel();
  rep.scale = 1.0 / (static_cast<double>(n) * rep.h321);
  rep.mass = rep.binf.dot(rep.b1);
  return rep;
}

Vector b_apply(const ObservableRep& rep, double x, const Vector& v) {
  if (v.size() != static_cast<Eigen::Index>(rep.m)) {
    raise(ErrorKind::ShapeMismatch, "state length differs from m");
  }
  const Vector d = rep.diagonal(x);
  const Vector inner = d.cwiseProduct(rep.B_right * v);
  return rep.scale * (rep.B_left * inner);
}

Matrix b_matrix(const ObservableRep& rep, double x) {
  const Vector d = rep.diagonal(x);
  return rep.scale * rep.B_left * d.asDiagonal() * rep.B_right;
}

double joint_density(const ObservableRep& rep, std::span<const double> seq) {
  if (seq.empty()) raise(ErrorKind::EmptyInput, "empty sequence");
  Vector v = rep.b1;
  for (double x : seq) v = b_apply(rep, x, v);
  return std::max(0.0, rep.binf.dot(v));
}

InternalState init_state(const ObservableRep& rep) { return InternalState{rep.b1, 1}; }

double update_normalizer(const ObservableRep& rep, const InternalState& s, double x) {
  return rep.binf.dot(b_apply(rep, x, s.b));
}

InternalState update_state(const ObservableRep& rep, const InternalState& s, double x) {
  const Vector v = b_apply(rep, x, s.b);
  const double den = rep.binf.dot(v);
  if (!(std::abs(den) > kStateFloor)) {
    std::ostringstream msg;
    msg << "normalizer " << den << " at observation " << x << " (t = " << s.t << ")";
    raise(ErrorKind::DegenerateState, msg.str());
  }
  return InternalState{v / den, s.t + 1};
}

double conditional_density(const ObservableRep& rep, const InternalState& s, double x) {
  return std::max(0.0, update_normalizer(rep, s, x));
}

// Predictor -----------------------------------------------------------------

Predictor::Predictor(const ObservableRep& rep) : rep_(&rep) {
  row_ = rep.scale * (rep.binf.transpose() * rep.B_left).transpose();
  if (rep.emissions) return;
  // Grid size from the hardest bump, centered mid-interval.
  const auto& k = rep.kernel;
  const auto ref = cheb::build(
      [&k](double x) { return kde::kernel_eval(k, (x - 0.5) / k.bandwidth); }, kUnit,
      1e-13, 4);
  const std::size_t need = ref.degree() + ref.degree() / 4 + 8;
  grid_ = 17;
  while (grid_ - 1 < need) grid_ = 2 * (grid_ - 1) + 1;
  if (grid_ * rep.centers.size() <= kMaxBumpCache) {
    const auto x = cheb::points(grid_, kUnit);
    // bump_matrix carries the 1/h of a density; d(x) does not.
    bumps_ = kde::bump_matrix(k, x, rep.centers) * k.bandwidth;
  }
}

ChebSeries Predictor::conditional(const InternalState& s) const {
  const ObservableRep& rep = *rep_;
  const Vector c = row_.cwiseProduct(rep.B_right * s.b);
  if (rep.emissions) {
    std::vector<double> a(c.data(), c.data() + c.size());
    return cheb::combine(a, rep.emissions->columns());
  }
  std::vector<double> vals(grid_);
  if (bumps_.size() > 0) {
    const Vector v = bumps_ * c;
    std::copy(v.data(), v.data() + v.size(), vals.begin());
  } else {
    const auto x = cheb::points(grid_, kUnit);
    for (std::size_t i = 0; i < grid_; ++i) vals[i] = c.dot(rep.diagonal(x[i]));
  }
  return cheb::from_values(vals, kUnit, 1e-14);
}

double truncated_mean(const ChebSeries& g) {
  const auto& I = g.interval();
  const std::size_t probe = std::max<std::size_t>(4 * g.degree() + 17, 257);
  const auto vals = cheb::values_on_grid(g, probe);
  if (*std::min_element(vals.begin(), vals.end()) >= 0.0) {
    const double mass = cheb::integrate(g);
    if (!(mass > 0.0)) raise(ErrorKind::DegenerateState, "conditional has no mass");
    return cheb::integrate(cheb::multiply(g, ChebSeries::identity(I))) / mass;
  }
  // Kinks at the zero crossings: plain quadrature on a fine grid.
  const std::size_t n = std::max(kTruncatedGrid, 2 * g.degree() + 1);
  const auto x = cheb::points(n, I);
  const auto w = cheb::cc_weights(n, I);
  const auto v = cheb::values_on_grid(g, n);
  double mass = 0.0, first = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::max(0.0, v[i]);
    mass += w[i] * p;
    first += w[i] * p * x[i];
  }
  if (!(mass > 0.0)) raise(ErrorKind::DegenerateState, "conditional has no mass");
  return first / mass;
}

std::vector<double> truncated_density_on_grid(const ChebSeries& g, std::size_t n) {
  const auto w = cheb::cc_weights(n, g.interval());
  std::vector<double> v;
  if (n > g.degree()) {
    v = cheb::values_on_grid(g, n);
  } else {
    v = cheb::points(n, g.interval());
    for (double& x : v) x = g(x);
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = std::max(0.0, v[i]);
    mass += w[i] * v[i];
  }
  if (!(mass > 0.0)) raise(ErrorKind::DegenerateState, "conditional has no mass");
  for (double& x : v) x /= mass;
  return v;
}

double Predictor::predict(const InternalState& s, PredictMethod method) const {
  const ChebSeries g = conditional(s);
  if (method == PredictMethod::Mode) {
    const auto best = cheb::argmax(g);
    if (!(best.value > 0.0)) raise(ErrorKind::DegenerateState, "conditional has no mass");
    return best.x;
  }
  return truncated_mean(g);
}

ChebSeries conditional_series(const ObservableRep& rep, const InternalState& s) {
  return Predictor(rep).conditional(s);
}

double predict_next(const ObservableRep& rep, std::span<const double> history,
                    PredictMethod method) {
  if (history.empty()) raise(ErrorKind::EmptyInput, "empty history");
  InternalState s = init_state(rep);
  for (double x : history) s = update_state(rep, s, x);
  return Predictor(rep).predict(s, method);
}

}  // namespace npspec::spectral
