#include "npspec/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "npspec/errors.hpp"
#include "npspec/parallel.hpp"

namespace npspec::hmm {
namespace {

const cheb::Interval kUnit(0.0, 1.0);
constexpr double kStochTol = 1e-10;
constexpr double kMassTol = 1e-8;
constexpr double kNegTol = 1e-10;
constexpr double kEmissionRankFloor = 1e-8;
constexpr double kTransitionRankFloor = 1e-12;
constexpr double kLogFloor = -700.0;
constexpr int kSuiteAttempts = 100;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename Probs>
std::size_t categorical(const Probs& p, double u) {
  double acc = 0.0;
  const auto n = static_cast<std::size_t>(p.size());
  for (std::size_t k = 0; k + 1 < n; ++k) {
    acc += p(static_cast<Eigen::Index>(k));
    if (u < acc) return k;
  }
  return n - 1;
}

[[noreturn]] void invalid(const std::string& what) { raise(ErrorKind::Validation, what); }

// Scaled forward pass. Leaves the predictive state in v and returns log p.
double forward(const HMMModel& model, std::span<const double> seq, Vector& v) {
  v = model.pi;
  double logp = 0.0;
  for (double x : seq) {
    const Vector w = model.emissions.row(x).cwiseProduct(v);
    const double s = w.sum();
    if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
    logp += std::log(s);
    v = model.T * (w / s);
  }
  return logp;
}

double beta_pdf(double x, int a, int b) {
  const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  return std::pow(x, a - 1) * std::pow(1.0 - x, b - 1) * std::exp(-lbeta);
}

struct Bump {
  double weight;
  int a, b;
};

// Beta(a, b) with integer shape parameters, mode near mu, a + b = c.
Bump bump_at(double weight, double mu, int c) {
  const int a = std::clamp(1 + static_cast<int>(std::lround(mu * (c - 2))), 1, c - 1);
  return {weight, a, c - a};
}

int concentration(SuiteKind kind) {
  switch (kind) {
    case SuiteKind::M1: return 12;
    case SuiteKind::M2: return 24;
    case SuiteKind::M4: return 40;
    case SuiteKind::M8: return 120;
  }
  return 40;
}

ChebSeries mixture_density(const std::vector<Bump>& bumps) {
  auto f = cheb::build(
      [&bumps](double x) {
        double s = 0.0;
        for (const auto& b : bumps) s += b.weight * beta_pdf(x, b.a, b.b);
        return s;
      },
      kUnit);
  const double mass = cheb::integrate(f);
  std::vector<double> c(f.coeffs().begin(), f.coeffs().end());
  for (double& v : c) v /= mass;
  return ChebSeries(kUnit, std::move(c));
}

HMMModel draw_model(SuiteKind kind, std::mt19937_64& rng) {
  const std::size_t m = state_count(kind);
  const auto n = static_cast<Eigen::Index>(m);
  Matrix T(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) T(i, j) = uniform01(rng);
    T.col(j) /= T.col(j).sum();
  }
  Vector pi(n);
  for (Eigen::Index i = 0; i < n; ++i) pi(i) = 0.2 + 0.8 * uniform01(rng);
  pi /= pi.sum();

  const int c = concentration(kind);
  std::vector<ChebSeries> cols;
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<Bump> bumps;
    const double main_mode =
        (static_cast<double>(k) + 0.5 + 0.4 * (uniform01(rng) - 0.5)) / static_cast<double>(m);
    const double main_weight = 0.55 + 0.25 * uniform01(rng);
    bumps.push_back(bump_at(main_weight, main_mode, c));
    const int extra = uniform01(rng) < 0.5 ? 1 : 2;
    std::vector<double> share(static_cast<std::size_t>(extra));
    for (double& s : share) s = 0.2 + uniform01(rng);
    double total = 0.0;
    for (double s : share) total += s;
    for (double s : share) {
      const double mode = 0.08 + 0.84 * uniform01(rng);
      bumps.push_back(bump_at((1.0 - main_weight) * s / total, mode, std::max(6, c / 2)));
    }
    cols.push_back(mixture_density(bumps));
  }
  return HMMModel{m, pi, T, qc::QMatrix(kUnit, std::move(cols))};
}

}  // namespace

void HMMModel::validate() const {
  const auto n = static_cast<Eigen::Index>(m);
  if (m < 1) invalid("model needs at least one state");
  if (pi.size() != n || T.rows() != n || T.cols() != n || emissions.cols() != m) {
    invalid("model shapes disagree with m");
  }
  if (!(emissions.interval() == kUnit)) invalid("emissions must live on [0, 1]");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(pi(i) > 0.0) || !std::isfinite(pi(i))) invalid("pi must be positive");
  }
  if (std::abs(pi.sum() - 1.0) > kStochTol) invalid("pi must sum to 1");
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(T(i, j) >= 0.0) || !std::isfinite(T(i, j))) invalid("T entries must be >= 0");
    }
    if (std::abs(T.col(j).sum() - 1.0) > kStochTol) invalid("T columns must sum to 1");
  }
  for (std::size_t j = 0; j < m; ++j) {
    const auto& f = emissions.col(j);
    if (std::abs(cheb::integrate(f) - 1.0) > kMassTol) {
      std::ostringstream msg;
      msg << "emission " << j << " integrates to " << cheb::integrate(f);
      invalid(msg.str());
    }
    const auto vals = cheb::values_on_grid(f, std::max<std::size_t>(4 * f.degree() + 17, 257));
    if (*std::min_element(vals.begin(), vals.end()) < -kNegTol) {
      invalid("emission " + std::to_string(j) + " is negative");
    }
  }
  const auto svd = qc::qmat_svd(emissions);
  if (!(svd.sigma(n - 1) > kEmissionRankFloor)) invalid("emissions are rank deficient");
  const Eigen::JacobiSVD<Matrix> tsvd(T);
  if (!(tsvd.singularValues()(n - 1) > kTransitionRankFloor)) invalid("T is rank deficient");
}

HMMModel make_stationary(const HMMModel& model) {
  // Lazy chain (I + T) / 2 has the same stationary vector and no periodicity.
  Vector v = Vector::Constant(model.pi.size(), 1.0 / static_cast<double>(model.m));
  for (int it = 0; it < 1000000; ++it) {
    Vector next = 0.5 * (v + model.T * v);
    next /= next.sum();
    const double delta = (next - v).lpNorm<1>();
    v = next;
    if (delta < 1e-12) break;
  }
  HMMModel out = model;
  out.pi = v;
  return out;
}

InverseCdf::InverseCdf(const ChebSeries& density)
    : density_(density), cdf_(cheb::antiderivative(density)) {
  const double total = cdf_(density_.interval().hi());
  if (!(total > 0.0)) raise(ErrorKind::Validation, "density has no mass");
  std::vector<double> c(cdf_.coeffs().begin(), cdf_.coeffs().end());
  for (double& v : c) v /= total;
  cdf_ = ChebSeries(cdf_.interval(), std::move(c));
  std::vector<double> d(density_.coeffs().begin(), density_.coeffs().end());
  for (double& v : d) v /= total;
  density_ = ChebSeries(density_.interval(), std::move(d));
}

double InverseCdf::operator()(double u) const {
  const auto& I = cdf_.interval();
  double lo = I.lo(), hi = I.hi();
  if (u <= 0.0) return lo;
  if (u >= 1.0) return hi;
  // Bisection to a bracket, then Newton kept inside it.
  for (int i = 0; i < 8; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf_(mid) < u ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double r = cdf_(x) - u;
    if (r == 0.0) return x;
    (r < 0.0 ? lo : hi) = x;
    const double dens = density_(x);
    double next = dens > 0.0 ? x - r / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x)) || hi - lo <= 1e-15) return next;
    x = next;
  }
  return x;
}

SamplePaths sample_paths(const HMMModel& model, std::size_t seq_len, std::size_t n_seqs,
                         std::uint64_t seed) {
  if (seq_len < 1) raise(ErrorKind::Validation, "seq_len must be >= 1");
  std::vector<InverseCdf> inv;
  for (std::size_t k = 0; k < model.m; ++k) inv.emplace_back(model.emissions.col(k));

  SamplePaths out;
  out.observations.assign(n_seqs, std::vector<double>(seq_len));
  out.states.assign(n_seqs, std::vector<std::size_t>(seq_len));
  parallel_for(n_seqs, [&](std::size_t i) {
    std::mt19937_64 rng(splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15ull));
    auto& obs = out.observations[i];
    auto& st = out.states[i];
    std::size_t h = categorical(model.pi, uniform01(rng));
    for (std::size_t t = 0; t < seq_len; ++t) {
      if (t > 0) h = categorical(model.T.col(static_cast<Eigen::Index>(h)), uniform01(rng));
      st[t] = h;
      obs[t] = inv[h](uniform01(rng));
    }
  });
  return out;
}

std::vector<std::vector<double>> sample(const HMMModel& model, std::size_t seq_len,
                                        std::size_t n_seqs, std::uint64_t seed) {
  return sample_paths(model, seq_len, n_seqs, seed).observations;
}

double forward_log_joint(const HMMModel& model, std::span<const double> seq) {
  if (seq.empty()) raise(ErrorKind::EmptyInput, "empty sequence");
  Vector v;
  return forward(model, seq, v);
}

double forward_joint(const HMMModel& model, std::span<const double> seq) {
  return std::exp(forward_log_joint(model, seq));
}

Vector predictive_state(const HMMModel& model, std::span<const double> history) {
  Vector v;
  const double logp = forward(model, history, v);
  if (!(logp >= kLogFloor)) {
    std::ostringstream msg;
    msg << "log p(history) = " << logp;
    raise(ErrorKind::ZeroProbabilityHistory, msg.str());
  }
  return v;
}

double forward_conditional(const HMMModel& model, std::span<const double> history, double x) {
  return model.emissions.row(x).dot(predictive_state(model, history));
}

ChebSeries conditional_series(const HMMModel& model, std::span<const double> history) {
  const Vector v = predictive_state(model, history);
  return cheb::combine(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
                       model.emissions.columns());
}

qc::CMatrix ExactMoments::P3x1_at(double x) const {
  const Matrix core = T * O.row(x).asDiagonal() * T * pi.asDiagonal();
  return qc::cmat_from_separable(Vector::Ones(pi.size()), qc::qmat_mul(O, core), O);
}

double ExactMoments::P321_core(std::size_t a, std::size_t b, std::size_t c) const {
  const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b),
             ic = static_cast<Eigen::Index>(c);
  return T(ia, ib) * T(ib, ic) * pi(ic);
}

ExactMoments exact_moments(const HMMModel& model) {
  const auto& O = model.emissions;
  ChebSeries P1 = cheb::combine(
      std::span<const double>(model.pi.data(), model.m), O.columns());
  const Matrix core = model.T * model.pi.asDiagonal();
  auto P21 = qc::cmat_from_separable(Vector::Ones(model.pi.size()), qc::qmat_mul(O, core), O);
  return ExactMoments{std::move(P1), std::move(P21), O, model.T, model.pi};
}

spectral::ObservableRep exact_rep(const HMMModel& model) {
  const auto mom = exact_moments(model);
  const auto P21 = qc::cmat_svd(mom.P21);
  const std::size_t m = model.m;
  const auto r = static_cast<Eigen::Index>(m);
  if (P21.rank() < m || !(P21.weights()(r - 1) > 1e-10 * P21.weights()(0))) {
    raise(ErrorKind::RankDeficient, "exact P21 has fewer than m directions");
  }
  spectral::ObservableRep rep;
  rep.m = m;
  rep.sigma = P21.weights().head(r);
  rep.U.assign(P21.row_funs().begin(), P21.row_funs().begin() + r);
  const qc::QMatrix U = rep.u_matrix();
  const qc::QMatrix P1(kUnit, {mom.P1});

  rep.b1 = qc::gram(U, P1).col(0);
  const auto pinv = qc::qmat_pinv(qc::cmat_apply_left(U, P21).transposed(), 0.5e-10);
  if (pinv.rank() != m) raise(ErrorKind::RankDeficient, "U^T P21 lost rank");
  rep.binf = pinv.apply(mom.P1);
  const qc::QMatrix W = pinv.transposed();

  const Matrix G = qc::gram(U, model.emissions);
  rep.B_left = G * model.T;
  rep.B_right = model.T * model.pi.asDiagonal() * qc::gram(model.emissions, W);
  rep.emissions = model.emissions;
  rep.scale = 1.0;
  rep.mass = rep.binf.dot(rep.b1);
  return rep;
}

Matrix similarity_b_matrix(const HMMModel& model, const spectral::ObservableRep& rep, double x) {
  const Matrix G = qc::gram(rep.u_matrix(), model.emissions);
  const Matrix left = G * model.T * model.emissions.row(x).asDiagonal();
  // left * G^{-1}
  return G.transpose().partialPivLu().solve(left.transpose()).transpose();
}

SuiteKind parse_suite(const std::string& name) {
  if (name == "m1") return SuiteKind::M1;
  if (name == "m2") return SuiteKind::M2;
  if (name == "m4") return SuiteKind::M4;
  if (name == "m8") return SuiteKind::M8;
  raise(ErrorKind::Validation, "unknown suite '" + name + "' (expected m1, m2, m4 or m8)");
}

std::string to_string(SuiteKind kind) {
  return "m" + std::to_string(state_count(kind));
}

std::size_t state_count(SuiteKind kind) {
  switch (kind) {
    case SuiteKind::M1: return 1;
    case SuiteKind::M2: return 2;
    case SuiteKind::M4: return 4;
    case SuiteKind::M8: return 8;
  }
  return 0;
}

HMMModel synthetic_suite(SuiteKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  for (int attempt = 0; attempt < kSuiteAttempts; ++attempt) {
    HMMModel model = draw_model(kind, rng);
    try {
      model.validate();
      return model;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Validation) throw;
    }
  }
  raise(ErrorKind::ConstructionFailed, "no valid model after 100 attempts");
}

}  // namespace npspec::hmm
