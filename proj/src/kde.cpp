#include "npspec/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <sstream>

#include "npspec/errors.hpp"
#include "npspec/parallel.hpp"

namespace npspec::kde {
namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
// Centers per block when forming kernel matrices, to bound memory.
constexpr std::size_t kBlock = 1024;
// Tolerance for the reference bump that fixes the quadrature grid size.
constexpr double kBumpTol = 1e-10;

double legendre_p(int j, double u) {
  if (j == 0) return 1.0;
  double p0 = 1.0, p1 = u;
  for (int k = 1; k < j; ++k) {
    const double p2 = ((2.0 * k + 1.0) * u * p1 - k * p0) / (k + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// P_j(0) for even j: (-1)^(j/2) (j-1)!! / j!!.
double legendre_p_at_zero(int j) {
  double v = 1.0;
  for (int k = 2; k <= j; k += 2) v *= -static_cast<double>(k - 1) / k;
  return v;
}

double legendre_kernel(int beta, double u) {
  if (std::abs(u) > 1.0) return 0.0;
  double acc = 0.0;
  for (int j = 0; j <= beta; j += 2) {
    acc += 0.5 * (2.0 * j + 1.0) * legendre_p_at_zero(j) * legendre_p(j, u);
  }
  return acc;
}

// Highest polynomial degree of the Legendre kernel of order beta.
int legendre_degree(int beta) { return beta - beta % 2; }

double check_unit(double x, const char* what) {
  if (!(x >= -cheb::kClampWindow && x <= 1.0 + cheb::kClampWindow)) {
    std::ostringstream msg;
    msg << what << " " << x << " outside [0, 1]";
    raise(ErrorKind::OutOfDomain, msg.str());
  }
  return std::clamp(x, 0.0, 1.0);
}

void check_dim(int dim) {
  if (dim < 1 || dim > 3) raise(ErrorKind::Validation, "dim must be 1, 2 or 3");
}

const cheb::Interval kUnit(0.0, 1.0);

}  // namespace

void KernelSpec::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    raise(ErrorKind::Validation, "bandwidth must be positive");
  }
  if (kind == KernelKind::Legendre && order < 2) {
    raise(ErrorKind::Validation, "Legendre kernel order must be >= 2");
  }
}

double KernelSpec::support() const {
  return kind == KernelKind::Gaussian ? std::numeric_limits<double>::infinity()
                                      : 1.0;
}

double kernel_eval(const KernelSpec& k, double u) {
  if (k.kind == KernelKind::Gaussian) return kInvSqrt2Pi * std::exp(-0.5 * u * u);
  return legendre_kernel(k.order, u);
}

// KDEEstimate ---------------------------------------------------------------

KDEEstimate::KDEEstimate(int dim, std::span<const double> samples,
                         KernelSpec kernel)
    : dim_(dim), kernel_(kernel) {
  check_dim(dim);
  kernel_.validate();
  const auto d = static_cast<std::size_t>(dim);
  if (samples.empty()) raise(ErrorKind::EmptyInput, "no samples");
  if (samples.size() % d != 0) {
    raise(ErrorKind::ShapeMismatch, "sample buffer is not a multiple of dim");
  }
  n_ = samples.size() / d;
  std::vector<double> s(samples.begin(), samples.end());
  for (double& x : s) x = check_unit(x, "sample");

  std::vector<std::size_t> order(n_);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto tuple_less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(s.begin() + a * d, s.begin() + (a + 1) * d,
                                        s.begin() + b * d, s.begin() + (b + 1) * d);
  };
  std::sort(order.begin(), order.end(), tuple_less);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t a = order[i];
    const bool repeat = i > 0 && std::equal(s.begin() + a * d, s.begin() + (a + 1) * d,
                                            centers_.end() - dim_);
    if (repeat) {
      counts_.back() += 1.0;
    } else {
      centers_.insert(centers_.end(), s.begin() + a * d, s.begin() + (a + 1) * d);
      counts_.push_back(1.0);
    }
  }
}

std::vector<double> KDEEstimate::center_coords(int coord) const {
  std::vector<double> out(centers());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = center(j, coord);
  return out;
}

KDEEstimate KDEEstimate::with_kernel(KernelSpec kernel) const {
  kernel.validate();
  KDEEstimate e = *this;
  e.kernel_ = kernel;
  return e;
}

double density_at(const KDEEstimate& e, std::span<const double> point) {
  const int d = e.dim();
  if (point.size() != static_cast<std::size_t>(d)) {
    raise(ErrorKind::ShapeMismatch, "point dimension differs from estimate");
  }
  double p[3];
  for (int c = 0; c < d; ++c) p[c] = check_unit(point[c], "point");
  const KernelSpec& k = e.kernel();
  const double h = k.bandwidth;
  const auto counts = e.counts();
  double acc = 0.0;
  if (k.kind == KernelKind::Gaussian) {
    const double inv2h2 = 0.5 / (h * h);
    for (std::size_t j = 0; j < counts.size(); ++j) {
      double r2 = 0.0;
      for (int c = 0; c < d; ++c) {
        const double t = p[c] - e.center(j, c);
        r2 += t * t;
      }
      acc += counts[j] * std::exp(-r2 * inv2h2);
    }
    acc *= std::pow(kInvSqrt2Pi, d);
  } else {
    for (std::size_t j = 0; j < counts.size(); ++j) {
      double prod = counts[j];
      for (int c = 0; c < d && prod != 0.0; ++c) {
        prod *= kernel_eval(k, (p[c] - e.center(j, c)) / h);
      }
      acc += prod;
    }
  }
  return acc / (static_cast<double>(e.size()) * std::pow(h, d));
}

Matrix bump_matrix(const KernelSpec& k, std::span<const double> xs,
                   std::span<const double> centers) {
  const double h = k.bandwidth;
  Matrix M(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(centers.size()));
  if (k.kind == KernelKind::Gaussian) {
    const double a = kInvSqrt2Pi / h;
    const double inv2h2 = 0.5 / (h * h);
    for (std::size_t j = 0; j < centers.size(); ++j) {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double t = xs[i] - centers[j];
        M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            a * std::exp(-t * t * inv2h2);
      }
    }
  } else {
    for (std::size_t j = 0; j < centers.size(); ++j) {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            kernel_eval(k, (xs[i] - centers[j]) / h) / h;
      }
    }
  }
  return M;
}

// Bandwidth selection ---------------------------------------------------------

std::vector<double> default_bandwidth_grid(std::size_t n, int dim, int beta,
                                           std::size_t count) {
  check_dim(dim);
  if (n == 0 || count == 0) raise(ErrorKind::Validation, "empty bandwidth grid");
  const double c = std::pow(static_cast<double>(n), -1.0 / (2.0 * beta + dim));
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = c;
    return g;
  }
  const double lo = std::log(0.2 * c), hi = std::log(5.0 * c);
  for (std::size_t i = 0; i < count; ++i) {
    g[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return g;
}

double select_bandwidth(std::span<const double> samples, int dim,
                        std::span<const double> grid, int folds,
                        const KernelSpec& shape) {
  check_dim(dim);
  const auto d = static_cast<std::size_t>(dim);
  if (grid.empty()) raise(ErrorKind::Validation, "bandwidth grid is empty");
  for (double h : grid) {
    if (!(h > 0.0) || !std::isfinite(h)) raise(ErrorKind::Validation, "bandwidths must be positive");
  }
  if (folds < 2) raise(ErrorKind::Validation, "folds must be >= 2");
  if (samples.empty() || samples.size() % d != 0) {
    raise(ErrorKind::ShapeMismatch, "sample buffer is not a multiple of dim");
  }
  const std::size_t n = samples.size() / d;
  if (n < static_cast<std::size_t>(folds)) raise(ErrorKind::Validation, "fewer samples than folds");
  bool identical = true;
  for (std::size_t i = 1; i < n && identical; ++i) {
    identical = std::equal(samples.begin(), samples.begin() + d, samples.begin() + i * d);
  }
  if (identical) raise(ErrorKind::DegenerateData, "all samples identical");
  if (grid.size() == 1) return grid[0];

  const std::size_t G = grid.size();
  const auto F = static_cast<std::size_t>(folds);
  std::vector<double> inv2h2(G), norm(G);
  for (std::size_t g = 0; g < G; ++g) {
    inv2h2[g] = 0.5 / (grid[g] * grid[g]);
    norm[g] = 1.0 / std::pow(grid[g], dim);
  }
  const bool gaussian = shape.kind == KernelKind::Gaussian;

  std::vector<std::vector<double>> scores(F, std::vector<double>(G, 0.0));
  parallel_for(F, [&](std::size_t f) {
    const double n_train = static_cast<double>(n - (n + F - 1 - f) / F);
    std::vector<double> acc(G);
    for (std::size_t t = f; t < n; t += F) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const double* xt = samples.data() + t * d;
      for (std::size_t s = 0; s < n; ++s) {
        if (s % F == f) continue;
        const double* xs = samples.data() + s * d;
        if (gaussian) {
          double r2 = 0.0;
          for (std::size_t c = 0; c < d; ++c) r2 += (xt[c] - xs[c]) * (xt[c] - xs[c]);
          for (std::size_t g = 0; g < G; ++g) acc[g] += std::exp(-r2 * inv2h2[g]);
        } else {
          for (std::size_t g = 0; g < G; ++g) {
            double prod = 1.0;
            for (std::size_t c = 0; c < d && prod != 0.0; ++c) {
              prod *= kernel_eval(shape, (xt[c] - xs[c]) / grid[g]);
            }
            acc[g] += prod;
          }
        }
      }
      const double k0 = gaussian ? std::pow(kInvSqrt2Pi, dim) : 1.0;
      for (std::size_t g = 0; g < G; ++g) {
        const double dens = k0 * acc[g] * norm[g] / n_train;
        scores[f][g] += std::log(std::max(dens, kDensityFloor));
      }
    }
  });

  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < G; ++g) {
    double total = 0.0;
    for (std::size_t f = 0; f < F; ++f) total += scores[f][g];
    total /= static_cast<double>(n);
    if (total > best_score) {
      best_score = total;
      best = g;
    }
  }
  return grid[best];
}

// Chebyshev forms ---------------------------------------------------------------

ChebSeries kde1_to_fun(const KDEEstimate& e, double tol) {
  if (e.dim() != 1) raise(ErrorKind::Validation, "kde1_to_fun needs dim=1");
  // Start on a grid fine enough to see a single bump.
  int min_log2 = cheb::kMinLog2Points;
  while (min_log2 < cheb::kMaxLog2Points &&
         std::ldexp(1.0, min_log2) * e.bandwidth() < 4.0) {
    ++min_log2;
  }
  return cheb::build(
      [&e](double x) { return density_at(e, std::span<const double>(&x, 1)); },
      kUnit, tol, min_log2);
}

qc::CMatrix kde2_to_cmatrix(const KDEEstimate& e, double tol,
                            qc::CrossStats* stats) {
  if (e.dim() != 2) raise(ErrorKind::Validation, "kde2_to_cmatrix needs dim=2");
  const auto c0 = e.center_coords(0);
  const auto c1 = e.center_coords(1);
  const auto counts = e.counts();
  const double s = 1.0 / static_cast<double>(e.size());
  qc::GridSampler sampler = [&](std::span<const double> ys, std::span<const double> xs) {
    Matrix F = Matrix::Zero(static_cast<Eigen::Index>(ys.size()),
                            static_cast<Eigen::Index>(xs.size()));
    for (std::size_t b = 0; b < c0.size(); b += kBlock) {
      const std::size_t len = std::min(kBlock, c0.size() - b);
      const Matrix A = bump_matrix(e.kernel(), ys, std::span(c0).subspan(b, len));
      const Matrix B = bump_matrix(e.kernel(), xs, std::span(c1).subspan(b, len));
      Vector w(static_cast<Eigen::Index>(len));
      for (std::size_t j = 0; j < len; ++j) w(static_cast<Eigen::Index>(j)) = counts[b + j] * s;
      F.noalias() += A * w.asDiagonal() * B.transpose();
    }
    return F;
  };
  return qc::cmat_build_cross(sampler, kUnit, kUnit, tol, stats);
}

Matrix kde_partial_inner(const KDEEstimate& e, std::span<const ChebSeries> gs,
                         int axis) {
  if (axis < 1 || axis > e.dim()) raise(ErrorKind::Validation, "axis out of range");
  if (gs.empty()) raise(ErrorKind::EmptyInput, "no functions to integrate");
  std::size_t max_deg = 0;
  for (const auto& g : gs) {
    if (!(g.interval() == kUnit)) {
      raise(ErrorKind::DomainMismatch, "partial inner needs functions on [0, 1]");
    }
    max_deg = std::max(max_deg, g.degree());
  }
  const KernelSpec& k = e.kernel();
  const double h = k.bandwidth;
  const auto centers = e.center_coords(axis - 1);
  const auto m = static_cast<Eigen::Index>(gs.size());
  Matrix out(static_cast<Eigen::Index>(centers.size()), m);

  if (k.kind == KernelKind::Legendre) {
    // Polynomial on its support: exact quadrature on the clipped support.
    const std::size_t np = max_deg + static_cast<std::size_t>(legendre_degree(k.order)) + 1;
    parallel_for(centers.size(), [&](std::size_t j) {
      const double lo = std::max(0.0, centers[j] - h);
      const double hi = std::min(1.0, centers[j] + h);
      if (!(hi > lo)) {
        out.row(static_cast<Eigen::Index>(j)).setZero();
        return;
      }
      const cheb::Interval I(lo, hi);
      const auto x = cheb::points(np, I);
      const auto w = cheb::cc_weights(np, I);
      for (Eigen::Index q = 0; q < m; ++q) {
        double acc = 0.0;
        for (std::size_t i = 0; i < np; ++i) {
          // Grid nodes lie inside the support; rounding must not push an
          // endpoint node past it.
          const double u = std::clamp((x[i] - centers[j]) / h, -1.0, 1.0);
          acc += w[i] * cheb::eval(gs[static_cast<std::size_t>(q)], x[i]) *
                 legendre_kernel(k.order, u) / h;
        }
        out(static_cast<Eigen::Index>(j), q) = acc;
      }
    });
    return out;
  }

  // The bump centered mid-interval needs the highest degree; every other
  // bump restricted to [0,1] is resolved on the same grid.
  const auto ref = cheb::build(
      [&k](double x) { return kernel_eval(k, (x - 0.5) / k.bandwidth) / k.bandwidth; },
      kUnit, kBumpTol);
  const std::size_t bump_deg = ref.degree() + ref.degree() / 4 + 4;
  const std::size_t np = max_deg + bump_deg + 1;
  const auto x = cheb::points(np, kUnit);
  const auto w = cheb::cc_weights(np, kUnit);
  Matrix G(static_cast<Eigen::Index>(np), m);
  for (Eigen::Index q = 0; q < m; ++q) {
    const auto v = cheb::values_on_grid(gs[static_cast<std::size_t>(q)], np);
    for (std::size_t i = 0; i < np; ++i) G(static_cast<Eigen::Index>(i), q) = v[i] * w[i];
  }
  for (std::size_t b = 0; b < centers.size(); b += kBlock) {
    const std::size_t len = std::min(kBlock, centers.size() - b);
    const Matrix K = bump_matrix(k, x, std::span(centers).subspan(b, len));
    out.middleRows(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(len)).noalias() =
        K.transpose() * G;
  }
  return out;
}

Vector kde3_partial_inner(const KDEEstimate& e, const ChebSeries& g, int axis) {
  if (e.dim() != 3) raise(ErrorKind::Validation, "kde3_partial_inner needs dim=3");
  return kde_partial_inner(e, std::span<const ChebSeries>(&g, 1), axis).col(0);
}

}  // namespace npspec::kde
