#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace npspec::cheb {

/// Closed finite interval [lo, hi] with lo < hi.
class Interval {
 public:
  Interval(double lo, double hi);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double width() const noexcept { return hi_ - lo_; }

  /// Affine map onto [-1, 1].
  double to_unit(double x) const noexcept {
    return (2.0 * x - (lo_ + hi_)) / (hi_ - lo_);
  }
  double from_unit(double t) const noexcept {
    return 0.5 * (lo_ + hi_) + 0.5 * (hi_ - lo_) * t;
  }

  friend bool operator==(const Interval&, const Interval&) = default;

 private:
  double lo_;
  double hi_;
};

/// Unit interval, the observation domain of the learner.
inline Interval unit_interval() { return Interval(0.0, 1.0); }

/// Finite Chebyshev series sum_k c_k T_k(t(x)) on an interval, where t maps
/// the interval affinely onto [-1, 1]. The zero function is stored as a
/// single zero coefficient.
class ChebSeries {
 public:
  ChebSeries(Interval interval, std::vector<double> coeffs);

  static ChebSeries zero(Interval interval);
  static ChebSeries constant(Interval interval, double value);
  /// The identity function x -> x on the interval.
  static ChebSeries identity(Interval interval);

  const Interval& interval() const noexcept { return interval_; }
  std::span<const double> coeffs() const noexcept { return coeffs_; }
  std::size_t degree() const noexcept { return coeffs_.size() - 1; }
  bool is_zero() const noexcept;

  double operator()(double x) const;

 private:
  Interval interval_;
  std::vector<double> coeffs_;
};

inline constexpr double kDefaultTol = 1e-13;
inline constexpr int kMinLog2Points = 4;
inline constexpr int kMaxLog2Points = 16;
/// Points within this distance of an endpoint are clamped onto it.
inline constexpr double kClampWindow = 1e-12;

using ScalarFunction = std::function<double(double)>;

/// Adaptive construction: samples f on 2^k+1 Chebyshev points for
/// k = 4, 5, ... until the coefficient tail decays below tol relative to
/// the largest coefficient, then chops the tail. Throws NonResolved once
/// 2^16+1 points do not suffice. min_log2_points raises the first grid for
/// functions with features narrower than the 17-point spacing.
ChebSeries build(const ScalarFunction& f, const Interval& interval,
                 double tol = kDefaultTol,
                 int min_log2_points = kMinLog2Points);

/// Series interpolating values given at the ascending Chebyshev points
/// returned by points(values.size(), interval), with the tail chopped at
/// tol relative to the largest coefficient.
ChebSeries from_values(std::span<const double> values, const Interval& interval,
                       double tol = kDefaultTol);

double eval(const ChebSeries& s, double x);
double integrate(const ChebSeries& s);
/// L2 inner product; both series must live on the same interval.
double inner(const ChebSeries& a, const ChebSeries& b);
/// Pointwise sum of coeffs[i] * series[i].
ChebSeries combine(std::span<const double> coeffs,
                   std::span<const ChebSeries> series);
ChebSeries derivative(const ChebSeries& s);
/// Indefinite integral vanishing at the left endpoint.
ChebSeries antiderivative(const ChebSeries& s);
/// Exact product (degree adds).
ChebSeries multiply(const ChebSeries& a, const ChebSeries& b);
/// Drop trailing coefficients with magnitude <= rel_tol * max |c|.
ChebSeries chop(const ChebSeries& s, double rel_tol);

struct Extremum {
  double x;
  double value;
};

/// Global maximum on the interval: dense scan on 4*degree+16 Chebyshev
/// points, Newton polish on the derivative, endpoints compared. Ties keep
/// the leftmost candidate, so a constant returns lo.
Extremum argmax(const ChebSeries& s);

// Grid utilities. Grids are Chebyshev points of the second kind, ascending.

std::vector<double> points(std::size_t n_points, const Interval& interval);
/// Clenshaw-Curtis weights matching points(); exact for polynomials of
/// degree < n_points.
std::vector<double> cc_weights(std::size_t n_points, const Interval& interval);
/// Values of s at points(n_points, ...); requires n_points > degree.
std::vector<double> values_on_grid(const ChebSeries& s, std::size_t n_points);
/// Raw Chebyshev coefficients of the interpolant through ascending grid
/// values (no chopping).
std::vector<double> coeffs_from_values(std::span<const double> values);

}  // namespace npspec::cheb
