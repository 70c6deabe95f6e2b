#include "npspec/chebcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "dct.hpp"
#include "npspec/errors.hpp"

namespace npspec::cheb {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Integral of T_k over [-1, 1].
double unit_moment(std::size_t k) {
  if (k % 2 == 1) return 0.0;
  const double kk = static_cast<double>(k);
  return 2.0 / (1.0 - kk * kk);
}

void require_same_interval(const Interval& a, const Interval& b,
                           const char* op) {
  if (!(a == b)) {
    std::ostringstream msg;
    msg << op << ": intervals [" << a.lo() << ", " << a.hi() << "] and ["
        << b.lo() << ", " << b.hi() << "] differ";
    raise(ErrorKind::DomainMismatch, msg.str());
  }
}

std::vector<double> chop_tail(std::vector<double> c, double threshold) {
  std::size_t keep = c.size();
  while (keep > 1 && std::abs(c[keep - 1]) <= threshold) --keep;
  c.resize(keep);
  if (keep == 1 && std::abs(c[0]) <= threshold) c[0] = 0.0;
  return c;
}

// Clenshaw evaluation at t in [-1, 1].
double clenshaw(std::span<const double> c, double t) {
  double b1 = 0.0;
  double b2 = 0.0;
  const double two_t = 2.0 * t;
  for (std::size_t k = c.size() - 1; k >= 1; --k) {
    const double b0 = c[k] + two_t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return c[0] + t * b1 - b2;
}

}  // namespace

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    std::ostringstream msg;
    msg << "invalid interval [" << lo << ", " << hi << "]";
    raise(ErrorKind::Validation, msg.str());
  }
}

ChebSeries::ChebSeries(Interval interval, std::vector<double> coeffs)
    : interval_(interval), coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) raise(ErrorKind::EmptyInput, "empty coefficient list");
  for (double c : coeffs_) {
    if (!std::isfinite(c)) raise(ErrorKind::Validation, "non-finite coefficient");
  }
}

ChebSeries ChebSeries::zero(Interval interval) {
  return ChebSeries(interval, {0.0});
}

ChebSeries ChebSeries::constant(Interval interval, double value) {
  return ChebSeries(interval, {value});
}

ChebSeries ChebSeries::identity(Interval interval) {
  return ChebSeries(interval, {0.5 * (interval.lo() + interval.hi()),
                               0.5 * interval.width()});
}

bool ChebSeries::is_zero() const noexcept {
  return std::all_of(coeffs_.begin(), coeffs_.end(),
                     [](double c) { return c == 0.0; });
}

double ChebSeries::operator()(double x) const { return eval(*this, x); }

std::vector<double> points(std::size_t n_points, const Interval& interval) {
  if (n_points == 0) return {};
  if (n_points == 1) return {interval.from_unit(0.0)};
  const std::size_t n = n_points - 1;
  std::vector<double> x(n_points);
  for (std::size_t j = 0; j <= n; ++j) {
    // -cos(j pi / n) written via sin for exact symmetry and endpoints.
    const double t = std::sin(std::numbers::pi *
                              (2.0 * static_cast<double>(j) -
                               static_cast<double>(n)) /
                              (2.0 * static_cast<double>(n)));
    x[j] = interval.from_unit(t);
  }
  x.front() = interval.lo();
  x.back() = interval.hi();
  return x;
}

std::vector<double> cc_weights(std::size_t n_points, const Interval& interval) {
  if (n_points == 0) return {};
  const double half = 0.5 * interval.width();
  if (n_points == 1) return {2.0 * half};
  const std::size_t n = n_points - 1;
  std::vector<double> s(n_points);
  for (std::size_t k = 0; k <= n; ++k) s[k] = 0.5 * unit_moment(k);
  detail::dct1(s);
  std::vector<double> w(n_points);
  for (std::size_t j = 0; j <= n; ++j) {
    const double beta = (j == 0 || j == n) ? 0.5 : 1.0;
    w[j] = 2.0 * beta / static_cast<double>(n) * s[j] * half;
  }
  return w;  // symmetric, so descending and ascending orders coincide
}

std::vector<double> coeffs_from_values(std::span<const double> values) {
  const std::size_t np = values.size();
  if (np == 0) raise(ErrorKind::EmptyInput, "no sample values");
  if (np == 1) return {values[0]};
  const std::size_t n = np - 1;
  std::vector<double> c(values.rbegin(), values.rend());
  detail::dct1(c);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& ck : c) ck *= inv_n;
  c.front() *= 0.5;
  c.back() *= 0.5;
  return c;
}

std::vector<double> values_on_grid(const ChebSeries& s, std::size_t n_points) {
  const auto c = s.coeffs();
  if (n_points <= s.degree()) {
    raise(ErrorKind::ShapeMismatch, "grid too small for series degree");
  }
  if (n_points == 1) return {c[0]};
  const std::size_t n = n_points - 1;
  std::vector<double> x(n_points, 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) {
    x[k] = (k == 0 || k == n) ? c[k] : 0.5 * c[k];
  }
  detail::dct1(x);
  std::reverse(x.begin(), x.end());
  return x;
}

ChebSeries from_values(std::span<const double> values, const Interval& interval,
                       double tol) {
  auto c = coeffs_from_values(values);
  const double vscale = max_abs(values);
  if (vscale == 0.0) return ChebSeries::zero(interval);
  const double cmax = max_abs(c);
  const double thr = std::max(tol * cmax, 16.0 * kEps * vscale);
  return ChebSeries(interval, chop_tail(std::move(c), thr));
}

ChebSeries build(const ScalarFunction& f, const Interval& interval,
                 double tol, int min_log2_points) {
  if (!(tol > 0.0) || tol > 1e-3) {
    raise(ErrorKind::Validation, "build tolerance must lie in (0, 1e-3]");
  }
  std::vector<double> values;
  for (int k = std::clamp(min_log2_points, 0, kMaxLog2Points);
       k <= kMaxLog2Points; ++k) {
    const std::size_t n = std::size_t{1} << k;
    const auto x = points(n + 1, interval);
    std::vector<double> next(n + 1);
    if (values.empty()) {
      for (std::size_t j = 0; j <= n; ++j) next[j] = f(x[j]);
    } else {
      // Nested grids: the previous points sit at even indices.
      for (std::size_t j = 0; j <= n; ++j) {
        next[j] = (j % 2 == 0) ? values[j / 2] : f(x[j]);
      }
    }
    values = std::move(next);
    for (double v : values) {
      if (!std::isfinite(v)) {
        raise(ErrorKind::NonResolved, "function is not finite on the grid");
      }
    }
    const double vscale = max_abs(values);
    if (vscale == 0.0) return ChebSeries::zero(interval);
    auto c = coeffs_from_values(values);
    const double cmax = max_abs(c);
    const double thr = std::max(tol * cmax, 16.0 * kEps * vscale);
    const std::size_t tail_start = (3 * c.size()) / 4;
    const double tail =
        max_abs(std::span<const double>(c).subspan(tail_start));
    if (tail <= thr) return ChebSeries(interval, chop_tail(std::move(c), thr));
  }
  std::ostringstream msg;
  msg << "no coefficient decay with " << ((1 << kMaxLog2Points) + 1)
      << " points";
  raise(ErrorKind::NonResolved, msg.str());
}

double eval(const ChebSeries& s, double x) {
  const auto& I = s.interval();
  const double window = kClampWindow * std::max(1.0, I.width());
  if (x < I.lo()) {
    if (x < I.lo() - window || std::isnan(x)) {
      std::ostringstream msg;
      msg << "x = " << x << " outside [" << I.lo() << ", " << I.hi() << "]";
      raise(ErrorKind::OutOfDomain, msg.str());
    }
    x = I.lo();
  } else if (x > I.hi()) {
    if (x > I.hi() + window) {
      std::ostringstream msg;
      msg << "x = " << x << " outside [" << I.lo() << ", " << I.hi() << "]";
      raise(ErrorKind::OutOfDomain, msg.str());
    }
    x = I.hi();
  } else if (std::isnan(x)) {
    raise(ErrorKind::OutOfDomain, "x is NaN");
  }
  const double t = std::clamp(I.to_unit(x), -1.0, 1.0);
  return clenshaw(s.coeffs(), t);
}

double integrate(const ChebSeries& s) {
  const auto c = s.coeffs();
  double acc = 0.0;
  for (std::size_t k = 0; k < c.size(); k += 2) acc += c[k] * unit_moment(k);
  return acc * 0.5 * s.interval().width();
}

double inner(const ChebSeries& a, const ChebSeries& b) {
  require_same_interval(a.interval(), b.interval(), "inner");
  const auto ca = a.coeffs();
  const auto cb = b.coeffs();
  const double half = 0.5 * a.interval().width();
  if (ca.size() * cb.size() <= 65536) {
    // T_i T_j = (T_{i+j} + T_{|i-j|}) / 2
    double acc = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i) {
      if (ca[i] == 0.0) continue;
      double row = 0.0;
      for (std::size_t j = 0; j < cb.size(); ++j) {
        const std::size_t diff = i > j ? i - j : j - i;
        row += cb[j] * (unit_moment(i + j) + unit_moment(diff));
      }
      acc += ca[i] * row;
    }
    return 0.5 * acc * half;
  }
  const std::size_t np = a.degree() + b.degree() + 1;
  const auto va = values_on_grid(a, np);
  const auto vb = values_on_grid(b, np);
  const auto w = cc_weights(np, a.interval());
  double acc = 0.0;
  for (std::size_t j = 0; j < np; ++j) acc += w[j] * va[j] * vb[j];
  return acc;
}

ChebSeries combine(std::span<const double> coeffs,
                   std::span<const ChebSeries> series) {
  if (coeffs.empty() || series.empty()) {
    raise(ErrorKind::EmptyInput, "combine needs at least one term");
  }
  if (coeffs.size() != series.size()) {
    raise(ErrorKind::ShapeMismatch, "combine: coefficient/series count differ");
  }
  const Interval interval = series[0].interval();
  std::size_t len = 1;
  double scale = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    require_same_interval(interval, series[i].interval(), "combine");
    if (coeffs[i] != 0.0) len = std::max(len, series[i].coeffs().size());
    scale += std::abs(coeffs[i]) * max_abs(series[i].coeffs());
  }
  std::vector<double> out(len, 0.0);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double a = coeffs[i];
    if (a == 0.0) continue;
    const auto c = series[i].coeffs();
    for (std::size_t k = 0; k < c.size(); ++k) out[k] += a * c[k];
  }
  return ChebSeries(interval, chop_tail(std::move(out), 2.0 * kEps * scale));
}

ChebSeries chop(const ChebSeries& s, double rel_tol) {
  const auto c = s.coeffs();
  return ChebSeries(s.interval(),
                    chop_tail(std::vector<double>(c.begin(), c.end()),
                              rel_tol * max_abs(c)));
}

ChebSeries derivative(const ChebSeries& s) {
  const auto c = s.coeffs();
  const std::size_t n = c.size() - 1;
  if (n == 0) return ChebSeries::zero(s.interval());
  std::vector<double> d(n + 1, 0.0);  // d[n] stays zero as padding
  for (std::size_t k = n; k-- > 0;) {
    d[k] = (k + 2 <= n ? d[k + 2] : 0.0) +
           2.0 * static_cast<double>(k + 1) * c[k + 1];
  }
  d[0] *= 0.5;
  d.resize(n);
  const double scale = 2.0 / s.interval().width();
  for (double& x : d) x *= scale;
  return ChebSeries(s.interval(), chop_tail(std::move(d), 0.0));
}

ChebSeries antiderivative(const ChebSeries& s) {
  const auto c = s.coeffs();
  const std::size_t n = c.size() - 1;
  auto coeff = [&](std::size_t k) { return k <= n ? c[k] : 0.0; };
  std::vector<double> a(n + 2, 0.0);
  for (std::size_t k = 1; k <= n + 1; ++k) {
    const double prev = (k == 1) ? 2.0 * c[0] : coeff(k - 1);
    a[k] = (prev - coeff(k + 1)) / (2.0 * static_cast<double>(k));
  }
  const double half = 0.5 * s.interval().width();
  for (double& x : a) x *= half;
  // Fix the constant so the value at t = -1 vanishes.
  double at_lo = 0.0;
  for (std::size_t k = 1; k < a.size(); ++k) at_lo += (k % 2 ? -a[k] : a[k]);
  a[0] = -at_lo;
  return ChebSeries(s.interval(), chop_tail(std::move(a), 0.0));
}

ChebSeries multiply(const ChebSeries& a, const ChebSeries& b) {
  require_same_interval(a.interval(), b.interval(), "multiply");
  const auto ca = a.coeffs();
  const auto cb = b.coeffs();
  const std::size_t deg = a.degree() + b.degree();
  if (ca.size() * cb.size() <= 65536) {
    std::vector<double> out(deg + 1, 0.0);
    for (std::size_t i = 0; i < ca.size(); ++i) {
      for (std::size_t j = 0; j < cb.size(); ++j) {
        const double p = 0.5 * ca[i] * cb[j];
        out[i + j] += p;
        out[i > j ? i - j : j - i] += p;
      }
    }
    return ChebSeries(a.interval(), chop_tail(std::move(out), 0.0));
  }
  const std::size_t np = deg + 1;
  auto va = values_on_grid(a, np);
  const auto vb = values_on_grid(b, np);
  for (std::size_t j = 0; j < np; ++j) va[j] *= vb[j];
  auto c = coeffs_from_values(va);
  const double scale = max_abs(ca) * max_abs(cb);
  return ChebSeries(a.interval(), chop_tail(std::move(c), 4.0 * kEps * scale));
}

Extremum argmax(const ChebSeries& s) {
  const auto& I = s.interval();
  if (s.degree() == 0) return {I.lo(), s.coeffs()[0]};

  const std::size_t n_scan = 4 * s.degree() + 16;
  const auto x = points(n_scan, I);
  const auto v = values_on_grid(s, n_scan);

  Extremum best{x[0], v[0]};
  for (std::size_t j = 1; j < n_scan; ++j) {
    if (v[j] > best.value) best = {x[j], v[j]};
  }

  // Local maxima of the scan, best first.
  std::vector<std::size_t> peaks;
  for (std::size_t j = 1; j + 1 < n_scan; ++j) {
    if (v[j] >= v[j - 1] && v[j] >= v[j + 1] &&
        (v[j] > v[j - 1] || v[j] > v[j + 1])) {
      peaks.push_back(j);
    }
  }
  std::sort(peaks.begin(), peaks.end(),
            [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  if (peaks.size() > 5) peaks.resize(5);

  const ChebSeries d1 = derivative(s);
  const ChebSeries d2 = derivative(d1);
  for (std::size_t j : peaks) {
    double lo = x[j - 1];
    double hi = x[j + 1];
    double xc = x[j];
    for (int it = 0; it < 60; ++it) {
      const double g = eval(d1, xc);
      if (g == 0.0) break;
      if (g > 0.0) lo = xc; else hi = xc;
      const double h = eval(d2, xc);
      double next = (h < 0.0) ? xc - g / h : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - xc) <= 4.0 * kEps * std::max(1.0, std::abs(xc))) {
        xc = next;
        break;
      }
      xc = next;
    }
    const double val = eval(s, xc);
    if (val > best.value) best = {xc, val};
  }
  return best;
}

}  // namespace npspec::cheb
