#pragma once

// Token-level helpers for the versioned text containers.

#include <Eigen/Dense>

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "npspec/chebcore.hpp"
#include "npspec/errors.hpp"

namespace npspec::textio {

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void line(const std::string& key) { os_ << key << '\n'; }

  template <typename T>
  void value(const std::string& key, const T& v) {
    os_ << key << ' ' << v << '\n';
  }

  void real(const std::string& key, double v) {
    os_ << key << ' ';
    put(v);
    os_ << '\n';
  }

  void reals(const std::string& key, const double* data, std::size_t n) {
    os_ << key << ' ' << n;
    for (std::size_t i = 0; i < n; ++i) {
      os_ << ' ';
      put(data[i]);
    }
    os_ << '\n';
  }
  void reals(const std::string& key, const std::vector<double>& v) {
    reals(key, v.data(), v.size());
  }
  void reals(const std::string& key, std::span<const double> v) {
    reals(key, v.data(), v.size());
  }
  void vector(const std::string& key, const Eigen::VectorXd& v) {
    reals(key, v.data(), static_cast<std::size_t>(v.size()));
  }
  /// Row count, column count, then entries row by row.
  void matrix(const std::string& key, const Eigen::MatrixXd& M) {
    os_ << key << ' ' << M.rows() << ' ' << M.cols();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        os_ << ' ';
        put(M(i, j));
      }
    }
    os_ << '\n';
  }
  void series(const std::string& key, const cheb::ChebSeries& s) {
    os_ << key << ' ';
    put(s.interval().lo());
    os_ << ' ';
    put(s.interval().hi());
    os_ << ' ';
    reals_inline(s.coeffs());
    os_ << '\n';
  }

 private:
  void put(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    os_.write(buf, res.ptr - buf);
  }
  void reals_inline(std::span<const double> v) {
    os_ << v.size();
    for (double x : v) {
      os_ << ' ';
      put(x);
    }
  }

  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  void expect(const std::string& key) {
    std::string tok = word();
    if (tok != key) fail("expected '" + key + "', found '" + tok + "'");
  }

  std::string word() {
    std::string tok;
    if (!(is_ >> tok)) fail("unexpected end of input");
    return tok;
  }

  double real() {
    const std::string tok = word();
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      fail("bad number '" + tok + "'");
    }
    return v;
  }

  std::size_t count(std::size_t limit = std::size_t{1} << 32) {
    const std::string tok = word();
    std::size_t v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || v > limit) {
      fail("bad count '" + tok + "'");
    }
    return v;
  }

  std::vector<double> reals(const std::string& key) {
    expect(key);
    return reals_inline();
  }
  Eigen::VectorXd vector(const std::string& key) {
    const auto v = reals(key);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  Eigen::MatrixXd matrix(const std::string& key) {
    expect(key);
    const std::size_t r = count(), c = count();
    Eigen::MatrixXd M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = real();
    }
    return M;
  }
  cheb::ChebSeries series(const std::string& key) {
    expect(key);
    const double lo = real(), hi = real();
    auto c = reals_inline();
    if (c.empty()) fail("series without coefficients");
    return cheb::ChebSeries(cheb::Interval(lo, hi), std::move(c));
  }

  [[noreturn]] void fail(const std::string& what) {
    raise(ErrorKind::Parse, what);
  }

 private:
  std::vector<double> reals_inline() {
    const std::size_t n = count();
    std::vector<double> v(n);
    for (double& x : v) x = real();
    return v;
  }

  std::istream& is_;
};

}  // namespace npspec::textio
