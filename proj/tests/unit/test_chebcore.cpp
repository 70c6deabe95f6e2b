#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "npspec/chebcore.hpp"
#include "npspec/errors.hpp"

using namespace npspec;
using namespace npspec::cheb;

namespace {

const Interval kUnit(0.0, 1.0);
const Interval kSym(-1.0, 1.0);

ChebSeries basis(std::size_t k, const Interval& I) {
  std::vector<double> c(k + 1, 0.0);
  c[k] = 1.0;
  return ChebSeries(I, c);
}

template <typename F>
double max_error(const ChebSeries& s, F f, int n = 1000) {
  const auto& I = s.interval();
  double err = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = I.lo() + I.width() * i / (n - 1);
    err = std::max(err, std::abs(eval(s, x) - f(x)));
  }
  return err;
}

}  // namespace

// ---------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------

TEST(ChebBuild, ConstantIsDegreeZero) {
  auto s = build([](double) { return 1.0; }, kUnit);
  ASSERT_EQ(s.degree(), 0u);
  EXPECT_DOUBLE_EQ(s.coeffs()[0], 1.0);
}

TEST(ChebBuild, BasisIdentityT3) {
  auto s = build([](double x) { return 4 * x * x * x - 3 * x; }, kSym);
  ASSERT_EQ(s.degree(), 3u);
  EXPECT_NEAR(s.coeffs()[0], 0.0, 1e-14);
  EXPECT_NEAR(s.coeffs()[1], 0.0, 1e-14);
  EXPECT_NEAR(s.coeffs()[2], 0.0, 1e-14);
  EXPECT_NEAR(s.coeffs()[3], 1.0, 1e-14);
}

TEST(ChebBuild, ExpMatchesDirectEvaluation) {
  auto s = build([](double x) { return std::exp(x); }, kUnit);
  for (int i = 0; i < 100; ++i) {
    const double x = i / 99.0;
    EXPECT_NEAR(eval(s, x), std::exp(x), 1e-12);
  }
}

TEST(ChebBuild, NonSmoothInputIsNotResolved) {
  try {
    build([](double x) { return x < 0.3 ? 0.0 : 1.0; }, kUnit);
    FAIL() << "expected NonResolved";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonResolved);
  }
}

TEST(ChebBuild, RejectsBadTolerance) {
  EXPECT_THROW(build([](double x) { return x; }, kUnit, 0.0), Error);
  EXPECT_THROW(build([](double x) { return x; }, kUnit, 1e-2), Error);
}

TEST(ChebBuild, RoundTripOnSmoothFamily) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const double a = U(rng), b = U(rng), c = U(rng);
    const double mu = 0.5 + 0.4 * U(rng);
    const double w = 0.05 + 0.1 * (U(rng) + 1.0);
    const Interval I(-2.0 + U(rng), 2.0 + U(rng));
    std::vector<std::function<double(double)>> family = {
        [=](double x) { return a + b * x + c * x * x * x; },
        [=](double x) { return std::exp(a * x) + b; },
        [=](double x) { return std::sin(3.0 * a * x + c); },
        [=](double x) {
          return std::exp(-(x - mu) * (x - mu) / (2 * w * w)) + 0.1 * b;
        },
    };
    for (const auto& f : family) {
      auto s = build(f, I);
      double fmax = 0.0;
      for (int i = 0; i < 1000; ++i) {
        fmax = std::max(fmax, std::abs(f(I.lo() + I.width() * i / 999.0)));
      }
      EXPECT_LE(max_error(s, f), 1e-10 * fmax);
    }
  }
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

TEST(ChebEval, T2AtHalf) { EXPECT_NEAR(eval(basis(2, kSym), 0.5), -0.5, 1e-15); }

TEST(ChebEval, ConstantEverywhere) {
  auto one = ChebSeries::constant(kUnit, 1.0);
  for (double x : {0.0, 0.25, 0.7, 1.0}) EXPECT_EQ(eval(one, x), 1.0);
}

TEST(ChebEval, ExpAtPointThree) {
  auto s = build([](double x) { return std::exp(x); }, kUnit);
  EXPECT_NEAR(eval(s, 0.3), std::exp(0.3), 1e-12);
}

TEST(ChebEval, ClampsNearEndpointsRejectsBeyond) {
  auto s = ChebSeries::identity(kUnit);
  EXPECT_DOUBLE_EQ(eval(s, 1.0 + 5e-13), 1.0);
  EXPECT_DOUBLE_EQ(eval(s, -5e-13), 0.0);
  try {
    eval(s, 1.0 + 1e-9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfDomain);
  }
}

// ---------------------------------------------------------------------------
// integrate / inner
// ---------------------------------------------------------------------------

TEST(ChebIntegrate, Identity) {
  EXPECT_NEAR(integrate(ChebSeries::identity(kUnit)), 0.5, 1e-15);
}

TEST(ChebIntegrate, ConstantGivesWidth) {
  const Interval I(-0.7, 2.3);
  EXPECT_NEAR(integrate(ChebSeries::constant(I, 1.0)), 3.0, 1e-14);
}

TEST(ChebIntegrate, Square) {
  auto s = build([](double x) { return x * x; }, kUnit);
  EXPECT_NEAR(integrate(s), 1.0 / 3.0, 1e-14);
}

TEST(ChebIntegrate, ExactForMonomials) {
  const Interval I(0.5, 2.0);
  for (int p = 0; p <= 12; ++p) {
    auto s = build([p](double x) { return std::pow(x, p); }, I);
    const double exact = (std::pow(2.0, p + 1) - std::pow(0.5, p + 1)) / (p + 1);
    EXPECT_NEAR(integrate(s), exact, 1e-14 * std::abs(exact)) << "p=" << p;
  }
}

TEST(ChebIntegrate, ClenshawCurtisWeightsMatchCoefficientRoute) {
  auto s = build([](double x) { return std::cos(5 * x) + x * x; }, kUnit);
  for (std::size_t np : {s.degree() + 1, s.degree() + 8, std::size_t{257}}) {
    const auto w = cc_weights(np, kUnit);
    const auto v = values_on_grid(s, np);
    double q = 0.0;
    for (std::size_t j = 0; j < np; ++j) q += w[j] * v[j];
    EXPECT_NEAR(q, integrate(s), 1e-14);
  }
}

TEST(ChebInner, OneAndX) {
  EXPECT_NEAR(inner(ChebSeries::constant(kUnit, 1.0), ChebSeries::identity(kUnit)),
              0.5, 1e-15);
}

TEST(ChebInner, T1T2Orthogonal) {
  EXPECT_NEAR(inner(basis(1, kSym), basis(2, kSym)), 0.0, 1e-15);
}

TEST(ChebInner, XWithX) {
  auto x = ChebSeries::identity(kUnit);
  EXPECT_NEAR(inner(x, x), 1.0 / 3.0, 1e-15);
}

TEST(ChebInner, DomainMismatch) {
  try {
    inner(ChebSeries::identity(kUnit), ChebSeries::identity(kSym));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainMismatch);
  }
}

TEST(ChebInner, LargeDegreeGridPathAgreesWithDirect) {
  auto a = build([](double x) { return std::exp(-std::pow((x - 0.4) / 0.004, 2)); },
                 kUnit);
  auto b = build([](double x) { return std::sin(150 * x); }, kUnit);
  ASSERT_GT(a.coeffs().size() * b.coeffs().size(), 65536u);
  // Oracle: product series integrated in coefficient space.
  EXPECT_NEAR(inner(a, b), integrate(multiply(a, b)), 1e-13);
}

// ---------------------------------------------------------------------------
// combine / derivative / antiderivative
// ---------------------------------------------------------------------------

TEST(ChebCombine, CancellationGivesZero) {
  auto f = build([](double x) { return std::exp(x); }, kUnit);
  std::vector<ChebSeries> fs{f, f};
  std::vector<double> a{1.0, -1.0};
  auto z = combine(a, fs);
  EXPECT_EQ(z.degree(), 0u);
  EXPECT_TRUE(z.is_zero());
}

TEST(ChebCombine, ScaleConstant) {
  std::vector<ChebSeries> fs{ChebSeries::constant(kUnit, 1.0)};
  std::vector<double> a{2.0};
  auto s = combine(a, fs);
  ASSERT_EQ(s.degree(), 0u);
  EXPECT_DOUBLE_EQ(s.coeffs()[0], 2.0);
}

TEST(ChebCombine, BasisLinearity) {
  std::vector<ChebSeries> fs{basis(1, kSym), basis(2, kSym)};
  std::vector<double> a{1.0, 1.0};
  auto s = combine(a, fs);
  ASSERT_EQ(s.coeffs().size(), 3u);
  EXPECT_EQ(s.coeffs()[0], 0.0);
  EXPECT_EQ(s.coeffs()[1], 1.0);
  EXPECT_EQ(s.coeffs()[2], 1.0);
}

TEST(ChebCombine, Errors) {
  std::vector<ChebSeries> none;
  std::vector<double> no_coeffs;
  EXPECT_THROW(combine(no_coeffs, none), Error);
  std::vector<ChebSeries> mixed{ChebSeries::identity(kUnit),
                                ChebSeries::identity(kSym)};
  std::vector<double> a{1.0, 1.0};
  try {
    combine(a, mixed);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainMismatch);
  }
}

TEST(ChebCombine, LinearityProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  auto f = build([](double x) { return std::cos(7 * x); }, kUnit);
  auto g = build([](double x) { return 1.0 / (1.0 + 25 * x * x); }, kUnit);
  for (int t = 0; t < 50; ++t) {
    const double al = U(rng), be = U(rng), x = 0.5 + 0.5 * U(rng) / 2.0;
    std::vector<ChebSeries> fs{f, g};
    std::vector<double> a{al, be};
    const double lhs = eval(combine(a, fs), x);
    const double rhs = al * eval(f, x) + be * eval(g, x);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST(ChebDerivative, Constant) {
  EXPECT_TRUE(derivative(ChebSeries::constant(kUnit, 3.0)).is_zero());
}

TEST(ChebDerivative, Identity) {
  auto d = derivative(ChebSeries::identity(kUnit));
  ASSERT_EQ(d.degree(), 0u);
  EXPECT_NEAR(d.coeffs()[0], 1.0, 1e-15);
}

TEST(ChebDerivative, SquareAtQuarter) {
  auto s = build([](double x) { return x * x; }, kUnit);
  EXPECT_NEAR(eval(derivative(s), 0.25), 0.5, 1e-12);
}

TEST(ChebDerivative, FundamentalTheorem) {
  for (const auto& f : std::vector<std::function<double(double)>>{
           [](double x) { return std::exp(2 * x); },
           [](double x) { return std::sin(9 * x) + x; },
           [](double x) { return std::exp(-50 * (x - 0.3) * (x - 0.3)); }}) {
    const Interval I(-0.3, 1.7);
    auto s = build(f, I);
    const double delta = eval(s, I.hi()) - eval(s, I.lo());
    EXPECT_NEAR(integrate(derivative(s)), delta,
                1e-10 * std::max(1.0, std::abs(delta)));
  }
}

TEST(ChebAntiderivative, InvertsDerivativeAndVanishesAtLo) {
  const Interval I(0.2, 1.4);
  auto s = build([](double x) { return std::cos(3 * x); }, I);
  auto F = antiderivative(s);
  EXPECT_NEAR(eval(F, I.lo()), 0.0, 1e-15);
  EXPECT_NEAR(eval(F, I.hi()), integrate(s), 1e-14);
  EXPECT_LE(max_error(derivative(F), [](double x) { return std::cos(3 * x); }),
            1e-12);
}

// ---------------------------------------------------------------------------
// argmax
// ---------------------------------------------------------------------------

TEST(ChebArgmax, ConstantReturnsLo) {
  auto r = argmax(ChebSeries::constant(kUnit, 1.0));
  EXPECT_EQ(r.x, 0.0);
  EXPECT_EQ(r.value, 1.0);
}

TEST(ChebArgmax, InteriorVertex) {
  auto s = build([](double x) { return -(x - 0.3) * (x - 0.3); }, kUnit);
  auto r = argmax(s);
  EXPECT_NEAR(r.x, 0.3, 1e-10);
  EXPECT_NEAR(r.value, 0.0, 1e-10);
}

TEST(ChebArgmax, BoundaryMaximum) {
  auto r = argmax(ChebSeries::identity(kUnit));
  EXPECT_EQ(r.x, 1.0);
  EXPECT_NEAR(r.value, 1.0, 1e-15);
}

TEST(ChebArgmax, StationaryOrEndpointProperty) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    const double m1 = U(rng), m2 = U(rng), a = 0.5 + U(rng);
    auto s = build(
        [=](double x) {
          return std::exp(-80 * (x - m1) * (x - m1)) +
                 a * std::exp(-30 * (x - m2) * (x - m2));
        },
        kUnit);
    auto r = argmax(s);
    const double scale = std::abs(r.value) * 100.0;
    const bool endpoint = r.x == 0.0 || r.x == 1.0;
    if (!endpoint) EXPECT_LE(std::abs(eval(derivative(s), r.x)), 1e-8 * scale);
    for (int i = 0; i <= 2000; ++i) EXPECT_LE(eval(s, i / 2000.0), r.value + 1e-14);
  }
}
