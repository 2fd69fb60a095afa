#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "needlecomp/comparison.hpp"
#include "needlecomp/extended_real.hpp"
#include "oracles.hpp"

using namespace needlecomp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kAtanhHalf = 0.54930614433405484570;  // atanh(1/2) = ln(3)/2
}  // namespace

TEST_CASE("generalized trig reproduces pinned values") {
  REQUIRE_THAT(cos_kappa(-1.0, 1.0), WithinAbs(1.5430806348152437, 1e-15));
  REQUIRE_THAT(sin_kappa(4.0, kPi / 4.0), WithinAbs(0.5, 1e-15));
  REQUIRE(cos_kappa(0.0, 123.5) == 1.0);
  REQUIRE(sin_kappa(0.0, -7.25) == -7.25);
  REQUIRE_THAT(s_kappa_lambda(-1.0, 2.0, kAtanhHalf), WithinAbs(0.0, 1e-10));
  REQUIRE_THAT(pi_kappa(4.0).value(), WithinAbs(kPi / 2.0, 1e-15));
  REQUIRE(pi_kappa(0.0).is_pos_infinity());
  REQUIRE(pi_kappa(-3.0).is_pos_infinity());
}

TEST_CASE("generalized trig satisfies the defining oscillator equation") {
  const double h = 1e-4;
  const std::vector<double> kappas = {-10.0, -2.0, -1.0, -0.3, 0.0,
                                      0.5,   1.0,  2.0,  10.0};
  const std::vector<double> rs = {-2.5, -1.0, -0.5, -0.1, 0.0,
                                  0.3,  0.9,  1.7,  2.5};
  const std::vector<double> lambdas = {-1.0, 0.7, 2.0};
  for (double kappa : kappas) {
    for (double r : rs) {
      CAPTURE(kappa, r);
      auto check = [&](auto f) {
        double v = f(r);
        double second = (f(r + h) - 2.0 * v + f(r - h)) / (h * h);
        double tol = 1e-6 * (1.0 + std::abs(kappa)) *
                     std::max(1.0, std::abs(v));
        REQUIRE_THAT(second + kappa * v, WithinAbs(0.0, tol));
      };
      check([&](double x) { return cos_kappa(kappa, x); });
      check([&](double x) { return sin_kappa(kappa, x); });
      for (double lambda : lambdas) {
        CAPTURE(lambda);
        check([&](double x) { return s_kappa_lambda(kappa, lambda, x); });
      }
    }
  }
}

TEST_CASE("generalized trig matches an independent ODE integration") {
  const std::vector<std::pair<double, double>> cases = {
      {2.0, 1.5}, {-3.0, 0.8}, {0.7, -1.2}, {-0.4, 2.0}};
  for (auto [kappa, lambda] : cases) {
    for (double r : {-1.5, -0.4, 0.6, 1.8}) {
      CAPTURE(kappa, lambda, r);
      double expected = oracle::ode_value(kappa, 1.0, -lambda, r);
      double got = s_kappa_lambda(kappa, lambda, r);
      REQUIRE_THAT(got, WithinAbs(expected,
                                  1e-8 * std::max(1.0, std::abs(expected))));
    }
  }
}

TEST_CASE("Pythagorean identity holds at machine precision") {
  const std::vector<double> kappas = {-10.0, -1.0, -1e-3, 0.0, 1e-3, 1.0, 10.0};
  const std::vector<double> rs = {-10.0, -2.0, -0.5, 0.0, 0.1, 1.0, 3.0, 10.0};
  for (double kappa : kappas) {
    for (double r : rs) {
      CAPTURE(kappa, r);
      double c = cos_kappa(kappa, r);
      double s = sin_kappa(kappa, r);
      double lhs = kappa * s * s + c * c;
      double scale = std::max({1.0, std::abs(kappa) * s * s, c * c});
      REQUIRE_THAT(lhs, WithinAbs(1.0, 1e-12 * scale));
    }
  }
}

TEST_CASE("ball condition trichotomy") {
  REQUIRE(ball_condition(-1.0, 0.5) == BallConditionCase::fails);
  REQUIRE(ball_condition(1.0, -5.0) == BallConditionCase::positive_kappa);
  REQUIRE(ball_condition(2.5, 0.0) == BallConditionCase::positive_kappa);
  REQUIRE(ball_condition(0.0, 0.3) ==
          BallConditionCase::zero_kappa_positive_lambda);
  REQUIRE(ball_condition(0.0, 0.0) == BallConditionCase::fails);
  REQUIRE(ball_condition(0.0, -1.0) == BallConditionCase::fails);
  REQUIRE(ball_condition(-4.0, 2.5) ==
          BallConditionCase::negative_kappa_large_lambda);
  // The boundary lambda = sqrt(-kappa) gives s(r) = exp(-sqrt(-kappa) r),
  // which never vanishes: strictly outside the ball condition.
  REQUIRE(ball_condition(-4.0, 2.0) == BallConditionCase::fails);
}

TEST_CASE("jacobian pinned value, clamping, and reflection symmetry") {
  REQUIRE_THAT(jacobian(0.0, 2.0, 3.0, -0.5), WithinAbs(2.25, 1e-14));
  // Beyond the first zero the Jacobian clamps to zero: with K=0, H=2, N=3
  // the zero of 1 - r sits at r = 1.
  REQUIRE(jacobian(0.0, 2.0, 3.0, 1.5) == 0.0);
  REQUIRE(jacobian(0.0, 2.0, 3.0, 1.0) == 0.0);

  std::mt19937 rng(20240801u);
  std::uniform_real_distribution<double> uk(-4.0, 4.0), uh(-3.0, 3.0),
      un(1.2, 9.0), ur(-2.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    double K = uk(rng), H = uh(rng), N = un(rng), r = ur(rng);
    CAPTURE(K, H, N, r);
    double a = jacobian(K, H, N, r);
    double b = jacobian(K, -H, N, -r);
    REQUIRE_THAT(a, WithinAbs(b, 1e-12 * std::max(1.0, std::abs(a))));
  }
}

TEST_CASE("comparison radius closed forms agree with the bisection oracle") {
  // Pinned instances first.
  REQUIRE_THAT(inradius_comparison_r(0.0, 2.0, 3.0).value(),
               WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(inradius_comparison_r(0.0, 1.0, 2.0).value(),
               WithinAbs(1.0, 1e-12));
  for (double N : {2.0, 2.5, 3.0, 10.0}) {
    CAPTURE(N);
    REQUIRE_THAT(inradius_comparison_r(N - 1.0, 0.0, N).value(),
                 WithinAbs(kPi / 2.0, 1e-12));
    REQUIRE_THAT(inradius_comparison_r(-(N - 1.0), 2.0 * (N - 1.0), N).value(),
                 WithinAbs(kAtanhHalf, 1e-12));
  }
  REQUIRE(inradius_comparison_r(-1.0, 0.0, 2.0).is_pos_infinity());
  REQUIRE(inradius_comparison_r(0.0, -2.0, 4.0).is_pos_infinity());

  // Random sweep against the oracle plus the defining property: s vanishes
  // at r* and stays positive before it.
  std::mt19937 rng(911u);
  std::uniform_real_distribution<double> uk(-4.0, 4.0), un(1.3, 8.0),
      ul(0.1, 3.0), uany(-2.0, 3.0);
  int checked = 0;
  while (checked < 400) {
    double K = uk(rng), N = un(rng);
    double kappa = K / (N - 1.0);
    double lambda;
    if (kappa > 0) {
      lambda = uany(rng);
    } else {
      lambda = std::sqrt(-kappa) + ul(rng);
    }
    double H = lambda * (N - 1.0);
    CAPTURE(K, H, N, kappa, lambda);
    ExtendedReal r = inradius_comparison_r(K, H, N);
    REQUIRE(r.is_finite());
    double expected = oracle::first_zero_direct(K, H, N);
    REQUIRE_THAT(r.value(),
                 WithinAbs(expected, 1e-10 * std::max(1.0, expected)));
    double stol = 1e-10 * std::max({1.0, std::abs(lambda), std::abs(kappa)});
    REQUIRE_THAT(s_kappa_lambda(kappa, lambda, r.value()),
                 WithinAbs(0.0, stol));
    for (int i = 1; i <= 1000; ++i) {
      double t = r.value() * i / 1001.0;
      if (!(s_kappa_lambda(kappa, lambda, t) > 0.0)) {
        CAPTURE(t);
        FAIL("comparison profile must stay positive before its first zero");
      }
    }
    ++checked;
  }
}

TEST_CASE("comparison radius is stable under simultaneous perturbations") {
  const std::vector<std::array<double, 3>> fixtures = {
      {2.0, 3.0, 3.0}, {0.0, 3.0, 2.0}, {5.0, 2.0, 4.0}};
  for (const auto& f : fixtures) {
    double K = f[0], H = f[1], N = f[2];
    CAPTURE(K, H, N);
    double r = inradius_comparison_r(K, H, N).value();
    double prev = std::numeric_limits<double>::infinity();
    for (double delta : {1e-2, 1e-3, 1e-4}) {
      double rp = inradius_comparison_r(K - delta, H - delta, N + delta)
                      .value();
      double diff = std::abs(rp - r);
      CAPTURE(delta, diff);
      REQUIRE(diff <= 1.0 * delta);  // linear modulus with a safe constant
      REQUIRE(diff < prev);
      prev = diff;
    }
  }
}

TEST_CASE("distortion coefficient pinned values and conventions") {
  // sigma_{K,N} with K = N means kappa = 1: sin(t theta)/sin(theta).
  REQUIRE_THAT(sigma_distortion(2.0, 2.0, 0.5, kPi / 2.0).value(),
               WithinAbs(0.7071067811865476, 1e-14));
  REQUIRE_THAT(sigma_distortion(3.0, 3.0, 0.5, kPi / 2.0).value(),
               WithinAbs(0.7071067811865476, 1e-14));
  // Limits and endpoint conventions.
  REQUIRE(sigma_kappa(1.7, 0.42, 0.0).value() == 0.42);
  REQUIRE(sigma_kappa(-2.0, 0.0, 1.3).value() == 0.0);
  REQUIRE(sigma_kappa(-2.0, 1.0, 1.3).value() == 1.0);
  // Beyond the half-period the coefficient is infinite.
  REQUIRE(sigma_kappa(1.0, 0.5, kPi).is_pos_infinity());
  REQUIRE(sigma_kappa(1.0, 0.5, kPi * (1.0 - 1e-13)).is_pos_infinity());
  REQUIRE(sigma_kappa(1.0, 0.5, kPi * 0.9).is_finite());

  REQUIRE_THAT(tau_distortion(0.0, 2.0, 0.25, 1.0).value(),
               WithinAbs(0.25, 1e-14));
  // N = 1 uses the x^0 = 1 convention regardless of the sigma factor.
  REQUIRE(tau_distortion(8.0, 1.0, 0.3, 10.0).value() == 0.3);
  // t = 0 uses 0 * inf = 0 even when sigma blows up.
  REQUIRE(tau_distortion(8.0, 2.0, 0.0, 10.0).value() == 0.0);
  REQUIRE(tau_distortion(8.0, 2.0, 0.5, 10.0).is_pos_infinity());
}

TEST_CASE("tau and sigma are mutually consistent") {
  std::mt19937 rng(4242u);
  std::uniform_real_distribution<double> uk(-5.0, 5.0), un(1.1, 10.0),
      ut(0.0, 1.0), uth(0.05, 3.0);
  int done = 0;
  while (done < 500) {
    double K = uk(rng), N = un(rng), t = ut(rng), theta = uth(rng);
    double kappa = K / (N - 1.0);
    if (kappa > 0 && theta >= 0.9 * kPi / std::sqrt(kappa)) continue;
    CAPTURE(K, N, t, theta);
    double sig = sigma_kappa(kappa, t, theta).value();
    double tau = tau_distortion(K, N, t, theta).value();
    double lhs = std::pow(tau, N);
    double rhs = t * std::pow(sig, N - 1.0);
    REQUIRE_THAT(lhs, WithinAbs(rhs, 1e-12 * std::max(1.0, std::abs(rhs))));
    ++done;
  }
}

TEST_CASE("stability margin verifies and shrinks with epsilon") {
  double r = inradius_comparison_r(0.0, 2.0, 3.0).value();
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    CAPTURE(eps);
    double delta = stability_margin(0.0, 2.0, 3.0, eps);
    REQUIRE(delta > 0.0);
    double rp =
        inradius_comparison_r(0.0 - delta, 2.0 - delta, 3.0 + delta).value();
    REQUIRE(rp <= r + eps);
    REQUIRE(delta <= prev);
    prev = delta;
  }
  REQUIRE_THROWS_AS(stability_margin(-1.0, 0.0, 2.0, 0.1), std::domain_error);
}

TEST_CASE("extended real conventions") {
  REQUIRE(times(ExtendedReal(0.0), ExtendedReal::infinity()).value() == 0.0);
  REQUIRE(times(ExtendedReal::infinity(), ExtendedReal(0.0)).value() == 0.0);
  REQUIRE(pow_convention(ExtendedReal::infinity(), 0.0).value() == 1.0);
  REQUIRE(pow_convention(ExtendedReal::infinity(), 2.0).is_pos_infinity());
  REQUIRE(pow_convention(ExtendedReal(0.0), 0.0).value() == 1.0);
  REQUIRE_THROWS_AS(ExtendedReal(std::nan("")), std::invalid_argument);
  REQUIRE_THROWS_AS(ExtendedReal::infinity() - ExtendedReal::infinity(),
                    std::domain_error);
  REQUIRE(ExtendedReal::infinity().to_string() == "inf");
  REQUIRE(ExtendedReal::neg_infinity().to_string() == "-inf");
}

TEST_CASE("input validation rejects NaN and degenerate dimension") {
  double nan = std::nan("");
  REQUIRE_THROWS_AS(cos_kappa(nan, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(sin_kappa(1.0, nan), std::invalid_argument);
  REQUIRE_THROWS_AS(inradius_comparison_r(0.0, 1.0, 1.0), std::domain_error);
  REQUIRE_THROWS_AS(inradius_comparison_r(0.0, 1.0, 0.5), std::domain_error);
  REQUIRE_THROWS_AS(sigma_kappa(1.0, -0.1, 1.0), std::domain_error);
  REQUIRE_THROWS_AS(sigma_kappa(1.0, 1.1, 1.0), std::domain_error);
  REQUIRE_THROWS_AS(sigma_kappa(1.0, 0.5, -1.0), std::domain_error);
  REQUIRE_THROWS_AS(tau_distortion(1.0, 0.9, 0.5, 1.0), std::domain_error);
}
