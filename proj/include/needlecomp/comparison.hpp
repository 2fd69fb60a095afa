#pragma once

// Curvature comparison kernel: generalized trigonometric functions
// parameterized by a curvature value kappa, the associated one-dimensional
// Jacobian, the first-zero (comparison radius) computation, and the
// distortion coefficients used by curvature-dimension interpolation
// inequalities.
//
// Conventions used throughout:
//   cos_kappa solves  v'' + kappa v = 0,  v(0)=1, v'(0)=0
//   sin_kappa solves  v'' + kappa v = 0,  v(0)=0, v'(0)=1
//   s_kappa_lambda(r) = cos_kappa(r) - lambda * sin_kappa(r)
// so s_kappa_lambda is the solution with v(0)=1, v'(0)=-lambda.

#include <cmath>
#include <stdexcept>
#include <string>

#include "needlecomp/extended_real.hpp"

namespace needlecomp {

namespace detail {
inline void require_not_nan(double x, const char* what) {
  if (std::isnan(x)) {
    throw std::invalid_argument(std::string(what) + ": NaN input");
  }
}
inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument(std::string(what) + ": input must be finite");
  }
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Generalized trigonometry.
// ---------------------------------------------------------------------------

inline double cos_kappa(double kappa, double r) {
  detail::require_finite(kappa, "cos_kappa");
  detail::require_finite(r, "cos_kappa");
  if (kappa > 0) return std::cos(std::sqrt(kappa) * r);
  if (kappa < 0) return std::cosh(std::sqrt(-kappa) * r);
  return 1.0;
}

inline double sin_kappa(double kappa, double r) {
  detail::require_finite(kappa, "sin_kappa");
  detail::require_finite(r, "sin_kappa");
  if (kappa > 0) {
    double s = std::sqrt(kappa);
    return std::sin(s * r) / s;
  }
  if (kappa < 0) {
    double s = std::sqrt(-kappa);
    return std::sinh(s * r) / s;
  }
  return r;
}

// Half-period of cos_kappa: first positive zero domain boundary. Infinite
// for kappa <= 0.
inline ExtendedReal pi_kappa(double kappa) {
  detail::require_finite(kappa, "pi_kappa");
  if (kappa > 0) return ExtendedReal(M_PI / std::sqrt(kappa));
  return ExtendedReal::infinity();
}

inline double s_kappa_lambda(double kappa, double lambda, double r) {
  detail::require_finite(lambda, "s_kappa_lambda");
  return cos_kappa(kappa, r) - lambda * sin_kappa(kappa, r);
}

// Derivative of s_kappa_lambda: cos_kappa' = -kappa sin_kappa and
// sin_kappa' = cos_kappa.
inline double s_kappa_lambda_prime(double kappa, double lambda, double r) {
  detail::require_finite(lambda, "s_kappa_lambda_prime");
  return -kappa * sin_kappa(kappa, r) - lambda * cos_kappa(kappa, r);
}

// ---------------------------------------------------------------------------
// Ball condition: when does s_kappa_lambda have a positive zero?
// ---------------------------------------------------------------------------

enum class BallConditionCase {
  positive_kappa,              // kappa > 0: a zero always exists
  zero_kappa_positive_lambda,  // kappa = 0 and lambda > 0
  negative_kappa_large_lambda, // kappa < 0 and lambda > sqrt(-kappa), strictly
  fails,
};

inline const char* to_string(BallConditionCase c) {
  switch (c) {
    case BallConditionCase::positive_kappa: return "positive_kappa";
    case BallConditionCase::zero_kappa_positive_lambda:
      return "zero_kappa_positive_lambda";
    case BallConditionCase::negative_kappa_large_lambda:
      return "negative_kappa_large_lambda";
    case BallConditionCase::fails: return "fails";
  }
  return "unknown";
}

inline BallConditionCase ball_condition(double kappa, double lambda) {
  detail::require_finite(kappa, "ball_condition");
  detail::require_finite(lambda, "ball_condition");
  if (kappa > 0) return BallConditionCase::positive_kappa;
  if (kappa == 0.0) {
    return lambda > 0 ? BallConditionCase::zero_kappa_positive_lambda
                      : BallConditionCase::fails;
  }
  return lambda > std::sqrt(-kappa)
             ? BallConditionCase::negative_kappa_large_lambda
             : BallConditionCase::fails;
}

// ---------------------------------------------------------------------------
// Parameter triple (K, H, N) with N > 1; kappa = K/(N-1), lambda = H/(N-1).
// ---------------------------------------------------------------------------

struct ComparisonTriple {
  double K;
  double H;
  double N;

  ComparisonTriple(double K_, double H_, double N_) : K(K_), H(H_), N(N_) {
    detail::require_finite(K, "ComparisonTriple.K");
    detail::require_finite(H, "ComparisonTriple.H");
    detail::require_finite(N, "ComparisonTriple.N");
    if (N <= 1.0) {
      throw std::domain_error("ComparisonTriple: N must exceed 1");
    }
  }

  double kappa() const { return K / (N - 1.0); }
  double lambda() const { return H / (N - 1.0); }
};

inline BallConditionCase ball_condition(const ComparisonTriple& p) {
  return ball_condition(p.kappa(), p.lambda());
}

// One-dimensional comparison Jacobian: (s_{kappa,lambda}(r))_+^{N-1}.
inline double jacobian(double K, double H, double N, double r) {
  ComparisonTriple p(K, H, N);
  double s = s_kappa_lambda(p.kappa(), p.lambda(), r);
  if (s <= 0.0) return 0.0;
  return std::pow(s, N - 1.0);
}

namespace detail {

// Bisection for the first positive zero of s_kappa_lambda, used only as a
// guard when a closed form degrades numerically. Relative tolerance 1e-12.
inline double first_zero_bisection(double kappa, double lambda) {
  auto f = [&](double r) { return s_kappa_lambda(kappa, lambda, r); };
  double lo = 0.0;
  double hi = 1.0;
  if (kappa > 0) {
    hi = M_PI / std::sqrt(kappa);  // cos_kappa(pi_kappa/..) <= 0 here
  } else {
    int guard = 0;
    while (f(hi) > 0.0) {
      hi *= 2.0;
      if (++guard > 2000) {
        throw std::runtime_error("first_zero_bisection: no sign change found");
      }
    }
  }
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// First positive zero of s_{kappa,lambda} with kappa = K/(N-1),
// lambda = H/(N-1): the comparison radius. +infinity when the ball
// condition fails.
inline ExtendedReal inradius_comparison_r(double K, double H, double N) {
  ComparisonTriple p(K, H, N);
  double kappa = p.kappa();
  double lambda = p.lambda();
  BallConditionCase c = ball_condition(kappa, lambda);
  if (c == BallConditionCase::fails) return ExtendedReal::infinity();

  double r;
  if (kappa > 0) {
    double sk = std::sqrt(kappa);
    // s = 0  <=>  tan(sk*r) = sk/lambda; atan2 picks the branch in (0, pi)
    // that also covers lambda <= 0.
    r = std::atan2(sk, lambda) / sk;
  } else if (kappa == 0.0) {
    r = 1.0 / lambda;
  } else {
    double sk = std::sqrt(-kappa);
    r = std::atanh(sk / lambda) / sk;
  }
  if (std::isnan(r) || r <= 0.0) {
    r = detail::first_zero_bisection(kappa, lambda);
  }
  return ExtendedReal(r);
}

// ---------------------------------------------------------------------------
// Distortion coefficients.
// ---------------------------------------------------------------------------

// sigma_kappa^(t)(theta) = sin_kappa(t*theta) / sin_kappa(theta), with
// sigma = t at theta = 0 (the limit) and sigma = +infinity once theta
// reaches the half-period of cos_kappa (threshold (1 - 1e-12) * pi_kappa).
inline ExtendedReal sigma_kappa(double kappa, double t, double theta) {
  detail::require_finite(kappa, "sigma_kappa");
  detail::require_finite(t, "sigma_kappa");
  detail::require_finite(theta, "sigma_kappa");
  if (t < 0.0 || t > 1.0) {
    throw std::domain_error("sigma_kappa: t must lie in [0, 1]");
  }
  if (theta < 0.0) {
    throw std::domain_error("sigma_kappa: theta must be nonnegative");
  }
  if (theta == 0.0) return ExtendedReal(t);
  if (kappa > 0) {
    double limit = (1.0 - 1e-12) * (M_PI / std::sqrt(kappa));
    if (theta >= limit) return ExtendedReal::infinity();
  }
  return ExtendedReal(sin_kappa(kappa, t * theta) / sin_kappa(kappa, theta));
}

// Two-parameter form: sigma_{K,N} uses kappa = K/N.
inline ExtendedReal sigma_distortion(double K, double N, double t,
                                     double theta) {
  detail::require_finite(N, "sigma_distortion");
  if (N <= 0.0) {
    throw std::domain_error("sigma_distortion: N must be positive");
  }
  return sigma_kappa(K / N, t, theta);
}

// tau_{K,N}^(t)(theta) = t^(1/N) * [sigma_{K/(N-1)}^(t)(theta)]^(1-1/N),
// with the conventions 0 * inf = 0 and x^0 = 1 (so N = 1 returns t).
inline ExtendedReal tau_distortion(double K, double N, double t,
                                   double theta) {
  detail::require_finite(K, "tau_distortion");
  detail::require_finite(N, "tau_distortion");
  detail::require_finite(t, "tau_distortion");
  if (N < 1.0) {
    throw std::domain_error("tau_distortion: N must be at least 1");
  }
  if (t < 0.0 || t > 1.0) {
    throw std::domain_error("tau_distortion: t must lie in [0, 1]");
  }
  if (N == 1.0) return ExtendedReal(t);
  ExtendedReal sigma = sigma_kappa(K / (N - 1.0), t, theta);
  ExtendedReal head = pow_convention(ExtendedReal(t), 1.0 / N);
  ExtendedReal tail = pow_convention(sigma, 1.0 - 1.0 / N);
  return times(head, tail);
}

// ---------------------------------------------------------------------------
// Stability margin: largest grid delta with
// r(K - delta, H - delta, N + delta) <= r(K, H, N) + epsilon.
// ---------------------------------------------------------------------------

inline double stability_margin(double K, double H, double N, double epsilon) {
  detail::require_finite(epsilon, "stability_margin");
  if (epsilon <= 0.0) {
    throw std::domain_error("stability_margin: epsilon must be positive");
  }
  ExtendedReal r = inradius_comparison_r(K, H, N);
  if (!r.is_finite()) {
    throw std::domain_error(
        "stability_margin: comparison radius is infinite for these "
        "parameters");
  }
  double target = r.value() + epsilon;
  double delta = 1.0;
  for (int k = 1; k <= 400; ++k) {
    delta *= 0.9;
    ExtendedReal perturbed = inradius_comparison_r(K - delta, H - delta,
                                                   N + delta);
    if (perturbed.is_finite() && perturbed.value() <= target) return delta;
  }
  throw std::runtime_error(
      "stability_margin: no admissible perturbation found on the grid");
}

}  // namespace needlecomp
