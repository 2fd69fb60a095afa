#pragma once

// Random families of valid concavity-type densities used across the test
// suites. Two constructions:
//
//  * extremal instances: h(r) = h0 * (s_{kappa,lambda}(-r))^{N-1} on
//    [-r*, 0] — the equality case of the comparison machinery;
//  * min-of-two instances: h = min(u1, u2)^{N-1} where each u_i solves
//    u'' + kappa u = 0 and stays positive on the domain. Each solution
//    saturates the interpolation inequality, so their pointwise minimum
//    satisfies it, giving a genuinely curved valid density with a kink.
//
// The kink is kept away from 0 so one-sided derivative estimates at the
// crossing see a single smooth branch.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "needlecomp/comparison.hpp"
#include "needlecomp/needle_checks.hpp"
#include "needlecomp/needle_density.hpp"

namespace testgen {

struct CdInstance {
  needlecomp::NeedleDensity h;
  double K;
  double N;
  // Location of the concavity kink when the density is a genuine min of two
  // branches; NaN for single-branch instances.
  double crossing = std::numeric_limits<double>::quiet_NaN();
};

inline double uniform(std::mt19937& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Draws (kappa, lambda) satisfying the ball condition with margin, plus N.
struct TripleDraw {
  double kappa, lambda, N, K, H;
};

inline TripleDraw draw_valid_triple(std::mt19937& rng) {
  TripleDraw d;
  d.N = uniform(rng, 1.5, 4.0);
  d.lambda = uniform(rng, 0.5, 2.0);
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0:
      d.kappa = uniform(rng, 0.1, 2.0);
      break;
    case 1:
      d.kappa = 0.0;
      break;
    default: {
      double cap = std::min(2.0, (d.lambda - 0.1) * (d.lambda - 0.1));
      d.kappa = -uniform(rng, 0.05 * cap, cap);
      break;
    }
  }
  d.K = d.kappa * (d.N - 1.0);
  d.H = d.lambda * (d.N - 1.0);
  return d;
}

inline CdInstance make_extremal_instance(std::mt19937& rng,
                                         int samples = 257) {
  TripleDraw t = draw_valid_triple(rng);
  double h0 = uniform(rng, 0.5, 2.0);
  return CdInstance{needlecomp::extremal_density(t.K, t.H, t.N, h0, samples),
                    t.K, t.N};
}

namespace detail {

// First positive zero of cos_kappa + d sin_kappa, +infinity if none.
inline double positive_window(double kappa, double d) {
  needlecomp::ExtendedReal z = needlecomp::ExtendedReal::infinity();
  double lambda = -d;
  if (needlecomp::ball_condition(kappa, lambda) !=
      needlecomp::BallConditionCase::fails) {
    if (kappa > 0) {
      double sk = std::sqrt(kappa);
      z = std::atan2(sk, lambda) / sk;
    } else if (kappa == 0.0) {
      z = 1.0 / lambda;
    } else {
      double sk = std::sqrt(-kappa);
      z = std::atanh(sk / lambda) / sk;
    }
  } else if (kappa > 0) {
    z = M_PI / std::sqrt(kappa);  // pessimistic cap; a zero always exists
  }
  return z.is_finite() ? z.value() : std::numeric_limits<double>::infinity();
}

// Grid on [a, b] through an exact 0, roughly uniform.
inline std::vector<double> grid_through_zero(double a, double b, int m) {
  int m_left = std::max(2, static_cast<int>(std::lround(m * (-a) / (b - a))));
  m_left = std::min(m_left, m - 2);
  int m_right = m - 1 - m_left;
  std::vector<double> g;
  g.reserve(m);
  for (int i = 0; i <= m_left; ++i) {
    double r = a * (1.0 - static_cast<double>(i) / m_left);
    if (i == m_left) r = 0.0;
    g.push_back(r);
  }
  for (int j = 1; j <= m_right; ++j) {
    g.push_back(b * static_cast<double>(j) / m_right);
  }
  return g;
}

}  // namespace detail

// force_flat: draw kappa = 0 (power-scale-affine branches, exact arithmetic).
inline CdInstance make_min_of_two_instance(std::mt19937& rng, int samples,
                                           bool force_flat = false) {
  double N = uniform(rng, 1.5, 4.0);
  double kappa = force_flat ? 0.0 : uniform(rng, -2.0, 2.0);
  double d1 = uniform(rng, -1.5, 1.5);
  double d2 = uniform(rng, -1.5, 1.5);
  if (std::abs(d1 - d2) < 0.2) d2 = d1 + (d2 >= d1 ? 0.2 : -0.2);

  auto window = [&](double d) {
    return std::make_pair(detail::positive_window(kappa, -d),   // left of 0
                          detail::positive_window(kappa, d));   // right of 0
  };
  auto [l1, r1] = window(d1);
  auto [l2, r2] = window(d2);
  double neg_a = 0.85 * std::min({l1, l2, 1.76});
  double b = 0.85 * std::min({r1, r2, 1.76});
  neg_a = std::max(neg_a * uniform(rng, 0.6, 1.0), 0.25);
  b = std::max(b * uniform(rng, 0.6, 1.0), 0.25);
  double span = neg_a + b;

  auto u1 = [&](double r) {
    return needlecomp::cos_kappa(kappa, r) +
           d1 * needlecomp::sin_kappa(kappa, r);
  };
  auto u2_shape = [&](double r) {
    return needlecomp::cos_kappa(kappa, r) +
           d2 * needlecomp::sin_kappa(kappa, r);
  };

  // Crossing location away from 0 and away from the endpoints; fall back to
  // the single-branch density when no admissible spot is found.
  std::optional<double> rc;
  for (int attempt = 0; attempt < 20; ++attempt) {
    double mag = uniform(rng, 0.12, 0.45) * span;
    double cand = (std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0) * mag;
    if (cand > -0.9 * neg_a && cand < 0.9 * b) {
      rc = cand;
      break;
    }
  }
  double c2 = 0.0;
  if (rc && u2_shape(*rc) > 0.0) {
    c2 = u1(*rc) / u2_shape(*rc);
  } else {
    rc.reset();
  }

  std::vector<double> grid = detail::grid_through_zero(-neg_a, b, samples);
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double u = u1(grid[i]);
    if (rc) u = std::min(u, c2 * u2_shape(grid[i]));
    values[i] = std::pow(std::max(u, 0.0), N - 1.0);
  }
  return CdInstance{needlecomp::NeedleDensity(std::move(grid),
                                              std::move(values)),
                    kappa * (N - 1.0), N,
                    rc ? *rc : std::numeric_limits<double>::quiet_NaN()};
}

}  // namespace testgen
