#pragma once

// Verification and construction of 1D needle densities: concavity-type
// curvature-dimension checks, the below-tangent envelope comparison, the
// Riccati logarithmic-derivative comparison, mean-curvature extraction from
// density samples, extremal (equality-case) densities, and backward
// mean-curvature estimates from level masses.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "needlecomp/comparison.hpp"
#include "needlecomp/extended_real.hpp"
#include "needlecomp/needle_density.hpp"

namespace needlecomp {

// ---------------------------------------------------------------------------
// Report types.
// ---------------------------------------------------------------------------

struct ConcavityReport {
  bool passed = true;
  // Largest signed violation found (RHS - LHS for the inequality LHS >= RHS,
  // i.e. positive means broken). +infinity marks an infinite-coefficient
  // breach.
  double worst_violation = -std::numeric_limits<double>::infinity();
  // (r0, t, r1) for the worst triple; for pointwise checks the location is
  // stored as (r, 0, r).
  std::array<double, 3> worst_triple = {0.0, 0.0, 0.0};
  double tolerance = 0.0;
  std::size_t checked_count = 0;

  void record(double violation, double r0, double t, double r1) {
    ++checked_count;
    if (violation > worst_violation) {
      worst_violation = violation;
      worst_triple = {r0, t, r1};
    }
  }
  void finalize(double tol) {
    tolerance = tol;
    passed = worst_violation <= tol;
  }
};

struct MeanCurvatureValue {
  ExtendedReal value;  // -infinity exactly when the density vanishes at 0
};

enum class Side { left, right };

// Which curvature normalization the one-sided contraction check uses for its
// distortion coefficient: kappa = K/(N-1) (matching the two-sided check) or
// kappa = K/N.
enum class McpSigmaConvention { n_minus_one, n };

// ---------------------------------------------------------------------------
// One-sided derivative estimation.
// ---------------------------------------------------------------------------

namespace detail {

// Neville extrapolation to step 0 through up to three one-sided difference
// quotients (deltas ascending). Exact for data whose quotients are
// polynomial in the step; O(delta^3) for smooth inputs with three points.
inline double extrapolate_to_zero(const std::vector<double>& deltas,
                                  std::vector<double> q) {
  std::size_t n = q.size();
  for (std::size_t level = 1; level < n; ++level) {
    for (std::size_t i = 0; i + level < n; ++i) {
      double d0 = deltas[i];
      double d1 = deltas[i + level];
      q[i] = (d1 * q[i] - d0 * q[i + 1]) / (d1 - d0);
    }
  }
  return q[0];
}

// One-sided derivative of sampled values at grid index `at`, from up to
// three same-side neighbors. Returns +/-infinity when the nearest neighbor's
// transformed value is infinite (e.g. log of a vanishing density); farther
// infinite samples merely shorten the window.
inline ExtendedReal one_sided_derivative_impl(
    const std::vector<double>& grid, const std::vector<double>& f,
    std::size_t at, Side side) {
  const std::size_t m = grid.size();
  std::vector<double> deltas, quotients;
  for (std::size_t k = 1; k <= 3; ++k) {
    std::size_t j;
    if (side == Side::left) {
      if (at < k) break;
      j = at - k;
    } else {
      if (at + k >= m) break;
      j = at + k;
    }
    double delta = std::abs(grid[j] - grid[at]);
    double q;
    if (side == Side::left) {
      q = (f[at] - f[j]) / delta;
    } else {
      q = (f[j] - f[at]) / delta;
    }
    if (std::isinf(q)) {
      // A vanishing sample inside the window: the one-sided derivative is
      // determined by the nearest such jump when it is the first neighbor;
      // otherwise stop the window before it.
      if (deltas.empty()) return ExtendedReal(q);
      break;
    }
    deltas.push_back(delta);
    quotients.push_back(q);
  }
  if (deltas.empty()) {
    throw std::logic_error("one_sided_derivative_impl: no usable neighbors");
  }
  return ExtendedReal(extrapolate_to_zero(deltas, std::move(quotients)));
}

inline std::size_t grid_index_of(const NeedleDensity& h, double at,
                                 const char* what) {
  const auto& grid = h.grid();
  auto it = std::lower_bound(grid.begin(), grid.end(),
                             at - 1e-12 * std::max(1.0, std::abs(at)));
  if (it != grid.end() &&
      std::abs(*it - at) <= 1e-12 * std::max(1.0, std::abs(at))) {
    return static_cast<std::size_t>(it - grid.begin());
  }
  throw std::invalid_argument(std::string(what) +
                              ": `at` must be a grid point");
}

}  // namespace detail

// One-sided derivative of log h at a grid point, by Neville extrapolation
// through up to three one-sided difference quotients. Conventions for the
// zero-extended density: a vanishing value at `at` gives -infinity (left) /
// +infinity (right); at the extreme grid point of the requested side the
// extension beyond the domain gives +infinity (left end) / -infinity
// (right end).
inline ExtendedReal one_sided_log_derivative(const NeedleDensity& h,
                                             double at, Side side) {
  std::size_t idx = detail::grid_index_of(h, at, "one_sided_log_derivative");
  if (h.values()[idx] == 0.0) {
    return side == Side::left ? ExtendedReal::neg_infinity()
                              : ExtendedReal::infinity();
  }
  if (side == Side::left && idx == 0) return ExtendedReal::infinity();
  if (side == Side::right && idx + 1 == h.size()) {
    return ExtendedReal::neg_infinity();
  }
  std::vector<double> logs(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    logs[i] = h.values()[i] > 0.0 ? std::log(h.values()[i])
                                  : -std::numeric_limits<double>::infinity();
  }
  return detail::one_sided_derivative_impl(h.grid(), logs, idx, side);
}

// Inner mean curvature of the crossing the density is parameterized around:
// the left logarithmic derivative at r = 0; -infinity when h(0) = 0.
inline MeanCurvatureValue inner_mean_curvature_from_density(
    const NeedleDensity& h) {
  return MeanCurvatureValue{one_sided_log_derivative(h, 0.0, Side::left)};
}

// ---------------------------------------------------------------------------
// Concavity-type interpolation checks.
// ---------------------------------------------------------------------------

// Two-sided check on the 1/(N-1) power scale over every grid triple
// r_i < r_j < r_k with t = (r_j - r_i)/(r_k - r_i):
//   u_j >= sigma^(1-t)(theta) u_i + sigma^(t)(theta) u_k,  theta = r_k - r_i,
// with kappa = K/(N-1). Enumeration stays on grid abscissae, where the
// equality cases are exact; the 0 * inf convention applies when an endpoint
// value vanishes while its coefficient is infinite.
inline ConcavityReport check_cd_density(const NeedleDensity& h, double K,
                                        double N, double tol = 1e-8) {
  if (N <= 1.0) throw std::domain_error("check_cd_density: N must exceed 1");
  if (h.size() < 3) {
    throw std::invalid_argument("check_cd_density: needs 3 distinct samples");
  }
  const double kappa = K / (N - 1.0);
  const auto& r = h.grid();
  const std::vector<double> u = h.power_values(N);
  const std::size_t m = r.size();
  ConcavityReport report;
  for (std::size_t i = 0; i + 2 < m; ++i) {
    for (std::size_t k = i + 2; k < m; ++k) {
      const double theta = r[k] - r[i];
      for (std::size_t j = i + 1; j < k; ++j) {
        const double t = (r[j] - r[i]) / theta;
        ExtendedReal c0 = sigma_kappa(kappa, 1.0 - t, theta);
        ExtendedReal c1 = sigma_kappa(kappa, t, theta);
        ExtendedReal rhs = times(c0, ExtendedReal(u[i])) +
                           times(c1, ExtendedReal(u[k]));
        double violation = rhs.is_pos_infinity()
                               ? std::numeric_limits<double>::infinity()
                               : rhs.value() - u[j];
        report.record(violation, r[i], t, r[k]);
      }
    }
  }
  report.finalize(tol);
  return report;
}

// One-sided contraction check over every grid pair in both orientations:
// with gamma running from r_p to r_q and the intermediate grid point at
// parameter t in (0,1),
//   u(gamma_t) >= sigma^(1-t)(|r_q - r_p|) u(r_p).
inline ConcavityReport check_mcp_density(
    const NeedleDensity& h, double K, double N, double tol = 1e-8,
    McpSigmaConvention convention = McpSigmaConvention::n_minus_one) {
  if (N <= 1.0) throw std::domain_error("check_mcp_density: N must exceed 1");
  if (h.size() < 3) {
    throw std::invalid_argument("check_mcp_density: needs 3 distinct samples");
  }
  const double kappa =
      convention == McpSigmaConvention::n_minus_one ? K / (N - 1.0) : K / N;
  const auto& r = h.grid();
  const std::vector<double> u = h.power_values(N);
  const std::size_t m = r.size();
  ConcavityReport report;
  auto check_oriented = [&](std::size_t p, std::size_t q, std::size_t j) {
    const double theta = std::abs(r[q] - r[p]);
    const double t = std::abs(r[j] - r[p]) / theta;
    ExtendedReal c = sigma_kappa(kappa, 1.0 - t, theta);
    ExtendedReal rhs = times(c, ExtendedReal(u[p]));
    double violation = rhs.is_pos_infinity()
                           ? std::numeric_limits<double>::infinity()
                           : rhs.value() - u[j];
    report.record(violation, r[p], t, r[q]);
  };
  for (std::size_t i = 0; i + 2 < m; ++i) {
    for (std::size_t k = i + 2; k < m; ++k) {
      for (std::size_t j = i + 1; j < k; ++j) {
        check_oriented(i, k, j);  // gamma from r_i toward r_k
        check_oriented(k, i, j);  // gamma from r_k toward r_i
      }
    }
  }
  report.finalize(tol);
  return report;
}

// ---------------------------------------------------------------------------
// Below-tangent envelope comparison.
// ---------------------------------------------------------------------------

struct EnvelopeResult {
  // Power-scale envelope: r -> u(0) cos_kappa(r) + slope * sin_kappa(r).
  std::function<double(double)> envelope;
  // Bound implied by the envelope's first zero. In forward orientation it
  // bounds b; in reverse orientation (density supported on [a, 0]) it
  // bounds -a. Infinite when h(0) = 0 or when the ball condition fails.
  ExtendedReal max_b = ExtendedReal::infinity();
  double slope = 0.0;   // one-sided derivative of h^{1/(N-1)} at 0
  bool reverse = false;  // true when the slope is the left derivative
  bool passed = true;
  double worst_violation = -std::numeric_limits<double>::infinity();
  double worst_location = 0.0;
};

// Dominance tolerance pinned for envelope verification on grids.
inline constexpr double kEnvelopeTol = 1e-8;

// Verifies h^{1/(N-1)} <= u(0) cos_kappa + m sin_kappa on the grid, where m
// is the one-sided derivative of the power-scale values at 0 (right-sided,
// or left-sided when the domain ends at 0) and kappa = K/(N-1). Any slope
// between the one-sided derivatives yields a valid bound, so orientation
// only selects which side supplies it.
inline EnvelopeResult comparison_envelope(const NeedleDensity& h, double K,
                                          double N) {
  if (N <= 1.0) {
    throw std::domain_error("comparison_envelope: N must exceed 1");
  }
  const double kappa = K / (N - 1.0);
  const auto& r = h.grid();
  const std::vector<double> u = h.power_values(N);
  const std::size_t z = h.zero_index();

  EnvelopeResult result;
  result.reverse = (z + 1 == h.size());  // no points to the right of 0
  Side side = result.reverse ? Side::left : Side::right;
  ExtendedReal slope =
      detail::one_sided_derivative_impl(r, u, z, side);
  if (!slope.is_finite()) {
    throw std::domain_error(
        "comparison_envelope: one-sided derivative at 0 is not finite");
  }
  result.slope = slope.value();

  const double u0 = u[z];
  const double m = result.slope;
  result.envelope = [u0, m, kappa](double rr) {
    return u0 * cos_kappa(kappa, rr) + m * sin_kappa(kappa, rr);
  };

  if (u0 > 0.0) {
    // The envelope's first zero: H chosen so the profile matches
    // s_{kappa,lambda} with lambda = -m/u0 forward, +m/u0 reverse.
    double lambda = result.reverse ? m / u0 : -m / u0;
    double Hval = lambda * (N - 1.0);
    result.max_b = inradius_comparison_r(K, Hval, N);
  } else {
    result.max_b = ExtendedReal::infinity();
  }

  for (std::size_t i = 0; i < u.size(); ++i) {
    double violation = u[i] - result.envelope(r[i]);
    if (violation > result.worst_violation) {
      result.worst_violation = violation;
      result.worst_location = r[i];
    }
  }
  result.passed = result.worst_violation <= kEnvelopeTol;
  return result;
}

// ---------------------------------------------------------------------------
// Riccati comparison.
// ---------------------------------------------------------------------------

// Compares the right logarithmic derivative of nonnegative samples u on
// [0, b] (u(0) = 1, u'' + kappa u <= 0 distributionally) against
// v'/v for v = cos_kappa + d sin_kappa, and checks b against v's first
// zero. The distributional inequality is verified through second divided
// differences with tolerance 10 * step^2; a breach is a contract violation
// and throws.
inline ConcavityReport riccati_compare(const NeedleDensity& u_samples,
                                       double kappa, double d, double tol) {
  detail::require_finite(kappa, "riccati_compare");
  detail::require_finite(d, "riccati_compare");
  const auto& r = u_samples.grid();
  const auto& u = u_samples.values();
  const std::size_t m = r.size();
  if (r.front() != 0.0) {
    throw std::invalid_argument("riccati_compare: domain must start at 0");
  }
  if (std::abs(u.front() - 1.0) > 1e-9) {
    throw std::invalid_argument("riccati_compare: u(0) must equal 1");
  }
  for (std::size_t i = 1; i + 1 < m; ++i) {
    double dm = r[i] - r[i - 1];
    double dp = r[i + 1] - r[i];
    double second = 2.0 * (u[i - 1] / (dm * (dm + dp)) - u[i] / (dm * dp) +
                           u[i + 1] / (dp * (dm + dp)));
    double step = std::max(dm, dp);
    if (second + kappa * u[i] > 10.0 * step * step) {
      throw std::invalid_argument(
          "riccati_compare: samples violate the concavity precondition "
          "u'' + kappa u <= 0");
    }
  }

  ConcavityReport report;
  // b must not outrun the comparison profile's first zero. v = cos_kappa +
  // d sin_kappa is s_{kappa,-d}, so its zero is the comparison radius for
  // lambda = -d.
  if (ball_condition(kappa, -d) != BallConditionCase::fails) {
    double lambda = -d;
    double rv;
    if (kappa > 0) {
      double sk = std::sqrt(kappa);
      rv = std::atan2(sk, lambda) / sk;
    } else if (kappa == 0.0) {
      rv = 1.0 / lambda;
    } else {
      double sk = std::sqrt(-kappa);
      rv = std::atanh(sk / lambda) / sk;
    }
    report.record(u_samples.b() - rv, 0.0, 0.0, rv);
  }

  auto v = [&](double rr) { return s_kappa_lambda(kappa, -d, rr); };
  auto v_prime = [&](double rr) {
    return s_kappa_lambda_prime(kappa, -d, rr);
  };
  // Pointwise bound where the derivative estimator has its full
  // three-neighbor window; with fewer neighbors the truncation bias of a
  // bare difference quotient (~ u'' * step / 2) can exceed tight tolerances
  // on branches with u'' > 0.
  for (std::size_t i = 0; i + 3 < m; ++i) {  // r in [0, b)
    if (u[i] == 0.0) continue;  // log derivative -infinity: trivially below
    double vr = v(r[i]);
    if (vr <= 0.0) {
      // Past the comparison profile's zero: already recorded via the length
      // check; the pointwise bound has no finite right-hand side here.
      continue;
    }
    ExtendedReal du =
        detail::one_sided_derivative_impl(r, u, i, Side::right);
    double lhs =
        du.is_neg_infinity() ? -std::numeric_limits<double>::infinity()
                             : du.value() / u[i];
    double rhs = v_prime(r[i]) / vr;
    report.record(lhs - rhs, r[i], 0.0, r[i]);
  }
  report.finalize(tol);
  return report;
}

// ---------------------------------------------------------------------------
// Extremal (equality-case) densities.
// ---------------------------------------------------------------------------

// h(r) = h0 * J(-r) on [-r*, 0], where r* is the comparison radius for
// (K, H, N) and J the comparison Jacobian. Uniform grid with exact
// endpoints.
inline NeedleDensity extremal_density(double K, double H, double N, double h0,
                                      int samples = 257) {
  if (!(h0 > 0.0)) {
    throw std::domain_error("extremal_density: h0 must be positive");
  }
  if (samples < 4) {
    throw std::domain_error("extremal_density: needs at least 4 samples");
  }
  ExtendedReal rstar = inradius_comparison_r(K, H, N);
  if (!rstar.is_finite()) {
    throw std::domain_error(
        "extremal_density: comparison radius is infinite for these "
        "parameters");
  }
  const double r = rstar.value();
  std::vector<double> grid(samples), values(samples);
  for (int i = 0; i < samples; ++i) {
    double g = -r * (1.0 - static_cast<double>(i) / (samples - 1));
    if (i + 1 == samples) g = 0.0;
    grid[i] = g;
    values[i] = h0 * jacobian(K, H, N, -g);
  }
  return NeedleDensity(std::move(grid), std::move(values));
}

// ---------------------------------------------------------------------------
// Laplacian-type comparison for the reversed density.
// ---------------------------------------------------------------------------

// With h-tilde(r) = h(-r), verifies on interior grid points r in (0, -a):
//   d+/dr log h-tilde(r) <= (N-1) s'_{kappa,chi}(r) / s_{kappa,chi}(r),
// kappa = K/(N-1). The left-hand side is computed on the power scale,
// (N-1) d-minus(u)/u at -r, which keeps equality cases exact. Points are
// checked only where three same-side neighbors exist, since the estimator's
// accuracy guarantee needs a full window. Requires the density's inner mean
// curvature to reach chi*(N-1) up to tol.
inline ConcavityReport laplace_comparison_check(const NeedleDensity& h,
                                                double K, double N,
                                                double chi,
                                                double tol = 1e-4) {
  if (N <= 1.0) {
    throw std::domain_error("laplace_comparison_check: N must exceed 1");
  }
  detail::require_finite(chi, "laplace_comparison_check");
  ExtendedReal mc = inner_mean_curvature_from_density(h).value;
  double hypothesis = chi * (N - 1.0);
  if (!mc.is_pos_infinity() &&
      (mc.is_neg_infinity() || mc.value() < hypothesis - tol)) {
    throw std::invalid_argument(
        "laplace_comparison_check: mean-curvature hypothesis fails");
  }
  const double kappa = K / (N - 1.0);
  const auto& g = h.grid();
  const std::vector<double> u = h.power_values(N);
  ConcavityReport report;
  for (std::size_t i = 3; i < h.size(); ++i) {  // need 3 left neighbors
    if (!(g[i] < 0.0)) break;                   // r = -g[i] must be positive
    if (g[i] <= h.a()) continue;                // open interval (0, -a)
    double rr = -g[i];
    if (u[i] == 0.0) continue;  // lhs is -infinity: trivially below
    double s = s_kappa_lambda(kappa, chi, rr);
    if (s <= 0.0) {
      report.record(std::numeric_limits<double>::infinity(), rr, 0.0, rr);
      continue;
    }
    ExtendedReal du = detail::one_sided_derivative_impl(g, u, i, Side::left);
    double lhs;
    if (du.is_pos_infinity()) {
      lhs = -std::numeric_limits<double>::infinity();  // -d-minus(log h)
    } else if (du.is_neg_infinity()) {
      lhs = std::numeric_limits<double>::infinity();
    } else {
      lhs = -(N - 1.0) * du.value() / u[i];
    }
    double rhs = (N - 1.0) * s_kappa_lambda_prime(kappa, chi, rr) / s;
    report.record(lhs - rhs, rr, 0.0, rr);
  }
  report.finalize(tol);
  return report;
}

// ---------------------------------------------------------------------------
// Length bound from the one-sided contraction hypothesis.
// ---------------------------------------------------------------------------

struct McpBoundResult {
  ExtendedReal max_length = ExtendedReal::infinity();
  double measured_length = 0.0;  // -a of the supplied density
  bool passed = true;
};

inline constexpr double kLengthBoundTol = 1e-9;

// Never throws on violated hypotheses: callers construct adversarial
// densities on purpose and read `passed`.
inline McpBoundResult mcp_inradius_bound(const NeedleDensity& h, double K,
                                         double N, double H) {
  McpBoundResult result;
  result.max_length = inradius_comparison_r(K, H, N);
  result.measured_length = -h.a();
  result.passed =
      !result.max_length.is_finite() ||
      result.measured_length <= result.max_length.value() + kLengthBoundTol;
  return result;
}

// ---------------------------------------------------------------------------
// Backward mean curvature from level masses.
// ---------------------------------------------------------------------------

struct BackwardCurvatureEstimate {
  ExtendedReal limsup_estimate;  // max difference quotient over the window
  ExtendedReal liminf_estimate;  // min difference quotient over the window
};

// Difference quotients (p(t) - p(0)) / (t * p(0)) for sampled level masses
// at t <= 0, aggregated over the `window_points` samples nearest 0
// (0 = use all). Samples must include t = 0 with p(0) > 0.
inline BackwardCurvatureEstimate backward_mc_window_estimates(
    const std::vector<std::pair<double, double>>& level_masses,
    std::size_t window_points = 0) {
  std::vector<std::pair<double, double>> samples = level_masses;
  std::sort(samples.begin(), samples.end());
  if (samples.empty() || samples.back().first != 0.0) {
    throw std::invalid_argument(
        "backward_mc_window_estimates: samples must include t = 0");
  }
  double p0 = samples.back().second;
  if (!(p0 > 0.0)) {
    throw std::invalid_argument(
        "backward_mc_window_estimates: zero surface mass at t = 0");
  }
  if (samples.size() < 2) {
    throw std::invalid_argument(
        "backward_mc_window_estimates: needs at least one t < 0 sample");
  }
  std::size_t count = samples.size() - 1;  // negative-t samples
  std::size_t use = window_points == 0 ? count : std::min(window_points, count);
  double best_max = -std::numeric_limits<double>::infinity();
  double best_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = count - use; i < count; ++i) {
    double t = samples[i].first;
    if (!(t < 0.0)) {
      throw std::invalid_argument(
          "backward_mc_window_estimates: duplicate or positive t sample");
    }
    double q = (samples[i].second - p0) / (t * p0);
    best_max = std::max(best_max, q);
    best_min = std::min(best_min, q);
  }
  return BackwardCurvatureEstimate{ExtendedReal(best_max),
                                   ExtendedReal(best_min)};
}

// The backward estimate proper: the limsup side of the window.
inline ExtendedReal backward_mc_from_level_masses(
    const std::vector<std::pair<double, double>>& level_masses,
    std::size_t window_points = 0) {
  return backward_mc_window_estimates(level_masses, window_points)
      .limsup_estimate;
}

}  // namespace needlecomp
