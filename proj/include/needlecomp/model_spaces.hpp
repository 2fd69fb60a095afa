#pragma once

// Warped-product model geometries: Euclidean cones, hyperbolic cones and
// spherical suspensions over a finite base sample, together with the
// discretization used to turn a truncated model into a DiscreteMMS.
//
// Distances use the cancellation-free forms
//   flat        d^2      = (t-s)^2 + 4 t s sin^2(theta/2)
//   hyperbolic  cosh d-1 = 2 sinh^2((t-s)/2) + 2 sinh t sinh s sin^2(theta/2)
//   spherical   1-cos d  = 2 sin^2((t-s)/2) + 2 sin t sin s sin^2(theta/2)
// with theta the base distance clamped to pi. At t = 0 (and t = pi for the
// suspension) the base coordinate drops out of the formulas, so all apex
// representatives are at mutual distance zero: the identification is
// automatic.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "needlecomp/comparison.hpp"
#include "needlecomp/discrete_mms.hpp"

namespace needlecomp {

enum class ModelKind { euclidean_cone, hyperbolic_cone, spherical_suspension };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::euclidean_cone:
      return "euclidean_cone";
    case ModelKind::hyperbolic_cone:
      return "hyperbolic_cone";
    case ModelKind::spherical_suspension:
      return "spherical_suspension";
  }
  return "?";
}

struct ModelSpace {
  ModelKind kind = ModelKind::euclidean_cone;
  double n_exp = 1.0;                           // radial density exponent
  std::shared_ptr<const DiscreteMMS> base;      // optional base sample

  // Upper end of the radial domain: pi for the suspension, unbounded else.
  double radial_max() const {
    return kind == ModelKind::spherical_suspension
               ? 3.14159265358979323846
               : std::numeric_limits<double>::infinity();
  }
};

inline ModelSpace make_model_space(
    ModelKind kind, double n_exp,
    std::shared_ptr<const DiscreteMMS> base = nullptr) {
  if (!std::isfinite(n_exp) || n_exp < 0.0)
    throw std::domain_error("density exponent must be finite and >= 0");
  return ModelSpace{kind, n_exp, std::move(base)};
}

struct ConePoint {
  double t = 0.0;      // radial coordinate
  std::size_t x = 0;   // base point index
};

namespace detail {

inline void require_radial(const ModelSpace& space, double t) {
  if (!std::isfinite(t) || t < 0.0 || t > space.radial_max())
    throw std::domain_error("radial coordinate outside the model domain");
}

inline double cone_distance_tq(ModelKind kind, double t, double s, double q) {
  // q = sin^2(theta/2) with theta the clamped base distance.
  switch (kind) {
    case ModelKind::euclidean_cone: {
      const double dr = t - s;
      return std::sqrt(std::max(0.0, dr * dr + 4.0 * t * s * q));
    }
    case ModelKind::hyperbolic_cone: {
      const double m = std::sinh(0.5 * (t - s));
      const double w =
          2.0 * (m * m + std::sinh(t) * std::sinh(s) * q);
      return std::log1p(w + std::sqrt(std::max(0.0, w * (w + 2.0))));
    }
    case ModelKind::spherical_suspension: {
      const double m = std::sin(0.5 * (t - s));
      const double w = 2.0 * (m * m + std::sin(t) * std::sin(s) * q);
      return 2.0 * std::asin(std::min(1.0, std::sqrt(std::max(0.0, 0.5 * w))));
    }
  }
  return 0.0;
}

}  // namespace detail

inline double cone_distance(const ModelSpace& space, ConePoint p,
                            ConePoint q) {
  detail::require_radial(space, p.t);
  detail::require_radial(space, q.t);
  if (!space.base)
    throw std::invalid_argument("model space carries no base sample");
  if (p.x >= space.base->size() || q.x >= space.base->size())
    throw std::out_of_range("base point index");
  const double pi = 3.14159265358979323846;
  const double theta = std::min(space.base->distance(p.x, q.x), pi);
  const double h = std::sin(0.5 * theta);
  return detail::cone_distance_tq(space.kind, p.t, q.t, h * h);
}

// Density of the radial marginal: t^N, sinh(t)^N or sin(t)^N.
inline double radial_density(const ModelSpace& space, double t) {
  detail::require_radial(space, t);
  switch (space.kind) {
    case ModelKind::euclidean_cone:
      return std::pow(t, space.n_exp);
    case ModelKind::hyperbolic_cone:
      return std::pow(std::sinh(t), space.n_exp);
    case ModelKind::spherical_suspension:
      return std::pow(std::sin(t), space.n_exp);
  }
  return 0.0;
}

// Depth of a point of the truncated model {t <= R} below the cap: the
// distance to the complement, R - t. Positive inside, zero on the cap.
inline double signed_distance_in_truncated_cone(ConePoint p, double R) {
  if (!std::isfinite(R) || R <= 0.0)
    throw std::domain_error("truncation radius must be positive and finite");
  if (!std::isfinite(p.t) || p.t < 0.0 || p.t > R)
    throw std::domain_error("point lies outside the truncated cone");
  return R - p.t;
}

// Midpoint-rule discretization of the truncated model {t <= R}: radial
// layers t_i = (i + 1/2) dt (dt = R / radial_steps) crossed with the base
// sample, plus the apex with weight zero. pad_layers extra layers continue
// the grid beyond R with the same rule; they carry genuine model measure and
// give level-set machinery a sampled exterior. Weight of (t_i, x_j) is
// radial_density(t_i) * dt * w_j. Point count is capped at 1e5.
inline DiscreteMMS truncated_cone_sample(const ModelSpace& space, double R,
                                         int radial_steps,
                                         const DiscreteMMS& base_sample,
                                         int pad_layers = 0) {
  if (!std::isfinite(R) || R <= 0.0 || R > space.radial_max())
    throw std::domain_error("truncation radius outside the model domain");
  if (radial_steps < 4)
    throw std::domain_error("need at least 4 radial steps");
  if (pad_layers < 0) throw std::invalid_argument("pad_layers must be >= 0");
  const std::size_t base_n = base_sample.size();
  const double dt = R / radial_steps;
  const std::size_t layers =
      static_cast<std::size_t>(radial_steps) + static_cast<std::size_t>(pad_layers);
  const double t_top = (static_cast<double>(layers) - 0.5) * dt;
  if (t_top > space.radial_max())
    throw std::domain_error("padded radial grid leaves the model domain");
  const std::size_t n = 1 + layers * base_n;
  if (n > 100000)
    throw std::length_error("sample size cap exceeded (" + std::to_string(n) +
                            " points > 100000)");

  ConeStructure cone;
  switch (space.kind) {
    case ModelKind::euclidean_cone:
      cone.geometry = ConeGeometry::flat;
      break;
    case ModelKind::hyperbolic_cone:
      cone.geometry = ConeGeometry::hyperbolic;
      break;
    case ModelKind::spherical_suspension:
      cone.geometry = ConeGeometry::spherical;
      break;
  }
  cone.base_n = base_n;
  cone.base_half_sq.resize(base_n * base_n);
  const double pi = 3.14159265358979323846;
  for (std::size_t a = 0; a < base_n; ++a)
    for (std::size_t b = 0; b < base_n; ++b) {
      const double theta = std::min(base_sample.distance(a, b), pi);
      const double h = std::sin(0.5 * theta);
      cone.base_half_sq[a * base_n + b] = h * h;
    }

  cone.radial.resize(n);
  cone.base_index.resize(n);
  std::vector<double> weights(n);
  std::vector<std::string> labels(n);
  cone.radial[0] = 0.0;
  cone.base_index[0] = 0;
  weights[0] = 0.0;
  labels[0] = "tip";
  std::size_t idx = 1;
  ModelSpace density_space = space;  // radial_density needs no base
  for (std::size_t i = 0; i < layers; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * dt;
    const double rho = radial_density(density_space, t);
    for (std::size_t j = 0; j < base_n; ++j, ++idx) {
      cone.radial[idx] = t;
      cone.base_index[idx] = static_cast<int>(j);
      weights[idx] = rho * dt * base_sample.weight(j);
      labels[idx] = "r" + std::to_string(i) + ":b" + std::to_string(j);
    }
  }
  return DiscreteMMS(std::move(cone), std::move(weights), std::move(labels));
}

// Ball-mass consistency about the apex: the ratio of the model masses of
// B_R(tip) and B_r(tip) must match the ratio of the comparison profiles
// integral_0^. sin_{K/(N-1)}(u)^{N-1} du. The (K, N) pair must match the
// model family: (0, N+1), (-N, N+1) or (N, N+1) in terms of the density
// exponent. Both sides are evaluated with composite Simpson quadrature.
inline bool volume_cone_check(const ModelSpace& space, double K, double N,
                              double r, double R, double tol,
                              int quadrature_nodes = 10001) {
  const double tol_match = 1e-9 * std::max(1.0, std::abs(space.n_exp) + 1.0);
  double expected_K = 0.0;
  switch (space.kind) {
    case ModelKind::euclidean_cone:
      expected_K = 0.0;
      break;
    case ModelKind::hyperbolic_cone:
      expected_K = -space.n_exp;
      break;
    case ModelKind::spherical_suspension:
      expected_K = space.n_exp;
      break;
  }
  if (std::abs(K - expected_K) > tol_match ||
      std::abs(N - (space.n_exp + 1.0)) > tol_match)
    throw std::invalid_argument(
        "curvature-dimension parameters do not match the model family");
  if (!(N > 1.0)) throw std::domain_error("dimension parameter must exceed 1");
  if (!std::isfinite(r) || !std::isfinite(R) || r <= 0.0 ||
      R > space.radial_max())
    throw std::domain_error("radii outside the model domain");
  if (r > R) throw std::domain_error("inner radius exceeds outer radius");
  if (quadrature_nodes < 5)
    throw std::invalid_argument("need at least 5 quadrature nodes");
  if (r == R) return true;

  const auto simpson = [&](double b, auto&& f) {
    std::size_t intervals = static_cast<std::size_t>(quadrature_nodes - 1);
    if (intervals % 2) ++intervals;
    const double h = b / static_cast<double>(intervals);
    double acc = f(0.0) + f(b);
    for (std::size_t k = 1; k < intervals; ++k)
      acc += f(h * static_cast<double>(k)) * (k % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
  };
  ModelSpace density_space = space;
  const auto rho = [&](double t) { return radial_density(density_space, t); };
  const double kappa = K / (N - 1.0);
  const auto profile = [&](double t) {
    return std::pow(std::max(0.0, sin_kappa(kappa, t)), N - 1.0);
  };
  const double lhs = simpson(R, rho) / simpson(r, rho);
  const double rhs = simpson(R, profile) / simpson(r, profile);
  return std::abs(lhs - rhs) <= tol * std::max(1.0, std::abs(rhs));
}

// Model family on which the radius bound is attained: for chi in {1, 0, 2}
// scaled curvature K = 0, N-1, -(N-1) the witness is the truncation of the
// matching cone/suspension at exactly the comparison radius, whose inradius
// equals that radius.
struct SharpnessWitness {
  ModelSpace space;
  double R = 0.0;
  double achieved_inradius = 0.0;
};

inline SharpnessWitness sharpness_witness(double K, double chi, double N) {
  if (!(N > 1.0) || !std::isfinite(N))
    throw std::domain_error("dimension parameter must exceed 1");
  const double tol_match = 1e-9 * std::max(1.0, N - 1.0);
  ModelKind kind;
  if (std::abs(K) <= tol_match) {
    kind = ModelKind::euclidean_cone;
  } else if (std::abs(K - (N - 1.0)) <= tol_match) {
    kind = ModelKind::spherical_suspension;
  } else if (std::abs(K + (N - 1.0)) <= tol_match) {
    kind = ModelKind::hyperbolic_cone;
  } else {
    throw std::invalid_argument(
        "no cone/suspension witness for this curvature bound: K must be "
        "0, N-1 or -(N-1)");
  }
  const ExtendedReal r = inradius_comparison_r(K, chi * (N - 1.0), N);
  if (!r.is_finite())
    throw std::domain_error(
        "ball condition fails: no finite comparison radius to attain");
  SharpnessWitness w;
  w.space = make_model_space(kind, N - 1.0);
  w.R = r.value();
  w.achieved_inradius = r.value();
  return w;
}

// ---------------------------------------------------------------------------
// Built-in base samples.
// ---------------------------------------------------------------------------

// m equally spaced points on the unit circle with arc-length distances
// (diameter pi when m is even) and uniform weights summing to 2 pi.
inline DiscreteMMS circle_base(int m) {
  if (m < 1) throw std::invalid_argument("circle base needs >= 1 points");
  const double pi = 3.14159265358979323846;
  const std::size_t n = static_cast<std::size_t>(m);
  std::vector<double> metric(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double k = static_cast<double>(j - i);
      const double arc =
          2.0 * pi * std::min(k, static_cast<double>(n) - k) /
          static_cast<double>(n);
      metric[i * n + j] = metric[j * n + i] = arc;
    }
  std::vector<double> weights(n, 2.0 * pi / static_cast<double>(n));
  return DiscreteMMS(n, std::move(metric), std::move(weights));
}

// m points of a Fibonacci lattice on the unit sphere with great-circle
// distances and uniform weights summing to 4 pi.
inline DiscreteMMS sphere_base(int m) {
  if (m < 1) throw std::invalid_argument("sphere base needs >= 1 points");
  const double pi = 3.14159265358979323846;
  const std::size_t n = static_cast<std::size_t>(m);
  const double golden = pi * (3.0 - std::sqrt(5.0));
  std::vector<double> px(n), py(n), pz(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double z =
        1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(n);
    const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(k);
    px[k] = rad * std::cos(phi);
    py[k] = rad * std::sin(phi);
    pz[k] = z;
  }
  std::vector<double> metric(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dot = px[i] * px[j] + py[i] * py[j] + pz[i] * pz[j];
      const double d = std::acos(std::min(1.0, std::max(-1.0, dot)));
      metric[i * n + j] = metric[j * n + i] = d;
    }
  std::vector<double> weights(n, 4.0 * pi / static_cast<double>(n));
  return DiscreteMMS(n, std::move(metric), std::move(weights));
}

// Single-point base with unit weight (cone over it = a ray).
inline DiscreteMMS point_base() {
  return DiscreteMMS(1, {0.0}, {1.0});
}

// m midpoints of a uniform partition of [0, pi] with |.| distances and
// uniform weights summing to pi.
inline DiscreteMMS path_base(int m) {
  if (m < 1) throw std::invalid_argument("path base needs >= 1 points");
  const double pi = 3.14159265358979323846;
  const std::size_t n = static_cast<std::size_t>(m);
  std::vector<double> metric(n * n, 0.0);
  const double step = pi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = step * static_cast<double>(j - i);
      metric[i * n + j] = metric[j * n + i] = d;
    }
  std::vector<double> weights(n, step);
  return DiscreteMMS(n, std::move(metric), std::move(weights));
}

}  // namespace needlecomp
