#pragma once

// Needle decomposition of a finite metric measure space.
//
// Given a subset O, the signed distance field u orders the space along the
// transport relation (pairs where u grows at metric speed). Finite samples
// branch generically, so instead of discarding branch points we extract
// maximal chains greedily: repeatedly take the longest remaining chain in
// the transport DAG (ties broken toward the lexicographically smallest id
// sequence), assign its points to a ray, and continue until only fragments
// shorter than min_chain_points remain. Each ray is parametrized by arc
// length with 0 at its crossing of the zero level S = {u = 0} (linear
// interpolation of u between the straddling neighbors).
//
// Pairs that straddle S are admitted with a relaxed tolerance (cross_gap,
// default twice the sample resolution): the true interface lies between the
// sampled classes, which offsets u by up to one grid layer on each side.
//
// Conditional densities are histogram estimates along each ray: bin width
// defaults to span/sqrt(points), snapped to the nearest multiple of the
// median spacing so uniform chains fill bins evenly, and aligned so that 0
// is a bin center. For rays that reach the surface, the width is refitted
// so the outermost cell edge lands on the data support edge (last sample
// plus half a spacing): the cell holding the surface is then fully covered
// and its height is an unbiased local average. Densities are normalized to
// unit integral (rectangle rule over the uniform cells), and the ray's
// quotient weight is its assigned mass, so sum_rays q_ray * integral(h_ray)
// equals the assigned mass exactly up to float summation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "needlecomp/comparison.hpp"
#include "needlecomp/discrete_mms.hpp"
#include "needlecomp/extended_real.hpp"
#include "needlecomp/needle_checks.hpp"
#include "needlecomp/needle_density.hpp"
#include "needlecomp/transport.hpp"

namespace needlecomp {

struct DecompositionConfig {
  double transport_tol = 1e-6;
  // Extra tolerance for pairs straddling the zero level; negative means
  // "auto": twice the sample resolution.
  double cross_gap_tol = -1.0;
  // Chains shorter than this stay unassigned.
  std::size_t min_chain_points = 4;
  // Above this unassigned-mass fraction the decomposition is flagged.
  double max_unassigned_fraction = 0.2;
};

struct Ray {
  std::vector<std::uint32_t> points;  // chain ids in transport order
  std::vector<double> params;        // arc length, 0 at the S-crossing anchor
  double mass = 0.0;                 // assigned mass (the quotient weight q)
  bool crosses_s = false;
  bool inner_only = false;
  bool outer_only = false;
  bool touches_s = false;  // outer-only chain starting within the gap scale
  std::optional<NeedleDensity> density;  // filled by conditional_densities
  double surface_mass = 0.0;             // h(0) * mass where meaningful
};

struct RayDecomposition {
  std::vector<Ray> rays;
  std::vector<std::int32_t> assignment;  // ray index per point, -1 unassigned
  double total_mass = 0.0;
  double assigned_mass = 0.0;
  double unassigned_mass = 0.0;
  double resolution = 0.0;
  double cross_gap = 0.0;
  double transport_tol = 0.0;
  SignedDistanceField field;
  std::vector<std::string> warnings;
};

inline RayDecomposition ray_decomposition(const DiscreteMMS& space,
                                          const SubsetSpec& omega,
                                          const DecompositionConfig& config =
                                              DecompositionConfig{}) {
  omega.validate(space);
  if (!(config.transport_tol >= 0.0) || !std::isfinite(config.transport_tol))
    throw std::domain_error("transport tolerance must be finite and >= 0");
  if (config.min_chain_points < 2)
    throw std::invalid_argument("chains need at least 2 points");

  RayDecomposition out;
  out.transport_tol = config.transport_tol;
  out.resolution = space.sample_resolution();
  out.cross_gap = config.cross_gap_tol < 0.0 ? 2.0 * out.resolution
                                             : config.cross_gap_tol;
  out.field = signed_distance(space, omega);
  const std::vector<double>& u = out.field.u;
  const std::size_t n = space.size();

  double span = 0.0;
  {
    const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
    span = *hi - *lo;
  }
  const double tol = config.transport_tol;
  const double slack = out.cross_gap + tol * std::max(1.0, span) + 1e-12;

  // Transport DAG edges (a -> b with u[b] >= u[a]); zero-length links are
  // dropped so chain parameters stay strictly increasing.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::vector<double> edge_len;
  space.for_pairs_with_gap_at_most(
      u, slack, [&](std::size_t a, std::size_t b, double d) {
        detail::check_lipschitz_pair(u[a], u[b], d);
        if (d <= 0.0) return;
        const double gap = u[b] - u[a];
        const double tau = tol * std::max(1.0, d);
        const bool straddle = u[a] < 0.0 && u[b] > 0.0;
        const double allowance = straddle ? out.cross_gap + tau : tau;
        if (std::abs(gap - d) <= allowance) {
          edges.emplace_back(static_cast<std::uint32_t>(a),
                             static_cast<std::uint32_t>(b));
          edge_len.push_back(d);
        }
      });

  // Topological order by (u, id); edges ascend strictly in it.
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (u[a] != u[b]) return u[a] < u[b];
    return a < b;
  });
  std::vector<std::uint32_t> head(n + 1, 0);
  for (const auto& e : edges) ++head[e.first + 1];
  for (std::size_t i = 0; i < n; ++i) head[i + 1] += head[i];
  std::vector<std::uint32_t> succ(edges.size());
  {
    std::vector<std::uint32_t> cursor(head.begin(), head.end() - 1);
    for (const auto& e : edges) succ[cursor[e.first]++] = e.second;
  }

  out.assignment.assign(n, -1);
  std::vector<char> alive(n, 1);
  std::vector<std::uint32_t> f(n, 0);
  while (true) {
    // Longest chain among alive nodes (DP in reverse topological order).
    std::uint32_t fmax = 0;
    for (std::size_t pos = n; pos-- > 0;) {
      const std::uint32_t i = order[pos];
      if (!alive[i]) {
        f[i] = 0;
        continue;
      }
      std::uint32_t best = 0;
      for (std::uint32_t e = head[i]; e < head[i + 1]; ++e) {
        const std::uint32_t j = succ[e];
        if (alive[j] && f[j] > best) best = f[j];
      }
      f[i] = best + 1;
      if (f[i] > fmax) fmax = f[i];
    }
    if (fmax < config.min_chain_points) break;
    std::uint32_t start = 0;
    bool found = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (alive[i] && f[i] == fmax) {
        start = static_cast<std::uint32_t>(i);
        found = true;
        break;
      }
    }
    if (!found) break;  // unreachable
    Ray ray;
    std::uint32_t cur = start;
    ray.points.push_back(cur);
    while (f[cur] > 1) {
      std::uint32_t next = 0;
      bool have = false;
      for (std::uint32_t e = head[cur]; e < head[cur + 1]; ++e) {
        const std::uint32_t j = succ[e];
        if (alive[j] && f[j] == f[cur] - 1 && (!have || j < next)) {
          next = j;
          have = true;
        }
      }
      if (!have) break;  // unreachable on a consistent DP
      ray.points.push_back(next);
      cur = next;
    }
    for (std::uint32_t p : ray.points) {
      alive[p] = 0;
      out.assignment[p] = static_cast<std::int32_t>(out.rays.size());
    }
    out.rays.push_back(std::move(ray));
  }

  // Parameters, flags and masses.
  for (Ray& ray : out.rays) {
    const std::size_t m = ray.points.size();
    ray.params.resize(m);
    ray.params[0] = 0.0;
    for (std::size_t k = 1; k < m; ++k)
      ray.params[k] =
          ray.params[k - 1] + space.distance(ray.points[k - 1], ray.points[k]);
    ray.mass = 0.0;
    for (std::uint32_t p : ray.points) ray.mass += space.weight(p);
    bool has_neg = false, has_nonneg = false;
    for (std::uint32_t p : ray.points) (u[p] < 0.0 ? has_neg : has_nonneg) = true;
    double anchor = 0.0;
    if (has_neg && has_nonneg) {
      ray.crosses_s = true;
      for (std::size_t k = 0; k + 1 < m; ++k) {
        const double ua = u[ray.points[k]], ub = u[ray.points[k + 1]];
        if (ua < 0.0 && ub >= 0.0) {
          const double lambda = -ua / (ub - ua);
          anchor = ray.params[k] + lambda * (ray.params[k + 1] - ray.params[k]);
          break;
        }
      }
    } else if (has_neg) {
      ray.inner_only = true;
      anchor = ray.params.back();
    } else {
      ray.outer_only = true;
      ray.touches_s = u[ray.points.front()] <= out.cross_gap;
      anchor = 0.0;
    }
    for (double& p : ray.params) p -= anchor;
  }

  out.total_mass = space.total_mass();
  out.assigned_mass = 0.0;
  for (const Ray& ray : out.rays) out.assigned_mass += ray.mass;
  out.unassigned_mass = std::max(0.0, out.total_mass - out.assigned_mass);
  if (out.unassigned_mass >
      config.max_unassigned_fraction * out.total_mass + 1e-12)
    out.warnings.push_back(
        "degenerate decomposition: unassigned mass fraction " +
        std::to_string(out.unassigned_mass / out.total_mass) + " exceeds " +
        std::to_string(config.max_unassigned_fraction));
  return out;
}

// Histogram density along each ray; see the header comment for the binning
// rule. Throws if any ray is too short to support the four-sample grid the
// one-sided estimators need (a single-point ray in particular).
inline RayDecomposition conditional_densities(const DiscreteMMS& space,
                                              RayDecomposition decomp,
                                              double bin_width = 0.0) {
  (void)space;
  if (bin_width < 0.0 || !std::isfinite(bin_width))
    throw std::domain_error("bin width must be finite and >= 0");
  for (Ray& ray : decomp.rays) {
    const std::size_t m = ray.points.size();
    if (m < 4)
      throw std::invalid_argument(
          "ray with " + std::to_string(m) +
          " point(s) cannot carry a density estimate (need >= 4)");
    if (!(ray.mass > 0.0))
      throw std::invalid_argument("massless ray cannot carry a density");
    const double lo = ray.params.front(), hi = ray.params.back();
    const double ray_span = hi - lo;
    if (!(ray_span > 0.0))
      throw std::invalid_argument("ray parameters must strictly increase");

    std::vector<double> gaps(m - 1);
    for (std::size_t k = 0; k + 1 < m; ++k)
      gaps[k] = ray.params[k + 1] - ray.params[k];
    std::nth_element(gaps.begin(), gaps.begin() + (gaps.size() - 1) / 2,
                     gaps.end());
    const double median_gap = gaps[(gaps.size() - 1) / 2];

    double w0 = bin_width > 0.0
                    ? bin_width
                    : ray_span / std::sqrt(static_cast<double>(m));
    if (median_gap > 0.0 && bin_width <= 0.0) {
      const double k = std::max(1.0, std::round(w0 / median_gap));
      w0 = k * median_gap;
    }
    // Rays that cross the surface keep the cell centered at the anchor fully
    // covered by samples: its width is capped at twice the outer data
    // extension (last sample plus half a spacing), so the anchor cell's
    // height is an unbiased local average. Interior cells are always fully
    // covered; only the two end cells can be partial, and the derivative
    // window below the anchor must stay clear of the bottom one.
    const double support_hi = hi + 0.5 * median_gap;
    const bool crossing = ray.crosses_s && support_hi > 0.0;
    auto fitted = [&](double base) {
      return crossing ? std::min(base, 2.0 * support_hi) : base;
    };
    double w = fitted(w0);
    // Half-open cells [(k-1/2)w, (k+1/2)w): samples landing on or within
    // rounding jitter of a cell edge go consistently upward, so uniform
    // chains fill every cell with the same count even when the width is an
    // odd multiple of the spacing.
    auto center_of = [&](double p) {
      return static_cast<long>(std::floor(p / w + 0.5 + 1e-9));
    };
    long k_min = center_of(lo), k_max = center_of(hi);
    const long k_min_need = crossing ? -3 : 0;
    for (int tries = 0;
         (k_max - k_min < 3 || k_min > k_min_need) && tries < 80; ++tries) {
      w0 *= 0.7;
      w = fitted(w0);
      k_min = center_of(lo);
      k_max = center_of(hi);
    }
    if (k_max - k_min < 3 || k_min > k_min_need)
      throw std::invalid_argument(
          "ray parameters are too degenerate for a density histogram");
    if (k_min > 0 || k_max < 0)
      throw std::logic_error("ray anchor fell outside its bin range");

    std::vector<double> bins(static_cast<std::size_t>(k_max - k_min + 1), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      long b = center_of(ray.params[k]);
      b = std::min(k_max, std::max(k_min, b));
      bins[static_cast<std::size_t>(b - k_min)] += space.weight(ray.points[k]);
    }
    std::vector<double> grid(bins.size()), values(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) {
      grid[i] = w * static_cast<double>(k_min + static_cast<long>(i));
      values[i] = bins[i] / (w * ray.mass);
    }
    grid[static_cast<std::size_t>(-k_min)] = 0.0;  // exact anchor
    ray.density.emplace(std::move(grid), std::move(values));
    ray.surface_mass = (ray.crosses_s || (ray.outer_only && ray.touches_s))
                           ? ray.density->value_at_zero() * ray.mass
                           : 0.0;
  }
  return decomp;
}

struct SurfaceMeasure {
  std::vector<double> per_ray;  // crossing rays carry h(0) * q, others 0
  double total = 0.0;
};

inline SurfaceMeasure surface_measure(const RayDecomposition& decomp) {
  SurfaceMeasure s;
  s.per_ray.resize(decomp.rays.size(), 0.0);
  for (std::size_t i = 0; i < decomp.rays.size(); ++i) {
    const Ray& ray = decomp.rays[i];
    if (!ray.crosses_s) continue;
    if (!ray.density)
      throw std::invalid_argument(
          "surface measure needs conditional densities");
    s.per_ray[i] = ray.surface_mass;
    s.total += ray.surface_mass;
  }
  return s;
}

struct CurvatureEntry {
  std::size_t ray = 0;
  ExtendedReal value;   // inner mean curvature at the surface
  double weight = 0.0;  // surface mass carried by the ray
};

// Per-ray inner mean curvature at the zero level: the left log-derivative
// of the conditional density for crossing rays; +infinity for outer-only
// rays whose chain starts within the gap scale of the surface (the sampled
// trace of an exterior region collapsing onto it).
inline std::vector<CurvatureEntry> inner_mean_curvature_field(
    const RayDecomposition& decomp) {
  std::vector<CurvatureEntry> field;
  for (std::size_t i = 0; i < decomp.rays.size(); ++i) {
    const Ray& ray = decomp.rays[i];
    if (ray.crosses_s) {
      if (!ray.density)
        throw std::invalid_argument(
            "curvature field needs conditional densities");
      field.push_back(CurvatureEntry{
          i, inner_mean_curvature_from_density(*ray.density).value,
          ray.surface_mass});
    } else if (ray.outer_only && ray.touches_s) {
      field.push_back(
          CurvatureEntry{i, ExtendedReal::infinity(), ray.surface_mass});
    }
  }
  return field;
}

struct ReachMasses {
  double b_in_mass = 0.0;   // mass on rays that never leave the subset
  double b_out_mass = 0.0;  // mass on rays that never enter it
};

inline ReachMasses finite_inner_curvature_check(
    const RayDecomposition& decomp) {
  ReachMasses r;
  for (const Ray& ray : decomp.rays) {
    if (ray.inner_only) r.b_in_mass += ray.mass;
    if (ray.outer_only) r.b_out_mass += ray.mass;
  }
  return r;
}

// Uniform exterior-ball test: every boundary point of the subset (a member
// with a complement neighbor within twice the sample resolution) must admit
// a complement point p at distance at least delta such that the open ball
// around p through the boundary point avoids the subset entirely.
inline bool exterior_ball_check(const DiscreteMMS& space,
                                const SubsetSpec& omega, double delta) {
  omega.validate(space);
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw std::domain_error("delta must be positive and finite");
  const std::size_t n = space.size();
  const double res = space.sample_resolution();
  const double shell = 2.0 * res + 1e-12;
  std::vector<std::uint32_t> outside;
  for (std::size_t i = 0; i < n; ++i)
    if (!omega.inside[i]) outside.push_back(static_cast<std::uint32_t>(i));
  std::vector<char> outside_mask(n, 0);
  for (std::uint32_t o : outside) outside_mask[o] = 1;
  // Depth of every subset point; points within the two-resolution shell are
  // the discrete boundary, deeper points are the certain interior.
  std::vector<double> depth(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    if (omega.inside[i]) depth[i] = space.min_distance_to(i, outside_mask);
  });
  std::vector<std::uint32_t> boundary;
  std::vector<char> deep_mask(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!omega.inside[i]) continue;
    if (depth[i] <= shell)
      boundary.push_back(static_cast<std::uint32_t>(i));
    else
      deep_mask[i] = 1;
  }
  if (boundary.empty()) return true;
  // Clearance of each complement point back to the certain interior. A ball
  // may graze shell points (their membership is ambiguous at this sampling
  // resolution) but must miss every deep point.
  std::vector<double> clearance(outside.size());
  parallel_for(outside.size(), [&](std::size_t k) {
    clearance[k] = space.min_distance_to(outside[k], deep_mask);
  });
  for (std::uint32_t x : boundary) {
    bool witnessed = false;
    for (std::size_t k = 0; k < outside.size() && !witnessed; ++k) {
      const double dxp = space.distance(x, outside[k]);
      if (dxp < delta * (1.0 - 1e-12)) continue;
      // Open ball of radius d(x, p) around p misses the certain interior
      // iff the nearest deep point is no closer than that radius.
      if (clearance[k] >= dxp - 1e-9 * std::max(1.0, dxp) - 1e-12)
        witnessed = true;
    }
    if (!witnessed) return false;
  }
  return true;
}

inline double inradius(const DiscreteMMS& space, const SubsetSpec& omega) {
  omega.validate(space);
  const std::size_t n = space.size();
  std::vector<char> outside_mask(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (!omega.inside[i]) outside_mask[i] = 1;
  std::vector<double> depth(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    if (omega.inside[i]) depth[i] = space.min_distance_to(i, outside_mask);
  });
  double best = 0.0;
  for (double d : depth) best = std::max(best, d);
  return best;
}

// Weighted lower quantile over (value, weight) samples; values may be
// +/- infinity, zero-weight samples are ignored. q in [0, 1]: the smallest
// value whose cumulative weight reaches q * total.
inline double weighted_quantile(
    std::vector<std::pair<double, double>> samples, double q) {
  if (!(q >= 0.0 && q <= 1.0))
    throw std::domain_error("quantile must lie in [0, 1]");
  samples.erase(std::remove_if(samples.begin(), samples.end(),
                               [](const auto& s) { return !(s.second > 0.0); }),
                samples.end());
  if (samples.empty())
    throw std::invalid_argument("weighted quantile of an empty sample");
  std::sort(samples.begin(), samples.end());
  double total = 0.0;
  for (const auto& s : samples) total += s.second;
  const double target = q * total;
  double cum = 0.0;
  for (const auto& s : samples) {
    cum += s.second;
    if (cum >= target) return s.first;
  }
  return samples.back().first;
}

struct BoundReport {
  double inradius = 0.0;
  double h_lower = 0.0;  // surface-quantile curvature estimate (+/-inf ok)
  ExtendedReal r_comparison = ExtendedReal::infinity();
  bool passed = false;
  double margin = 0.0;  // r_comparison - inradius (+/-inf ok)
  double quantile = 0.0;
  double tol = 0.0;
  double surface_total = 0.0;
  double unassigned_fraction = 0.0;
  // Full curvature field (value, surface weight); infinities encoded as
  // +/-HUGE_VAL doubles.
  std::vector<std::pair<double, double>> curvature_field;
  std::vector<std::string> warnings;
};

// End-to-end radius bound verification: decompose, estimate the inner mean
// curvature field on the surface, take its lower weighted quantile H, and
// compare the subset's inradius against the comparison radius r(K, H, N).
// tol < 0 means "auto": twice the sample resolution (the inradius of a
// sampled set overshoots the continuum value by about half a grid layer).
// h_override replaces the estimated H in the radius computation only.
inline BoundReport verify_inradius_bound(
    const DiscreteMMS& space, const SubsetSpec& omega, double K, double N,
    double quantile = 0.05, double tol = -1.0,
    const DecompositionConfig& config = DecompositionConfig{},
    std::optional<double> h_override = std::nullopt) {
  if (!(N > 1.0) || !std::isfinite(N))
    throw std::domain_error("dimension parameter must exceed 1");
  if (!std::isfinite(K)) throw std::domain_error("curvature must be finite");
  if (!(quantile >= 0.0 && quantile <= 1.0))
    throw std::domain_error("quantile must lie in [0, 1]");

  RayDecomposition decomp =
      conditional_densities(space, ray_decomposition(space, omega, config));
  const std::vector<CurvatureEntry> field = inner_mean_curvature_field(decomp);
  const SurfaceMeasure surface = surface_measure(decomp);

  BoundReport report;
  report.quantile = quantile;
  report.warnings = decomp.warnings;
  report.surface_total = surface.total;
  report.unassigned_fraction =
      decomp.total_mass > 0.0 ? decomp.unassigned_mass / decomp.total_mass
                              : 0.0;
  for (const CurvatureEntry& e : field) {
    double v;
    if (e.value.is_finite())
      v = e.value.value();
    else
      v = e.value.is_pos_infinity() ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity();
    report.curvature_field.emplace_back(v, e.weight);
  }

  // Inradius straight from the signed distance field: depth of the deepest
  // subset point.
  double inr = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (omega.inside[i]) inr = std::max(inr, -decomp.field.u[i]);
  report.inradius = inr;

  bool have_h = false;
  double h_lower = 0.0;
  for (const auto& [v, wgt] : report.curvature_field)
    if (wgt > 0.0) have_h = true;
  if (have_h) {
    h_lower = weighted_quantile(report.curvature_field, quantile);
  } else {
    report.warnings.push_back(
        "no surface-crossing rays: curvature defaults to -infinity "
        "(vacuous radius bound)");
    h_lower = -std::numeric_limits<double>::infinity();
  }
  report.h_lower = h_lower;
  double h_used = h_override.value_or(h_lower);
  if (h_override)
    report.warnings.push_back("curvature override in effect: H = " +
                              detail::format17(*h_override));

  if (h_used == std::numeric_limits<double>::infinity()) {
    report.r_comparison = ExtendedReal(0.0);
  } else {
    // -infinity behaves as the limit H -> -inf of the closed forms.
    const double h_arg = std::max(h_used, -1e300);
    report.r_comparison = inradius_comparison_r(K, h_arg, N);
  }

  report.tol = tol < 0.0 ? 2.0 * decomp.resolution : tol;
  if (report.r_comparison.is_finite()) {
    report.margin = report.r_comparison.value() - report.inradius;
    report.passed = report.inradius <= report.r_comparison.value() + report.tol;
  } else {
    report.margin = std::numeric_limits<double>::infinity();
    report.passed = true;
  }
  return report;
}

// Aggregated backward curvature estimate: level masses p(t) = sum over the
// selected rays of h_ray(t) * q_ray, sampled on the union of the rays' bin
// centers in [-window, 0], fed to the windowed difference-quotient
// estimator. Rays default to all S-crossing rays.
inline ExtendedReal backward_mc_estimate(
    const DiscreteMMS& space, const RayDecomposition& decomp, double window,
    std::vector<std::size_t> rays = {}) {
  (void)space;
  if (!(window > 0.0) || !std::isfinite(window))
    throw std::domain_error("window must be positive and finite");
  if (rays.empty()) {
    for (std::size_t i = 0; i < decomp.rays.size(); ++i)
      if (decomp.rays[i].crosses_s) rays.push_back(i);
  }
  if (rays.empty())
    throw std::invalid_argument("no rays selected for the backward estimate");
  std::vector<double> ts;
  for (std::size_t i : rays) {
    if (i >= decomp.rays.size()) throw std::out_of_range("ray index");
    const Ray& ray = decomp.rays[i];
    if (!ray.density)
      throw std::invalid_argument(
          "backward estimate needs conditional densities");
    for (double g : ray.density->grid())
      if (g >= -window && g < 0.0) ts.push_back(g);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end(),
                       [](double a, double b) { return std::abs(a - b) < 1e-12; }),
           ts.end());
  ts.push_back(0.0);
  const auto density_or_zero = [](const NeedleDensity& d, double t) {
    if (t < d.a() || t > d.b()) return 0.0;
    return d.value_at(t);
  };
  std::vector<std::pair<double, double>> level_masses;
  for (double t : ts) {
    double p = 0.0;
    for (std::size_t i : rays)
      p += density_or_zero(*decomp.rays[i].density, t) * decomp.rays[i].mass;
    level_masses.emplace_back(t, p);
  }
  return backward_mc_from_level_masses(level_masses);
}

// JSON export of a decomposition (17 significant digits; densities inline).
inline void write_decomposition_json(std::ostream& os,
                                     const RayDecomposition& decomp) {
  os << "{\n";
  os << "  \"total_mass\": " << detail::format17(decomp.total_mass) << ",\n";
  os << "  \"assigned_mass\": " << detail::format17(decomp.assigned_mass)
     << ",\n";
  os << "  \"unassigned_mass\": " << detail::format17(decomp.unassigned_mass)
     << ",\n";
  os << "  \"resolution\": " << detail::format17(decomp.resolution) << ",\n";
  os << "  \"cross_gap\": " << detail::format17(decomp.cross_gap) << ",\n";
  os << "  \"transport_tol\": " << detail::format17(decomp.transport_tol)
     << ",\n";
  os << "  \"rays\": [";
  for (std::size_t i = 0; i < decomp.rays.size(); ++i) {
    const Ray& ray = decomp.rays[i];
    os << (i ? ",\n    {" : "\n    {");
    os << "\"points\": [";
    for (std::size_t k = 0; k < ray.points.size(); ++k)
      os << (k ? ", " : "") << ray.points[k];
    os << "], \"params\": [";
    for (std::size_t k = 0; k < ray.params.size(); ++k)
      os << (k ? ", " : "") << detail::format17(ray.params[k]);
    os << "], \"mass\": " << detail::format17(ray.mass);
    os << ", \"crosses_s\": " << (ray.crosses_s ? "true" : "false");
    os << ", \"inner_only\": " << (ray.inner_only ? "true" : "false");
    os << ", \"outer_only\": " << (ray.outer_only ? "true" : "false");
    os << ", \"surface_mass\": " << detail::format17(ray.surface_mass);
    if (ray.density) {
      os << ", \"density\": {\"r\": [";
      const auto& g = ray.density->grid();
      const auto& v = ray.density->values();
      for (std::size_t k = 0; k < g.size(); ++k)
        os << (k ? ", " : "") << detail::format17(g[k]);
      os << "], \"h\": [";
      for (std::size_t k = 0; k < v.size(); ++k)
        os << (k ? ", " : "") << detail::format17(v[k]);
      os << "]}";
    } else {
      os << ", \"density\": null";
    }
    os << "}";
  }
  os << "\n  ],\n";
  os << "  \"warnings\": [";
  for (std::size_t i = 0; i < decomp.warnings.size(); ++i) {
    if (i) os << ", ";
    detail::write_json_string(os, decomp.warnings[i]);
  }
  os << "]\n}\n";
}

}  // namespace needlecomp
