#pragma once

// Signed distance fields and the induced transport ordering on a finite
// metric measure space.
//
// For a subset O (both O and its complement nonempty) the discrete signed
// distance is u(x) = d(x, O) - d(x, O^c): nonpositive on O, nonnegative
// outside. Away from the interface u is exactly 1-Lipschitz (each term is a
// minimum of 1-Lipschitz functions); a pair straddling the interface can
// see a slope up to 2 because the true zero level lies between the sampled
// classes, which bounds the straddling gap by d(x, y) plus twice the
// sample's interface offset.
//
// The transport ordering collects the ordered pairs along which u grows at
// exactly metric speed: |u(y) - u(x) - d(x, y)| <= tol * max(1, d(x, y)).
// These pairs are the edges from which needle chains are extracted.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "needlecomp/discrete_mms.hpp"
#include "needlecomp/parallel.hpp"

namespace needlecomp {

struct SubsetSpec {
  std::vector<char> inside;  // size n; nonzero marks membership in O

  void validate(const DiscreteMMS& space) const {
    if (inside.size() != space.size())
      throw std::invalid_argument("subset mask size must match the space");
    bool has_in = false, has_out = false;
    for (char c : inside) (c ? has_in : has_out) = true;
    if (!has_in || !has_out)
      throw std::invalid_argument(
          "subset and its complement must both be nonempty");
  }
};

// Membership by a metric ball around a sample point.
inline SubsetSpec subset_from_ball(const DiscreteMMS& space,
                                   std::size_t center, double radius) {
  if (center >= space.size()) throw std::out_of_range("ball center index");
  if (!std::isfinite(radius) || radius < 0.0)
    throw std::domain_error("ball radius must be finite and >= 0");
  SubsetSpec spec;
  spec.inside.resize(space.size());
  for (std::size_t i = 0; i < space.size(); ++i)
    spec.inside[i] = space.distance(center, i) <= radius ? 1 : 0;
  spec.validate(space);
  return spec;
}

// Membership by a sublevel set {field <= c}.
inline SubsetSpec subset_from_sublevel(const DiscreteMMS& space,
                                       const std::vector<double>& field,
                                       double c) {
  if (field.size() != space.size())
    throw std::invalid_argument("field size must match the space");
  SubsetSpec spec;
  spec.inside.resize(space.size());
  for (std::size_t i = 0; i < space.size(); ++i)
    spec.inside[i] = field[i] <= c ? 1 : 0;
  spec.validate(space);
  return spec;
}

struct SignedDistanceField {
  std::vector<double> u;
};

inline SignedDistanceField signed_distance(const DiscreteMMS& space,
                                           const SubsetSpec& omega) {
  omega.validate(space);
  SignedDistanceField field;
  field.u.resize(space.size());
  parallel_for(space.size(), [&](std::size_t i) {
    double d_in = 0.0, d_out = 0.0;
    space.min_two_class(i, omega.inside, d_in, d_out);
    field.u[i] = d_in - d_out;
  });
  return field;
}

struct TransportRelation {
  // Ordered pairs (a, b) with u[b] - u[a] = d(a, b) within tolerance. When
  // both orientations qualify (coincident points) both are present.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  double tol = 1e-6;
};

namespace detail {

// Same-sign pairs must respect the 1-Lipschitz bound; pairs straddling the
// zero level may ride the interface offset, bounded by slope 2.
inline void check_lipschitz_pair(double ua, double ub, double d) {
  const double gap = ub - ua;  // >= 0 by orientation
  const bool straddle = ua < 0.0 && ub > 0.0;
  const double limit = straddle ? 2.0 * d : d;
  if (gap > limit + 1e-9 * std::max(1.0, d) + 1e-12)
    throw std::invalid_argument(
        "field is not 1-Lipschitz (slope " +
        std::to_string(d > 0.0 ? gap / d : std::numeric_limits<double>::infinity()) +
        " across distance " + std::to_string(d) + ")");
}

}  // namespace detail

inline TransportRelation transport_ordering(const DiscreteMMS& space,
                                            const SignedDistanceField& field,
                                            double tol = 1e-6) {
  if (!(tol >= 0.0) || !std::isfinite(tol))
    throw std::domain_error("tolerance must be finite and >= 0");
  const std::vector<double>& u = field.u;
  if (u.size() != space.size())
    throw std::invalid_argument("field size must match the space");
  for (double v : u)
    if (!std::isfinite(v))
      throw std::invalid_argument("field values must be finite");
  double span = 0.0;
  if (!u.empty()) {
    const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
    span = *hi - *lo;
  }
  TransportRelation rel;
  rel.tol = tol;
  const double slack = tol * std::max(1.0, span) + 1e-12;
  space.for_pairs_with_gap_at_most(u, slack, [&](std::size_t a, std::size_t b,
                                                 double d) {
    detail::check_lipschitz_pair(u[a], u[b], d);
    const double gap = u[b] - u[a];
    const double tau = tol * std::max(1.0, d);
    if (std::abs(gap - d) <= tau) {
      rel.pairs.emplace_back(static_cast<std::uint32_t>(a),
                             static_cast<std::uint32_t>(b));
      // Degenerate coincidences qualify in both orientations.
      if (gap + d <= tau && a != b)
        rel.pairs.emplace_back(static_cast<std::uint32_t>(b),
                               static_cast<std::uint32_t>(a));
    }
  });
  return rel;
}

// Branch detection: x forks forward (A_plus) when two of its transport
// successors are mutually incomparable under R = relation U relation^{-1};
// A_minus is the time reversal (two incomparable predecessors).
struct BranchingSets {
  std::vector<char> a_plus, a_minus;
};

inline BranchingSets branching_points(const DiscreteMMS& space,
                                      const TransportRelation& relation) {
  const std::size_t n = space.size();
  std::vector<std::vector<std::uint32_t>> fwd(n), bwd(n);
  std::unordered_set<std::uint64_t> edge;
  edge.reserve(relation.pairs.size() * 2);
  for (const auto& [a, b] : relation.pairs) {
    if (a >= n || b >= n) throw std::out_of_range("relation pair index");
    fwd[a].push_back(b);
    bwd[b].push_back(a);
    edge.insert(static_cast<std::uint64_t>(a) * n + b);
  }
  const auto comparable = [&](std::uint32_t z, std::uint32_t w) {
    return z == w || edge.count(static_cast<std::uint64_t>(z) * n + w) ||
           edge.count(static_cast<std::uint64_t>(w) * n + z);
  };
  BranchingSets out;
  out.a_plus.assign(n, 0);
  out.a_minus.assign(n, 0);
  const auto scan = [&](const std::vector<std::uint32_t>& nbrs) {
    for (std::size_t p = 0; p < nbrs.size(); ++p)
      for (std::size_t q = p + 1; q < nbrs.size(); ++q)
        if (!comparable(nbrs[p], nbrs[q])) return true;
    return false;
  };
  for (std::size_t x = 0; x < n; ++x) {
    out.a_plus[x] = scan(fwd[x]) ? 1 : 0;
    out.a_minus[x] = scan(bwd[x]) ? 1 : 0;
  }
  return out;
}

}  // namespace needlecomp
