#pragma once

// Finite metric measure spaces.
//
// Two storage backends share one interface:
//   * dense   — an explicit row-major n x n distance matrix (general data,
//               file interchange);
//   * cone    — a structured radial-grid x base-sample layout whose pairwise
//               distances are evaluated on demand from per-point transforms.
//               This keeps warped-product samples with tens of thousands of
//               points affordable: hot scans cost a handful of
//               multiplications per pair and defer the inverse trig/hyperbolic
//               call until a single winning pair is known.
//
// Distances in the cone backend are computed through the nonnegative
// "gauge" w(p, q):
//   flat       w = (t-s)^2 + 4 t s sin^2(theta/2)          d = sqrt(w)
//   hyperbolic w = 2 sinh^2((t-s)/2) + 2 sinh t sinh s sin^2(theta/2)
//                                                           cosh d = 1 + w
//   spherical  w = 2 sin^2((t-s)/2) + 2 sin t sin s sin^2(theta/2)
//                                                           cos d = 1 - w
// Every term is nonnegative, so small distances suffer no cancellation; w is
// strictly increasing in d, which makes it a drop-in surrogate for distance
// comparisons.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "needlecomp/parallel.hpp"

namespace needlecomp {

enum class ConeGeometry { flat, hyperbolic, spherical };

// Structured description of a cone/suspension sample: point k sits at radius
// radial[k] over base point base_index[k]. base_half_sq holds
// sin^2(clamped base distance / 2) for every base pair; the clamp caps base
// distances at pi.
struct ConeStructure {
  ConeGeometry geometry = ConeGeometry::flat;
  std::vector<double> radial;
  std::vector<int> base_index;
  std::size_t base_n = 0;
  std::vector<double> base_half_sq;
};

namespace detail {

inline std::string format17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

class DiscreteMMS {
 public:
  // Dense backend. The matrix must be exactly symmetric with a zero
  // diagonal; the triangle inequality is checked within 1e-9 relative
  // (exhaustively for n <= 300, on sampled triples beyond).
  DiscreteMMS(std::size_t n, std::vector<double> metric_row_major,
              std::vector<double> weights,
              std::vector<std::string> labels = {})
      : n_(n),
        dense_(std::move(metric_row_major)),
        weights_(std::move(weights)),
        labels_(std::move(labels)) {
    if (n_ == 0) throw std::invalid_argument("space must contain points");
    if (dense_.size() != n_ * n_)
      throw std::invalid_argument("metric matrix size must be n^2");
    validate_dense();
    validate_weights();
    check_triangle();
  }

  // Cone backend. Construction is trusted for metric structure (the builder
  // derives it from a valid base metric); a sampled triangle check still
  // runs as a guard against malformed base data.
  DiscreteMMS(ConeStructure cone, std::vector<double> weights,
              std::vector<std::string> labels = {})
      : n_(cone.radial.size()),
        cone_(std::move(cone)),
        weights_(std::move(weights)),
        labels_(std::move(labels)) {
    if (n_ == 0) throw std::invalid_argument("space must contain points");
    validate_cone();
    validate_weights();
    prepare_cone_transforms();
    check_triangle();
  }

  std::size_t size() const { return n_; }
  bool dense() const { return cone_.base_n == 0; }
  const std::vector<double>& weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }
  double total_mass() const { return total_mass_; }
  const std::vector<std::string>& labels() const { return labels_; }

  double distance(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_) throw std::out_of_range("point index");
    if (dense()) return dense_[i * n_ + j];
    return gauge_to_distance(gauge(i, j));
  }

  // Largest nearest-neighbor distance over the sample; the scale below which
  // the sample cannot resolve geometry. Cached after the first call.
  double sample_resolution() const {
    if (resolution_ >= 0.0) return resolution_;
    double worst = 0.0;
    if (n_ == 1) {
      resolution_ = 0.0;
      return 0.0;
    }
    std::vector<double> nearest(n_, std::numeric_limits<double>::infinity());
    parallel_for(n_, [&](std::size_t i) {
      double best = std::numeric_limits<double>::infinity();
      if (dense()) {
        const double* row = &dense_[i * n_];
        for (std::size_t j = 0; j < n_; ++j)
          if (j != i && row[j] < best) best = row[j];
      } else {
        for (std::size_t j = 0; j < n_; ++j) {
          if (j == i) continue;
          const double w = gauge(i, j);
          if (w < best) best = w;
        }
      }
      nearest[i] = best;
    });
    for (double b : nearest) worst = std::max(worst, b);
    resolution_ = dense() ? worst : gauge_to_distance(worst);
    return resolution_;
  }

  // Exact distance from i to the set {j : mask[j] != 0} (i itself included
  // when masked). Returns +infinity when the set is empty.
  double min_distance_to(std::size_t i, const std::vector<char>& mask) const {
    require_mask(mask);
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    if (dense()) {
      const double* row = &dense_[i * n_];
      for (std::size_t j = 0; j < n_; ++j)
        if (mask[j] && (!found || row[j] < best)) best = row[j], found = true;
      return found ? best : std::numeric_limits<double>::infinity();
    }
    for (std::size_t j = 0; j < n_; ++j) {
      if (!mask[j]) continue;
      const double w = gauge(i, j);
      if (!found || w < best) best = w, found = true;
    }
    return found ? gauge_to_distance(best)
                 : std::numeric_limits<double>::infinity();
  }

  // One scan filling the distances from i to the sets {cls != 0} and
  // {cls == 0}; +infinity for an empty side.
  void min_two_class(std::size_t i, const std::vector<char>& cls,
                     double& d_marked, double& d_unmarked) const {
    require_mask(cls);
    double best_in = std::numeric_limits<double>::infinity();
    double best_out = std::numeric_limits<double>::infinity();
    if (dense()) {
      const double* row = &dense_[i * n_];
      for (std::size_t j = 0; j < n_; ++j) {
        if (cls[j]) {
          if (row[j] < best_in) best_in = row[j];
        } else if (row[j] < best_out) {
          best_out = row[j];
        }
      }
      d_marked = best_in;
      d_unmarked = best_out;
      return;
    }
    for (std::size_t j = 0; j < n_; ++j) {
      const double w = gauge(i, j);
      if (cls[j]) {
        if (w < best_in) best_in = w;
      } else if (w < best_out) {
        best_out = w;
      }
    }
    d_marked = std::isinf(best_in) ? best_in : gauge_to_distance(best_in);
    d_unmarked = std::isinf(best_out) ? best_out : gauge_to_distance(best_out);
  }

  // Enumerates ordered pairs (a, b) with u[b] >= u[a] and
  // d(a, b) <= (u[b] - u[a]) + slack, invoking cb(a, b, d) with the exact
  // distance. Each unordered pair is visited once (ties u[a] == u[b] are
  // oriented a < b). The filter may over-include by a few ulps; callers
  // needing an exact predicate must re-test the emitted pairs.
  template <class F>
  void for_pairs_with_gap_at_most(const std::vector<double>& u, double slack,
                                  F&& cb) const {
    if (u.size() != n_)
      throw std::invalid_argument("field size must match the space");
    if (dense()) {
      for (std::size_t i = 0; i < n_; ++i) {
        const double* row = &dense_[i * n_];
        for (std::size_t j = i + 1; j < n_; ++j) {
          const double du = u[j] - u[i];
          const std::size_t a = du >= 0.0 ? i : j;
          const std::size_t b = du >= 0.0 ? j : i;
          const double bound = std::abs(du) + slack;
          if (bound >= 0.0 && row[j] <= bound) cb(a, b, row[j]);
        }
      }
      return;
    }
    switch (cone_.geometry) {
      case ConeGeometry::flat:
        scan_flat(u, slack, cb);
        break;
      case ConeGeometry::hyperbolic:
        scan_hyperbolic(u, slack, cb);
        break;
      case ConeGeometry::spherical:
        scan_spherical(u, slack, cb);
        break;
    }
  }

  // Materializes the full matrix. Refused above the interchange cap: dense
  // files scale as n^2 and become impractical long before memory runs out.
  static constexpr std::size_t kDenseExportCap = 4000;
  std::vector<double> dense_matrix() const {
    if (dense()) return dense_;
    if (n_ > kDenseExportCap)
      throw std::length_error(
          "dense export cap exceeded (" + std::to_string(n_) + " points > " +
          std::to_string(kDenseExportCap) + ")");
    std::vector<double> m(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        m[i * n_ + j] = m[j * n_ + i] = distance(i, j);
    return m;
  }

 private:
  void validate_dense() {
    for (std::size_t i = 0; i < n_; ++i) {
      if (dense_[i * n_ + i] != 0.0)
        throw std::invalid_argument("metric diagonal must be zero");
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double d = dense_[i * n_ + j];
        if (!std::isfinite(d) || d < 0.0)
          throw std::invalid_argument("metric entries must be finite and >= 0");
        if (d != dense_[j * n_ + i])
          throw std::invalid_argument("metric matrix must be symmetric");
      }
    }
  }

  void validate_cone() {
    if (cone_.base_n == 0)
      throw std::invalid_argument("cone structure needs a base");
    if (cone_.base_index.size() != n_)
      throw std::invalid_argument("cone base_index size mismatch");
    if (cone_.base_half_sq.size() != cone_.base_n * cone_.base_n)
      throw std::invalid_argument("cone base table size mismatch");
    for (double t : cone_.radial) {
      if (!std::isfinite(t) || t < 0.0)
        throw std::invalid_argument("radial coordinates must be finite, >= 0");
      if (cone_.geometry == ConeGeometry::spherical &&
          t > 3.1415926535897932)
        throw std::invalid_argument(
            "spherical radial coordinates must lie in [0, pi]");
    }
    for (int b : cone_.base_index)
      if (b < 0 || static_cast<std::size_t>(b) >= cone_.base_n)
        throw std::invalid_argument("base index out of range");
    for (double q : cone_.base_half_sq)
      if (!std::isfinite(q) || q < 0.0 || q > 1.0 + 1e-15)
        throw std::invalid_argument("base table entries must lie in [0, 1]");
  }

  void validate_weights() {
    if (weights_.size() != n_)
      throw std::invalid_argument("weights size must match point count");
    if (!labels_.empty() && labels_.size() != n_)
      throw std::invalid_argument("labels size must match point count");
    total_mass_ = 0.0;
    for (double w : weights_) {
      if (!std::isfinite(w) || w < 0.0)
        throw std::invalid_argument("weights must be finite and >= 0");
      total_mass_ += w;
    }
    if (!(total_mass_ > 0.0))
      throw std::invalid_argument("total mass must be positive");
  }

  void prepare_cone_transforms() {
    ca_.resize(n_);
    sa_.resize(n_);
    half_c_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double t = cone_.radial[i];
      switch (cone_.geometry) {
        case ConeGeometry::flat:
          ca_[i] = t;
          sa_[i] = t;
          half_c_[i] = 0.0;
          break;
        case ConeGeometry::hyperbolic:
          ca_[i] = std::cosh(0.5 * t);
          sa_[i] = std::sinh(0.5 * t);
          half_c_[i] = std::sinh(t);
          break;
        case ConeGeometry::spherical:
          ca_[i] = std::cos(0.5 * t);
          sa_[i] = std::sin(0.5 * t);
          half_c_[i] = std::sin(t);
          break;
      }
    }
  }

  double base_q(std::size_t i, std::size_t j) const {
    return cone_.base_half_sq[static_cast<std::size_t>(cone_.base_index[i]) *
                                  cone_.base_n +
                              static_cast<std::size_t>(cone_.base_index[j])];
  }

  // Nonnegative monotone distance surrogate; see the header comment.
  double gauge(std::size_t i, std::size_t j) const {
    const double q = base_q(i, j);
    switch (cone_.geometry) {
      case ConeGeometry::flat: {
        const double t = ca_[i], s = ca_[j];
        const double dr = t - s;
        return dr * dr + 4.0 * t * s * q;
      }
      case ConeGeometry::hyperbolic: {
        const double m = sa_[i] * ca_[j] - ca_[i] * sa_[j];
        return 2.0 * (m * m + half_c_[i] * half_c_[j] * q);
      }
      case ConeGeometry::spherical: {
        const double m = sa_[i] * ca_[j] - ca_[i] * sa_[j];
        return 2.0 * (m * m + half_c_[i] * half_c_[j] * q);
      }
    }
    return 0.0;
  }

  double gauge_to_distance(double w) const {
    w = std::max(0.0, w);
    switch (cone_.geometry) {
      case ConeGeometry::flat:
        return std::sqrt(w);
      case ConeGeometry::hyperbolic:
        return std::log1p(w + std::sqrt(w * (w + 2.0)));
      case ConeGeometry::spherical:
        return 2.0 * std::asin(std::min(1.0, std::sqrt(0.5 * w)));
    }
    return 0.0;
  }

  // --- gap-filtered pair scans (cone backend) ---------------------------
  //
  // Each scan tests d(i, j) <= |u_j - u_i| + slack in gauge space. The
  // threshold transform of (gap + slack) is assembled from per-point
  // transforms of u so the inner loop stays free of transcendentals.

  template <class F>
  void scan_flat(const std::vector<double>& u, double slack, F&& cb) const {
    for (std::size_t i = 0; i < n_; ++i) {
      const double ti = ca_[i], ui = u[i];
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double du = u[j] - ui;
        const double bound = std::abs(du) + slack;
        if (bound < 0.0) continue;
        const double dr = ti - ca_[j];
        const double w = dr * dr + 4.0 * ti * ca_[j] * base_q(i, j);
        if (w <= bound * bound * (1.0 + 4e-16) + 1e-300) {
          const std::size_t a = du >= 0.0 ? i : j;
          const std::size_t b = du >= 0.0 ? j : i;
          cb(a, b, std::sqrt(std::max(0.0, w)));
        }
      }
    }
  }

  template <class F>
  void scan_hyperbolic(const std::vector<double>& u, double slack,
                       F&& cb) const {
    // cosh(gap + slack) - 1 expanded through e^{u} and e^{-u} tables.
    std::vector<double> ep(n_), en(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      ep[i] = std::exp(u[i]);
      en[i] = std::exp(-u[i]);
    }
    const double A = std::exp(slack), B = std::exp(-slack);
    for (std::size_t i = 0; i < n_; ++i) {
      const double cai = ca_[i], sai = sa_[i], hi = half_c_[i], ui = u[i];
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double du = u[j] - ui;
        const double gap = std::abs(du);
        if (gap + slack < 0.0) continue;
        // e^{+gap} and e^{-gap} are max/min of the two cross products (they
        // are reciprocals up to rounding, which the cushion below absorbs).
        const double r1 = ep[j] * en[i];
        const double r2 = ep[i] * en[j];
        const double eg = r1 > r2 ? r1 : r2;
        const double el = r1 > r2 ? r2 : r1;
        const double wbound = 0.5 * (eg * A + el * B) - 1.0;
        const double m = sai * ca_[j] - cai * sa_[j];
        const double w = 2.0 * (m * m + hi * half_c_[j] * base_q(i, j));
        if (w <= wbound * (1.0 + 4e-16) + 1e-300) {
          const std::size_t a = du >= 0.0 ? i : j;
          const std::size_t b = du >= 0.0 ? j : i;
          cb(a, b, gauge_to_distance(w));
        }
      }
    }
  }

  template <class F>
  void scan_spherical(const std::vector<double>& u, double slack,
                      F&& cb) const {
    // 1 - cos(gap + slack) expanded through cos(u) and sin(u) tables; any
    // threshold at or beyond pi accepts unconditionally (diameter <= pi).
    std::vector<double> cu(n_), su(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      cu[i] = std::cos(u[i]);
      su[i] = std::sin(u[i]);
    }
    const double cs = std::cos(slack), ss = std::sin(slack);
    const double pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < n_; ++i) {
      const double cai = ca_[i], sai = sa_[i], hi = half_c_[i], ui = u[i];
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double du = u[j] - ui;
        const double gap = std::abs(du);
        const double bound = gap + slack;
        if (bound < 0.0) continue;
        const double m = sai * ca_[j] - cai * sa_[j];
        const double w = 2.0 * (m * m + hi * half_c_[j] * base_q(i, j));
        if (bound < pi) {
          const double cg = cu[i] * cu[j] + su[i] * su[j];  // cos(gap)
          double sg = su[j] * cu[i] - cu[j] * su[i];        // sin(du)
          if (sg < 0.0) sg = -sg;                           // sin(gap)
          const double wbound = 1.0 - (cg * cs - sg * ss);
          if (w > wbound * (1.0 + 4e-16) + 1e-300) continue;
        }
        const std::size_t a = du >= 0.0 ? i : j;
        const std::size_t b = du >= 0.0 ? j : i;
        cb(a, b, gauge_to_distance(w));
      }
    }
  }

  void require_mask(const std::vector<char>& mask) const {
    if (mask.size() != n_)
      throw std::invalid_argument("mask size must match the space");
  }

  // Triangle inequality within 1e-9 relative: exhaustive for n <= 300,
  // sampled (fixed seed) beyond.
  void check_triangle() const {
    const auto check = [&](std::size_t i, std::size_t j, std::size_t k,
                           double dij, double djk, double dik) {
      if (dik > dij + djk + 1e-9 * std::max(1.0, dik))
        throw std::invalid_argument(
            "triangle inequality violated at points (" + std::to_string(i) +
            ", " + std::to_string(j) + ", " + std::to_string(k) + ")");
    };
    if (dense() && n_ <= 300) {
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i + 1; j < n_; ++j) {
          const double dij = dense_[i * n_ + j];
          for (std::size_t k = j + 1; k < n_; ++k) {
            const double djk = dense_[j * n_ + k];
            const double dik = dense_[i * n_ + k];
            check(i, j, k, dij, djk, dik);
            check(j, i, k, dij, dik, djk);
            check(i, k, j, dik, djk, dij);
          }
        }
      return;
    }
    if (n_ < 3) return;
    std::mt19937_64 rng(0x5eed5eedULL);
    std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
    const std::size_t trials = dense() ? 2000000 : 200000;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
      if (i == j || j == k || i == k) continue;
      check(i, j, k, distance(i, j), distance(j, k), distance(i, k));
    }
  }

  std::size_t n_ = 0;
  std::vector<double> dense_;
  ConeStructure cone_;
  std::vector<double> weights_;
  std::vector<std::string> labels_;
  double total_mass_ = 0.0;
  mutable double resolution_ = -1.0;

  // Cone per-point transforms: flat (t, t, 0); hyperbolic
  // (cosh t/2, sinh t/2, sinh t); spherical (cos t/2, sin t/2, sin t).
  std::vector<double> ca_, sa_, half_c_;
};

// ---------------------------------------------------------------------------
// Interchange: JSON object {"n", "metric" (row-major), "weights", "labels"?}
// and a CSV pair (matrix file, weights file). All floats are written with 17
// significant digits so values round-trip bit-exactly.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_json_string(std::ostream& os, const std::string& s) {
  os << '"';
  for (char c : s) {
    switch (c) {
      case '"':
        os << "\\\"";
        break;
      case '\\':
        os << "\\\\";
        break;
      case '\n':
        os << "\\n";
        break;
      case '\t':
        os << "\\t";
        break;
      case '\r':
        os << "\\r";
        break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          os << buf;
        } else {
          os << c;
        }
    }
  }
  os << '"';
}

}  // namespace detail

inline void write_dmms_json(std::ostream& os, const DiscreteMMS& space) {
  const std::size_t n = space.size();
  const std::vector<double> metric = space.dense_matrix();
  os << "{\n  \"n\": " << n << ",\n  \"metric\": [";
  for (std::size_t k = 0; k < metric.size(); ++k) {
    if (k) os << ", ";
    os << detail::format17(metric[k]);
  }
  os << "],\n  \"weights\": [";
  for (std::size_t i = 0; i < n; ++i) {
    if (i) os << ", ";
    os << detail::format17(space.weight(i));
  }
  os << "]";
  if (!space.labels().empty()) {
    os << ",\n  \"labels\": [";
    for (std::size_t i = 0; i < n; ++i) {
      if (i) os << ", ";
      detail::write_json_string(os, space.labels()[i]);
    }
    os << "]";
  }
  os << "\n}\n";
}

inline void write_dmms_csv(std::ostream& matrix_os, std::ostream& weights_os,
                           const DiscreteMMS& space) {
  const std::size_t n = space.size();
  const std::vector<double> metric = space.dense_matrix();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j) matrix_os << ',';
      matrix_os << detail::format17(metric[i * n + j]);
    }
    matrix_os << '\n';
  }
  for (std::size_t i = 0; i < n; ++i)
    weights_os << detail::format17(space.weight(i)) << '\n';
}

inline DiscreteMMS read_dmms_csv(std::istream& matrix_is,
                                 std::istream& weights_is) {
  std::vector<double> metric;
  std::size_t n = 0, row = 0;
  std::string line;
  while (std::getline(matrix_is, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() &&
               std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument("trailing junk");
        vals.push_back(v);
      } catch (const std::exception&) {
        throw std::invalid_argument("matrix CSV line " + std::to_string(row) +
                                    ": unparsable entry '" + cell + "'");
      }
    }
    if (n == 0) {
      n = vals.size();
    } else if (vals.size() != n) {
      throw std::invalid_argument("matrix CSV line " + std::to_string(row) +
                                  ": expected " + std::to_string(n) +
                                  " entries, found " +
                                  std::to_string(vals.size()));
    }
    metric.insert(metric.end(), vals.begin(), vals.end());
  }
  if (n == 0) throw std::invalid_argument("matrix CSV is empty");
  if (metric.size() != n * n)
    throw std::invalid_argument("matrix CSV must contain n rows of n entries");
  std::vector<double> weights;
  std::size_t wrow = 0;
  while (std::getline(weights_is, line)) {
    ++wrow;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(line, &used);
      while (used < line.size() &&
             std::isspace(static_cast<unsigned char>(line[used])))
        ++used;
      if (used != line.size()) throw std::invalid_argument("trailing junk");
      weights.push_back(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("weights CSV line " + std::to_string(wrow) +
                                  ": unparsable entry");
    }
  }
  if (weights.size() != n)
    throw std::invalid_argument("weights CSV must contain exactly " +
                                std::to_string(n) + " values");
  return DiscreteMMS(n, std::move(metric), std::move(weights));
}

}  // namespace needlecomp
