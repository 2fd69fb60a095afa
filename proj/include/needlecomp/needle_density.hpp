#pragma once

// One-dimensional needle densities: nonnegative sample values h(r_i) on a
// strictly increasing grid spanning [a, b] with a <= 0 <= b and 0 itself a
// grid point (the boundary-crossing parameter). CSV ingestion/export with
// header "r,h".

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace needlecomp {

class NeedleDensity {
 public:
  NeedleDensity(std::vector<double> grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    validate();
  }

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return grid_.size(); }
  double a() const { return grid_.front(); }
  double b() const { return grid_.back(); }
  std::size_t zero_index() const { return zero_index_; }
  double value_at_zero() const { return values_[zero_index_]; }

  // Piecewise-linear interpolation in h; clamps outside [a, b].
  double value_at(double r) const {
    if (r <= grid_.front()) return values_.front();
    if (r >= grid_.back()) return values_.back();
    auto it = std::upper_bound(grid_.begin(), grid_.end(), r);
    std::size_t k = static_cast<std::size_t>(it - grid_.begin());
    double t = (r - grid_[k - 1]) / (grid_[k] - grid_[k - 1]);
    return (1.0 - t) * values_[k - 1] + t * values_[k];
  }

  // Sample values raised to 1/(N-1): the scale on which the concavity
  // statements live.
  std::vector<double> power_values(double N) const {
    if (N <= 1.0) {
      throw std::domain_error("power_values: N must exceed 1");
    }
    std::vector<double> u(values_.size());
    double e = 1.0 / (N - 1.0);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      u[i] = std::pow(values_[i], e);
    }
    return u;
  }

 private:
  void validate() {
    if (grid_.size() != values_.size()) {
      throw std::invalid_argument(
          "NeedleDensity: grid and value counts differ");
    }
    if (grid_.size() < 4) {
      throw std::invalid_argument("NeedleDensity: needs at least 4 samples");
    }
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (!std::isfinite(grid_[i]) || !std::isfinite(values_[i])) {
        throw std::invalid_argument("NeedleDensity: non-finite entry");
      }
      if (values_[i] < 0.0) {
        throw std::invalid_argument("NeedleDensity: negative density value");
      }
      if (i > 0 && !(grid_[i] > grid_[i - 1])) {
        throw std::invalid_argument(
            "NeedleDensity: grid must be strictly increasing");
      }
    }
    if (grid_.front() > 0.0 || grid_.back() < 0.0) {
      throw std::invalid_argument(
          "NeedleDensity: domain must satisfy a <= 0 <= b");
    }
    auto it = std::lower_bound(grid_.begin(), grid_.end(), 0.0);
    if (it == grid_.end() || *it != 0.0) {
      throw std::invalid_argument("NeedleDensity: grid must contain 0");
    }
    zero_index_ = static_cast<std::size_t>(it - grid_.begin());
  }

  std::vector<double> grid_;
  std::vector<double> values_;
  std::size_t zero_index_ = 0;
};

// --- CSV interchange: header "r,h", strictly increasing r. ----------------

inline void write_density_csv(std::ostream& os, const NeedleDensity& d) {
  os << "r,h\n";
  char buf[80];
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", d.grid()[i],
                  d.values()[i]);
    os << buf;
  }
}

// Parses "r,h" rows. If the grid lacks an exact 0 sample but brackets it,
// one is inserted by linear interpolation so the result satisfies the
// density invariants.
inline NeedleDensity read_density_csv(std::istream& is) {
  std::string line;
  std::vector<double> grid, values;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // Trim whitespace and skip blanks.
    auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r\n");
    std::string row = line.substr(first, last - first + 1);
    if (!header_seen) {
      if (row != "r,h") {
        throw std::invalid_argument(
            "density CSV: expected header 'r,h' on the first row");
      }
      header_seen = true;
      continue;
    }
    auto comma = row.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("density CSV: missing comma on line " +
                                  std::to_string(lineno));
    }
    std::size_t pos1 = 0, pos2 = 0;
    double r, h;
    try {
      r = std::stod(row.substr(0, comma), &pos1);
      h = std::stod(row.substr(comma + 1), &pos2);
    } catch (const std::exception&) {
      throw std::invalid_argument("density CSV: unparseable number on line " +
                                  std::to_string(lineno));
    }
    grid.push_back(r);
    values.push_back(h);
  }
  if (!header_seen) {
    throw std::invalid_argument("density CSV: empty input");
  }
  // Insert r = 0 if absent but bracketed.
  bool has_zero = std::find(grid.begin(), grid.end(), 0.0) != grid.end();
  if (!has_zero && !grid.empty() && grid.front() < 0.0 && grid.back() > 0.0) {
    auto it = std::upper_bound(grid.begin(), grid.end(), 0.0);
    std::size_t k = static_cast<std::size_t>(it - grid.begin());
    double t = (0.0 - grid[k - 1]) / (grid[k] - grid[k - 1]);
    double h0 = (1.0 - t) * values[k - 1] + t * values[k];
    grid.insert(grid.begin() + k, 0.0);
    values.insert(values.begin() + k, h0);
  }
  return NeedleDensity(std::move(grid), std::move(values));
}

}  // namespace needlecomp
