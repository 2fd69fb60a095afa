#pragma once

// A double extended with +/-infinity under the multiplicative conventions
// used throughout the comparison machinery: 0 * inf = 0 and x^0 = 1 even
// for x = inf. NaN is never a valid value and is rejected at construction.

#include <cmath>
#include <compare>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace needlecomp {

class ExtendedReal {
 public:
  ExtendedReal() : v_(0.0) {}
  ExtendedReal(double v) : v_(v) {  // NOLINT: implicit by design
    if (std::isnan(v)) {
      throw std::invalid_argument("ExtendedReal: NaN is not a value");
    }
  }

  static ExtendedReal infinity() {
    return ExtendedReal(std::numeric_limits<double>::infinity());
  }
  static ExtendedReal neg_infinity() {
    return ExtendedReal(-std::numeric_limits<double>::infinity());
  }

  double value() const { return v_; }
  bool is_finite() const { return std::isfinite(v_); }
  bool is_pos_infinity() const {
    return v_ == std::numeric_limits<double>::infinity();
  }
  bool is_neg_infinity() const {
    return v_ == -std::numeric_limits<double>::infinity();
  }

  friend bool operator==(ExtendedReal a, ExtendedReal b) { return a.v_ == b.v_; }
  friend std::partial_ordering operator<=>(ExtendedReal a, ExtendedReal b) {
    return a.v_ <=> b.v_;
  }

  // Addition and subtraction are ordinary except that opposing infinities
  // have no meaning here and are rejected.
  friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
    double r = a.v_ + b.v_;
    if (std::isnan(r)) {
      throw std::domain_error("ExtendedReal: inf - inf is undefined");
    }
    return ExtendedReal(r);
  }
  friend ExtendedReal operator-(ExtendedReal a, ExtendedReal b) {
    double r = a.v_ - b.v_;
    if (std::isnan(r)) {
      throw std::domain_error("ExtendedReal: inf - inf is undefined");
    }
    return ExtendedReal(r);
  }
  friend ExtendedReal operator-(ExtendedReal a) { return ExtendedReal(-a.v_); }

  // Product with the measure-theoretic convention 0 * inf = 0.
  friend ExtendedReal times(ExtendedReal a, ExtendedReal b) {
    if (a.v_ == 0.0 || b.v_ == 0.0) return ExtendedReal(0.0);
    return ExtendedReal(a.v_ * b.v_);
  }

  // Power with the convention x^0 = 1 for every x, including infinity.
  friend ExtendedReal pow_convention(ExtendedReal base, double exponent) {
    if (std::isnan(exponent)) {
      throw std::invalid_argument("pow_convention: NaN exponent");
    }
    if (exponent == 0.0) return ExtendedReal(1.0);
    if (base.is_pos_infinity()) {
      return exponent > 0 ? infinity() : ExtendedReal(0.0);
    }
    double r = std::pow(base.v_, exponent);
    if (std::isnan(r)) {
      throw std::domain_error("pow_convention: result undefined");
    }
    return ExtendedReal(r);
  }

  std::string to_string() const {
    if (is_pos_infinity()) return "inf";
    if (is_neg_infinity()) return "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v_);
    return std::string(buf);
  }

 private:
  double v_;
};

}  // namespace needlecomp
