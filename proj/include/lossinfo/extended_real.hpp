// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <compare>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "lossinfo/errors.hpp"

namespace lossinfo {

/// A real number or one of the two infinities. Risks and uncertainties are
/// reported in this type because continuous entropies are +inf and optimal
/// risks may be -inf.
class ExtendedReal {
 public:
  enum class Tag { Finite, PosInf, NegInf };

  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : tag_(Tag::Finite), value_(v) {}  // NOLINT

  /// Maps IEEE infinities onto the tags; NaN is rejected.
  static ExtendedReal from_double(double v) {
    if (std::isnan(v)) throw InvalidArgument("ExtendedReal: NaN is not a value");
    if (std::isinf(v)) return v > 0 ? pos_inf() : neg_inf();
    return ExtendedReal(v);
  }
  static constexpr ExtendedReal pos_inf() { return ExtendedReal(Tag::PosInf); }
  static constexpr ExtendedReal neg_inf() { return ExtendedReal(Tag::NegInf); }

  constexpr Tag tag() const { return tag_; }
  constexpr bool is_finite() const { return tag_ == Tag::Finite; }
  constexpr bool is_pos_inf() const { return tag_ == Tag::PosInf; }
  constexpr bool is_neg_inf() const { return tag_ == Tag::NegInf; }

  /// Finite value; throws for the infinities.
  double value() const {
    if (!is_finite()) throw InvalidArgument("ExtendedReal: value() on an infinite quantity");
    return value_;
  }

  /// IEEE view, +/-infinity for the infinite tags.
  constexpr double to_double() const {
    switch (tag_) {
      case Tag::PosInf: return std::numeric_limits<double>::infinity();
      case Tag::NegInf: return -std::numeric_limits<double>::infinity();
      default: return value_;
    }
  }

  friend ExtendedReal operator-(const ExtendedReal& a) {
    switch (a.tag_) {
      case Tag::PosInf: return neg_inf();
      case Tag::NegInf: return pos_inf();
      default: return ExtendedReal(-a.value_);
    }
  }

  friend ExtendedReal operator+(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.is_finite() && b.is_finite()) return ExtendedReal(a.value_ + b.value_);
    if ((a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf())) {
      throw IndeterminateForm("ExtendedReal: inf - inf is undefined");
    }
    return a.is_finite() ? b : a;
  }

  friend ExtendedReal operator-(const ExtendedReal& a, const ExtendedReal& b) { return a + (-b); }

  friend ExtendedReal operator*(double s, const ExtendedReal& a) {
    if (a.is_finite()) return ExtendedReal(s * a.value_);
    if (s == 0.0) return ExtendedReal(0.0);  // 0 * inf = 0 (measure-zero convention)
    return (s > 0) == a.is_pos_inf() ? pos_inf() : neg_inf();
  }

  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return a.tag_ == b.tag_ && (a.tag_ != Tag::Finite || a.value_ == b.value_);
  }

  friend std::partial_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b) {
    return a.to_double() <=> b.to_double();
  }

  /// "inf", "-inf" or the shortest round-tripping decimal.
  std::string to_string() const {
    if (is_pos_inf()) return "inf";
    if (is_neg_inf()) return "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value_);
    return buf;
  }

  friend std::ostream& operator<<(std::ostream& os, const ExtendedReal& a) {
    return os << a.to_string();
  }

 private:
  constexpr explicit ExtendedReal(Tag t) : tag_(t) {}

  Tag tag_ = Tag::Finite;
  double value_ = 0.0;
};

}  // namespace lossinfo
