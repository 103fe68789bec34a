#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tvol {

/// A value in (-inf, +inf], tagged so that +inf never travels as a sentinel.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr ExtReal(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)

  static constexpr ExtReal infinity() {
    ExtReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_finite() const { return !infinite_; }
  constexpr bool is_infinite() const { return infinite_; }

  /// Throws if the value is +inf.
  double value() const {
    if (infinite_) throw std::domain_error("ExtReal: value() called on +inf");
    return value_;
  }

  /// Converts to a plain double, mapping +inf to IEEE infinity.
  double to_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend ExtReal operator+(ExtReal a, ExtReal b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return ExtReal(a.value_ + b.value_);
  }
  ExtReal& operator+=(ExtReal other) { return *this = *this + other; }

  /// Multiplication by a nonnegative finite scalar.
  friend ExtReal scale(ExtReal a, double w) {
    if (a.infinite_) return w == 0.0 ? ExtReal(0.0) : infinity();
    return ExtReal(a.value_ * w);
  }

  friend bool operator==(ExtReal a, ExtReal b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }
  friend bool operator<(ExtReal a, ExtReal b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

}  // namespace tvol
