#pragma once

#include <cmath>
#include <numbers>

namespace clgpn {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Direction on the unit circle, always stored in [0, 2*pi).
class Angle {
 public:
  constexpr Angle() = default;
  explicit Angle(double radians) : value_(wrap(radians)) {}

  static Angle from_degrees(double degrees) { return Angle(degrees * std::numbers::pi / 180.0); }

  double value() const { return value_; }
  double cos() const { return std::cos(value_); }
  double sin() const { return std::sin(value_); }

  Angle operator+(Angle other) const { return Angle(value_ + other.value_); }
  Angle operator-(Angle other) const { return Angle(value_ - other.value_); }

  friend bool operator==(Angle a, Angle b) = default;

  static double wrap(double radians) {
    double w = std::fmod(radians, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    // fmod of a tiny negative number can round back up to exactly 2*pi
    if (w >= kTwoPi) w = 0.0;
    return w;
  }

 private:
  double value_ = 0.0;
};

/// Quadrant-aware inverse tangent of (cos_component, sin_component) mapped to
/// [0, 2*pi). Throws DomainError for the zero vector.
Angle atan2_star(double cos_component, double sin_component);

/// Shortest arc length between two directions, in [0, pi].
double arc_distance(Angle a, Angle b);

}  // namespace clgpn
