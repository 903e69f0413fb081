#include "clgpn/angle.hpp"

#include "clgpn/errors.hpp"

namespace clgpn {

Angle atan2_star(double cos_component, double sin_component) {
  if (cos_component == 0.0 && sin_component == 0.0) {
    throw DomainError("atan2_star: direction of the zero vector is undefined");
  }
  return Angle(std::atan2(sin_component, cos_component));
}

double arc_distance(Angle a, Angle b) {
  const double d = std::fabs(a.value() - b.value());
  return std::numbers::pi - std::fabs(std::numbers::pi - d);
}

}  // namespace clgpn
