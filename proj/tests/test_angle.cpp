#include <numbers>

#include "clgpn/angle.hpp"
#include "clgpn/errors.hpp"
#include "doctest.h"

using namespace clgpn;
using std::numbers::pi;

TEST_CASE("atan2_star on the axes and the third quadrant") {
  CHECK(atan2_star(1.0, 0.0).value() == 0.0);
  CHECK(atan2_star(0.0, 1.0).value() == doctest::Approx(pi / 2).epsilon(1e-15));
  CHECK(atan2_star(-1.0, -1.0).value() == doctest::Approx(5 * pi / 4).epsilon(1e-15));
  CHECK(atan2_star(0.0, -2.0).value() == doctest::Approx(3 * pi / 2).epsilon(1e-15));
}

TEST_CASE("atan2_star of the zero vector is undefined") {
  CHECK_THROWS_AS(atan2_star(0.0, 0.0), DomainError);
}

TEST_CASE("angles wrap into [0, 2pi)") {
  CHECK(Angle(kTwoPi).value() == 0.0);
  CHECK(Angle(-pi / 2).value() == doctest::Approx(3 * pi / 2));
  CHECK(Angle(5 * kTwoPi + 1.0).value() == doctest::Approx(1.0));
  CHECK(Angle(-1e-300).value() < kTwoPi);
  CHECK(Angle(-1e-300).value() >= 0.0);
  CHECK(Angle::from_degrees(90.0).value() == doctest::Approx(pi / 2).epsilon(1e-15));
  CHECK(Angle::from_degrees(-90.0).value() == doctest::Approx(3 * pi / 2).epsilon(1e-15));
}

TEST_CASE("arc distance is the shorter way round") {
  CHECK(arc_distance(Angle(0.1), Angle(kTwoPi - 0.1)) == doctest::Approx(0.2));
  CHECK(arc_distance(Angle(0.0), Angle(pi)) == doctest::Approx(pi));
  CHECK(arc_distance(Angle(1.0), Angle(1.0)) == 0.0);
  for (double a = 0.0; a < kTwoPi; a += 0.37) {
    for (double b = 0.0; b < kTwoPi; b += 0.41) {
      const double d = arc_distance(Angle(a), Angle(b));
      CHECK(d >= 0.0);
      CHECK(d <= pi + 1e-15);
      CHECK(d == doctest::Approx(arc_distance(Angle(b), Angle(a))));
      CHECK(d == doctest::Approx(arc_distance(Angle(a + 2.0), Angle(b + 2.0))));
    }
  }
}
