#include <cmath>
#include <numbers>
#include <vector>

#include "clgpn/circular.hpp"
#include "clgpn/errors.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace clgpn;
using std::numbers::pi;

namespace {

RegimeParams scheme_a(int k) {
  RegimeParams p;
  if (k == 1) {
    p.mu1 = 0.1, p.mu2 = 0.1, p.sigma1_sq = 1.0, p.rho = 0.9;
  } else {
    p.mu1 = 0.1, p.mu2 = -1.0, p.sigma1_sq = 2.0, p.rho = -0.9;
  }
  return p;
}

}  // namespace

TEST_CASE("uniform circle when the latent mean is zero") {
  RegimeParams p;
  for (double x : {0.0, 0.3, 2.0, 5.9}) CHECK(pn_log_density(Angle(x), p) == doctest::Approx(-std::log(2 * pi)));
}

TEST_CASE("projected normal density matches radial quadrature") {
  const RegimeParams p = scheme_a(1);
  CHECK(std::fabs(pn_log_density(Angle(pi / 4), p) - oracle::log_density_x(pi / 4, p)) < 1e-10);

  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const RegimeParams q = fixture::random_params(rng);
    const double x = kTwoPi * rng.uniform();
    CHECK(std::fabs(pn_log_density(Angle(x), q) - oracle::log_density_x(x, q)) < 1e-9);
  }
}

TEST_CASE("projected normal is symmetric about its mean axis when Sigma = I") {
  RegimeParams p;
  p.mu1 = 1.0;
  for (double x = 0.05; x < pi; x += 0.2) {
    CHECK(pn_log_density(Angle(x), p) == doctest::Approx(pn_log_density(Angle(kTwoPi - x), p)).epsilon(1e-13));
  }
}

TEST_CASE("projected normal integrates to one") {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const RegimeParams p = fixture::random_params(rng);
    CHECK(oracle::circle_integral([&](double x) { return pn_log_density(Angle(x), p); }) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("joint density factorizes without circular-linear regression") {
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const RegimeParams p = fixture::random_params(rng, Variant::IndCLGPN);
    const double x = kTwoPi * rng.uniform();
    const double y = p.gamma0 + 2.0 * (rng.uniform() - 0.5);
    const double expected = pn_log_density(Angle(x), p) + oracle::log_norm1(y, p.gamma0, p.sigma_y_sq);
    CHECK(clgpn_log_density(Angle(x), y, p) == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("joint density at a scheme c point matches quadrature") {
  const RegimeParams p = fixture::scheme_c_regime1();
  CHECK(std::fabs(clgpn_log_density(Angle(0.0), 1.5, p) - oracle::log_density_xy(0.0, 1.5, p)) < 1e-8);
}

TEST_CASE("joint density matches quadrature at random parameters and points") {
  Rng rng(2024);
  int checked = 0;
  for (int i = 0; i < 250; ++i) {
    const RegimeParams p = fixture::random_params(rng);
    // half the points from the model, half scattered to reach the tails
    double x, y;
    if (i % 2 == 0) {
      const auto s = sample_clgpn(p, rng);
      x = s.x.value();
      y = s.y;
    } else {
      x = kTwoPi * rng.uniform();
      y = linear_marginal_mean(p) + 6.0 * (rng.uniform() - 0.5) * std::sqrt(linear_marginal_variance(p));
    }
    const double got = clgpn_log_density(Angle(x), y, p);
    const double want = oracle::log_density_xy(x, y, p);
    CHECK_MESSAGE(std::fabs(got - want) < 1e-8, "i=", i, " got=", got, " want=", want);
    ++checked;
  }
  CHECK(checked >= 200);
}

TEST_CASE("joint density integrates to one over the cylinder") {
  Rng rng(77);
  for (int i = 0; i < 20; ++i) {
    const RegimeParams p = fixture::random_params(rng);
    const double centre = linear_marginal_mean(p);
    const double total = oracle::circle_integral([&](double x) {
      const double inner = oracle::line_integral(
          [&](double y) { return std::exp(clgpn_log_density(Angle(x), y, p)); }, centre);
      return std::log(inner);
    });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("radius terms") {
  SUBCASE("identity covariance without regression") {
    RegimeParams p;
    p.mu1 = 0.4;
    p.mu2 = -0.7;
    const Angle x(1.1);
    const RadiusTerms t = radius_terms(x, 0.3, p);
    CHECK(t.c == 0.0);
    CHECK(t.v == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(t.m == doctest::Approx(std::cos(1.1) * 0.4 - std::sin(1.1) * 0.7).epsilon(1e-14));
  }
  SUBCASE("hand substitution") {
    RegimeParams p;
    p.gamma1 = 1.0;
    const RadiusTerms t = radius_terms(Angle(0.0), 2.0, p);
    CHECK(t.c == doctest::Approx(1.0));
    CHECK(t.v == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t.m == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("variance is positive") {
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
      const RegimeParams p = fixture::random_params(rng);
      CHECK(radius_terms(Angle(kTwoPi * rng.uniform()), 3.0 * rng.normal(), p).v > 0.0);
      CHECK(radius_terms(Angle(kTwoPi * rng.uniform()), p).v > 0.0);
    }
  }
}

TEST_CASE("augmented joint densities") {
  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const RegimeParams p = fixture::random_params(rng);
    const double x = kTwoPi * rng.uniform();
    const double y = 2.0 * rng.normal();
    const double r = 0.1 + 3.0 * rng.uniform();
    CHECK(joint_xyr_log_density(Angle(x), y, r, p) == doctest::Approx(oracle::joint_xyr(x, y, r, p)).epsilon(1e-12));
    CHECK(joint_xr_log_density(Angle(x), r, p) == doctest::Approx(oracle::joint_xr(x, r, p)).epsilon(1e-12));
  }

  SUBCASE("standard normal at unit radius") {
    RegimeParams p;
    for (double x : {0.0, 1.0, 4.0}) {
      CHECK(std::exp(joint_xr_log_density(Angle(x), 1.0, p)) == doctest::Approx(std::exp(-0.5) / (2 * pi)).epsilon(1e-14));
    }
  }
  SUBCASE("integrating y out recovers the (x, r) density") {
    const RegimeParams p = fixture::random_params(rng);
    const double x = 2.2;
    const double r = 1.3;
    const double mean = p.gamma0 + r * (p.gamma1 * std::cos(x) + p.gamma2 * std::sin(x));
    const double inner = oracle::line_integral([&](double y) { return std::exp(joint_xyr_log_density(Angle(x), y, r, p)); }, mean);
    CHECK(std::log(inner) == doctest::Approx(joint_xr_log_density(Angle(x), r, p)).epsilon(1e-10));
  }
  SUBCASE("non-positive radius is rejected") {
    RegimeParams p;
    CHECK_THROWS_AS(joint_xyr_log_density(Angle(0.0), 0.0, 0.0, p), DomainError);
    CHECK_THROWS_AS(joint_xr_log_density(Angle(0.0), -1.0, p), DomainError);
  }
}

TEST_CASE("tail-stable Gaussian helpers against 50-digit arithmetic") {
  for (double u = -60.0; u <= 12.0; u += 0.173) {
    CHECK_MESSAGE(std::fabs(log_normal_partial_moment(u) - oracle::log_partial_moment(u)) <
                      1e-12 * std::max(1.0, std::fabs(oracle::log_partial_moment(u))),
                  "u=", u);
    CHECK_MESSAGE(std::fabs(log_normal_cdf(u) - oracle::log_normal_cdf(u)) <
                      1e-12 * std::max(1.0, std::fabs(oracle::log_normal_cdf(u))),
                  "u=", u);
  }
  for (double u : {-3.0, -5.0, -8.0, -1e3}) {
    CHECK(std::isfinite(log_normal_partial_moment(u)));
    CHECK(std::isfinite(log_normal_cdf(u)));
  }
}

TEST_CASE("linear marginal moments") {
  RegimeParams p;
  p.gamma0 = 2.5;
  p.sigma_y_sq = 0.7;
  CHECK(linear_marginal_mean(p) == 2.5);
  CHECK(linear_marginal_variance(p) == doctest::Approx(0.7));

  Rng rng(21);
  const RegimeParams q = fixture::random_params(rng);
  const int n = 200000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = sample_clgpn(q, rng).y;
    s += y;
    ss += y * y;
  }
  const double mean = s / n;
  const double var = ss / n - mean * mean;
  CHECK(std::fabs(mean - linear_marginal_mean(q)) < 4.0 * std::sqrt(linear_marginal_variance(q) / n));
  CHECK(var == doctest::Approx(linear_marginal_variance(q)).epsilon(0.02));
  CHECK(linear_marginal_log_density(0.3, q) ==
        doctest::Approx(oracle::log_norm1(0.3, linear_marginal_mean(q), linear_marginal_variance(q))));
}

TEST_CASE("sampling") {
  Rng rng(31);
  SUBCASE("latent vector mean") {
    const RegimeParams p = scheme_a(2);
    const int n = 100000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto d = sample_clgpn(p, rng);
      s1 += d.r * d.x.cos();
      s2 += d.r * d.x.sin();
    }
    CHECK(std::fabs(s1 / n - p.mu1) < 4.0 * std::sqrt(p.sigma1_sq / n));
    CHECK(std::fabs(s2 / n - p.mu2) < 4.0 / std::sqrt(static_cast<double>(n)));
  }
  SUBCASE("degenerate regression gives a constant linear value") {
    RegimeParams p;
    p.gamma0 = -1.25;
    p.sigma_y_sq = 1e-300;
    for (int i = 0; i < 100; ++i) CHECK(sample_clgpn(p, rng).y == doctest::Approx(-1.25).epsilon(1e-12));
  }
  SUBCASE("scheme a regime 2 is bimodal on the circle") {
    const RegimeParams p = scheme_a(2);
    constexpr int bins = 36;
    std::vector<double> h(bins, 0.0);
    for (int i = 0; i < 400000; ++i) {
      h[static_cast<std::size_t>(sample_clgpn(p, rng).x.value() / kTwoPi * bins)] += 1.0;
    }
    int modes = 0;
    for (int b = 0; b < bins; ++b) {
      const double prev = h[static_cast<std::size_t>((b + bins - 1) % bins)];
      const double next = h[static_cast<std::size_t>((b + 1) % bins)];
      if (h[static_cast<std::size_t>(b)] > prev && h[static_cast<std::size_t>(b)] > next) ++modes;
    }
    CHECK(modes == 2);
    // and the exact density agrees: two local maxima on a fine grid
    int exact_modes = 0;
    constexpr int grid = 720;
    for (int b = 0; b < grid; ++b) {
      const auto f = [&](int j) { return pn_log_density(Angle(kTwoPi * ((j + grid) % grid) / grid), p); };
      if (f(b) > f(b - 1) && f(b) > f(b + 1)) ++exact_modes;
    }
    CHECK(exact_modes == 2);
  }
}

TEST_CASE("variant constraints and validation") {
  RegimeParams p;
  p.variant = Variant::CLDPN;
  CHECK(p.is_valid());
  p.rho = 0.2;
  CHECK_FALSE(p.is_valid());
  CHECK_THROWS_AS(p.validate(), InputError);
  p.apply_variant_constraints();
  CHECK(p.rho == 0.0);

  RegimeParams q;
  q.variant = Variant::IndCLGPN;
  q.gamma1 = 1.0;
  CHECK_FALSE(q.is_valid());
  q.apply_variant_constraints();
  CHECK(q.is_valid());

  RegimeParams r;
  r.rho = 1.0;
  CHECK_FALSE(r.is_valid());
  r.rho = 0.0;
  r.sigma_y_sq = 0.0;
  CHECK_FALSE(r.is_valid());

  CHECK(parse_variant("cldpn") == Variant::CLDPN);
  CHECK(parse_variant("ind") == Variant::IndCLGPN);
  CHECK_THROWS_AS(parse_variant("gpn"), InputError);
}
