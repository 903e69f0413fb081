#include <cmath>

#include "clgpn/diagnostics.hpp"
#include "clgpn/rng.hpp"
#include "doctest.h"

using namespace clgpn;

TEST_CASE("effective sample size of white noise") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    std::vector<double> x(1000);
    for (auto& v : x) v = rng.normal();
    const double ess = effective_sample_size(x);
    CHECK(ess >= 800.0);
    CHECK(ess <= 1000.0);
  }
}

TEST_CASE("effective sample size of an AR(1) trace") {
  const double phi = 0.9;
  const std::size_t n = 20000;
  const double expected = n * (1 - phi) / (1 + phi);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    x[0] = rng.normal() / std::sqrt(1 - phi * phi);
    for (std::size_t i = 1; i < n; ++i) x[i] = phi * x[i - 1] + rng.normal();
    CHECK(effective_sample_size(x) == doctest::Approx(expected).epsilon(0.3));
  }
}

TEST_CASE("Geweke scores") {
  Rng rng(3);
  std::vector<double> x(5000);
  for (auto& v : x) v = rng.normal();
  const auto z = geweke_z(x);
  REQUIRE(z.has_value());
  CHECK(std::fabs(*z) < 4.0);

  std::vector<double> drift(5000);
  for (std::size_t i = 0; i < drift.size(); ++i) drift[i] = 0.01 * static_cast<double>(i) + rng.normal();
  CHECK(std::fabs(*geweke_z(drift)) > 5.0);

  const std::vector<double> flat(500, 2.0);
  CHECK_FALSE(geweke_z(flat).has_value());
}

TEST_CASE("diagnostic reports") {
  Rng rng(4);
  std::vector<std::vector<std::vector<double>>> chains(2, std::vector<std::vector<double>>(2));
  for (auto& c : chains) {
    for (int i = 0; i < 400; ++i) {
      c[0].push_back(rng.normal());
      c[1].push_back(1.0);
    }
  }
  const auto rep = diagnose({"a", "b"}, chains);
  CHECK(rep.reliable);
  CHECK(rep.chains == 2);
  CHECK(rep.parameters[0].geweke.size() == 2);
  CHECK(rep.parameters[0].ess > 600.0);
  CHECK(rep.parameters[1].degenerate);
  CHECK(rep.parameters[1].geweke.empty());

  std::vector<std::vector<std::vector<double>>> short_chain(1, std::vector<std::vector<double>>(1, std::vector<double>(50, 0.5)));
  short_chain[0][0][3] = 0.7;
  CHECK_FALSE(diagnose({"a"}, short_chain).reliable);
}
