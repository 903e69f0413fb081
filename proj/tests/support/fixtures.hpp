#pragma once

#include <cmath>

#include "clgpn/circular.hpp"
#include "clgpn/rng.hpp"

namespace fixture {

/// Random parameters spanning bimodal, skewed and concentrated shapes.
inline clgpn::RegimeParams random_params(clgpn::Rng& rng, clgpn::Variant v = clgpn::Variant::CLGPN) {
  const auto u = [&](double a, double b) { return a + (b - a) * rng.uniform(); };
  clgpn::RegimeParams p;
  p.variant = v;
  p.mu1 = u(-2.0, 2.0);
  p.mu2 = u(-2.0, 2.0);
  p.sigma1_sq = std::exp(u(-1.5, 1.5));
  p.rho = u(-0.9, 0.9);
  p.gamma0 = u(-3.0, 3.0);
  p.gamma1 = u(-2.0, 2.0);
  p.gamma2 = u(-2.0, 2.0);
  p.sigma_y_sq = std::exp(u(-2.0, 1.0));
  p.apply_variant_constraints();
  return p;
}

inline clgpn::RegimeParams scheme_c_regime1() {
  clgpn::RegimeParams p;
  p.variant = clgpn::Variant::CLDPN;
  p.mu1 = 0.1;
  p.mu2 = 0.1;
  p.gamma0 = 1.0;
  p.gamma1 = 1.0;
  p.gamma2 = 0.0;
  p.sigma_y_sq = 0.1;
  return p;
}

}  // namespace fixture
