#include "clgpn/circular.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "clgpn/errors.hpp"

namespace clgpn {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2 pi)
constexpr double kInvSqrtTwoPi = 0.39894228040143267794;

// Tail of the continued fraction of the Mills ratio,
//   S(a) = 1 / (a + 2 / (a + 3 / (a + 4 / ...))),
// so that Phi(-a) / phi(a) = 1 / (a + S). Modified Lentz; a >= 3.
double mills_tail(double a) {
  constexpr double tiny = 1e-300;
  double f = a;
  double c = f;
  double d = 0.0;
  for (int j = 1; j < 500; ++j) {
    const double aj = static_cast<double>(j + 1);
    d = a + aj * d;
    if (d == 0.0) d = tiny;
    d = 1.0 / d;
    c = a + aj / c;
    if (c == 0.0) c = tiny;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::CLGPN:
      return "clgpn";
    case Variant::CLDPN:
      return "cldpn";
    case Variant::IndCLGPN:
      return "ind";
  }
  return "clgpn";
}

Variant parse_variant(std::string_view name) {
  if (name == "clgpn" || name == "CL-GPN") return Variant::CLGPN;
  if (name == "cldpn" || name == "CL-DPN") return Variant::CLDPN;
  if (name == "ind" || name == "Ind-CL-GPN" || name == "indclgpn") return Variant::IndCLGPN;
  throw InputError("unknown variant '" + std::string(name) + "' (expected clgpn, cldpn or ind)");
}

RegimeParams RegimeParams::from_array(const std::array<double, kSize>& a, Variant v) {
  return RegimeParams{a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], v};
}

bool RegimeParams::is_valid() const noexcept {
  for (double value : as_array()) {
    if (!std::isfinite(value)) return false;
  }
  if (!(sigma1_sq > 0.0) || !(sigma_y_sq > 0.0) || !(std::fabs(rho) < 1.0)) return false;
  if (variant == Variant::CLDPN && (sigma1_sq != 1.0 || rho != 0.0)) return false;
  if (variant == Variant::IndCLGPN && (gamma1 != 0.0 || gamma2 != 0.0)) return false;
  return true;
}

void RegimeParams::validate() const {
  if (is_valid()) return;
  std::ostringstream os;
  os << "invalid regime parameters (" << to_string(variant) << "):";
  for (std::size_t i = 0; i < kSize; ++i) os << ' ' << kNames[i] << '=' << as_array()[i];
  throw InputError(os.str());
}

void RegimeParams::apply_variant_constraints() {
  if (variant == Variant::CLDPN) {
    sigma1_sq = 1.0;
    rho = 0.0;
  } else if (variant == Variant::IndCLGPN) {
    gamma1 = 0.0;
    gamma2 = 0.0;
  }
}

RegimeCache::RegimeCache(const RegimeParams& params) : p(params) {
  const double s1 = std::sqrt(p.sigma1_sq);
  const double det = p.sigma1_sq * (1.0 - p.rho * p.rho);
  s11 = 1.0 / det;
  s12 = -s1 * p.rho / det;
  s22 = p.sigma1_sq / det;
  log_det_sigma = std::log(det);
  log_norm_z = -kLogTwoPi - 0.5 * log_det_sigma;
  log_norm_y = -0.5 * (kLogTwoPi + std::log(p.sigma_y_sq));
  inv_sigma_y_sq = 1.0 / p.sigma_y_sq;
}

double log_normal_cdf(double u) {
  if (u > -5.0) return std::log(0.5 * std::erfc(-u / std::numbers::sqrt2));
  const double a = -u;
  return -0.5 * a * a - 0.5 * kLogTwoPi - std::log(a + mills_tail(a));
}

double log_normal_partial_moment(double u) {
  if (u >= -3.0) {
    const double phi = kInvSqrtTwoPi * std::exp(-0.5 * u * u);
    const double cdf = 0.5 * std::erfc(-u / std::numbers::sqrt2);
    return std::log(phi + u * cdf);
  }
  // phi(a) - a Phi(-a) = phi(a) [1 - a/(a + S)] = phi(a) S / (a + S)
  const double a = -u;
  const double s = mills_tail(a);
  return -0.5 * a * a - 0.5 * kLogTwoPi + std::log(s) - std::log(a + s);
}

namespace {

RadiusTerms terms_from_cache(const RegimeCache& rc, double cx, double sx, double c, double y_resid) {
  RadiusTerms t;
  t.w1 = cx;
  t.w2 = sx;
  t.c = c;
  const double wsw = rc.s11 * cx * cx + 2.0 * rc.s12 * cx * sx + rc.s22 * sx * sx;
  const double wsmu = (rc.s11 * cx + rc.s12 * sx) * rc.p.mu1 + (rc.s12 * cx + rc.s22 * sx) * rc.p.mu2;
  t.v = 1.0 / (c * c * rc.inv_sigma_y_sq + wsw);
  t.m = t.v * (c * y_resid * rc.inv_sigma_y_sq + wsmu);
  return t;
}

// log f with r integrated: log phi2(mu|0,S) + log v + log(phi(u) + u Phi(u)) - log phi(u), u = m / sqrt(v)
double integrated_log_density(const RegimeCache& rc, const RadiusTerms& t) {
  const double u = t.m / std::sqrt(t.v);
  const double log_phi2_mu = rc.log_norm_z - 0.5 * rc.quad_form(rc.p.mu1, rc.p.mu2);
  const double log_phi_u = -0.5 * u * u - 0.5 * kLogTwoPi;
  return log_phi2_mu + std::log(t.v) + log_normal_partial_moment(u) - log_phi_u;
}

}  // namespace

RadiusTerms radius_terms(Angle x, double y, const RegimeParams& p) {
  const RegimeCache rc(p);
  const double cx = x.cos();
  const double sx = x.sin();
  return terms_from_cache(rc, cx, sx, p.gamma1 * cx + p.gamma2 * sx, y - p.gamma0);
}

RadiusTerms radius_terms(Angle x, const RegimeParams& p) {
  const RegimeCache rc(p);
  return terms_from_cache(rc, x.cos(), x.sin(), 0.0, 0.0);
}

double pn_log_density(Angle x, const RegimeParams& p) {
  const RegimeCache rc(p);
  return integrated_log_density(rc, terms_from_cache(rc, x.cos(), x.sin(), 0.0, 0.0));
}

double clgpn_log_density(Angle x, double y, const RegimeParams& p) {
  const RegimeCache rc(p);
  const double cx = x.cos();
  const double sx = x.sin();
  const double resid = y - p.gamma0;
  const RadiusTerms t = terms_from_cache(rc, cx, sx, p.gamma1 * cx + p.gamma2 * sx, resid);
  return rc.log_norm_y - 0.5 * resid * resid * rc.inv_sigma_y_sq + integrated_log_density(rc, t);
}

double joint_xr_log_density(Angle x, double r, const RegimeParams& p) {
  if (!(r > 0.0)) throw DomainError("joint density: radius must be positive");
  const RegimeCache rc(p);
  return rc.log_latent_density(r * x.cos(), r * x.sin()) + std::log(r);
}

double joint_xyr_log_density(Angle x, double y, double r, const RegimeParams& p) {
  if (!(r > 0.0)) throw DomainError("joint density: radius must be positive");
  const RegimeCache rc(p);
  const double z1 = r * x.cos();
  const double z2 = r * x.sin();
  return rc.log_latent_density(z1, z2) + std::log(r) + rc.log_linear_density(y, z1, z2);
}

double linear_marginal_mean(const RegimeParams& p) { return p.gamma0 + p.gamma1 * p.mu1 + p.gamma2 * p.mu2; }

double linear_marginal_variance(const RegimeParams& p) {
  const double s1 = std::sqrt(p.sigma1_sq);
  return p.gamma1 * p.gamma1 * p.sigma1_sq + 2.0 * p.gamma1 * p.gamma2 * s1 * p.rho + p.gamma2 * p.gamma2 +
         p.sigma_y_sq;
}

double linear_marginal_log_density(double y, const RegimeParams& p) {
  const double var = linear_marginal_variance(p);
  const double e = y - linear_marginal_mean(p);
  return -0.5 * (kLogTwoPi + std::log(var)) - 0.5 * e * e / var;
}

std::array<double, 2> sample_latent(const RegimeParams& p, Rng& rng) {
  const double e1 = rng.normal();
  const double e2 = rng.normal();
  const double s1 = std::sqrt(p.sigma1_sq);
  return {p.mu1 + s1 * e1, p.mu2 + p.rho * e1 + std::sqrt(1.0 - p.rho * p.rho) * e2};
}

ClgpnSample sample_clgpn(const RegimeParams& p, Rng& rng) {
  auto z = sample_latent(p, rng);
  // Pr(z = 0) = 0, but guard the measure-zero case instead of throwing mid-chain
  while (z[0] == 0.0 && z[1] == 0.0) z = sample_latent(p, rng);
  ClgpnSample s;
  s.x = atan2_star(z[0], z[1]);
  s.r = std::hypot(z[0], z[1]);
  s.y = p.gamma0 + p.gamma1 * z[0] + p.gamma2 * z[1] + std::sqrt(p.sigma_y_sq) * rng.normal();
  return s;
}

}  // namespace clgpn
