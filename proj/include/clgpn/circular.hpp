#pragma once

#include <array>
#include <string>
#include <string_view>

#include "clgpn/angle.hpp"
#include "clgpn/rng.hpp"

namespace clgpn {

/// Constraint family of the state-dependent distribution.
enum class Variant {
  CLGPN,     // unconstrained
  CLDPN,     // identity latent covariance: sigma1_sq = 1, rho = 0
  IndCLGPN,  // no circular-linear regression: gamma1 = gamma2 = 0
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);  // "clgpn" | "cldpn" | "ind"

/// The eight parameters of one regime. The latent bivariate normal has mean
/// (mu1, mu2) and covariance [[sigma1_sq, s1*rho], [s1*rho, 1]]; the linear
/// variable is y = gamma0 + gamma1*z1 + gamma2*z2 + N(0, sigma_y_sq).
struct RegimeParams {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double sigma1_sq = 1.0;
  double rho = 0.0;
  double gamma0 = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double sigma_y_sq = 1.0;
  Variant variant = Variant::CLGPN;

  static constexpr std::size_t kSize = 8;
  static constexpr std::array<std::string_view, kSize> kNames = {
      "mu1", "mu2", "sigma1_sq", "rho", "gamma0", "gamma1", "gamma2", "sigma_y_sq"};

  std::array<double, kSize> as_array() const {
    return {mu1, mu2, sigma1_sq, rho, gamma0, gamma1, gamma2, sigma_y_sq};
  }
  static RegimeParams from_array(const std::array<double, kSize>& a, Variant v);

  /// Throws InputError if field ranges or variant constraints are violated.
  void validate() const;
  bool is_valid() const noexcept;

  /// Force the fixed coordinates of the variant (used after unconstrained draws).
  void apply_variant_constraints();

  friend bool operator==(const RegimeParams&, const RegimeParams&) = default;
};

/// Quantities of the Gaussian in r obtained by completing the square:
/// c = gamma1 cos x + gamma2 sin x, v = [c^2/sigma_y^2 + w' S^-1 w]^-1,
/// m = v [c (y - gamma0)/sigma_y^2 + w' S^-1 mu].
struct RadiusTerms {
  double c = 0.0;
  double v = 1.0;
  double m = 0.0;
  double w1 = 1.0;
  double w2 = 0.0;
};

/// Precomputed inverse covariance and normalising constants of one regime.
/// Hot loops of the sampler evaluate densities through this.
struct RegimeCache {
  RegimeParams p;
  double s11 = 1.0, s12 = 0.0, s22 = 1.0;  // Sigma^-1
  double log_det_sigma = 0.0;
  double log_norm_z = 0.0;  // -log(2 pi) - 0.5 log|Sigma|
  double log_norm_y = 0.0;  // -0.5 log(2 pi sigma_y_sq)
  double inv_sigma_y_sq = 1.0;

  explicit RegimeCache(const RegimeParams& params);

  double quad_form(double d1, double d2) const { return s11 * d1 * d1 + 2.0 * s12 * d1 * d2 + s22 * d2 * d2; }

  /// log phi2(z | mu, Sigma)
  double log_latent_density(double z1, double z2) const {
    return log_norm_z - 0.5 * quad_form(z1 - p.mu1, z2 - p.mu2);
  }
  /// log phi1(y | gamma0 + gamma1 z1 + gamma2 z2, sigma_y_sq)
  double log_linear_density(double y, double z1, double z2) const {
    const double e = y - p.gamma0 - p.gamma1 * z1 - p.gamma2 * z2;
    return log_norm_y - 0.5 * e * e * inv_sigma_y_sq;
  }
};

/// log( phi(u) + u Phi(u) ), accurate in both tails.
double log_normal_partial_moment(double u);

/// log Phi(u), accurate for very negative u.
double log_normal_cdf(double u);

RadiusTerms radius_terms(Angle x, double y, const RegimeParams& p);

/// Terms for the circular variable alone (c = 0).
RadiusTerms radius_terms(Angle x, const RegimeParams& p);

/// Marginal log density of the angle (projected normal).
double pn_log_density(Angle x, const RegimeParams& p);

/// Joint log density of (angle, linear value) with the latent radius integrated
/// out in closed form.
double clgpn_log_density(Angle x, double y, const RegimeParams& p);

/// log[ phi2(r w | mu, Sigma) r phi1(y | gamma0 + c r, sigma_y_sq) ]; r must be > 0.
double joint_xyr_log_density(Angle x, double y, double r, const RegimeParams& p);

/// log[ phi2(r w | mu, Sigma) r ]; r must be > 0.
double joint_xr_log_density(Angle x, double r, const RegimeParams& p);

/// Marginal of the linear variable: N(gamma0 + gamma' mu, gamma' Sigma gamma + sigma_y_sq).
double linear_marginal_log_density(double y, const RegimeParams& p);
double linear_marginal_mean(const RegimeParams& p);
double linear_marginal_variance(const RegimeParams& p);

struct ClgpnSample {
  Angle x;
  double y = 0.0;
  double r = 0.0;
};

/// z ~ N2(mu, Sigma), x = atan2*(z1, z2), r = |z|, y = gamma0 + gamma'z + eps.
ClgpnSample sample_clgpn(const RegimeParams& p, Rng& rng);

/// Draw z ~ N2(mu, Sigma).
std::array<double, 2> sample_latent(const RegimeParams& p, Rng& rng);

}  // namespace clgpn
